use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The integer interval `{lo, lo+1, ..., hi}` with 1-based endpoints.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Interval {
    pub lo: usize,
    pub hi: usize,
}

impl Interval {
    pub fn new(lo: usize, hi: usize) -> Result<Self> {
        if lo == 0 || lo > hi {
            return Err(Error::InvalidInterval { lo, hi, n: hi });
        }
        Ok(Self { lo, hi })
    }

    pub fn singleton(i: usize) -> Self {
        Self { lo: i, hi: i }
    }

    pub fn len(&self) -> usize {
        self.hi - self.lo + 1
    }

    pub fn is_singleton(&self) -> bool {
        self.lo == self.hi
    }

    pub fn contains(&self, i: usize) -> bool {
        self.lo <= i && i <= self.hi
    }

    pub fn indices(&self) -> std::ops::RangeInclusive<usize> {
        self.lo..=self.hi
    }

    pub(crate) fn check_within(&self, n: usize) -> Result<()> {
        if self.lo == 0 || self.lo > self.hi || self.hi > n {
            return Err(Error::InvalidInterval { lo: self.lo, hi: self.hi, n });
        }
        Ok(())
    }
}

/// An ordered list of contiguous, disjoint intervals whose union is `[1, n]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Interval>", into = "Vec<Interval>")]
pub struct IntervalPartition {
    intervals: Vec<Interval>,
}

impl TryFrom<Vec<Interval>> for IntervalPartition {
    type Error = Error;

    fn try_from(v: Vec<Interval>) -> Result<Self> {
        IntervalPartition::new(v)
    }
}

impl From<IntervalPartition> for Vec<Interval> {
    fn from(p: IntervalPartition) -> Self {
        p.intervals
    }
}

impl IntervalPartition {
    pub fn new(intervals: Vec<Interval>) -> Result<Self> {
        let first = intervals.first().ok_or_else(|| Error::InvalidPartition("no intervals".into()))?;
        if first.lo != 1 {
            return Err(Error::InvalidPartition(format!("first interval starts at {}", first.lo)));
        }
        for (k, w) in intervals.windows(2).enumerate() {
            if w[1].lo != w[0].hi + 1 {
                return Err(Error::InvalidPartition(format!(
                    "gap or overlap between interval {} and {}",
                    k + 1,
                    k + 2
                )));
            }
        }
        if let Some(bad) = intervals.iter().find(|i| i.lo > i.hi || i.lo == 0) {
            return Err(Error::InvalidPartition(format!("malformed interval [{}, {}]", bad.lo, bad.hi)));
        }
        Ok(Self { intervals })
    }

    /// Builds the partition whose intervals end at the given sorted right endpoints (last = n).
    pub fn from_right_ends(n: usize, ends: &[usize]) -> Result<Self> {
        let mut out = Vec::with_capacity(ends.len());
        let mut lo = 1;
        for &hi in ends {
            out.push(Interval::new(lo, hi)?);
            lo = hi + 1;
        }
        let p = Self::new(out)?;
        if p.n() != n {
            return Err(Error::InvalidPartition(format!("covers [1, {}] instead of [1, {n}]", p.n())));
        }
        Ok(p)
    }

    pub fn whole(n: usize) -> Self {
        Self { intervals: vec![Interval { lo: 1, hi: n }] }
    }

    pub fn singletons(n: usize) -> Self {
        Self { intervals: (1..=n).map(Interval::singleton).collect() }
    }

    /// `parts` near-equal consecutive blocks.
    pub fn equal_blocks(n: usize, parts: usize) -> Result<Self> {
        if parts == 0 || parts > n {
            return Err(Error::InvalidPartition(format!("cannot split [1, {n}] into {parts} blocks")));
        }
        let ends: Vec<usize> = (1..=parts).map(|j| j * n / parts).collect();
        Self::from_right_ends(n, &ends)
    }

    pub fn n(&self) -> usize {
        self.intervals.last().map_or(0, |i| i.hi)
    }

    /// Number of intervals, the length of the partition.
    pub fn len(&self) -> usize {
        self.intervals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn intervals(&self) -> &[Interval] {
        &self.intervals
    }

    pub fn get(&self, j: usize) -> Interval {
        self.intervals[j]
    }

    /// 0-based position of the interval containing `i`, by binary search.
    pub fn locate(&self, i: usize) -> Option<usize> {
        let j = self.intervals.partition_point(|iv| iv.hi < i);
        (j < self.intervals.len() && self.intervals[j].contains(i)).then_some(j)
    }

    pub(crate) fn check_domain(&self, n: usize) -> Result<()> {
        if self.n() != n {
            return Err(Error::DimensionMismatch { left: self.n(), right: n });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validates_cover() {
        assert!(IntervalPartition::new(vec![Interval { lo: 1, hi: 2 }, Interval { lo: 4, hi: 5 }]).is_err());
        assert!(IntervalPartition::new(vec![Interval { lo: 2, hi: 5 }]).is_err());
        assert!(IntervalPartition::new(vec![]).is_err());
        let p = IntervalPartition::from_right_ends(5, &[2, 3, 5]).unwrap();
        assert_eq!(p.len(), 3);
        assert_eq!(p.n(), 5);
    }

    #[test]
    fn locate_by_binary_search() {
        let p = IntervalPartition::from_right_ends(10, &[1, 4, 9, 10]).unwrap();
        let got: Vec<_> = (1..=10).map(|i| p.locate(i).unwrap()).collect();
        assert_eq!(got, vec![0, 1, 1, 1, 2, 2, 2, 2, 2, 3]);
        assert_eq!(p.locate(11), None);
    }

    #[test]
    fn equal_blocks_cover_domain() {
        let p = IntervalPartition::equal_blocks(10, 3).unwrap();
        assert_eq!(p.intervals().iter().map(Interval::len).sum::<usize>(), 10);
        assert_eq!(p.len(), 3);
    }

    #[test]
    fn serializes_as_pairs_list() {
        let p = IntervalPartition::from_right_ends(3, &[1, 3]).unwrap();
        let s = serde_json::to_string(&p).unwrap();
        assert_eq!(s, r#"[{"lo":1,"hi":1},{"lo":2,"hi":3}]"#);
        let back: IntervalPartition = serde_json::from_str(&s).unwrap();
        assert_eq!(back, p);
    }
}
