//! The ε-trimming sampler: samples tagged with grid-rounded masses, light elements trimmed to 0.
//!
//! A reference element is located once by a dyadic descent that always enters the heavier half,
//! so its mass is at least about `1/(2n)` and is known as the product of the branch fractions. The
//! mass of any other element `i` is its ratio against the reference, estimated from conditional
//! queries on `{i, ref}`, times the reference mass. Estimates are memoized, so every element has
//! one fixed reported value. A drawn element with estimate `m` and grid value `v <= m` is emitted
//! with probability `v/m` and otherwise becomes the 0-outcome, which keeps the emitted frequencies
//! within a factor `1 ± eps/8` of the reported values.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::constants::{ceil_count, GridLevels};
use crate::error::{invalid, Result};
use crate::model::{binomial, Interval, Oracle, QueryCount, QuerySet};
use crate::uniformity::delta_since;

/// Number of grid points plus one: `P` holds the values with index `1..=k-1`.
pub fn grid_levels(n: usize, epsilon: f64, levels: GridLevels) -> usize {
    let k = match levels {
        GridLevels::Formula => {
            let l = (1.0 + epsilon).ln();
            ceil_count((n as f64).ln() * (1.0 / epsilon).ln() / (l * l))
        }
        GridLevels::Occupied => ceil_count((n as f64 / epsilon).ln() / (1.0 + epsilon).ln()).saturating_add(1),
    };
    (k as usize).max(2)
}

/// Conditional query bound `ceil(32 s eps^-4 ln^5 n ln(s ln(n) / delta))` of the sampler.
pub fn trimming_budget(s: u64, epsilon: f64, delta: f64, n: usize) -> u64 {
    let ln_n = (n as f64).ln();
    ceil_count(32.0 * s as f64 * epsilon.powi(-4) * ln_n.powi(5) * (s as f64 * ln_n / delta).ln())
}

/// The value grid `P = {(1+eps)^(i-1) eps/n : 1 <= i <= k-1}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub n: usize,
    pub epsilon: f64,
    pub k: usize,
}

impl Grid {
    pub fn new(n: usize, epsilon: f64, levels: GridLevels) -> Self {
        Self { n, epsilon, k: grid_levels(n, epsilon, levels) }
    }

    /// Number of grid values, `k - 1`.
    pub fn len(&self) -> usize {
        self.k - 1
    }

    pub fn is_empty(&self) -> bool {
        self.k <= 1
    }

    /// Value at 1-based index `i`.
    pub fn value(&self, i: usize) -> f64 {
        (1.0 + self.epsilon).powi(i as i32 - 1) * self.epsilon / self.n as f64
    }

    /// Trimming threshold `eps/n`, the smallest grid value.
    pub fn floor_value(&self) -> f64 {
        self.epsilon / self.n as f64
    }

    /// Index of the largest grid value at most `x`, or `None` when `x < eps/n`.
    pub fn floor_index(&self, x: f64) -> Option<usize> {
        if !(x >= self.floor_value()) {
            return None;
        }
        let guess = ((x / self.floor_value()).ln() / (1.0 + self.epsilon).ln()).floor();
        let mut i = (guess.max(0.0) as usize + 1).clamp(1, self.len());
        while i > 1 && self.value(i) > x {
            i -= 1;
        }
        while i < self.len() && self.value(i + 1) <= x {
            i += 1;
        }
        Some(i)
    }

    pub fn contains(&self, v: f64) -> bool {
        self.floor_index(v).is_some_and(|i| self.value(i) == v)
    }
}

/// One draw: `index = 0` is the trimmed outcome and carries no value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrimmedSample {
    pub index: usize,
    pub value: Option<f64>,
}

/// `count` emitted draws of one element at grid `level`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrimmedTally {
    pub index: usize,
    pub level: usize,
    pub value: f64,
    pub count: u64,
}

/// Tally of `samples` draws; `trimmed` of them were the 0-outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrimmedBatch {
    pub samples: u64,
    pub trimmed: u64,
    /// Ascending by index.
    pub tallies: Vec<TrimmedTally>,
    pub queries: QueryCount,
}

impl TrimmedBatch {
    /// The draws one by one, in index order with the 0-outcomes first. Draws are exchangeable.
    pub fn expand(&self) -> Vec<TrimmedSample> {
        let zeros = std::iter::repeat_n(TrimmedSample { index: 0, value: None }, self.trimmed as usize);
        let rest = self.tallies.iter().flat_map(|t| {
            std::iter::repeat_n(TrimmedSample { index: t.index, value: Some(t.value) }, t.count as usize)
        });
        zeros.chain(rest).collect()
    }
}

/// Memoized estimate for one element.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ElementEstimate {
    /// Estimated mass, capped at 1.
    pub mass: f64,
    /// Grid index of the reported value, `None` when trimmed.
    pub level: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct TrimmingSampler {
    grid: Grid,
    reference: usize,
    reference_mass: f64,
    /// Pair queries stop once both sides have this many hits.
    target: u64,
    /// Pair queries per element never exceed this.
    cap: u64,
    memo: HashMap<usize, ElementEstimate>,
    setup: QueryCount,
}

impl TrimmingSampler {
    /// Locates the reference element. `s` is the number of samples the caller plans to draw; it
    /// only enters the confidence level.
    pub fn new(oracle: &mut Oracle<'_>, epsilon: f64, s: u64, delta: f64, levels: GridLevels) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon < 0.5) {
            return Err(invalid(format!("trimming accuracy must lie in (0, 1/2), got {epsilon}")));
        }
        if !(delta > 0.0 && delta < 1.0) {
            return Err(invalid(format!("delta must lie in (0, 1), got {delta}")));
        }
        let n = oracle.n();
        let before = oracle.counts();
        let depth = (usize::BITS - (n - 1).leading_zeros()).max(1) as f64;
        let z2 = 2.0 * (4.0 * (s as f64 + depth) / delta).ln();
        let per_level = ceil_count(256.0 * z2 * depth / (epsilon * epsilon));
        let target = ceil_count(512.0 * z2 / (epsilon * epsilon));
        let cap = ceil_count(8.0 * target as f64 * n as f64 / epsilon);

        let (mut lo, mut hi) = (1, n);
        let mut mass = 1.0;
        while lo < hi {
            let half = (hi - lo + 1) / 2;
            let counts = oracle.conditional_counts(&QuerySet::Interval(Interval { lo, hi }), per_level)?;
            let left: u64 = counts[..half].iter().sum();
            let right = per_level - left;
            if left >= right {
                hi = lo + half - 1;
                mass *= left as f64 / per_level as f64;
            } else {
                lo += half;
                mass *= right as f64 / per_level as f64;
            }
        }
        Ok(Self {
            grid: Grid::new(n, epsilon, levels),
            reference: lo,
            reference_mass: mass,
            target,
            cap,
            memo: HashMap::new(),
            setup: delta_since(oracle, before),
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// The reference element and its estimated mass.
    pub fn reference(&self) -> (usize, f64) {
        (self.reference, self.reference_mass)
    }

    /// Queries spent locating the reference.
    pub fn setup_queries(&self) -> QueryCount {
        self.setup
    }

    /// The memoized estimate for `i`, spending pair queries on first use.
    pub fn estimate(&mut self, oracle: &mut Oracle<'_>, i: usize) -> Result<ElementEstimate> {
        if let Some(&e) = self.memo.get(&i) {
            return Ok(e);
        }
        if i == 0 || i > oracle.n() {
            return Err(crate::error::Error::IndexOutOfRange { index: i, n: oracle.n() });
        }
        let mass = if i == self.reference { self.reference_mass } else { self.pair_estimate(oracle, i)? };
        let e = ElementEstimate { mass, level: self.grid.floor_index(mass) };
        self.memo.insert(i, e);
        Ok(e)
    }

    /// The value `i` is reported with, 0 when trimmed.
    pub fn reported_value(&mut self, oracle: &mut Oracle<'_>, i: usize) -> Result<f64> {
        Ok(self.estimate(oracle, i)?.level.map_or(0.0, |l| self.grid.value(l)))
    }

    fn pair_estimate(&self, oracle: &mut Oracle<'_>, i: usize) -> Result<f64> {
        let r = self.reference;
        let pair = if i < r { [i, r] } else { [r, i] };
        let (mut ci, mut cr, mut spent) = (0u64, 0u64, 0u64);
        let mut batch = 2 * self.target;
        loop {
            let b = batch.min(self.cap - spent);
            let c = oracle.conditional_counts(&QuerySet::Set(&pair), b)?;
            let (x, y) = if i < r { (c[0], c[1]) } else { (c[1], c[0]) };
            ci += x;
            cr += y;
            spent += b;
            if (ci >= self.target && cr >= self.target) || spent >= self.cap {
                break;
            }
            batch = spent;
        }
        Ok(if cr == 0 { 1.0 } else { (self.reference_mass * ci as f64 / cr as f64).min(1.0) })
    }

    /// Draws `s` samples.
    pub fn sample(&mut self, oracle: &mut Oracle<'_>, s: u64) -> Result<TrimmedBatch> {
        let before = oracle.counts();
        let counts = oracle.conditional_counts(&QuerySet::Full, s)?;
        let mut trimmed = 0;
        let mut tallies = Vec::new();
        for (pos, &c) in counts.iter().enumerate().filter(|(_, &c)| c > 0) {
            let index = pos + 1;
            let e = self.estimate(oracle, index)?;
            let Some(level) = e.level else {
                trimmed += c;
                continue;
            };
            let value = self.grid.value(level);
            let kept = binomial(oracle.rng(), c, value / e.mass);
            trimmed += c - kept;
            if kept > 0 {
                tallies.push(TrimmedTally { index, level, value, count: kept });
            }
        }
        Ok(TrimmedBatch { samples: s, trimmed, tallies, queries: delta_since(oracle, before) })
    }
}
