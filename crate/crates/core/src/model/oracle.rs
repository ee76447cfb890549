//! The conditional sampling oracle: the only way algorithms touch the hidden distribution.
//!
//! Every draw is metered in a [`QueryLedger`]. Besides single draws the oracle offers batch
//! primitives that return the tally of `draws` independent samples from one query set; they charge
//! the ledger exactly as `draws` single calls would and are distributed identically, so algorithms
//! that only look at counts can use them to keep large budgets cheap to simulate.

use std::collections::BTreeMap;
use std::ops::{Add, AddAssign};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution as _};
use serde::{Deserialize, Serialize};

use super::{Distribution, Interval, IntervalPartition};
use crate::error::{Error, Result};

/// The set `A` a conditional query is restricted to.
#[derive(Debug, Clone, Copy)]
pub enum QuerySet<'a> {
    Full,
    Interval(Interval),
    /// Sorted, duplicate-free 1-based indices.
    Set(&'a [usize]),
}

impl QuerySet<'_> {
    pub fn size(&self, n: usize) -> usize {
        match self {
            QuerySet::Full => n,
            QuerySet::Interval(i) => i.len(),
            QuerySet::Set(s) => s.len(),
        }
    }

    fn validate(&self, n: usize) -> Result<()> {
        match self {
            QuerySet::Full => Ok(()),
            QuerySet::Interval(i) => i.check_within(n),
            QuerySet::Set(s) => {
                if s.is_empty() {
                    return Err(Error::EmptyQuerySet);
                }
                if let Some(&bad) = s.iter().find(|&&i| i == 0 || i > n) {
                    return Err(Error::IndexOutOfRange { index: bad, n });
                }
                if s.windows(2).any(|w| w[0] >= w[1]) {
                    return Err(Error::InvalidParameter("query set must be sorted without duplicates".into()));
                }
                Ok(())
            }
        }
    }

    fn describe(&self) -> SetDescriptor {
        match self {
            QuerySet::Full => SetDescriptor::Full,
            QuerySet::Interval(i) => SetDescriptor::Interval(*i),
            QuerySet::Set(s) => SetDescriptor::Set(s.to_vec()),
        }
    }
}

/// Unconditional and conditional query counts.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryCount {
    pub unconditional: u64,
    pub conditional: u64,
}

impl QueryCount {
    pub fn unconditional(k: u64) -> Self {
        Self { unconditional: k, conditional: 0 }
    }

    pub fn conditional(k: u64) -> Self {
        Self { unconditional: 0, conditional: k }
    }

    pub fn total(&self) -> u64 {
        self.unconditional + self.conditional
    }

    pub fn scale(self, k: u64) -> Self {
        Self { unconditional: self.unconditional * k, conditional: self.conditional * k }
    }
}

impl Add for QueryCount {
    type Output = Self;

    fn add(self, o: Self) -> Self {
        Self { unconditional: self.unconditional + o.unconditional, conditional: self.conditional + o.conditional }
    }
}

impl AddAssign for QueryCount {
    fn add_assign(&mut self, o: Self) {
        *self = *self + o;
    }
}

impl std::iter::Sum for QueryCount {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(Self::default(), Add::add)
    }
}

/// Running totals for one oracle. Counts never decrease.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryLedger {
    pub unconditional_count: u64,
    pub conditional_count: u64,
    /// Conditional queries keyed by `floor(log2 |A|)`.
    pub conditional_set_size_histogram: BTreeMap<u32, u64>,
}

impl QueryLedger {
    pub fn counts(&self) -> QueryCount {
        QueryCount { unconditional: self.unconditional_count, conditional: self.conditional_count }
    }

    pub fn total(&self) -> u64 {
        self.unconditional_count + self.conditional_count
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum SetDescriptor {
    Full,
    Interval(Interval),
    Set(Vec<usize>),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Outcome {
    Index(usize),
    Counts(Vec<u64>),
}

/// One entry of an oracle transcript.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryRecord {
    pub conditional: bool,
    pub set: SetDescriptor,
    pub draws: u64,
    pub outcome: Outcome,
}

/// Seeded conditional oracle over a hidden [`Distribution`].
///
/// Single-threaded: it owns its RNG stream and ledger. Queries are never cached; every call is a
/// fresh draw.
pub struct Oracle<'a> {
    truth: &'a Distribution,
    seed: u64,
    rng: ChaCha8Rng,
    ledger: QueryLedger,
    transcript: Option<Vec<QueryRecord>>,
}

impl<'a> Oracle<'a> {
    pub fn new(truth: &'a Distribution, seed: u64) -> Self {
        Self { truth, seed, rng: ChaCha8Rng::seed_from_u64(seed), ledger: QueryLedger::default(), transcript: None }
    }

    /// Same as [`Oracle::new`] but records every query and its outcome.
    pub fn recording(truth: &'a Distribution, seed: u64) -> Self {
        let mut o = Self::new(truth, seed);
        o.transcript = Some(Vec::new());
        o
    }

    pub fn n(&self) -> usize {
        self.truth.n()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn ledger(&self) -> &QueryLedger {
        &self.ledger
    }

    pub fn counts(&self) -> QueryCount {
        self.ledger.counts()
    }

    pub fn transcript(&self) -> Option<&[QueryRecord]> {
        self.transcript.as_deref()
    }

    /// Internal coins for the algorithm (set choices, uniform picks). Not metered.
    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    fn record(&mut self, conditional: bool, set: &QuerySet<'_>, draws: u64, outcome: impl FnOnce() -> Outcome) {
        if let Some(t) = self.transcript.as_mut() {
            t.push(QueryRecord { conditional, set: set.describe(), draws, outcome: outcome() });
        }
    }

    fn charge_conditional(&mut self, size: usize, draws: u64) {
        self.ledger.conditional_count += draws;
        let class = usize::BITS - 1 - size.leading_zeros();
        *self.ledger.conditional_set_size_histogram.entry(class).or_insert(0) += draws;
    }

    /// One sample from the distribution.
    pub fn sample_unconditional(&mut self) -> usize {
        self.ledger.unconditional_count += 1;
        let i = self.draw_in(1, self.truth.n());
        self.record(false, &QuerySet::Full, 1, || Outcome::Index(i));
        i
    }

    /// One sample from the distribution conditioned on `set`; uniform over `set` if it has no mass.
    pub fn sample_conditional(&mut self, set: &QuerySet<'_>) -> Result<usize> {
        set.validate(self.n())?;
        self.charge_conditional(set.size(self.n()), 1);
        let i = match *set {
            QuerySet::Full => self.draw_in(1, self.n()),
            QuerySet::Interval(iv) => self.draw_in(iv.lo, iv.hi),
            QuerySet::Set(s) => {
                let w: Vec<f64> = s.iter().map(|&i| self.truth.prob(i)).collect();
                s[pick_weighted(&mut self.rng, &w)]
            }
        };
        self.record(true, set, 1, || Outcome::Index(i));
        Ok(i)
    }

    /// Tally of `draws` unconditional samples over `[1, n]`.
    pub fn unconditional_counts(&mut self, draws: u64) -> Vec<u64> {
        self.ledger.unconditional_count += draws;
        let counts = multinomial(&mut self.rng, draws, self.truth.probs());
        self.record(false, &QuerySet::Full, draws, || Outcome::Counts(counts.clone()));
        counts
    }

    /// Tally over `interval` of `draws` unconditional samples; samples outside it are discarded.
    pub fn unconditional_counts_in(&mut self, interval: Interval, draws: u64) -> Result<Vec<u64>> {
        interval.check_within(self.n())?;
        self.ledger.unconditional_count += draws;
        let hits = binomial(&mut self.rng, draws, self.truth.mass(interval).min(1.0));
        let counts = multinomial(&mut self.rng, hits, self.truth.slice(interval));
        self.record(false, &QuerySet::Full, draws, || Outcome::Counts(counts.clone()));
        Ok(counts)
    }

    /// Tally per interval of `draws` unconditional samples.
    pub fn unconditional_block_counts(&mut self, partition: &IntervalPartition, draws: u64) -> Result<Vec<u64>> {
        partition.check_domain(self.n())?;
        self.ledger.unconditional_count += draws;
        let w: Vec<f64> = partition.intervals().iter().map(|&iv| self.truth.mass(iv)).collect();
        let counts = multinomial(&mut self.rng, draws, &w);
        self.record(false, &QuerySet::Full, draws, || Outcome::Counts(counts.clone()));
        Ok(counts)
    }

    /// Tally over the members of `set` (in order) of `draws` conditional samples from `set`.
    pub fn conditional_counts(&mut self, set: &QuerySet<'_>, draws: u64) -> Result<Vec<u64>> {
        set.validate(self.n())?;
        self.charge_conditional(set.size(self.n()), draws);
        let counts = match *set {
            QuerySet::Full => multinomial(&mut self.rng, draws, self.truth.probs()),
            QuerySet::Interval(iv) => multinomial(&mut self.rng, draws, self.truth.slice(iv)),
            QuerySet::Set(s) => {
                let w: Vec<f64> = s.iter().map(|&i| self.truth.prob(i)).collect();
                multinomial(&mut self.rng, draws, &w)
            }
        };
        self.record(true, set, draws, || Outcome::Counts(counts.clone()));
        Ok(counts)
    }

    /// Inverse-transform draw from `[lo, hi]` using the prefix sums; uniform if the range is massless.
    fn draw_in(&mut self, lo: usize, hi: usize) -> usize {
        let cum = self.truth.cumulative();
        let base = cum[lo - 1];
        let mass = cum[hi] - base;
        if mass <= 0.0 {
            return self.rng.random_range(lo..=hi);
        }
        loop {
            let u = base + self.rng.random::<f64>() * mass;
            let i = lo + cum[lo..=hi].partition_point(|&c| c <= u);
            if i <= hi && self.truth.prob(i) > 0.0 {
                return i;
            }
        }
    }
}

/// Position drawn with probability proportional to `w`; uniform if `w` sums to zero.
pub(crate) fn pick_weighted<R: Rng>(rng: &mut R, w: &[f64]) -> usize {
    let total: f64 = w.iter().sum();
    if total <= 0.0 {
        return rng.random_range(0..w.len());
    }
    loop {
        let mut u = rng.random::<f64>() * total;
        for (k, &x) in w.iter().enumerate() {
            if u < x {
                return k;
            }
            u -= x;
        }
    }
}

pub(crate) fn binomial<R: Rng>(rng: &mut R, n: u64, p: f64) -> u64 {
    if n == 0 || p <= 0.0 {
        return 0;
    }
    if p >= 1.0 {
        return n;
    }
    Binomial::new(n, p).expect("p checked to lie in (0, 1)").sample(rng)
}

/// Multinomial tally of `n` draws over weights `w` (uniform if `w` sums to zero).
///
/// Few draws over many cells are drawn one by one; otherwise cells are filled by a chain of
/// conditional binomials against suffix sums.
pub(crate) fn multinomial<R: Rng>(rng: &mut R, n: u64, w: &[f64]) -> Vec<u64> {
    let mut out = vec![0u64; w.len()];
    if n == 0 {
        return out;
    }
    let total: f64 = w.iter().sum();
    let uniform;
    let w = if total > 0.0 {
        w
    } else {
        uniform = vec![1.0; w.len()];
        &uniform[..]
    };
    if (n as usize).saturating_mul(8) < w.len() {
        let mut cum = Vec::with_capacity(w.len());
        let mut acc = 0.0;
        for &x in w {
            acc += x;
            cum.push(acc);
        }
        for _ in 0..n {
            loop {
                let u = rng.random::<f64>() * acc;
                let k = cum.partition_point(|&c| c <= u);
                if k < w.len() && w[k] > 0.0 {
                    out[k] += 1;
                    break;
                }
            }
        }
        return out;
    }
    let mut suffix = vec![0.0; w.len() + 1];
    for k in (0..w.len()).rev() {
        suffix[k] = suffix[k + 1] + w[k];
    }
    let mut left = n;
    for k in 0..w.len() {
        if left == 0 {
            break;
        }
        if w[k] <= 0.0 {
            continue;
        }
        let c = if w[k] >= suffix[k] { left } else { binomial(rng, left, w[k] / suffix[k]) };
        out[k] = c;
        left -= c;
    }
    out
}
