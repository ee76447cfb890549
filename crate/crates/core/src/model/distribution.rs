use serde::{Deserialize, Serialize};

use super::Interval;
use crate::error::{Error, Result};

/// Largest domain accepted by [`Distribution::new`].
pub const DEFAULT_MAX_N: usize = 1 << 20;

/// Absolute tolerance on the total mass of a stored distribution.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-12;

/// Inputs whose total mass is off by at most this much are renormalized; worse is rejected.
pub const RENORMALIZE_TOLERANCE: f64 = 1e-9;

/// A dense probability vector over `[1, n]`.
///
/// Indices in the public API are 1-based. A prefix-sum array is kept alongside the masses so that
/// interval weights are O(1) and interval sampling is O(log n).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DistributionFile", into = "DistributionFile")]
pub struct Distribution {
    p: Vec<f64>,
    cum: Vec<f64>,
}

/// On-disk form: `{ "n": 4, "p": [0.25, 0.25, 0.25, 0.25] }`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DistributionFile {
    pub n: usize,
    pub p: Vec<f64>,
}

impl TryFrom<DistributionFile> for Distribution {
    type Error = Error;

    fn try_from(file: DistributionFile) -> Result<Self> {
        if file.n != file.p.len() {
            return Err(Error::DimensionMismatch { left: file.n, right: file.p.len() });
        }
        Distribution::new(file.p)
    }
}

impl From<Distribution> for DistributionFile {
    fn from(d: Distribution) -> Self {
        DistributionFile { n: d.n(), p: d.p }
    }
}

impl Distribution {
    /// Validates and stores `p`, enforcing [`DEFAULT_MAX_N`].
    pub fn new(p: Vec<f64>) -> Result<Self> {
        Self::with_max_n(p, DEFAULT_MAX_N)
    }

    pub fn with_max_n(mut p: Vec<f64>, max_n: usize) -> Result<Self> {
        if p.is_empty() {
            return Err(Error::InvalidDistribution("empty probability vector".into()));
        }
        if p.len() > max_n {
            return Err(Error::InvalidDistribution(format!(
                "domain size {} exceeds the configured maximum {max_n}",
                p.len()
            )));
        }
        if let Some((i, &v)) = p.iter().enumerate().find(|(_, v)| !v.is_finite() || **v < 0.0) {
            return Err(Error::InvalidDistribution(format!("p[{}] = {v} is not a non-negative real", i + 1)));
        }
        let total: f64 = p.iter().sum();
        if (total - 1.0).abs() > RENORMALIZE_TOLERANCE {
            return Err(Error::InvalidDistribution(format!("total mass {total} is not 1")));
        }
        if (total - 1.0).abs() > NORMALIZATION_TOLERANCE {
            p.iter_mut().for_each(|v| *v /= total);
        }
        Ok(Self::from_normalized(p))
    }

    /// Normalizes an arbitrary non-negative weight vector. Used by generators.
    pub fn from_weights(w: Vec<f64>) -> Result<Self> {
        let total: f64 = w.iter().sum();
        if !(total > 0.0) || !total.is_finite() {
            return Err(Error::InvalidDistribution("weights must have positive finite sum".into()));
        }
        Self::new(w.into_iter().map(|v| v / total).collect())
    }

    fn from_normalized(p: Vec<f64>) -> Self {
        let mut cum = Vec::with_capacity(p.len() + 1);
        let mut acc = 0.0;
        cum.push(0.0);
        for &v in &p {
            acc += v;
            cum.push(acc);
        }
        Self { p, cum }
    }

    pub fn uniform(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidDistribution("empty domain".into()));
        }
        Self::new(vec![1.0 / n as f64; n])
    }

    /// All mass on the 1-based index `j`.
    pub fn point_mass(n: usize, j: usize) -> Result<Self> {
        if j == 0 || j > n {
            return Err(Error::IndexOutOfRange { index: j, n });
        }
        let mut p = vec![0.0; n];
        p[j - 1] = 1.0;
        Self::new(p)
    }

    pub fn n(&self) -> usize {
        self.p.len()
    }

    /// Masses as a 0-based slice.
    pub fn probs(&self) -> &[f64] {
        &self.p
    }

    /// Mass of the 1-based index `i`.
    pub fn prob(&self, i: usize) -> f64 {
        self.p[i - 1]
    }

    /// Mass of an interval, from the prefix sums.
    pub fn mass(&self, interval: Interval) -> f64 {
        (self.cum[interval.hi] - self.cum[interval.lo - 1]).max(0.0)
    }

    pub(crate) fn cumulative(&self) -> &[f64] {
        &self.cum
    }

    pub fn whole(&self) -> Interval {
        Interval { lo: 1, hi: self.n() }
    }

    /// Values over `interval` as a slice.
    pub fn slice(&self, interval: Interval) -> &[f64] {
        &self.p[interval.lo - 1..interval.hi]
    }
}
