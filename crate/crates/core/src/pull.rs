//! Pulling fine interval partitions out of unconditional samples.
//!
//! Every sampled index becomes a singleton and the gaps between sampled indices become the remaining
//! intervals. With enough samples no heavy stretch of the domain survives as a single interval.

use serde::{Deserialize, Serialize};

use crate::constants::ceil_count;
use crate::error::{invalid, Error, Result};
use crate::model::{Interval, IntervalPartition, Oracle};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FinenessParams {
    /// Weight bound for non-singleton intervals.
    pub eta: f64,
    /// Total weight allowed on violating intervals; `None` asks for a plain `eta`-fine partition.
    pub gamma: Option<f64>,
    pub delta: f64,
}

impl FinenessParams {
    pub fn eta_fine(eta: f64, delta: f64) -> Self {
        Self { eta, gamma: None, delta }
    }

    pub fn eta_gamma_fine(eta: f64, gamma: f64, delta: f64) -> Self {
        Self { eta, gamma: Some(gamma), delta }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eta > 0.0 && self.eta <= 1.0) {
            return Err(invalid(format!("eta must lie in (0, 1], got {}", self.eta)));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(invalid(format!("delta must lie in (0, 1), got {}", self.delta)));
        }
        if let Some(g) = self.gamma {
            if !(g > 0.0 && g <= 1.0) {
                return Err(invalid(format!("gamma must lie in (0, 1], got {g}")));
            }
        }
        Ok(())
    }
}

/// `ceil((3/eta) ln(3/(eta delta)))`, before clamping.
pub fn eta_fine_sample_count(eta: f64, delta: f64) -> u64 {
    ceil_count(3.0 / eta * (3.0 / (eta * delta)).ln())
}

/// `ceil((3/eta) ln(5/(gamma delta)))`, before clamping.
pub fn eta_gamma_fine_sample_count(eta: f64, gamma: f64, delta: f64) -> u64 {
    ceil_count(3.0 / eta * (5.0 / (gamma * delta)).ln())
}

/// Number of unconditional samples a pull takes over `[1, n]`, clamped to `[1, 10 n]`.
pub fn pull_sample_count(n: usize, params: &FinenessParams) -> u64 {
    let raw = match params.gamma {
        None => eta_fine_sample_count(params.eta, params.delta),
        Some(g) => eta_gamma_fine_sample_count(params.eta, g, params.delta),
    };
    raw.clamp(1, 10 * n as u64)
}

/// Singletons at the sampled indices, maximal gaps in between.
///
/// `sampled` must be sorted, duplicate-free and inside `[1, n]`. The result has at most
/// `2 |sampled| + 1` intervals.
pub fn pull_partition_from_samples(n: usize, sampled: &[usize]) -> Result<IntervalPartition> {
    if sampled.is_empty() {
        return Err(invalid("no sampled indices"));
    }
    if let Some(&bad) = sampled.iter().find(|&&i| i == 0 || i > n) {
        return Err(Error::IndexOutOfRange { index: bad, n });
    }
    if sampled.windows(2).any(|w| w[0] >= w[1]) {
        return Err(invalid("sampled indices must be sorted without duplicates"));
    }
    let mut out = Vec::with_capacity(2 * sampled.len() + 1);
    let mut next = 1;
    for &i in sampled {
        if i > next {
            out.push(Interval { lo: next, hi: i - 1 });
        }
        out.push(Interval::singleton(i));
        next = i + 1;
    }
    if next <= n {
        out.push(Interval { lo: next, hi: n });
    }
    IntervalPartition::new(out)
}

fn pull_with(oracle: &mut Oracle<'_>, m: u64) -> Result<IntervalPartition> {
    let counts = oracle.unconditional_counts(m);
    let sampled: Vec<usize> = counts.iter().enumerate().filter(|(_, &c)| c > 0).map(|(k, _)| k + 1).collect();
    pull_partition_from_samples(oracle.n(), &sampled)
}

/// Algorithm 1: an `eta`-fine partition with probability at least `1 - delta`.
pub fn pull_eta_fine(oracle: &mut Oracle<'_>, params: &FinenessParams) -> Result<IntervalPartition> {
    params.validate()?;
    if params.gamma.is_some() {
        return Err(invalid("pull_eta_fine takes no gamma"));
    }
    pull_with(oracle, pull_sample_count(oracle.n(), params))
}

/// Algorithm 2: violating intervals weigh at most `gamma` with probability at least `1 - delta`.
pub fn pull_eta_gamma_fine(oracle: &mut Oracle<'_>, params: &FinenessParams) -> Result<IntervalPartition> {
    params.validate()?;
    if params.gamma.is_none() {
        return Err(invalid("pull_eta_gamma_fine needs gamma"));
    }
    pull_with(oracle, pull_sample_count(oracle.n(), params))
}

/// Dispatches on whether `gamma` is set.
pub fn pull(oracle: &mut Oracle<'_>, params: &FinenessParams) -> Result<IntervalPartition> {
    match params.gamma {
        None => pull_eta_fine(oracle, params),
        Some(_) => pull_eta_gamma_fine(oracle, params),
    }
}
