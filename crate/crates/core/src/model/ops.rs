//! Exact operations on explicit distributions.

use serde::{Deserialize, Serialize};

use super::{Distribution, Interval, IntervalPartition};
use crate::error::{Error, Result};

fn same_n(a: &Distribution, b: &Distribution) -> Result<()> {
    if a.n() != b.n() {
        return Err(Error::DimensionMismatch { left: a.n(), right: b.n() });
    }
    Ok(())
}

pub fn l1(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

pub fn linf(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// `sum_i |a(i) - b(i)|`.
pub fn l1_distance(a: &Distribution, b: &Distribution) -> Result<f64> {
    same_n(a, b)?;
    Ok(l1(a.probs(), b.probs()))
}

/// `max_i |a(i) - b(i)|`.
pub fn linf_distance(a: &Distribution, b: &Distribution) -> Result<f64> {
    same_n(a, b)?;
    Ok(linf(a.probs(), b.probs()))
}

/// ℓ1 distance of a nonnegative vector from the uniform distribution over its support size.
pub fn l1_to_uniform(values: &[f64]) -> f64 {
    let u = 1.0 / values.len() as f64;
    values.iter().map(|v| (v - u).abs()).sum()
}

/// The renormalized restriction of `d` to `interval`, as a distribution over `[1, |interval|]`.
pub fn restrict(d: &Distribution, interval: Interval) -> Result<Distribution> {
    interval.check_within(d.n())?;
    let mass: f64 = d.slice(interval).iter().sum();
    if mass <= 0.0 {
        return Err(Error::ZeroMass { lo: interval.lo, hi: interval.hi });
    }
    Distribution::from_weights(d.slice(interval).to_vec())
}

/// `max/min - 1` over the given values. `+inf` when the minimum is zero and the maximum is not; 0
/// when all values coincide, including all zero.
pub fn bias(values: &[f64]) -> f64 {
    let (lo, hi) = values.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    if values.is_empty() || hi == lo {
        0.0
    } else if lo <= 0.0 {
        f64::INFINITY
    } else {
        hi / lo - 1.0
    }
}

/// Replaces each interval's masses by their average.
pub fn flatten(d: &Distribution, p: &IntervalPartition) -> Result<Distribution> {
    p.check_domain(d.n())?;
    let mut out = Vec::with_capacity(d.n());
    for &iv in p.intervals() {
        let vals = d.slice(iv);
        if vals.iter().all(|&v| v == vals[0]) {
            // Keeps flattening exactly idempotent.
            out.extend_from_slice(vals);
        } else {
            let avg = vals.iter().sum::<f64>() / iv.len() as f64;
            out.extend(std::iter::repeat_n(avg, iv.len()));
        }
    }
    Distribution::new(out)
}

/// The distribution over interval positions `[1, |p|]` with `out[j] = d(I_j)`.
pub fn coarsen(d: &Distribution, p: &IntervalPartition) -> Result<Distribution> {
    p.check_domain(d.n())?;
    Distribution::new(p.intervals().iter().map(|&iv| d.slice(iv).iter().sum()).collect())
}

/// Spreads `c[j]` uniformly over `I_j`.
pub fn uncoarsen(c: &Distribution, p: &IntervalPartition) -> Result<Distribution> {
    if c.n() != p.len() {
        return Err(Error::DimensionMismatch { left: c.n(), right: p.len() });
    }
    let mut out = Vec::with_capacity(p.n());
    for (j, &iv) in p.intervals().iter().enumerate() {
        out.extend(std::iter::repeat_n(c.probs()[j] / iv.len() as f64, iv.len()));
    }
    Distribution::new(out)
}

/// Ground-truth weights of the three interval families a partition is judged by.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ViolationReport {
    /// Total mass of non-singleton intervals heavier than `eta`.
    pub heavy: f64,
    /// Total mass of intervals whose restriction has bias above `bias_threshold`.
    pub high_bias: f64,
    /// Total mass of intervals whose restriction is more than `far_threshold` from uniform in ℓ1.
    pub far: f64,
}

/// Exact violating weights of `p` under `d`, for tests and experiments only.
///
/// Massless intervals count as uniform.
pub fn inspect_violating_weight(
    d: &Distribution,
    p: &IntervalPartition,
    eta: f64,
    bias_threshold: f64,
    far_threshold: f64,
) -> Result<ViolationReport> {
    p.check_domain(d.n())?;
    let mut r = ViolationReport { heavy: 0.0, high_bias: 0.0, far: 0.0 };
    for &iv in p.intervals() {
        let w = d.mass(iv);
        if w <= 0.0 {
            continue;
        }
        if w > eta && iv.len() > 1 {
            r.heavy += w;
        }
        let vals = d.slice(iv);
        if bias(vals) > bias_threshold {
            r.high_bias += w;
        }
        let restricted: Vec<f64> = vals.iter().map(|v| v / w).collect();
        if l1_to_uniform(&restricted) > far_threshold {
            r.far += w;
        }
    }
    Ok(r)
}
