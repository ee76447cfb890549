//! Level-set count estimation and atlas learning.
//!
//! Every trimmed sample lands in a class `(interval j, grid level k)` whose members all carry the
//! same reported value. Class frequencies turn into member counts that never overshoot; the rest of
//! each interval is filled with zeros and the whole atlas is rescaled to total 1.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::trimming::{Grid, TrimmingSampler};
use super::{Atlas, Inventory};
use crate::constants::{ceil_count, Constants};
use crate::error::{invalid, Result};
use crate::model::{IntervalPartition, Oracle, QueryCount};
use crate::uniformity::delta_since;

/// Sample sizes above this are refused rather than simulated.
pub const SAMPLE_LIMIT: u64 = 10_000_000_000_000_000;

/// `s = ceil(6 r ln(r/delta) / eps^2)`.
pub fn estimate_sample_count(classes: usize, epsilon: f64, delta: f64) -> u64 {
    let r = classes as f64;
    ceil_count(6.0 * r * (r / delta).ln() / (epsilon * epsilon))
}

/// Accuracy handed to the count estimation inside the atlas learner: `eps / 40` with the published
/// constants, so that its `4 eps` guarantee is `eps/10`.
pub fn atlas_count_accuracy(epsilon: f64, c: &Constants) -> f64 {
    epsilon / c.atlas_count_divisor
}

/// Member counts `m_k = ceil(a'_k / p_k)` with `a'_k = min(a_k - eps/r, a_k/(1+eps))` and `a_k` the
/// frequency `tallies[k] / samples`; negative estimates count as 0.
///
/// `classes` is `r`, the total number of classes, which may exceed the number of
/// classes listed here when unobserved classes are left out.
pub fn estimate_level_counts(
    tallies: &[u64],
    values: &[f64],
    samples: u64,
    classes: usize,
    epsilon: f64,
) -> Result<Vec<u64>> {
    if tallies.len() != values.len() {
        return Err(crate::error::Error::DimensionMismatch { left: tallies.len(), right: values.len() });
    }
    if classes < tallies.len() || samples == 0 || !(epsilon > 0.0) || values.iter().any(|&p| !(p > 0.0)) {
        return Err(invalid("count estimation needs r >= listed classes, samples > 0, eps > 0 and positive values"));
    }
    let r = classes as f64;
    Ok(tallies
        .iter()
        .zip(values)
        .map(|(&t, &p)| {
            let a = t as f64 / samples as f64;
            let a2 = (a - epsilon / r).min(a / (1.0 + epsilon));
            ceil_count(a2 / p)
        })
        .collect())
}

/// Output of the atlas learner with its bookkeeping.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearnedAtlas {
    pub atlas: Atlas,
    pub grid: Grid,
    /// The class count `r`: intervals times grid values.
    pub classes: usize,
    pub samples: u64,
    pub trimmed: u64,
    /// Scale applied to the grid values; 0 when nothing survived and the uniform atlas was returned.
    pub scale: f64,
    pub queries: QueryCount,
}

/// Learns an atlas over `partition` for a distribution `eps`-close to the truth, with probability
/// at least `1 - delta`.
pub fn learn_atlas(
    oracle: &mut Oracle<'_>,
    partition: &IntervalPartition,
    epsilon: f64,
    delta: f64,
    constants: &Constants,
) -> Result<LearnedAtlas> {
    let n = oracle.n();
    partition.check_domain(n)?;
    let eps_sampler = epsilon / constants.atlas_sampler_divisor;
    if !(eps_sampler > 0.0 && eps_sampler < 0.5) || !(delta > 0.0 && delta < 1.0) {
        return Err(invalid(format!("atlas learning needs eps in (0, {}) and delta in (0, 1)", constants.atlas_sampler_divisor / 2.0)));
    }
    let eps_count = atlas_count_accuracy(epsilon, constants);
    let before = oracle.counts();
    let grid = Grid::new(n, eps_sampler, constants.atlas_grid_levels);
    let classes = partition.len().saturating_mul(grid.len());
    let samples = estimate_sample_count(classes, eps_count, delta / 2.0);
    if samples > SAMPLE_LIMIT {
        return Err(invalid(format!("atlas learning would draw {samples} samples, above the simulation limit")));
    }
    let mut sampler = TrimmingSampler::new(oracle, eps_sampler, samples, delta / 2.0, constants.atlas_grid_levels)?;
    let batch = sampler.sample(oracle, samples)?;

    let mut by_class: BTreeMap<(usize, usize), u64> = BTreeMap::new();
    for t in &batch.tallies {
        let j = partition.locate(t.index).expect("partition covers the domain");
        *by_class.entry((j, t.level)).or_insert(0) += t.count;
    }
    let keys: Vec<(usize, usize)> = by_class.keys().copied().collect();
    let tallies: Vec<u64> = by_class.values().copied().collect();
    let values: Vec<f64> = keys.iter().map(|&(_, k)| grid.value(k)).collect();
    let counts = estimate_level_counts(&tallies, &values, samples, classes, eps_count)?;

    // Per interval: (level, count) ascending by level.
    let mut levels: Vec<Vec<(usize, u64)>> = vec![Vec::new(); partition.len()];
    for (&(j, k), &m) in keys.iter().zip(&counts) {
        if m > 0 {
            levels[j].push((k, m));
        }
    }
    for (lv, iv) in levels.iter_mut().zip(partition.intervals()) {
        let mut excess = lv.iter().map(|x| x.1).sum::<u64>().saturating_sub(iv.len() as u64);
        for x in lv.iter_mut() {
            let cut = excess.min(x.1);
            x.1 -= cut;
            excess -= cut;
        }
    }
    let total: f64 = levels.iter().flatten().map(|&(k, m)| grid.value(k) * m as f64).sum();
    let (scale, inventories) = if total > 0.0 {
        let scale = 1.0 / total;
        let inv = levels
            .iter()
            .zip(partition.intervals())
            .map(|(lv, iv)| {
                let filled: u64 = lv.iter().map(|x| x.1).sum();
                let zeros = std::iter::once((0.0, iv.len() as u64 - filled));
                Inventory::from_counts(zeros.chain(lv.iter().map(|&(k, m)| (grid.value(k) * scale, m))))
            })
            .collect::<Result<Vec<_>>>()?;
        (scale, inv)
    } else {
        let u = 1.0 / n as f64;
        let inv = partition
            .intervals()
            .iter()
            .map(|iv| Inventory::from_counts([(u, iv.len() as u64)]))
            .collect::<Result<Vec<_>>>()?;
        (0.0, inv)
    };
    Ok(LearnedAtlas {
        atlas: Atlas::new(partition.clone(), inventories)?,
        grid,
        classes,
        samples,
        trimmed: batch.trimmed,
        scale,
        queries: delta_since(oracle, before),
    })
}
