//! Inventories, atlases and value-distance, plus the atlas learner and the atlas-based testers.
//!
//! An inventory forgets where the values of a distribution sit inside an interval and keeps only
//! the multiset. An atlas is a partition with one inventory per interval; a distribution conforms
//! to it when its inventories match.

mod learn;
mod property;
mod trimming;

use std::collections::BTreeMap;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{invalid, Error, Result};
use crate::model::{Distribution, Interval, IntervalPartition};

pub use learn::{
    atlas_count_accuracy, estimate_level_counts, estimate_sample_count, learn_atlas, LearnedAtlas, SAMPLE_LIMIT,
};
pub use property::{
    atlas_length_bound, test_atlas_property, tolerant_test_atlas_property, AtlasPropertySpec, AtlasVerdict,
    Relaxed, SupportSize,
};
pub use trimming::{grid_levels, trimming_budget, ElementEstimate, Grid, TrimmedBatch, TrimmedSample, TrimmedTally, TrimmingSampler};

/// Tolerance on the grand total of an atlas.
pub const ATLAS_TOTAL_TOLERANCE: f64 = 1e-9;

/// A multiset of non-negative reals, stored as ascending `(value, multiplicity)` runs.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Inventory {
    runs: Vec<(f64, u64)>,
}

impl Inventory {
    pub fn from_values(values: &[f64]) -> Result<Self> {
        Self::from_counts(values.iter().map(|&v| (v, 1)))
    }

    /// Merges equal values and drops zero multiplicities.
    pub fn from_counts(counts: impl IntoIterator<Item = (f64, u64)>) -> Result<Self> {
        let mut runs: Vec<(f64, u64)> = Vec::new();
        for (v, m) in counts {
            if !v.is_finite() || v < 0.0 {
                return Err(invalid(format!("inventory value {v} is not a finite non-negative real")));
            }
            if m > 0 {
                runs.push((v, m));
            }
        }
        runs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut merged: Vec<(f64, u64)> = Vec::with_capacity(runs.len());
        for (v, m) in runs {
            match merged.last_mut() {
                Some(last) if last.0 == v => last.1 += m,
                _ => merged.push((v, m)),
            }
        }
        Ok(Self { runs: merged })
    }

    /// Ascending `(value, multiplicity)` runs with distinct values.
    pub fn runs(&self) -> &[(f64, u64)] {
        &self.runs
    }

    /// Number of members, counted with multiplicity.
    pub fn size(&self) -> u64 {
        self.runs.iter().map(|r| r.1).sum()
    }

    pub fn total(&self) -> f64 {
        self.runs.iter().map(|&(v, m)| v * m as f64).sum()
    }

    pub fn multiplicity(&self, value: f64) -> u64 {
        self.runs.iter().find(|r| r.0 == value).map_or(0, |r| r.1)
    }

    /// All members in ascending order.
    pub fn sorted_values(&self) -> Vec<f64> {
        self.runs.iter().flat_map(|&(v, m)| std::iter::repeat_n(v, m as usize)).collect()
    }

    /// Every member multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::from_counts(self.runs.iter().map(|&(v, m)| (v * factor, m)))
    }

    /// Merges two inventories into one multiset.
    pub fn union(&self, other: &Self) -> Self {
        Self::from_counts(self.runs.iter().chain(&other.runs).copied()).expect("members already validated")
    }
}

impl Serialize for Inventory {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeMap;
        let mut map = s.serialize_map(Some(self.runs.len()))?;
        for &(v, m) in &self.runs {
            map.serialize_entry(&v.to_string(), &m)?;
        }
        map.end()
    }
}

impl<'de> Deserialize<'de> for Inventory {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = BTreeMap::<String, u64>::deserialize(d)?;
        let counts = raw
            .into_iter()
            .map(|(k, m)| k.parse::<f64>().map(|v| (v, m)).map_err(|_| format!("bad inventory value '{k}'")))
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(serde::de::Error::custom)?;
        Inventory::from_counts(counts).map_err(serde::de::Error::custom)
    }
}

/// A partition of `[1, n]` with one inventory per interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "AtlasFile", into = "AtlasFile")]
pub struct Atlas {
    partition: IntervalPartition,
    inventories: Vec<Inventory>,
}

/// On-disk atlas: `{"partition": [[lo, hi], ...], "inventories": [{value: multiplicity}, ...]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AtlasFile {
    pub partition: Vec<[usize; 2]>,
    pub inventories: Vec<Inventory>,
}

impl TryFrom<AtlasFile> for Atlas {
    type Error = Error;

    fn try_from(f: AtlasFile) -> Result<Self> {
        let intervals = f.partition.iter().map(|&[lo, hi]| Interval::new(lo, hi)).collect::<Result<Vec<_>>>()?;
        Atlas::new(IntervalPartition::new(intervals)?, f.inventories)
    }
}

impl From<Atlas> for AtlasFile {
    fn from(a: Atlas) -> Self {
        AtlasFile {
            partition: a.partition.intervals().iter().map(|iv| [iv.lo, iv.hi]).collect(),
            inventories: a.inventories,
        }
    }
}

impl Atlas {
    /// Checks one inventory per interval, `|I_j|` members in inventory `j`, and a grand total of 1.
    pub fn new(partition: IntervalPartition, inventories: Vec<Inventory>) -> Result<Self> {
        if inventories.len() != partition.len() {
            return Err(Error::DimensionMismatch { left: partition.len(), right: inventories.len() });
        }
        for (iv, inv) in partition.intervals().iter().zip(&inventories) {
            if inv.size() != iv.len() as u64 {
                return Err(invalid(format!(
                    "inventory over [{}, {}] has {} members, expected {}",
                    iv.lo,
                    iv.hi,
                    inv.size(),
                    iv.len()
                )));
            }
        }
        let total: f64 = inventories.iter().map(Inventory::total).sum();
        if (total - 1.0).abs() > ATLAS_TOTAL_TOLERANCE {
            return Err(invalid(format!("atlas values sum to {total}, expected 1")));
        }
        Ok(Self { partition, inventories })
    }

    pub fn partition(&self) -> &IntervalPartition {
        &self.partition
    }

    pub fn inventories(&self) -> &[Inventory] {
        &self.inventories
    }

    /// Number of intervals.
    pub fn len(&self) -> usize {
        self.partition.len()
    }

    pub fn is_empty(&self) -> bool {
        self.partition.is_empty()
    }

    /// The canonical conformer: values ascending inside each interval.
    pub fn conformer(&self) -> Result<Distribution> {
        Distribution::new(self.inventories.iter().flat_map(Inventory::sorted_values).collect())
    }

    /// All inventories merged, which is all a symmetric property can see.
    pub fn merged(&self) -> Inventory {
        self.inventories.iter().fold(Inventory::default(), |acc, inv| acc.union(inv))
    }
}

pub fn inventory_of(d: &Distribution, interval: Interval) -> Result<Inventory> {
    interval.check_within(d.n())?;
    Inventory::from_values(d.slice(interval))
}

/// The atlas of `d` over `partition`; `d` conforms to it.
pub fn atlas_of(d: &Distribution, partition: &IntervalPartition) -> Result<Atlas> {
    partition.check_domain(d.n())?;
    let inventories = partition.intervals().iter().map(|&iv| inventory_of(d, iv)).collect::<Result<Vec<_>>>()?;
    Ok(Atlas { partition: partition.clone(), inventories })
}

/// Minimal ℓ1 distance between vectors realizing `a` and `b`: sorted order matched coordinatewise.
pub fn value_distance(a: &Inventory, b: &Inventory) -> Result<f64> {
    let (sa, sb) = (a.size(), b.size());
    if sa != sb {
        return Err(Error::DimensionMismatch { left: sa as usize, right: sb as usize });
    }
    let (mut ia, mut ib) = (a.runs.iter(), b.runs.iter());
    let (mut ra, mut rb) = (ia.next().copied(), ib.next().copied());
    let mut total = 0.0;
    while let (Some((va, ma)), Some((vb, mb))) = (ra, rb) {
        let t = ma.min(mb);
        total += t as f64 * (va - vb).abs();
        ra = if ma > t { Some((va, ma - t)) } else { ia.next().copied() };
        rb = if mb > t { Some((vb, mb - t)) } else { ib.next().copied() };
    }
    Ok(total)
}

/// ℓ1 distance from `d` to the nearest distribution conforming to `atlas`.
pub fn conforms_distance(d: &Distribution, atlas: &Atlas) -> Result<f64> {
    if atlas.partition.n() != d.n() {
        return Err(Error::DimensionMismatch { left: d.n(), right: atlas.partition.n() });
    }
    atlas
        .partition
        .intervals()
        .iter()
        .zip(&atlas.inventories)
        .map(|(&iv, inv)| value_distance(&Inventory::from_values(d.slice(iv))?, inv))
        .sum()
}
