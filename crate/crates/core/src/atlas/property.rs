//! Properties characterized by atlases, the adaptive tester for them, and its tolerant variant.

use serde::{Deserialize, Serialize};

use super::learn::learn_atlas;
use super::{Atlas, Inventory};
use crate::constants::Constants;
use crate::error::{invalid, Result};
use crate::model::{Distribution, Oracle, QueryCount};
use crate::pull::{pull_eta_fine, FinenessParams};
use crate::uniformity::delta_since;

/// A property `C` that is `k(eps, n)`-characterized by atlases.
pub trait AtlasPropertySpec: Send + Sync {
    fn name(&self) -> String;

    /// Characterization length `k(eps, n)`.
    fn k_fn(&self, epsilon: f64, n: usize) -> usize;

    /// Smallest ℓ1 distance from a distribution conforming to `atlas` to `C`, exact or an upper
    /// bound.
    fn conformance_distance(&self, atlas: &Atlas) -> Result<f64>;

    /// ℓ1 distance from an explicit distribution to `C`. Ground truth for tests and experiments.
    fn distance(&self, d: &Distribution) -> Result<f64>;

    /// A member of `C` over `[1, n]`, deterministic in `seed`.
    fn member(&self, n: usize, seed: u64) -> Result<Distribution>;
}

/// Distributions with at most `s0` elements of positive mass. Symmetric, so `k = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SupportSize {
    pub s0: usize,
}

impl SupportSize {
    /// Moving the smallest positive values onto the `s0` largest costs twice their total.
    pub fn inventory_distance(&self, inv: &Inventory) -> f64 {
        let positive: u64 = inv.runs().iter().filter(|r| r.0 > 0.0).map(|r| r.1).sum();
        let mut excess = positive.saturating_sub(self.s0 as u64);
        let mut vacated = 0.0;
        for &(v, m) in inv.runs().iter().filter(|r| r.0 > 0.0) {
            if excess == 0 {
                break;
            }
            let t = excess.min(m);
            vacated += v * t as f64;
            excess -= t;
        }
        2.0 * vacated
    }
}

impl AtlasPropertySpec for SupportSize {
    fn name(&self) -> String {
        format!("support:{}", self.s0)
    }

    fn k_fn(&self, _: f64, _: usize) -> usize {
        1
    }

    fn conformance_distance(&self, atlas: &Atlas) -> Result<f64> {
        Ok(self.inventory_distance(&atlas.merged()))
    }

    fn distance(&self, d: &Distribution) -> Result<f64> {
        Ok(self.inventory_distance(&Inventory::from_values(d.probs())?))
    }

    fn member(&self, n: usize, seed: u64) -> Result<Distribution> {
        use rand::{Rng, SeedableRng};
        if self.s0 == 0 {
            return Err(invalid("support bound s0 must be at least 1"));
        }
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut w = vec![0.0; n];
        for i in rand::seq::index::sample(&mut rng, n, self.s0.min(n)) {
            w[i] = rng.random_range(0.1..1.0);
        }
        Distribution::from_weights(w)
    }
}

/// `C_eta`: distributions within `eta` of `C`. Its distance is `max(0, d(., C) - eta)`, and it is
/// characterized by atlases of the same length.
pub struct Relaxed<'a> {
    pub inner: &'a dyn AtlasPropertySpec,
    pub eta: f64,
}

impl AtlasPropertySpec for Relaxed<'_> {
    fn name(&self) -> String {
        format!("{}~{}", self.inner.name(), self.eta)
    }

    fn k_fn(&self, epsilon: f64, n: usize) -> usize {
        self.inner.k_fn(epsilon, n)
    }

    fn conformance_distance(&self, atlas: &Atlas) -> Result<f64> {
        Ok((self.inner.conformance_distance(atlas)? - self.eta).max(0.0))
    }

    fn distance(&self, d: &Distribution) -> Result<f64> {
        Ok((self.inner.distance(d)? - self.eta).max(0.0))
    }

    fn member(&self, n: usize, seed: u64) -> Result<Distribution> {
        self.inner.member(n, seed)
    }
}

/// `factor k ln n ln(1/eps) / eps`, with `ln(1/eps)` floored at 1.
pub fn atlas_length_bound(k: usize, n: usize, epsilon: f64, factor: f64) -> f64 {
    factor * k as f64 * (n as f64).ln() * (1.0 / epsilon).ln().max(1.0) / epsilon
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtlasVerdict {
    pub accept: bool,
    /// `k(eps/5, n)`.
    pub k: usize,
    pub length_bound: f64,
    /// Pulls attempted: 0 for the trivial accept, 2 when the first was too long.
    pub pulls: u32,
    pub partition_len: Option<usize>,
    pub conformance: Option<f64>,
    pub atlas: Option<Atlas>,
    pub queries: QueryCount,
}

/// Algorithm 7.
pub fn test_atlas_property(
    oracle: &mut Oracle<'_>,
    prop: &dyn AtlasPropertySpec,
    epsilon: f64,
    constants: &Constants,
) -> Result<AtlasVerdict> {
    if !(epsilon > 0.0) {
        return Err(invalid(format!("epsilon must be positive, got {epsilon}")));
    }
    let n = oracle.n();
    let d = constants.atlas_divisor;
    let k = prop.k_fn(epsilon / d, n).max(1);
    let length_bound = atlas_length_bound(k, n, epsilon, constants.atlas_length_factor);
    let mut verdict = AtlasVerdict {
        accept: true,
        k,
        length_bound,
        pulls: 0,
        partition_len: None,
        conformance: None,
        atlas: None,
        queries: QueryCount::default(),
    };
    // Any two distributions are within ℓ1 distance 2.
    if epsilon >= 2.0 {
        return Ok(verdict);
    }
    let before = oracle.counts();
    let fineness = FinenessParams::eta_fine(epsilon / (d * k as f64), 1.0 / 6.0);
    let mut partition = None;
    while partition.is_none() && verdict.pulls < 2 {
        verdict.pulls += 1;
        let p = pull_eta_fine(oracle, &fineness)?;
        verdict.partition_len = Some(p.len());
        if p.len() as f64 <= length_bound {
            partition = Some(p);
        }
    }
    let Some(partition) = partition else {
        verdict.accept = false;
        verdict.queries = delta_since(oracle, before);
        return Ok(verdict);
    };
    let learned = learn_atlas(oracle, &partition, epsilon / d, 1.0 / 6.0, constants)?;
    let conformance = prop.conformance_distance(&learned.atlas)?;
    verdict.accept = conformance <= epsilon / d;
    verdict.conformance = Some(conformance);
    verdict.atlas = Some(learned.atlas);
    verdict.queries = delta_since(oracle, before);
    Ok(verdict)
}

/// `(eta, eps)`-tolerant tester: Algorithm 7 against `C_eta`.
pub fn tolerant_test_atlas_property(
    oracle: &mut Oracle<'_>,
    prop: &dyn AtlasPropertySpec,
    eta: f64,
    epsilon: f64,
    constants: &Constants,
) -> Result<AtlasVerdict> {
    if !(eta >= 0.0 && epsilon > 0.0 && eta + epsilon < 1.0) {
        return Err(invalid(format!("need eta >= 0, eps > 0 and eta + eps < 1, got {eta}, {epsilon}")));
    }
    test_atlas_property(oracle, &Relaxed { inner: prop, eta }, epsilon, constants)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::atlas::atlas_of;
    use crate::model::IntervalPartition;

    #[test]
    fn support_distance() {
        let p = SupportSize { s0: 2 };
        let d = Distribution::new(vec![0.5, 0.3, 0.1, 0.1, 0.0]).unwrap();
        assert!((p.distance(&d).unwrap() - 0.4).abs() < 1e-15);
        assert_eq!(SupportSize { s0: 4 }.distance(&d).unwrap(), 0.0);
        let u = Distribution::uniform(16).unwrap();
        assert!((SupportSize { s0: 4 }.distance(&u).unwrap() - 1.5).abs() < 1e-15);
        let a = atlas_of(&d, &IntervalPartition::from_right_ends(5, &[2, 5]).unwrap()).unwrap();
        assert!((p.conformance_distance(&a).unwrap() - 0.4).abs() < 1e-15);
        let relaxed = Relaxed { inner: &p, eta: 0.25 };
        assert!((relaxed.distance(&d).unwrap() - 0.15).abs() < 1e-15);
    }

    #[test]
    fn members_and_permutations() {
        let p = SupportSize { s0: 3 };
        for seed in 0..5 {
            let m = p.member(7, seed).unwrap();
            assert_eq!(p.distance(&m).unwrap(), 0.0);
            // Every permutation of a member is a member: the property sees only the multiset.
            let mut v = m.probs().to_vec();
            v.reverse();
            assert_eq!(p.distance(&Distribution::new(v).unwrap()).unwrap(), 0.0);
        }
    }

    #[test]
    fn huge_epsilon_accepts_without_queries() {
        let d = Distribution::uniform(64).unwrap();
        let mut o = Oracle::new(&d, 0);
        let v = test_atlas_property(&mut o, &SupportSize { s0: 1 }, 2.0, &Constants::desk()).unwrap();
        assert!(v.accept);
        assert_eq!(o.counts().total(), 0);
    }

    #[test]
    fn tolerant_needs_room() {
        let d = Distribution::uniform(8).unwrap();
        let mut o = Oracle::new(&d, 0);
        assert!(tolerant_test_atlas_property(&mut o, &SupportSize { s0: 1 }, 0.5, 0.5, &Constants::desk()).is_err());
    }

    #[test]
    fn separates_support_sizes() {
        let c = Constants::desk();
        let p = SupportSize { s0: 8 };
        let mut w = vec![0.0; 256];
        w[..8].iter_mut().for_each(|x| *x = 1.0);
        let member = Distribution::from_weights(w).unwrap();
        let far = Distribution::from_weights((0..256).map(|i| if i % 8 == 0 { 1.0 } else { 0.0 }).collect()).unwrap();
        let mut o = Oracle::new(&member, 1);
        let v = test_atlas_property(&mut o, &p, 0.3, &c).unwrap();
        assert!(v.accept, "{:?}", v.conformance);
        assert_eq!(v.queries, o.counts());
        let mut o = Oracle::new(&far, 1);
        assert!(!test_atlas_property(&mut o, &p, 0.3, &c).unwrap().accept);
    }
}
