//! Learning `L`-decomposable distributions (Algorithm 4) and testing decomposable properties
//! (Algorithm 6).
//!
//! The learner pulls an `(eps/(dL), eps/d)`-fine partition, assesses it, and if the assessment
//! passes learns the flattening over it. It may reject any input, but with probability at least 2/3
//! it never returns a distribution far from the truth.

mod property;

use serde::{Deserialize, Serialize};

use crate::assess::{assess_partition, AssessOutcome, AssessParams};
use crate::constants::{ceil_count, Constants};
use crate::error::{invalid, Result};
use crate::model::{uncoarsen, Distribution, IntervalPartition, Oracle, QueryCount};
use crate::pull::{pull_eta_gamma_fine, pull_sample_count, FinenessParams};
use crate::uniformity::{delta_since, IntervalTester};

pub use property::{distance_to_k_histogram, distance_to_monotone, distance_to_uniform, Property, PropertySpec};

/// `ceil(2 (len + ln(2/delta)) / eps^2)`.
pub fn learn_flat_sample_count(len: usize, epsilon: f64, delta: f64) -> u64 {
    ceil_count(2.0 * (len as f64 + (2.0 / delta).ln()) / (epsilon * epsilon))
}

/// Learns the flattening of `mu` over `partition` by learning its coarsening and spreading it back.
pub fn learn_flat(
    oracle: &mut Oracle<'_>,
    partition: &IntervalPartition,
    epsilon: f64,
    delta: f64,
) -> Result<Distribution> {
    if !(epsilon > 0.0) || !(delta > 0.0 && delta < 1.0) {
        return Err(invalid(format!("need epsilon > 0 and delta in (0, 1), got {epsilon}, {delta}")));
    }
    let t = learn_flat_sample_count(partition.len(), epsilon, delta);
    let counts = oracle.unconditional_block_counts(partition, t)?;
    let coarse = Distribution::from_weights(counts.iter().map(|&c| c as f64).collect())?;
    uncoarsen(&coarse, partition)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecomposableParams {
    /// Decomposability bound `L`.
    pub l: usize,
    pub epsilon: f64,
}

impl DecomposableParams {
    pub fn validate(&self) -> Result<()> {
        if self.l == 0 {
            return Err(invalid("L must be at least 1"));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(invalid(format!("epsilon must lie in (0, 1), got {}", self.epsilon)));
        }
        Ok(())
    }

    /// Step 1's pull: `(eps/(d L), eps/d, 1/9)`.
    pub fn fineness(&self, c: &Constants) -> FinenessParams {
        let d = c.learn_pull_divisor;
        FinenessParams::eta_gamma_fine(self.epsilon / (d * self.l as f64), self.epsilon / d, 1.0 / 9.0)
    }

    /// Length bound `r` for a domain of size `n`.
    pub fn length_bound(&self, n: usize, c: &Constants) -> f64 {
        match c.learn_length_factor {
            Some(f) => f * self.l as f64 * (1.0 / self.epsilon).ln() / self.epsilon,
            None => (2 * pull_sample_count(n, &self.fineness(c)) + 1) as f64,
        }
    }

    /// Step 2's assessment: `(c = L, r, eps/d, 1/9)`.
    pub fn assessment(&self, n: usize, c: &Constants) -> AssessParams {
        AssessParams::new(
            self.l as f64,
            self.length_bound(n, c),
            self.epsilon / c.learn_assess_divisor,
            1.0 / 9.0,
            c,
        )
    }

    /// Step 4's accuracy `eps/10`; the error is `1/9`.
    pub fn flat_accuracy(&self, c: &Constants) -> f64 {
        self.epsilon / c.learn_flat_divisor
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RejectReason {
    /// The pulled partition was longer than `r`.
    TooLong,
    Assessment,
}

/// Result of Algorithm 4: either a rejection or a learned distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearnOutcome {
    pub learned: Option<Distribution>,
    pub rejected: Option<RejectReason>,
    pub partition: IntervalPartition,
    pub length_bound: f64,
    pub assessment: Option<AssessOutcome>,
    pub queries: QueryCount,
}

impl LearnOutcome {
    pub fn is_reject(&self) -> bool {
        self.learned.is_none()
    }
}

/// Algorithm 4.
pub fn learn_decomposable(
    oracle: &mut Oracle<'_>,
    params: &DecomposableParams,
    tester: &dyn IntervalTester,
    constants: &Constants,
) -> Result<LearnOutcome> {
    params.validate()?;
    let n = oracle.n();
    let before = oracle.counts();
    let partition = pull_eta_gamma_fine(oracle, &params.fineness(constants))?;
    let length_bound = params.length_bound(n, constants);
    let reject = |oracle: &Oracle<'_>, partition, assessment, reason| LearnOutcome {
        learned: None,
        rejected: Some(reason),
        partition,
        length_bound,
        assessment,
        queries: delta_since(oracle, before),
    };
    if partition.len() as f64 > length_bound {
        return Ok(reject(oracle, partition, None, RejectReason::TooLong));
    }
    let assessment = assess_partition(oracle, &partition, &params.assessment(n, constants), tester)?;
    if !assessment.accept {
        return Ok(reject(oracle, partition, Some(assessment), RejectReason::Assessment));
    }
    let learned = learn_flat(oracle, &partition, params.flat_accuracy(constants), 1.0 / 9.0)?;
    Ok(LearnOutcome {
        learned: Some(learned),
        rejected: None,
        partition,
        length_bound,
        assessment: Some(assessment),
        queries: delta_since(oracle, before),
    })
}

/// Result of Algorithm 6.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropertyVerdict {
    pub accept: bool,
    /// `L(gamma, n)` the learner ran with.
    pub l: usize,
    /// Distance from the learned distribution to the property, when learning succeeded.
    pub learned_distance: Option<f64>,
    pub learn: LearnOutcome,
}

/// The `gamma` at which Algorithm 6 evaluates `L`: the learner's weight parameter at accuracy
/// `eps/2`, which is `eps/4000` with the published constants.
pub fn property_gamma(epsilon: f64, c: &Constants) -> f64 {
    epsilon / 2.0 / c.learn_pull_divisor
}

/// Algorithm 6: learn at `eps/2`, accept iff learning succeeded and the result is `eps/2`-close.
pub fn test_decomposable_property(
    oracle: &mut Oracle<'_>,
    prop: &dyn PropertySpec,
    epsilon: f64,
    tester: &dyn IntervalTester,
    constants: &Constants,
) -> Result<PropertyVerdict> {
    let l = prop.l_fn(property_gamma(epsilon, constants), oracle.n()).max(1);
    let learn = learn_decomposable(oracle, &DecomposableParams { l, epsilon: epsilon / 2.0 }, tester, constants)?;
    let learned_distance = learn.learned.as_ref().map(|d| prop.distance(d)).transpose()?;
    let accept = learned_distance.is_some_and(|x| x <= epsilon / 2.0);
    Ok(PropertyVerdict { accept, l, learned_distance, learn })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::l1_distance;
    use crate::uniformity::{PairTester, TesterModel};

    #[test]
    fn flat_count_and_ledger() {
        // 2 (10 + ln 20) / 0.04 = 649.8
        assert_eq!(learn_flat_sample_count(10, 0.2, 0.1), 650);
        let d = Distribution::uniform(100).unwrap();
        let p = IntervalPartition::equal_blocks(100, 10).unwrap();
        let mut o = Oracle::new(&d, 1);
        let got = learn_flat(&mut o, &p, 0.2, 0.1).unwrap();
        assert_eq!(o.counts().unconditional, 650);
        assert!(l1_distance(&got, &d).unwrap() < 0.2);
    }

    #[test]
    fn learns_point_mass() {
        let c = Constants::desk();
        let d = Distribution::point_mass(256, 17).unwrap();
        let t = PairTester::from_constants(&c);
        let params = DecomposableParams { l: 1, epsilon: 0.3 };
        let ok = (0..10u64)
            .filter(|&s| {
                let mut o = Oracle::new(&d, s);
                let out = learn_decomposable(&mut o, &params, &t, &c).unwrap();
                assert_eq!(out.queries, o.counts());
                out.learned.is_some_and(|m| l1_distance(&m, &d).unwrap() <= 0.3)
            })
            .count();
        assert!(ok >= 9, "{ok}");
    }

    #[test]
    fn paper_profile_rejects_overlong_partitions() {
        let c = Constants::paper();
        let params = DecomposableParams { l: 1, epsilon: 0.9 };
        // r = 1e5 ln(1/0.9) / 0.9 = 11706.7, well below the number of distinct elements the pull sees.
        assert!((params.length_bound(1 << 16, &c) - 11706.7).abs() < 0.1);
        let d = Distribution::uniform(1 << 16).unwrap();
        let mut o = Oracle::new(&d, 0);
        let t = TesterModel::Adaptive.build(&c);
        let out = learn_decomposable(&mut o, &params, t.as_ref(), &c).unwrap();
        assert_eq!(out.rejected, Some(RejectReason::TooLong));
    }

    #[test]
    fn uniformity_property_separates() {
        let c = Constants::desk();
        let t = TesterModel::Adaptive.build(&c);
        let u = Distribution::uniform(256).unwrap();
        let far = Distribution::from_weights((0..256).map(|i| if i < 128 { 3.0 } else { 1.0 }).collect()).unwrap();
        let mut o = Oracle::new(&u, 4);
        let v = test_decomposable_property(&mut o, &Property::Uniform, 0.3, t.as_ref(), &c).unwrap();
        assert!(v.accept, "{:?}", v.learned_distance);
        let mut o = Oracle::new(&far, 4);
        assert!(!test_decomposable_property(&mut o, &Property::Uniform, 0.3, t.as_ref(), &c).unwrap().accept);
    }
}
