//! Weakly tolerant interval uniformity testers and the small learners they rely on.
//!
//! A weakly tolerant tester gets an interval `I` with a size bound `m` and a weight bound `gamma`.
//! When `|I| <= m` and `mu(I) >= gamma` it must accept restrictions with bias at most `eps/100` and
//! reject restrictions more than `eps` from uniform, each with probability `1 - delta`. Outside
//! that promise any answer is allowed.

mod collision;
mod learn;
mod nonadaptive;
mod pair;

use serde::{Deserialize, Serialize};

use crate::constants::{majority_rounds, Constants};
use crate::error::{invalid, Result};
use crate::model::{Interval, Oracle, QueryCount};

pub use collision::CollisionTester;
pub use learn::{
    learn_l1, learn_l1_sample_count, learn_linf, learn_linf_sample_count, learn_restriction_l1,
    learn_restriction_sample_count,
};
pub use nonadaptive::{
    alg5_close_draws, alg5_collision_draws, alg5_levels, alg5_presample_count, alg5_seed_budget, draw_nonadaptive_seed,
    Alg5Params, NonAdaptiveSeed, NonAdaptiveTester, SeedLevel,
};
pub use pair::PairTester;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WttInput {
    pub interval: Interval,
    /// Size bound `m`.
    pub m: f64,
    /// Weight bound `gamma`.
    pub gamma: f64,
    pub epsilon: f64,
    pub delta: f64,
}

impl WttInput {
    pub fn validate(&self, n: usize) -> Result<()> {
        self.interval.check_within(n)?;
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err(invalid(format!("gamma must lie in (0, 1], got {}", self.gamma)));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(invalid(format!("epsilon must lie in (0, 1), got {}", self.epsilon)));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(invalid(format!("delta must lie in (0, 1), got {}", self.delta)));
        }
        if !(self.m >= 1.0) {
            return Err(invalid(format!("size bound m must be at least 1, got {}", self.m)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WttVerdict {
    pub accept: bool,
    /// Ledger delta of this call.
    pub queries_used: QueryCount,
}

/// A weakly tolerant interval tester.
pub trait IntervalTester: Send + Sync {
    fn name(&self) -> &'static str;

    fn test(&self, oracle: &mut Oracle<'_>, input: &WttInput) -> Result<WttVerdict>;

    /// Queries one call makes on a domain of size `n`. Exact for the collision and pair testers.
    /// The non-adaptive tester cannot query an empty `U_k`, so for it this is an upper bound.
    fn budget(&self, n: usize, input: &WttInput) -> QueryCount;
}

/// The three tester backends.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TesterModel {
    Uncond,
    Adaptive,
    NonAdaptive,
}

impl std::str::FromStr for TesterModel {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "uncond" => Ok(TesterModel::Uncond),
            "adaptive" => Ok(TesterModel::Adaptive),
            "nonadaptive" => Ok(TesterModel::NonAdaptive),
            other => Err(format!("unknown model '{other}' (expected uncond, adaptive or nonadaptive)")),
        }
    }
}

impl TesterModel {
    pub fn build(self, c: &Constants) -> Box<dyn IntervalTester> {
        match self {
            TesterModel::Uncond => Box::new(CollisionTester::from_constants(c)),
            TesterModel::Adaptive => Box::new(PairTester::from_constants(c)),
            TesterModel::NonAdaptive => Box::new(NonAdaptiveTester::from_constants(c)),
        }
    }
}

/// Runs `inner` `rounds` times with the same input and returns the majority verdict.
///
/// `rounds` should be odd; ties reject.
pub struct Majority<T> {
    pub inner: T,
    pub rounds: u64,
}

impl<T: IntervalTester> Majority<T> {
    pub fn new(inner: T, rounds: u64) -> Self {
        Self { inner, rounds }
    }

    /// Enough rounds to bring a per-round error of `base` down to `delta`.
    pub fn for_error(inner: T, delta: f64, base: f64) -> Self {
        Self { inner, rounds: majority_rounds(delta, base) }
    }
}

impl<T: IntervalTester> IntervalTester for Majority<T> {
    fn name(&self) -> &'static str {
        self.inner.name()
    }

    fn test(&self, oracle: &mut Oracle<'_>, input: &WttInput) -> Result<WttVerdict> {
        let before = oracle.counts();
        let mut yes = 0u64;
        for _ in 0..self.rounds {
            if self.inner.test(oracle, input)?.accept {
                yes += 1;
            }
        }
        let after = oracle.counts();
        Ok(WttVerdict {
            accept: 2 * yes > self.rounds,
            queries_used: QueryCount {
                unconditional: after.unconditional - before.unconditional,
                conditional: after.conditional - before.conditional,
            },
        })
    }

    fn budget(&self, n: usize, input: &WttInput) -> QueryCount {
        self.inner.budget(n, input).scale(self.rounds)
    }
}

pub(crate) fn delta_since(oracle: &Oracle<'_>, before: QueryCount) -> QueryCount {
    let after = oracle.counts();
    QueryCount {
        unconditional: after.unconditional - before.unconditional,
        conditional: after.conditional - before.conditional,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Distribution;
    use rand::Rng;

    /// Answers correctly with probability 0.7 and spends one unconditional query.
    struct Noisy;

    impl IntervalTester for Noisy {
        fn name(&self) -> &'static str {
            "noisy"
        }

        fn test(&self, oracle: &mut Oracle<'_>, _: &WttInput) -> Result<WttVerdict> {
            oracle.sample_unconditional();
            let accept = oracle.rng().random::<f64>() < 0.7;
            Ok(WttVerdict { accept, queries_used: QueryCount::unconditional(1) })
        }

        fn budget(&self, _: usize, _: &WttInput) -> QueryCount {
            QueryCount::unconditional(1)
        }
    }

    #[test]
    fn majority_follows_chernoff() {
        let d = Distribution::uniform(4).unwrap();
        let input = WttInput { interval: d.whole(), m: 4.0, gamma: 1.0, epsilon: 0.5, delta: 0.1 };
        let trials = 2000u64;
        let mut errors = Vec::new();
        for rounds in [1u64, 5, 15, 31] {
            let t = Majority::new(Noisy, rounds);
            let mut o = Oracle::new(&d, rounds);
            let wrong = (0..trials).filter(|_| !t.test(&mut o, &input).unwrap().accept).count();
            assert_eq!(o.counts().unconditional, rounds * trials);
            let rate = wrong as f64 / trials as f64;
            // Hoeffding: P(majority wrong) <= exp(-2 r (0.2)^2), plus sampling slack.
            let bound = (-2.0 * rounds as f64 * 0.04).exp();
            assert!(rate <= bound + 3.0 * (bound * (1.0 - bound) / trials as f64).sqrt() + 0.01, "{rounds}: {rate}");
            errors.push(rate);
        }
        assert!(errors.windows(2).all(|w| w[1] <= w[0]));
        assert!(errors[3] < 0.05);
    }

    #[test]
    fn parses_models() {
        assert_eq!("nonadaptive".parse::<TesterModel>().unwrap(), TesterModel::NonAdaptive);
        assert!("other".parse::<TesterModel>().is_err());
    }
}
