//! Adaptive pair-comparison tester.
//!
//! Each round draws `x` from `mu|I` with one conditional query and `y` uniformly from `I \ {x}`
//! with internal coins, then spends `Q` conditional queries on `{x, y}` to estimate
//! `mu(x)/mu(y)`. Any estimate outside `[1/(1+t eps), 1+t eps]` rejects.
//!
//! If the restriction has bias at most `eps/100` every true ratio is within `1.0101` of 1, far
//! inside the window. If it is `eps`-far from uniform, the sampled `x` is heavy relative to a
//! uniform `y` with constant probability per round. `Q` comes from Hoeffding on the share of `x`
//! in the pair, with a union bound over the `K` rounds. Neither count depends on `n` or `mu(I)`.

use rand::Rng;

use super::{delta_since, IntervalTester, WttInput, WttVerdict};
use crate::constants::{ceil_count, Constants};
use crate::error::Result;
use crate::model::{Oracle, QueryCount, QuerySet};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairTester {
    pub rounds: f64,
    pub pair: f64,
    pub ratio: f64,
}

impl PairTester {
    pub fn from_constants(c: &Constants) -> Self {
        Self { rounds: c.adaptive_rounds, pair: c.adaptive_pair, ratio: c.adaptive_ratio }
    }

    /// `K = ceil(rounds * ln(2/delta) / eps^2)`.
    pub fn round_count(&self, epsilon: f64, delta: f64) -> u64 {
        ceil_count(self.rounds * (2.0 / delta).ln() / (epsilon * epsilon)).max(1)
    }

    /// `Q = ceil(pair * ln(2K/delta) / eps^2)`.
    pub fn pair_queries(&self, epsilon: f64, delta: f64) -> u64 {
        let k = self.round_count(epsilon, delta) as f64;
        ceil_count(self.pair * (2.0 * k / delta).ln() / (epsilon * epsilon)).max(1)
    }
}

impl IntervalTester for PairTester {
    fn name(&self) -> &'static str {
        "adaptive"
    }

    fn test(&self, oracle: &mut Oracle<'_>, input: &WttInput) -> Result<WttVerdict> {
        input.validate(oracle.n())?;
        let before = oracle.counts();
        let iv = input.interval;
        if iv.is_singleton() {
            return Ok(WttVerdict { accept: true, queries_used: QueryCount::default() });
        }
        let k = self.round_count(input.epsilon, input.delta);
        let q = self.pair_queries(input.epsilon, input.delta);
        let hi = 1.0 + self.ratio * input.epsilon;
        let mut accept = true;
        for _ in 0..k {
            let x = oracle.sample_conditional(&QuerySet::Interval(iv))?;
            let mut y = iv.lo + oracle.rng().random_range(0..iv.len() - 1);
            if y >= x {
                y += 1;
            }
            let pair = [x.min(y), x.max(y)];
            let counts = oracle.conditional_counts(&QuerySet::Set(&pair), q)?;
            let (cx, cy) = if x < y { (counts[0], counts[1]) } else { (counts[1], counts[0]) };
            // cx * (1 + t eps) < cy  <=>  ratio below the window, and symmetrically above.
            if cx as f64 > hi * cy as f64 || (cx as f64) * hi < cy as f64 {
                accept = false;
            }
        }
        Ok(WttVerdict { accept, queries_used: delta_since(oracle, before) })
    }

    fn budget(&self, _n: usize, input: &WttInput) -> QueryCount {
        if input.interval.is_singleton() {
            return QueryCount::default();
        }
        let k = self.round_count(input.epsilon, input.delta);
        QueryCount::conditional(k * (1 + self.pair_queries(input.epsilon, input.delta)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Distribution, Interval};

    #[test]
    fn budget_is_exact_and_n_free() {
        let t = PairTester::from_constants(&Constants::desk());
        for n in [64usize, 4096] {
            let d = Distribution::uniform(n).unwrap();
            let i = WttInput { interval: d.whole(), m: n as f64, gamma: 1.0, epsilon: 0.3, delta: 0.2 };
            let mut o = Oracle::new(&d, 2);
            let v = t.test(&mut o, &i).unwrap();
            assert_eq!(v.queries_used, t.budget(n, &i));
            assert_eq!(v.queries_used, t.budget(64, &i));
        }
    }

    #[test]
    fn separates_uniform_from_biased_halves() {
        let n = 512;
        let t = PairTester::from_constants(&Constants::desk());
        let u = Distribution::uniform(n).unwrap();
        // Bias 3 between the two halves.
        let far = Distribution::from_weights((0..n).map(|i| if i < n / 2 { 4.0 } else { 1.0 }).collect()).unwrap();
        let i = WttInput { interval: Interval::new(1, n).unwrap(), m: n as f64, gamma: 1.0, epsilon: 0.25, delta: 0.2 };
        let acc = (0..40u64).filter(|&s| t.test(&mut Oracle::new(&u, s), &i).unwrap().accept).count();
        let rej = (0..40u64).filter(|&s| !t.test(&mut Oracle::new(&far, s), &i).unwrap().accept).count();
        assert!(acc >= 36 && rej >= 36, "{acc} {rej}");
    }
}
