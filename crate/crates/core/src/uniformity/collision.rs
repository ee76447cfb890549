//! Unconditional tester based on pairwise collisions inside the interval.

use super::{delta_since, IntervalTester, WttInput, WttVerdict};
use crate::constants::{ceil_count, majority_rounds, Constants};
use crate::error::Result;
use crate::model::{Oracle, QueryCount};

/// Filters unconditional samples into `I` and compares the collision rate with `1/|I|`.
///
/// A round aims for `s = c sqrt(m) / eps^2` samples inside `I` by drawing `hit_factor * s / gamma`
/// unconditional samples, then accepts iff `collisions / C(hits, 2) <= (1 + eps^2/4) / |I|`. The
/// verdict is the majority over enough rounds to reach error `delta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CollisionTester {
    pub c: f64,
    pub hit_factor: f64,
    pub base_error: f64,
}

impl CollisionTester {
    pub fn from_constants(c: &Constants) -> Self {
        Self { c: c.collision_c, hit_factor: c.collision_hit_factor, base_error: c.majority_base_error }
    }

    /// Target number of in-interval samples per round.
    pub fn in_interval_samples(&self, m: f64, epsilon: f64) -> u64 {
        ceil_count(self.c * m.sqrt() / (epsilon * epsilon))
    }

    /// Unconditional draws per round.
    pub fn draws_per_round(&self, input: &WttInput) -> u64 {
        ceil_count(self.hit_factor * self.in_interval_samples(input.m, input.epsilon) as f64 / input.gamma)
    }

    pub fn rounds(&self, delta: f64) -> u64 {
        majority_rounds(delta, self.base_error)
    }

    fn round(&self, oracle: &mut Oracle<'_>, input: &WttInput, draws: u64) -> Result<bool> {
        let counts = oracle.unconditional_counts_in(input.interval, draws)?;
        let hits: u64 = counts.iter().sum();
        if hits < 2 {
            return Ok(true);
        }
        let collisions: f64 = counts.iter().map(|&c| (c as f64) * (c as f64 - 1.0) / 2.0).sum();
        let pairs = hits as f64 * (hits as f64 - 1.0) / 2.0;
        let eps = input.epsilon;
        Ok(collisions / pairs <= (1.0 + eps * eps / 4.0) / input.interval.len() as f64)
    }
}

impl IntervalTester for CollisionTester {
    fn name(&self) -> &'static str {
        "uncond"
    }

    fn test(&self, oracle: &mut Oracle<'_>, input: &WttInput) -> Result<WttVerdict> {
        input.validate(oracle.n())?;
        let before = oracle.counts();
        if input.interval.is_singleton() {
            return Ok(WttVerdict { accept: true, queries_used: QueryCount::default() });
        }
        let draws = self.draws_per_round(input);
        let rounds = self.rounds(input.delta);
        let mut yes = 0;
        for _ in 0..rounds {
            if self.round(oracle, input, draws)? {
                yes += 1;
            }
        }
        Ok(WttVerdict { accept: 2 * yes > rounds, queries_used: delta_since(oracle, before) })
    }

    fn budget(&self, _n: usize, input: &WttInput) -> QueryCount {
        if input.interval.is_singleton() {
            return QueryCount::default();
        }
        QueryCount::unconditional(self.draws_per_round(input) * self.rounds(input.delta))
    }
}
