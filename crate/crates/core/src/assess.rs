//! Algorithm 3: assessing whether a partition leaves too much weight on non-uniform intervals.
//!
//! Each round samples an interval with probability equal to its weight and asks a weakly tolerant
//! tester whether the restriction there is uniform. Too many rejecting rounds reject the partition.

use serde::{Deserialize, Serialize};

use crate::constants::{ceil_count, majority_rounds, Constants};
use crate::error::{invalid, Result};
use crate::model::{Distribution, Interval, IntervalPartition, Oracle, QueryCount};
use crate::uniformity::{delta_since, IntervalTester, WttInput};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AssessParams {
    /// Intervals longer than `n / c` are outside the tester's size promise.
    pub c: f64,
    /// Length bound on the partition; the tester's weight promise is `epsilon / r`.
    pub r: f64,
    pub epsilon: f64,
    pub delta: f64,
    /// `s = rounds * ln(1/delta) / eps`.
    pub rounds_factor: f64,
    /// Reject when more than `threshold * eps * s` rounds reject.
    pub threshold: f64,
}

impl AssessParams {
    pub fn new(c: f64, r: f64, epsilon: f64, delta: f64, constants: &Constants) -> Self {
        Self { c, r, epsilon, delta, rounds_factor: constants.assess_rounds, threshold: constants.assess_threshold }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.c >= 1.0) {
            return Err(invalid(format!("c must be at least 1, got {}", self.c)));
        }
        if !(self.r >= 1.0) {
            return Err(invalid(format!("r must be at least 1, got {}", self.r)));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) || !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(invalid(format!("epsilon and delta must lie in (0, 1), got {}, {}", self.epsilon, self.delta)));
        }
        Ok(())
    }

    /// Number of rounds `s = ceil(rounds * ln(1/delta) / eps)`.
    pub fn rounds(&self) -> u64 {
        assess_rounds(self.epsilon, self.delta, self.rounds_factor)
    }

    /// The exact tester input for `interval` on a domain of size `n`: `(n/c, eps/r, eps, delta/2s)`.
    pub fn tester_input(&self, n: usize, interval: Interval) -> WttInput {
        WttInput {
            interval,
            m: n as f64 / self.c,
            gamma: (self.epsilon / self.r).min(1.0),
            epsilon: self.epsilon,
            delta: self.delta / (2.0 * self.rounds() as f64),
        }
    }
}

/// `ceil(factor * ln(1/delta) / eps)`.
pub fn assess_rounds(epsilon: f64, delta: f64, factor: f64) -> u64 {
    ceil_count(factor * (1.0 / delta).ln() / epsilon).max(1)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AssessRound {
    pub sample: usize,
    /// 0-based position of the sampled interval.
    pub position: usize,
    pub interval: Interval,
    pub accept: bool,
    pub queries: QueryCount,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssessOutcome {
    pub accept: bool,
    /// Rejecting rounds, counted with multiplicity.
    pub rejected: u64,
    pub rounds: Vec<AssessRound>,
    pub queries: QueryCount,
}

impl AssessOutcome {
    /// The self-reported budget: one sample per round plus the tester's budget on each sampled
    /// interval.
    pub fn budget(&self, n: usize, params: &AssessParams, tester: &dyn IntervalTester) -> QueryCount {
        self.rounds
            .iter()
            .map(|r| QueryCount::unconditional(1) + tester.budget(n, &params.tester_input(n, r.interval)))
            .sum()
    }
}

/// Algorithm 3.
pub fn assess_partition(
    oracle: &mut Oracle<'_>,
    partition: &IntervalPartition,
    params: &AssessParams,
    tester: &dyn IntervalTester,
) -> Result<AssessOutcome> {
    params.validate()?;
    let n = oracle.n();
    if partition.n() != n {
        return Err(invalid(format!("partition covers [1, {}] but the domain is [1, {n}]", partition.n())));
    }
    if partition.len() as f64 > params.r {
        return Err(invalid(format!("partition length {} exceeds r = {}", partition.len(), params.r)));
    }
    let before = oracle.counts();
    let s = params.rounds();
    let mut rounds = Vec::with_capacity(s as usize);
    let mut rejected = 0;
    for _ in 0..s {
        let sample = oracle.sample_unconditional();
        let position = partition.locate(sample).expect("partition covers the domain");
        let interval = partition.get(position);
        let v = tester.test(oracle, &params.tester_input(n, interval))?;
        if !v.accept {
            rejected += 1;
        }
        rounds.push(AssessRound { sample, position, interval, accept: v.accept, queries: v.queries_used });
    }
    let accept = rejected as f64 <= params.threshold * params.epsilon * s as f64;
    Ok(AssessOutcome { accept, rejected, rounds, queries: delta_since(oracle, before) })
}

/// Majority over independent assessments at constant error `1/4`.
///
/// Costs `O(log(1/delta))` assessments of `O(1/eps)` rounds each, instead of one assessment whose
/// tester calls each pay `log(s/delta)`.
pub fn assess_partition_majority(
    oracle: &mut Oracle<'_>,
    partition: &IntervalPartition,
    params: &AssessParams,
    tester: &dyn IntervalTester,
) -> Result<AssessOutcome> {
    let inner = AssessParams { delta: 0.25, ..*params };
    let reps = majority_rounds(params.delta, 0.25);
    let before = oracle.counts();
    let mut yes = 0;
    let mut rejected = 0;
    let mut rounds = Vec::new();
    for _ in 0..reps {
        let out = assess_partition(oracle, partition, &inner, tester)?;
        if out.accept {
            yes += 1;
        }
        rejected += out.rejected;
        rounds.extend(out.rounds);
    }
    Ok(AssessOutcome { accept: 2 * yes > reps, rejected, rounds, queries: delta_since(oracle, before) })
}

/// Exact weight of the intervals outside the tester's promise: longer than `n/c` or lighter than
/// `eps/r`. For tests and experiments only.
pub fn dubious_weight(d: &Distribution, partition: &IntervalPartition, params: &AssessParams) -> f64 {
    let n = d.n() as f64;
    partition
        .intervals()
        .iter()
        .map(|&iv| d.mass(iv))
        .zip(partition.intervals())
        .filter(|(w, iv)| iv.len() as f64 > n / params.c || *w < params.epsilon / params.r)
        .map(|(w, _)| w)
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::QuerySet;
    use crate::uniformity::{PairTester, WttVerdict};
    use std::sync::Mutex;

    /// Records every input and spends a fixed number of conditional queries.
    struct Stub {
        seen: Mutex<Vec<WttInput>>,
        cost: u64,
    }

    impl IntervalTester for Stub {
        fn name(&self) -> &'static str {
            "stub"
        }

        fn test(&self, oracle: &mut Oracle<'_>, input: &WttInput) -> Result<WttVerdict> {
            self.seen.lock().unwrap().push(*input);
            oracle.conditional_counts(&QuerySet::Interval(input.interval), self.cost)?;
            Ok(WttVerdict { accept: true, queries_used: QueryCount::conditional(self.cost) })
        }

        fn budget(&self, _: usize, _: &WttInput) -> QueryCount {
            QueryCount::conditional(self.cost)
        }
    }

    #[test]
    fn plumbing_and_budget() {
        let d = Distribution::uniform(1000).unwrap();
        let p = IntervalPartition::equal_blocks(1000, 10).unwrap();
        let params = AssessParams::new(4.0, 20.0, 0.2, 0.1, &Constants::desk());
        let stub = Stub { seen: Mutex::new(Vec::new()), cost: 7 };
        let mut o = Oracle::new(&d, 1);
        let out = assess_partition(&mut o, &p, &params, &stub).unwrap();
        let s = params.rounds();
        // 20 ln 10 / 0.2 = 230.3
        assert_eq!(s, 231);
        assert_eq!(out.rounds.len() as u64, s);
        assert_eq!(o.counts(), QueryCount { unconditional: s, conditional: 7 * s });
        assert_eq!(out.queries, out.budget(1000, &params, &stub));
        for (input, round) in stub.seen.lock().unwrap().iter().zip(&out.rounds) {
            assert_eq!(input.interval, round.interval);
            assert_eq!(input.m, 250.0);
            assert_eq!(input.gamma, 0.2 / 20.0);
            assert_eq!(input.epsilon, 0.2);
            assert_eq!(input.delta, 0.1 / (2.0 * s as f64));
            assert!(round.interval.contains(round.sample));
        }
    }

    #[test]
    fn singletons_always_accept() {
        let d = Distribution::from_weights((1..=50).map(|i| (i * i) as f64).collect()).unwrap();
        let p = IntervalPartition::singletons(50);
        let params = AssessParams::new(1.0, 50.0, 0.2, 0.2, &Constants::desk());
        let t = PairTester::from_constants(&Constants::desk());
        let mut o = Oracle::new(&d, 3);
        let out = assess_partition(&mut o, &p, &params, &t).unwrap();
        assert!(out.accept && out.rejected == 0);
        assert_eq!(o.counts().conditional, 0);
    }

    #[test]
    fn length_above_r_is_an_error() {
        let d = Distribution::uniform(10).unwrap();
        let params = AssessParams::new(1.0, 5.0, 0.2, 0.2, &Constants::desk());
        let t = PairTester::from_constants(&Constants::desk());
        let mut o = Oracle::new(&d, 3);
        assert!(assess_partition(&mut o, &IntervalPartition::singletons(10), &params, &t).is_err());
    }

    #[test]
    fn majority_wrapper_accepts_uniform() {
        let d = Distribution::uniform(256).unwrap();
        let p = IntervalPartition::equal_blocks(256, 4).unwrap();
        let params = AssessParams::new(1.0, 4.0, 0.3, 0.05, &Constants::desk());
        let t = PairTester::from_constants(&Constants::desk());
        let mut o = Oracle::new(&d, 8);
        let out = assess_partition_majority(&mut o, &p, &params, &t).unwrap();
        assert!(out.accept);
        assert_eq!(out.queries, o.counts());
    }
}
