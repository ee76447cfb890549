//! The Monte-Carlo experiment runner.
//!
//! Trials run on a worker pool, each with its own oracle seeded from the base seed and the trial
//! index, and come back ordered by trial index.

use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::generators::{generate, Annotations, GeneratorSpec};
use super::stats::{wilson_interval, MeanMax, Z95};
use crate::assess::{assess_partition, AssessParams};
use crate::atlas::{conforms_distance, learn_atlas, test_atlas_property, tolerant_test_atlas_property, AtlasPropertySpec, SupportSize};
use crate::constants::{Constants, Profile};
use crate::decomposable::{learn_decomposable, test_decomposable_property, DecomposableParams, Property, PropertySpec};
use crate::error::{invalid, Result};
use crate::model::{inspect_violating_weight, l1_distance, l1_to_uniform, Distribution, IntervalPartition, Oracle};
use crate::pull::{pull, FinenessParams};
use crate::uniformity::{TesterModel, WttInput};

/// Version of the report and CSV layout.
pub const SCHEMA_VERSION: u32 = 1;

/// What each trial runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "algorithm", rename_all = "kebab-case")]
pub enum AlgorithmSpec {
    /// Verdict `fine` when the pulled partition is `(eta, gamma)`-fine, else `coarse`; the truth
    /// distance is the violating weight.
    Pull { eta: f64, gamma: Option<f64>, delta: f64 },
    /// Algorithm 3 on the partition given by its right ends, or on a pulled `(eta, gamma)`-fine one,
    /// with `r` the partition length. The truth distance is the weight of intervals whose
    /// restriction is more than `epsilon` from uniform.
    Assess {
        model: TesterModel,
        epsilon: f64,
        delta: f64,
        #[serde(default = "default_c")]
        c: f64,
        #[serde(default)]
        partition: Option<Vec<usize>>,
        #[serde(default)]
        eta: Option<f64>,
        #[serde(default)]
        gamma: Option<f64>,
    },
    /// The interval tester on the whole domain with `m = n` and `gamma = 1`.
    Uniformity { model: TesterModel, epsilon: f64, delta: f64 },
    /// `learned` or `reject`; the truth distance is `d(mu, mu')`.
    Learn {
        model: TesterModel,
        #[serde(rename = "L")]
        l: usize,
        epsilon: f64,
    },
    /// Decomposable property tester; `property` is `uniform`, `monotone` or `khist:<k>`.
    Property { model: TesterModel, property: String, epsilon: f64 },
    /// Atlas over the partition given by its right ends, else over `intervals` equal blocks; the
    /// truth distance is the conformance distance.
    AtlasLearn {
        #[serde(default = "default_intervals")]
        intervals: usize,
        #[serde(default)]
        partition: Option<Vec<usize>>,
        epsilon: f64,
        delta: f64,
    },
    /// Support size at most `s0`, tolerant when `eta > 0`.
    AtlasTest {
        s0: usize,
        epsilon: f64,
        #[serde(default)]
        eta: f64,
    },
}

fn default_c() -> f64 {
    1.0
}

fn default_intervals() -> usize {
    1
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub generator: GeneratorSpec,
    #[serde(flatten)]
    pub algorithm: AlgorithmSpec,
    pub trials: usize,
    /// Base seed; trial `t` uses `trial_seed(seed, t)`.
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub profile: Profile,
    /// Worker threads; defaults to the available cores.
    #[serde(default)]
    pub workers: Option<usize>,
    /// Wall time is the one column that is not a function of the seeds; turn it off for
    /// byte-identical reruns.
    #[serde(default = "default_true")]
    pub record_runtime: bool,
    /// Attach a summary of the learned object (partition, atlas, ...) to every trial.
    #[serde(default)]
    pub keep_details: bool,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(invalid("trials must be at least 1"));
        }
        if self.workers == Some(0) {
            return Err(invalid("workers must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialReport {
    pub trial: usize,
    pub seed: u64,
    pub verdict: String,
    /// Whether the verdict is the positive one (`accept`, `fine`, `learned`).
    pub positive: bool,
    pub uncond_queries: u64,
    pub cond_queries: u64,
    pub truth_distance: Option<f64>,
    pub runtime_ms: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<serde_json::Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub trials: usize,
    pub positive: usize,
    pub positive_rate: f64,
    /// 95% Wilson interval on the positive rate.
    pub wilson_low: f64,
    pub wilson_high: f64,
    pub uncond_queries: MeanMax,
    pub cond_queries: MeanMax,
    pub total_queries: MeanMax,
    pub truth_distance: MeanMax,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub schema_version: u32,
    pub config: ExperimentConfig,
    pub annotations: Annotations,
    pub summary: Summary,
    pub trials: Vec<TrialReport>,
}

/// Seed of trial `t`: a splitmix64 step of `base + t`.
pub fn trial_seed(base: u64, trial: usize) -> u64 {
    let mut z = base.wrapping_add((trial as u64).wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

struct Outcome {
    verdict: &'static str,
    positive: bool,
    truth: Option<f64>,
    detail: serde_json::Value,
}

impl Outcome {
    fn verdict(accept: bool, truth: Option<f64>, detail: serde_json::Value) -> Self {
        Outcome { verdict: if accept { "accept" } else { "reject" }, positive: accept, truth, detail }
    }
}

fn right_ends(p: &IntervalPartition) -> Vec<usize> {
    p.intervals().iter().map(|iv| iv.hi).collect()
}

fn run_algorithm(alg: &AlgorithmSpec, d: &Distribution, oracle: &mut Oracle<'_>, c: &Constants) -> Result<Outcome> {
    let n = d.n();
    Ok(match alg {
        AlgorithmSpec::Pull { eta, gamma, delta } => {
            let p = pull(oracle, &FinenessParams { eta: *eta, gamma: *gamma, delta: *delta })?;
            let heavy = inspect_violating_weight(d, &p, *eta, f64::INFINITY, f64::INFINITY)?.heavy;
            let fine = heavy <= gamma.unwrap_or(0.0);
            let detail = json!({ "partition": right_ends(&p) });
            Outcome { verdict: if fine { "fine" } else { "coarse" }, positive: fine, truth: Some(heavy), detail }
        }
        AlgorithmSpec::Assess { model, epsilon, delta, c: cc, partition, eta, gamma } => {
            let p = match (partition, eta) {
                (Some(ends), _) => IntervalPartition::from_right_ends(n, ends)?,
                (None, Some(eta)) => pull(oracle, &FinenessParams { eta: *eta, gamma: *gamma, delta: *delta })?,
                (None, None) => return Err(invalid("assess needs a partition or eta to pull one")),
            };
            let params = AssessParams::new(*cc, p.len() as f64, *epsilon, *delta, c);
            let out = assess_partition(oracle, &p, &params, model.build(c).as_ref())?;
            let far = inspect_violating_weight(d, &p, 1.0, f64::INFINITY, *epsilon)?.far;
            let detail = json!({ "partition": right_ends(&p), "rounds": out.rounds.len(), "rejected": out.rejected });
            Outcome::verdict(out.accept, Some(far), detail)
        }
        AlgorithmSpec::Uniformity { model, epsilon, delta } => {
            let input = WttInput { interval: d.whole(), m: n as f64, gamma: 1.0, epsilon: *epsilon, delta: *delta };
            let v = model.build(c).test(oracle, &input)?;
            Outcome::verdict(v.accept, Some(l1_to_uniform(d.probs())), serde_json::Value::Null)
        }
        AlgorithmSpec::Learn { model, l, epsilon } => {
            let tester = model.build(c);
            let out = learn_decomposable(oracle, &DecomposableParams { l: *l, epsilon: *epsilon }, tester.as_ref(), c)?;
            let mut detail = json!({
                "partition": right_ends(&out.partition),
                "length_bound": out.length_bound,
                "rejected": out.rejected,
            });
            match &out.learned {
                Some(m) => {
                    let masses: Vec<f64> = out.partition.intervals().iter().map(|&iv| m.mass(iv)).collect();
                    detail["interval_masses"] = json!(masses);
                    Outcome { verdict: "learned", positive: true, truth: Some(l1_distance(d, m)?), detail }
                }
                None => Outcome { verdict: "reject", positive: false, truth: None, detail },
            }
        }
        AlgorithmSpec::Property { model, property, epsilon } => {
            let prop: Property = property.parse()?;
            let tester = model.build(c);
            let v = test_decomposable_property(oracle, &prop, *epsilon, tester.as_ref(), c)?;
            let detail = json!({
                "L": v.l,
                "learned_distance": v.learned_distance,
                "partition_len": v.learn.partition.len(),
                "rejected": v.learn.rejected,
            });
            Outcome::verdict(v.accept, Some(prop.distance(d)?), detail)
        }
        AlgorithmSpec::AtlasLearn { intervals, partition, epsilon, delta } => {
            let p = match partition {
                Some(ends) => IntervalPartition::from_right_ends(n, ends)?,
                None => IntervalPartition::equal_blocks(n, *intervals)?,
            };
            let learned = learn_atlas(oracle, &p, *epsilon, *delta, c)?;
            let truth = conforms_distance(d, &learned.atlas)?;
            let detail = json!({
                "atlas": learned.atlas,
                "classes": learned.classes,
                "samples": learned.samples,
                "trimmed": learned.trimmed,
            });
            Outcome { verdict: "learned", positive: true, truth: Some(truth), detail }
        }
        AlgorithmSpec::AtlasTest { s0, epsilon, eta } => {
            let prop = SupportSize { s0: *s0 };
            let v = if *eta > 0.0 {
                tolerant_test_atlas_property(oracle, &prop, *eta, *epsilon, c)?
            } else {
                test_atlas_property(oracle, &prop, *epsilon, c)?
            };
            let detail = json!({
                "k": v.k,
                "length_bound": v.length_bound,
                "pulls": v.pulls,
                "partition_len": v.partition_len,
                "conformance": v.conformance,
            });
            Outcome::verdict(v.accept, Some(prop.distance(d)?), detail)
        }
    })
}

fn run_trial(config: &ExperimentConfig, d: &Distribution, c: &Constants, trial: usize) -> Result<TrialReport> {
    let seed = trial_seed(config.seed, trial);
    let start = Instant::now();
    let mut oracle = Oracle::new(d, seed);
    let out = run_algorithm(&config.algorithm, d, &mut oracle, c)?;
    let runtime_ms = if config.record_runtime { start.elapsed().as_secs_f64() * 1e3 } else { 0.0 };
    let q = oracle.counts();
    Ok(TrialReport {
        trial,
        seed,
        verdict: out.verdict.to_string(),
        positive: out.positive,
        uncond_queries: q.unconditional,
        cond_queries: q.conditional,
        truth_distance: out.truth,
        runtime_ms,
        detail: config.keep_details.then_some(out.detail),
    })
}

pub fn summarize(trials: &[TrialReport]) -> Summary {
    let positive = trials.iter().filter(|t| t.positive).count();
    let (wilson_low, wilson_high) = wilson_interval(positive as u64, trials.len() as u64, Z95);
    Summary {
        trials: trials.len(),
        positive,
        positive_rate: positive as f64 / trials.len().max(1) as f64,
        wilson_low,
        wilson_high,
        uncond_queries: MeanMax::of(trials.iter().map(|t| t.uncond_queries as f64)),
        cond_queries: MeanMax::of(trials.iter().map(|t| t.cond_queries as f64)),
        total_queries: MeanMax::of(trials.iter().map(|t| (t.uncond_queries + t.cond_queries) as f64)),
        truth_distance: MeanMax::of(trials.iter().filter_map(|t| t.truth_distance)),
    }
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    config.validate()?;
    let generated = generate(&config.generator)?;
    let constants = Constants::for_profile(config.profile);
    let workers = config.workers.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |w| w.get()));
    let pool = rayon::ThreadPoolBuilder::new().num_threads(workers).build().map_err(|e| invalid(e.to_string()))?;
    let d = &generated.distribution;
    let trials = pool.install(|| {
        (0..config.trials).into_par_iter().map(|t| run_trial(config, d, &constants, t)).collect::<Result<Vec<_>>>()
    })?;
    Ok(ExperimentReport {
        schema_version: SCHEMA_VERSION,
        config: config.clone(),
        annotations: generated.annotations,
        summary: summarize(&trials),
        trials,
    })
}

/// One CSV row per trial: `trial, seed, verdict, uncond_queries, cond_queries, truth_distance,
/// runtime_ms`.
pub fn trials_csv(trials: &[TrialReport]) -> Result<String> {
    #[derive(Serialize)]
    struct Row<'a> {
        trial: usize,
        seed: u64,
        verdict: &'a str,
        uncond_queries: u64,
        cond_queries: u64,
        truth_distance: Option<f64>,
        runtime_ms: f64,
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    for t in trials {
        w.serialize(Row {
            trial: t.trial,
            seed: t.seed,
            verdict: &t.verdict,
            uncond_queries: t.uncond_queries,
            cond_queries: t.cond_queries,
            truth_distance: t.truth_distance,
            runtime_ms: t.runtime_ms,
        })?;
    }
    let bytes = w.into_inner().map_err(|e| invalid(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn write_csv(report: &ExperimentReport, path: &Path) -> Result<()> {
    std::fs::write(path, trials_csv(&report.trials)?)?;
    Ok(())
}

pub fn write_json(report: &ExperimentReport, path: &Path) -> Result<()> {
    std::fs::write(path, serde_json::to_string_pretty(report)?)?;
    Ok(())
}
