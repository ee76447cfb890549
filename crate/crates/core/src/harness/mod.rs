//! Experiment plumbing: generators with ground truth, the trial runner and summary statistics.

mod experiment;
mod generators;
mod stats;

pub use experiment::{
    run_experiment, summarize, trial_seed, trials_csv, write_csv, write_json, AlgorithmSpec, ExperimentConfig,
    ExperimentReport, Summary, TrialReport, SCHEMA_VERSION,
};
pub use generators::{generate, parse_distribution_source, Annotations, GeneratorKind, GeneratorSpec, Generated, MixtureComponent};
pub use stats::{loglog_slope, wilson_interval, MeanMax, Z95};
