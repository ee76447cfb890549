//! Command-line front end: every command runs one or more seeded trials through the experiment
//! runner and prints the report as JSON or CSV.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use condtest::harness::{
    parse_distribution_source, run_experiment, trials_csv, AlgorithmSpec, ExperimentConfig, ExperimentReport,
    GeneratorKind, GeneratorSpec,
};
use condtest::uniformity::TesterModel;
use condtest::{Error, Profile};

#[derive(Parser)]
#[command(name = "condtest", version, about = "Learn and test distribution properties with conditional samples")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args)]
struct Output {
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Worker threads for the trials; defaults to the available cores.
    #[arg(long)]
    workers: Option<usize>,
    /// Report runtime_ms as 0 so that reruns are byte-identical.
    #[arg(long)]
    no_runtime: bool,
}

#[derive(Args)]
struct Run {
    /// Distribution file, either {"n": .., "p": [..]} or a generator spec with a "kind" field.
    #[arg(long, conflicts_with = "generator")]
    input: Option<PathBuf>,
    /// Generator: uniform, point-mass:<i>, zipf:<a>, khist:<k>, staircase:<levels>,
    /// half-heavy:<eps>, far-from-monotone:<period>:<amplitude> or support:<s0>.
    #[arg(long)]
    generator: Option<String>,
    /// Domain size for --generator.
    #[arg(long, default_value_t = 1024)]
    n: usize,
    /// Seed of the generator and base seed of the trials.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "desk")]
    profile: Profile,
    #[arg(long, default_value_t = 1)]
    trials: usize,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct Tester {
    #[arg(long, default_value = "adaptive")]
    model: TesterModel,
}

#[derive(Subcommand)]
enum Command {
    /// Pull an eta-fine partition, or an (eta, gamma)-fine one when --gamma is given.
    PullPartition {
        #[command(flatten)]
        run: Run,
        #[arg(long)]
        eta: f64,
        #[arg(long)]
        gamma: Option<f64>,
        #[arg(long, default_value_t = 0.1)]
        delta: f64,
    },
    /// Assess a partition given by its right ends, or one pulled with --eta/--gamma.
    AssessPartition {
        #[command(flatten)]
        run: Run,
        #[command(flatten)]
        tester: Tester,
        #[arg(long)]
        epsilon: f64,
        #[arg(long, default_value_t = 0.1)]
        delta: f64,
        /// Intervals longer than n/c are outside the tester's size promise.
        #[arg(long, default_value_t = 1.0)]
        c: f64,
        /// Comma-separated right ends, the last one equal to n.
        #[arg(long, value_delimiter = ',')]
        partition: Option<Vec<usize>>,
        #[arg(long)]
        eta: Option<f64>,
        #[arg(long)]
        gamma: Option<f64>,
    },
    /// Run an interval uniformity tester on the whole domain.
    TestUniformity {
        #[command(flatten)]
        run: Run,
        #[command(flatten)]
        tester: Tester,
        #[arg(long)]
        epsilon: f64,
        #[arg(long, default_value_t = 0.2)]
        delta: f64,
    },
    /// Learn an (epsilon/c, L)-decomposable distribution.
    Learn {
        #[command(flatten)]
        run: Run,
        #[command(flatten)]
        tester: Tester,
        #[arg(long = "L")]
        l: usize,
        #[arg(long)]
        epsilon: f64,
    },
    /// Test a decomposable property: uniform, monotone or khist (with --k).
    TestProperty {
        #[command(flatten)]
        run: Run,
        #[command(flatten)]
        tester: Tester,
        #[arg(long)]
        property: String,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        epsilon: f64,
    },
    /// Learn an atlas over --k equal blocks or over --partition.
    AtlasLearn {
        #[command(flatten)]
        run: Run,
        #[arg(long, default_value_t = 1)]
        k: usize,
        #[arg(long, value_delimiter = ',')]
        partition: Option<Vec<usize>>,
        #[arg(long)]
        epsilon: f64,
        #[arg(long, default_value_t = 0.1)]
        delta: f64,
    },
    /// Test support size at most --s0.
    AtlasTest {
        #[command(flatten)]
        run: Run,
        #[arg(long)]
        s0: usize,
        #[arg(long)]
        epsilon: f64,
    },
    /// Accept inputs eta-close to support size at most --s0, reject (eta + epsilon)-far ones.
    AtlasTolerantTest {
        #[command(flatten)]
        run: Run,
        #[arg(long)]
        s0: usize,
        #[arg(long)]
        eta: f64,
        #[arg(long)]
        epsilon: f64,
    },
    /// Run an experiment described by a JSON config file.
    Experiment {
        config: PathBuf,
        #[command(flatten)]
        output: Output,
    },
}

fn generator_spec(run: &Run) -> Result<GeneratorSpec, Error> {
    if let Some(path) = &run.input {
        return parse_distribution_source(&std::fs::read_to_string(path)?);
    }
    let kind: GeneratorKind = run.generator.as_deref().unwrap_or("uniform").parse()?;
    Ok(GeneratorSpec { kind, n: run.n, seed: run.seed })
}

fn single(run: Run, algorithm: AlgorithmSpec) -> Result<(ExperimentConfig, Output), Error> {
    let config = ExperimentConfig {
        generator: generator_spec(&run)?,
        algorithm,
        trials: run.trials,
        seed: run.seed,
        profile: run.profile,
        workers: run.output.workers,
        record_runtime: !run.output.no_runtime,
        keep_details: run.trials == 1,
    };
    Ok((config, run.output))
}

fn property_name(property: &str, k: Option<usize>) -> Result<String, Error> {
    match (property, k) {
        ("khist", Some(k)) => Ok(format!("khist:{k}")),
        ("khist", None) => Err(Error::InvalidParameter("property khist needs --k".into())),
        (p, _) => Ok(p.to_string()),
    }
}

fn plan(command: Command) -> Result<(ExperimentConfig, Output), Error> {
    match command {
        Command::PullPartition { run, eta, gamma, delta } => single(run, AlgorithmSpec::Pull { eta, gamma, delta }),
        Command::AssessPartition { run, tester, epsilon, delta, c, partition, eta, gamma } => {
            single(run, AlgorithmSpec::Assess { model: tester.model, epsilon, delta, c, partition, eta, gamma })
        }
        Command::TestUniformity { run, tester, epsilon, delta } => {
            single(run, AlgorithmSpec::Uniformity { model: tester.model, epsilon, delta })
        }
        Command::Learn { run, tester, l, epsilon } => single(run, AlgorithmSpec::Learn { model: tester.model, l, epsilon }),
        Command::TestProperty { run, tester, property, k, epsilon } => {
            let property = property_name(&property, k)?;
            single(run, AlgorithmSpec::Property { model: tester.model, property, epsilon })
        }
        Command::AtlasLearn { run, k, partition, epsilon, delta } => {
            single(run, AlgorithmSpec::AtlasLearn { intervals: k, partition, epsilon, delta })
        }
        Command::AtlasTest { run, s0, epsilon } => single(run, AlgorithmSpec::AtlasTest { s0, epsilon, eta: 0.0 }),
        Command::AtlasTolerantTest { run, s0, eta, epsilon } => {
            if !(eta > 0.0) {
                return Err(Error::InvalidParameter(format!("eta must be positive, got {eta}")));
            }
            single(run, AlgorithmSpec::AtlasTest { s0, epsilon, eta })
        }
        Command::Experiment { config, output } => {
            let mut config: ExperimentConfig = serde_json::from_str(&std::fs::read_to_string(config)?)?;
            if output.workers.is_some() {
                config.workers = output.workers;
            }
            if output.no_runtime {
                config.record_runtime = false;
            }
            Ok((config, output))
        }
    }
}

fn render(report: &ExperimentReport, format: Format) -> Result<String, Error> {
    Ok(match format {
        Format::Json => serde_json::to_string_pretty(report)? + "\n",
        Format::Csv => trials_csv(&report.trials)?,
    })
}

fn emit(text: &str, out: Option<&Path>) -> Result<(), Error> {
    match out {
        Some(path) => std::fs::write(path, text)?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn fail(kind: &str, message: &str, code: u8) -> ExitCode {
    eprintln!("{}", serde_json::json!({ "error": { "kind": kind, "message": message } }));
    ExitCode::from(code)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => return fail("usage", e.to_string().trim_end(), 2),
    };
    let result = plan(cli.command).and_then(|(config, output)| {
        let report = run_experiment(&config)?;
        emit(&render(&report, output.format)?, output.out.as_deref())
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(e.kind(), &e.to_string(), 1),
    }
}
