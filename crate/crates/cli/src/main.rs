use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rnnjet_cli::commands::{DATASET, MODEL, TRAIN_LOG};
use rnnjet_cli::{ExperimentConfig, Failure, Outcome, SweepParameter, SweepSpec};

/// Learn tanh recurrent nets from Bernstein-lifted output jets.
#[derive(Parser)]
#[command(name = "rnnjet", version)]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    /// Output directory; defaults to `output_dir` from the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the config's `rng_seed`.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Draw training inputs and write the jet dataset.
    Generate(Common),
    /// Fit a net to a dataset.
    Train {
        #[command(flatten)]
        common: Common,
        /// Defaults to `<out>/dataset.json`.
        #[arg(long)]
        dataset: Option<PathBuf>,
        /// Start restart 0 from this model.
        #[arg(long)]
        init: Option<PathBuf>,
    },
    /// Held-out risk and bound report for a trained model.
    Evaluate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long)]
        dataset: Option<PathBuf>,
        #[arg(long)]
        log: Option<PathBuf>,
    },
    /// Run the full pipeline over values of k or N.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// k or N; overrides the config's sweep section.
        #[arg(long)]
        param: Option<SweepParameter>,
        #[arg(long, value_delimiter = ',')]
        values: Option<Vec<usize>>,
    },
    /// Closed-form bounds only.
    Bounds {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        model: Option<PathBuf>,
    },
}

fn load(common: &Common) -> Outcome<(ExperimentConfig, PathBuf)> {
    let mut cfg = ExperimentConfig::load(&common.config)?;
    if let Some(seed) = common.seed {
        cfg.rng_seed = seed;
    }
    let out = common.out.clone().unwrap_or_else(|| cfg.output_dir.clone());
    Ok((cfg, out))
}

fn or_default(path: &Option<PathBuf>, out: &Path, name: &str) -> PathBuf {
    path.clone().unwrap_or_else(|| out.join(name))
}

/// Prints a summary line; a closed stdout (e.g. `| head`) is not an error.
fn say(text: &str) {
    let _ = writeln!(std::io::stdout().lock(), "{text}");
}

fn run(cli: Cli) -> Outcome<()> {
    if let Some(jobs) = cli.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs.max(1))
            .build_global()
            .map_err(|e| Failure::Validation(e.to_string()))?;
    }
    match cli.command {
        Command::Generate(common) => {
            let (cfg, out) = load(&common)?;
            rnnjet_cli::generate(&cfg, &out)?;
        }
        Command::Train { common, dataset, init } => {
            let (cfg, out) = load(&common)?;
            rnnjet_cli::train(&cfg, &out, &or_default(&dataset, &out, DATASET), init.as_deref())?;
        }
        Command::Evaluate {
            common,
            model,
            dataset,
            log,
        } => {
            let (cfg, out) = load(&common)?;
            let report = rnnjet_cli::evaluate(
                &cfg,
                &out,
                &or_default(&model, &out, MODEL),
                &or_default(&dataset, &out, DATASET),
                &or_default(&log, &out, TRAIN_LOG),
            )?;
            say(&format!(
                "held-out risk {:.6} (se {:.6}), risk bound {:.6}",
                report.held_out.mean, report.held_out.std_error, report.bounds.theorem1.total
            ));
        }
        Command::Sweep { common, param, values } => {
            let (cfg, out) = load(&common)?;
            let spec = match (param, values, &cfg.sweep) {
                (Some(parameter), Some(values), _) => SweepSpec { parameter, values },
                (None, None, Some(spec)) => spec.clone(),
                (Some(parameter), None, Some(spec)) => SweepSpec {
                    parameter,
                    values: spec.values.clone(),
                },
                _ => {
                    return Err(Failure::Validation(
                        "sweep needs --param and --values or a sweep section".into(),
                    ))
                }
            };
            let points = rnnjet_cli::sweep(&cfg, &out, &spec)?;
            let failed = points.iter().filter(|p| p.outcome.is_err()).count();
            say(&format!("{} points, {failed} failed", points.len()));
        }
        Command::Bounds { common, model } => {
            let (cfg, out) = load(&common)?;
            let result = rnnjet_cli::bounds(&cfg, &out, model.as_deref())?;
            say(&serde_json::to_string_pretty(&result).map_err(|e| Failure::Validation(e.to_string()))?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
