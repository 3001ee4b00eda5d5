//! Command-line driver: synth / train / eval / report / compare.
//!
//! Exit codes: 0 success, 2 usage or configuration error, 3 runtime
//! training failure.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use fairexpr::experiment::{
    run_compare, run_eval, run_report, run_report_for_run, run_synth, run_train, ExperimentConfig,
};
use fairexpr::records::read_records;
use fairexpr::Error;

#[derive(Parser)]
#[command(name = "fairexpr", about = "Fairness-aware expression classification experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArgs {
    /// Experiment config (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Override the training seed from the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the output directory from the config.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl ConfigArgs {
    fn load(&self) -> fairexpr::Result<ExperimentConfig> {
        let mut cfg = ExperimentConfig::from_path(&self.config)?;
        if let Some(seed) = self.seed {
            cfg.train.seed = seed;
        }
        if let Some(out) = &self.out {
            cfg.output.dir = out.clone();
        }
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic biased dataset (images + manifest + audit).
    Synth(ConfigArgs),
    /// Train one model and leave a reproducible run directory.
    Train(ConfigArgs),
    /// Evaluate a run's best checkpoint on its test split.
    Eval {
        /// Run directory produced by `train`.
        #[arg(long)]
        run: PathBuf,
    },
    /// Build the fairness report for a run or a predictions file.
    Report {
        /// Run directory containing predictions.csv and its config.
        #[arg(long)]
        run: Option<PathBuf>,
        /// Standalone predictions CSV (requires --config).
        #[arg(long)]
        predictions: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare evaluated runs that share the same test data.
    Compare {
        /// Run directories (at least two).
        #[arg(long, num_args = 2.., required = true)]
        runs: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Training { .. } | Error::Numeric(_) => ExitCode::from(3),
                _ => ExitCode::from(2),
            }
        }
    }
}

fn run() -> fairexpr::Result<()> {
    match Cli::parse().command {
        Command::Synth(args) => {
            let cfg = args.load()?;
            let manifest = run_synth(&cfg)?;
            println!("{}", cfg.canonical_toml()?);
            println!("manifest: {}", manifest.display());
        }
        Command::Train(args) => {
            let cfg = args.load()?;
            let (run_dir, outcome) = run_train(&cfg)?;
            println!(
                "run: {} (epochs {}, best monitor {:.4}, checkpoint {})",
                run_dir.display(),
                outcome.epochs_run,
                outcome.best_monitor,
                outcome.best_checkpoint.display()
            );
        }
        Command::Eval { run } => {
            let path = run_eval(&run)?;
            println!("predictions: {}", path.display());
        }
        Command::Report {
            run,
            predictions,
            config,
            out,
        } => match (run, predictions) {
            (Some(run), None) => {
                let report = run_report_for_run(&run)?;
                println!("report: {}", run.join("report.json").display());
                for g in &report.fairness {
                    match g.fairness {
                        Some(f) => println!("fairness {}: {:.4}", g.grouping, f),
                        None => println!("fairness {}: n/a", g.grouping),
                    }
                }
            }
            (None, Some(predictions)) => {
                let config = config.ok_or_else(|| {
                    Error::config("report --predictions requires --config for the schema")
                })?;
                let cfg = ExperimentConfig::from_path(&config)?;
                let schema = cfg.attribute_schema()?;
                let records = read_records(&predictions, &schema)?;
                let out = out.unwrap_or_else(|| {
                    predictions.parent().unwrap_or(std::path::Path::new(".")).to_path_buf()
                });
                run_report(&records, &cfg, &out)?;
                println!("report: {}", out.join("report.json").display());
            }
            _ => {
                return Err(Error::config(
                    "report needs exactly one of --run or --predictions",
                ))
            }
        },
        Command::Compare { runs, out } => {
            let matrix = run_compare(&runs, &out)?;
            println!(
                "compared {} runs; tables under {}",
                matrix.columns.len(),
                out.display()
            );
        }
    }
    Ok(())
}
