//! The `orgmed` binary: `analyze` runs a configured mediation analysis,
//! `simulate` generates a synthetic trial, `validate` checks the estimators
//! against brute-force oracles.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 data error,
//! 3 estimation failure, 4 validation failure.

use std::path::PathBuf;
use std::process::exit;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};
use orgmed_cli::commands::{exit_code, run_analyze, run_simulate};
use orgmed_cli::config::{
    env_workers, AnalysisConfig, Overrides, ReportFormat, SimulateConfig,
};
use orgmed_cli::validate::{run_validate, Tier};

#[derive(Parser)]
#[command(
    name = "orgmed",
    version,
    about = "Organic direct and indirect effects from trial-style data"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate indirect effects per an analysis config, one row per level
    Analyze {
        /// Analysis config (TOML)
        #[arg(long)]
        config: PathBuf,
        /// Bootstrap master seed (overrides the config)
        #[arg(long)]
        seed: Option<u64>,
        /// Bootstrap replicates (overrides the config)
        #[arg(long)]
        replicates: Option<usize>,
        /// Confidence level in (0, 1) (overrides the config)
        #[arg(long)]
        level: Option<f64>,
        /// Worker threads; 0 means one per core (overrides the config,
        /// which in turn overrides ORGMED_WORKERS)
        #[arg(long)]
        workers: Option<usize>,
        /// Report destination (overrides the config; stdout by default)
        #[arg(long)]
        out: Option<PathBuf>,
        /// Report format (overrides the config)
        #[arg(long)]
        format: Option<ReportFormat>,
    },
    /// Generate a synthetic trial CSV from a scenario config
    Simulate {
        /// Scenario config (TOML)
        #[arg(long)]
        config: PathBuf,
        /// Generator seed (overrides the config)
        #[arg(long)]
        seed: Option<u64>,
        /// CSV destination (overrides the config; stdout by default)
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the estimators against brute-force oracles and report each check
    Validate {
        /// How much work to do
        #[arg(long, value_enum, default_value_t = Tier::Quick)]
        tier: Tier,
        /// Seed for every generated study and oracle
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Worker threads for the coverage bootstraps; 0 means one per core
        #[arg(long)]
        workers: Option<usize>,
        /// Report destination (stdout by default)
        #[arg(long)]
        out: Option<PathBuf>,
        /// Run deliberately broken analyses to demonstrate failing checks
        #[arg(long)]
        mis_specified: bool,
    },
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            // Help and version requests are successes; everything else is a
            // usage error.
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = err.print();
            exit(code);
        }
    };
    exit(run(cli));
}

fn run(cli: Cli) -> i32 {
    match cli.command {
        Command::Analyze { config, seed, replicates, level, workers, out, format } => {
            let mut cfg = match AnalysisConfig::from_path(&config) {
                Ok(cfg) => cfg,
                Err(err) => return fail(&err),
            };
            let overrides = Overrides {
                seed,
                replicates,
                level,
                workers,
                out: out.map(|p| p.display().to_string()),
                format,
            };
            overrides.apply(&mut cfg, env_workers());
            match run_analyze(&cfg) {
                Ok(output) => {
                    match &output.written {
                        Some(path) => eprintln!("report written to {}", path.display()),
                        None => print!("{}", output.report),
                    }
                    0
                }
                Err(err) => fail(&err),
            }
        }
        Command::Simulate { config, seed, out } => {
            let mut cfg = match SimulateConfig::from_path(&config) {
                Ok(cfg) => cfg,
                Err(err) => return fail(&err),
            };
            let overrides = Overrides {
                seed,
                out: out.map(|p| p.display().to_string()),
                ..Overrides::default()
            };
            overrides.apply_simulate(&mut cfg);
            match run_simulate(&cfg) {
                Ok(output) => {
                    match &output.written {
                        Some(path) => eprintln!("trial written to {}", path.display()),
                        None => print!("{}", output.csv),
                    }
                    0
                }
                Err(err) => fail(&err),
            }
        }
        Command::Validate { tier, seed, workers, out, mis_specified } => {
            let workers = workers.or_else(env_workers).unwrap_or(0);
            match run_validate(tier, seed, workers, mis_specified) {
                Ok(report) => {
                    let text = report.render();
                    if let Some(path) = &out {
                        if let Err(err) = std::fs::write(path, &text) {
                            return fail(&err.into());
                        }
                        eprintln!("report written to {}", path.display());
                    } else {
                        print!("{text}");
                    }
                    if report.all_pass() {
                        0
                    } else {
                        4
                    }
                }
                Err(err) => fail(&err),
            }
        }
    }
}

fn fail(err: &orgmed::Error) -> i32 {
    eprintln!("error: {err}");
    exit_code(err)
}
