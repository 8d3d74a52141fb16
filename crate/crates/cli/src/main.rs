//! `voterlab`: simulate, solve and check biased voter dynamics on graphs.
//!
//! Exit codes: 0 success, 1 runtime failure (including a failed check),
//! 2 configuration error.

mod check;
mod commands;
mod config;
mod exact;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::check::{CheckOptions, Suite};
use crate::config::{CliError, CliResult, DEFAULT_SEED, SEED_ENV};
use crate::exact::Quantity;

#[derive(Debug, Parser)]
#[command(name = "voterlab", version, about = "Biased voter dynamics on graphs")]
struct Cli {
    /// JSON run configuration ("-" for standard input; read from a piped
    /// standard input when omitted).
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Override a config key, e.g. --set run.seed=7 (repeatable).
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,

    /// Worker threads for the trial pool (default: all cores).
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,

    /// Suppress the human-readable summary on stderr.
    #[arg(long, global = true)]
    quiet: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Monte Carlo estimate of fixation probability and consensus time.
    Simulate,
    /// Exact value of a quantity for the configured model.
    Exact {
        #[arg(long, value_enum)]
        quantity: Quantity,
    },
    /// Run a verification suite; exits 0 iff every item passes.
    Check {
        #[arg(value_enum)]
        suite: Suite,
        #[arg(long)]
        trials: Option<u64>,
        #[arg(long)]
        seed: Option<u64>,
        /// Bias for the drift suite.
        #[arg(long)]
        eps: Option<f64>,
        /// Report path (JSON); standard output when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Grid of runs over n, k, alpha01, alpha10 or trials.
    Sweep {
        /// name=v1,v2,... (integers also accept a..b, end exclusive); repeatable.
        #[arg(long = "param", required = true, value_name = "NAME=VALUES")]
        params: Vec<String>,
        /// Skip simulation, report exact values only.
        #[arg(long)]
        exact_only: bool,
    },
}

fn load(cli: &Cli) -> CliResult<serde_json::Value> {
    let mut doc = config::load_document(cli.config.as_deref())?;
    config::apply_seed_env(&mut doc)?;
    for o in &cli.overrides {
        config::apply_override(&mut doc, o)?;
    }
    Ok(doc)
}

fn run(cli: Cli) -> CliResult<()> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::config("--threads: must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| CliError::runtime(e.to_string()))?;
    }
    match &cli.command {
        Command::Simulate => {
            let r = config::resolve(config::parse_config(&load(&cli)?)?)?;
            commands::simulate(&r, cli.quiet)
        }
        Command::Exact { quantity } => {
            let r = config::resolve(config::parse_config(&load(&cli)?)?)?;
            commands::exact(&r, *quantity, cli.quiet)
        }
        Command::Sweep { params, exact_only } => commands::sweep(&load(&cli)?, params, *exact_only, cli.quiet),
        Command::Check { suite, trials, seed, eps, out } => {
            let seed = match seed {
                Some(s) => *s,
                None => match std::env::var(SEED_ENV) {
                    Ok(s) => s.trim().parse().map_err(|_| CliError::config(format!("{SEED_ENV}='{s}' is not a decimal 64-bit integer")))?,
                    Err(_) => DEFAULT_SEED,
                },
            };
            let report = check::run(*suite, CheckOptions { trials: *trials, seed, eps: *eps })?;
            output::emit(out.as_deref(), &output::json_string(&report))?;
            if !cli.quiet {
                for i in &report.items {
                    let ok = if i["pass"] == serde_json::Value::Bool(true) { "pass" } else { "FAIL" };
                    eprintln!("{ok}  {}", i["name"].as_str().unwrap_or_default());
                }
            }
            if report.pass {
                Ok(())
            } else {
                Err(CliError::runtime(format!("check {} failed", report.suite)))
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("voterlab: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
