//! Benchmark CLI for the cubic-Newton solvers.
//!
//! `bench run <config>` executes one method and writes `log.csv` plus
//! `summary.json`; `bench compare <config>` runs several methods on one
//! problem and adds a combined gap-vs-evaluations CSV. Exit codes: 0 ok,
//! 2 configuration error, 3 completed with solver warnings.

mod config;
mod experiment;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "bench")]
#[command(about = "Benchmark harness for inexact proximal cubic Newton methods")]
struct Cli {
    #[command(subcommand)]
    command: Commands,
}

#[derive(Subcommand)]
enum Commands {
    /// Run one experiment from a config file
    Run {
        /// Path to the flat key-value config file
        config: PathBuf,
        /// Output directory (overrides `out` in the config)
        #[arg(long)]
        out: Option<PathBuf>,
        /// Seed override
        #[arg(long)]
        seed: Option<u64>,
        /// Suppress progress output
        #[arg(long)]
        quiet: bool,
    },
    /// Run several methods on one problem and emit a combined CSV
    Compare {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        quiet: bool,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (config_path, out, seed, quiet, compare) = match cli.command {
        Commands::Run {
            config,
            out,
            seed,
            quiet,
        } => (config, out, seed, quiet, false),
        Commands::Compare {
            config,
            out,
            seed,
            quiet,
        } => (config, out, seed, quiet, true),
    };

    let mut cfg = match config::parse_file(&config_path) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("{e}");
            return ExitCode::from(experiment::EXIT_CONFIG as u8);
        }
    };
    if let Some(s) = seed {
        cfg.seed = s;
    }

    let result = if compare {
        experiment::compare_methods(&cfg, out.as_deref(), quiet)
    } else {
        experiment::run_experiment(&cfg, out.as_deref(), quiet)
    };
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(experiment::EXIT_CONFIG as u8)
        }
    }
}
