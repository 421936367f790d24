//! `capmax`: batch runs of the capacitary maximal-function laboratory.
//!
//! Exit codes: 0 on success, 1 when a verification check fails, 2 when the
//! run cannot be configured (bad or unreadable config, missing inputs).

mod commands;
mod config;
mod output;
mod verify;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use crate::config::RunConfig;

#[derive(Parser, Debug)]
#[command(name = "capmax", version, about = "Capacitary maximal functions and weak-type curves")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory, overriding `out_dir`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Seed for randomized checks, overriding `seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads (defaults to one per core).
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Evaluate the maximal function on the configured grid.
    Maximal,
    /// Compute the weak-type curve and its limit estimate.
    Curve,
    /// Run the verification suite.
    Verify,
    /// Greedy disjoint selection from a ball family and its coverage check.
    Covering,
}

pub enum Outcome {
    Success,
    Failed(Vec<String>),
}

fn load(cli: &Cli) -> Result<(RunConfig, PathBuf)> {
    let (mut cfg, base) = match &cli.config {
        Some(path) => {
            let cfg = RunConfig::load(path)?;
            let base = path.parent().map(PathBuf::from).unwrap_or_default();
            (cfg, base)
        }
        None if matches!(cli.command, Command::Verify) => (verify::default_config(), PathBuf::new()),
        None => anyhow::bail!("this subcommand needs --config"),
    };
    if let Some(out) = &cli.out {
        cfg.out_dir = Some(std::env::current_dir()?.join(out));
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    Ok((cfg, base))
}

fn run(cli: &Cli) -> Result<Outcome> {
    if let Some(n) = cli.threads {
        anyhow::ensure!(n > 0, "--threads must be positive");
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("cannot configure the worker pool")?;
    }
    let (cfg, base) = load(cli)?;
    let out = base.join(cfg.out_dir.clone().unwrap_or_else(|| PathBuf::from("out")));
    match cli.command {
        Command::Maximal => commands::maximal(&cfg, &base, &out),
        Command::Curve => commands::curve(&cfg, &base, &out),
        Command::Verify => verify::run(&cfg, &base, &out),
        Command::Covering => commands::covering(&cfg, &out),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(Outcome::Success) => ExitCode::SUCCESS,
        Ok(Outcome::Failed(names)) => {
            eprintln!("verification failed: {}", names.join(", "));
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
