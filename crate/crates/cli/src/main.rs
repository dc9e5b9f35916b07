//! `rbsde`: command-line front end for the rbsde-core library.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use rbsde_core::harness::Config;

#[derive(Parser)]
#[command(name = "rbsde", version, about = "Rough backward SDE solver, metrics and experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Quick end-to-end checks against the built-in constant table.
    Selftest,
    /// Backward and forward Young integrals of two CSV paths.
    Young(RunArgs),
    /// Generates a driver path.
    Driver(RunArgs),
    /// Solves a problem on the binomial tree.
    Solve(RunArgs),
    /// Compares the time-stretched solve with the direct one.
    Stretch(RunArgs),
    /// Upper bound of the decorated-path distance between two CSV paths.
    Metric(RunArgs),
    /// Annealed solve over sampled drivers.
    Bdsde(RunArgs),
    /// Wong–Zakai stability experiment.
    Stability(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Flat `key = value` configuration file.
    #[arg(short, long)]
    config: Option<PathBuf>,
    /// Overrides a configuration key, `key=value`; repeatable.
    #[arg(short, long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// CSV output file.
    #[arg(short, long)]
    out: Option<PathBuf>,
}

impl RunArgs {
    fn config(&self) -> Result<Config> {
        let mut cfg = match &self.config {
            Some(path) => Config::from_file(path).with_context(|| format!("reading {}", path.display()))?,
            None => Config::default(),
        };
        for kv in &self.set {
            let (k, v) = kv.split_once('=').with_context(|| format!("--set expects key=value, got '{kv}'"))?;
            cfg.set(k.trim(), v.trim());
        }
        Ok(cfg)
    }
}

/// Result of one subcommand: a JSON summary and whether every asserted
/// property held.
pub struct Report {
    pub summary: serde_json::Value,
    pub passed: bool,
}

fn run(cli: &Cli) -> Result<Report> {
    match &cli.command {
        Command::Selftest => commands::selftest(),
        Command::Young(a) => commands::young(&a.config()?, a.out.as_deref()),
        Command::Driver(a) => commands::driver(&a.config()?, a.out.as_deref()),
        Command::Solve(a) => commands::solve(&a.config()?, a.out.as_deref()),
        Command::Stretch(a) => commands::stretch(&a.config()?, a.out.as_deref()),
        Command::Metric(a) => commands::metric(&a.config()?, a.out.as_deref()),
        Command::Bdsde(a) => commands::bdsde(&a.config()?, a.out.as_deref()),
        Command::Stability(a) => commands::stability(&a.config()?, a.out.as_deref()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(report) => {
            let mut summary = report.summary;
            summary["passed"] = report.passed.into();
            println!("{}", serde_json::to_string_pretty(&summary).expect("JSON values serialize"));
            if report.passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
