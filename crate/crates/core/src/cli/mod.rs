//! Batch driver: `simulate | train | sweep | report | selftest`.
//!
//! Exit codes: 0 success, 1 invalid config or arguments, 2 runtime or
//! numerical error, 3 sweep finished with failed cells.

pub mod commands;
pub mod config;
pub mod report;
pub mod selftest;

use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub use commands::{cmd_simulate, cmd_sweep, cmd_train, load_bin, Run, SimulateSummary, SweepSummary};
pub use config::{ExperimentConfig, SweepConfig, OUT_ENV};
pub use report::{cmd_report, ProtonFlag, ReportSummary};

use crate::error::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;
pub const EXIT_PARTIAL: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "skewimpute", version, about = "Mixture-model imputation benchmark on simulated detector data")]
pub struct Cli {
    /// Experiment config (JSON). Built-in defaults when omitted.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Override a config field by dotted path, e.g. `--set sim.n_events=1000`.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    /// Worker threads; output does not depend on it.
    #[arg(long, global = true, value_name = "N")]
    pub threads: Option<usize>,
    /// Output directory; falls back to the config, then $SKEWIMPUTE_OUT.
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Print what would be done and write nothing.
    #[arg(long, global = true)]
    pub dry_run: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate events and write one dataset per momentum bin.
    Simulate,
    /// Train a network (with cuts) for every selected bin.
    Train,
    /// Run the imputation sweep and write the results CSV.
    Sweep,
    /// Write plot data and a summary from a results CSV.
    Report {
        /// Results CSV; defaults to results/results.csv under the output directory.
        #[arg(long, value_name = "FILE")]
        results: Option<PathBuf>,
    },
    /// Run the quadrature, Monte Carlo and finite-difference oracles.
    Selftest {
        /// Monte Carlo draws per conditional-mean configuration.
        #[arg(long, default_value_t = 1_000_000)]
        draws: usize,
    },
}

fn load_run(cli: &Cli) -> crate::Result<Run> {
    let base = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    let cfg = base.with_overrides(&cli.overrides)?;
    let out = cfg.output_dir(cli.out.as_deref());
    Run::new(cfg, out, cli.dry_run)
}

fn execute(cli: &Cli, run: &Run, out: &mut dyn Write) -> crate::Result<i32> {
    match &cli.command {
        Command::Simulate => {
            cmd_simulate(run, out)?;
        }
        Command::Train => {
            cmd_train(run, out)?;
        }
        Command::Sweep => {
            let summary = cmd_sweep(run, out)?;
            if !summary.failures.is_empty() {
                return Ok(EXIT_PARTIAL);
            }
        }
        Command::Report { results } => {
            let results = results.clone().unwrap_or_else(|| run.results_path());
            if run.dry_run {
                writeln!(out, "would report {} into {}", results.display(), run.report_dir().display())?;
            } else {
                let summary = cmd_report(&results, &run.report_dir())?;
                writeln!(out, "{} files in {}", summary.files.len(), run.report_dir().display())?;
                for f in &summary.flags {
                    writeln!(out, "flag: bin {} eta {}: mean proton efficiency {:.4} > ml_msn {:.4}", f.bin, f.eta, f.mean, f.ml_msn)?;
                }
            }
        }
        Command::Selftest { draws } => {
            let checks = selftest::run_all(*draws)?;
            let mut ok = true;
            for c in &checks {
                writeln!(out, "{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail)?;
                ok &= c.passed;
            }
            if !ok {
                return Ok(EXIT_RUNTIME);
            }
        }
    }
    Ok(EXIT_OK)
}

/// Runs a parsed command line, writing progress to `out` and errors to
/// `err`. Returns the process exit code.
pub fn run(cli: &Cli, out: &mut (dyn Write + Send), err: &mut dyn Write) -> i32 {
    let run = match load_run(cli) {
        Ok(r) => r,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return EXIT_INVALID;
        }
    };
    if cli.dry_run {
        let _ = writeln!(
            out,
            "config sha256 {} master seed {} output {}",
            run.provenance.config_sha256,
            run.provenance.master_seed,
            run.out.display()
        );
    }
    let result = match cli.threads {
        Some(0) => {
            let _ = writeln!(err, "error: --threads must be at least 1");
            return EXIT_INVALID;
        }
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(|| execute(cli, &run, out)),
            Err(e) => Err(Error::Domain(format!("cannot start thread pool: {e}"))),
        },
        None => execute(cli, &run, out),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_RUNTIME
        }
    }
}
