//! Command-line front end for the Suslov rigid-body toolkit: configured
//! simulation runs, seeded verification suites, level-set topology
//! classification, classifier grid scans, and propagator cross-checks.
//!
//! Exit codes: 0 on success, 1 when a verification or comparison check
//! fails, 2 for configuration and usage errors.

// Validation guards are written `!(x > t)` rather than `x <= t` on purpose:
// the negated form also rejects NaN coming in from JSON configs.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

pub mod classify;
pub mod compare;
pub mod config;
pub mod csvio;
pub mod scan;
pub mod simulate;
pub mod svg;
pub mod verify;

/// Why a command did not succeed: bad input (exit 2) or a failed check
/// (exit 1).
#[derive(Debug)]
pub enum Failure {
    Config(String),
    Check(String),
}

#[derive(Parser)]
#[command(
    name = "suslov",
    version,
    about = "Simulation and verification toolkit for the n-dimensional Suslov rigid body"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Integrate one configured run and write its artifacts.
    Simulate {
        /// Path to a JSON run configuration.
        config: PathBuf,
    },
    /// Run a seeded, deterministic verification suite.
    Verify {
        /// Which suite to run.
        #[arg(value_parser = ["liealg", "dynamics", "reduction", "integrable", "all"])]
        suite: String,
        /// Seed for the suite's sampled checks.
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Test hook: shrink every tolerance so genuine measurements fail.
        #[arg(long, hide = true, default_value_t = false)]
        corrupt_tolerances: bool,
    },
    /// Classify the topology of a common level set of the first integrals.
    Classify {
        /// Principal moments I_1,...,I_n (comma separated).
        #[arg(long, value_delimiter = ',', required = true)]
        inertia: Vec<f64>,
        /// Quadratic coefficients B_1,...,B_n (comma separated).
        #[arg(long, value_delimiter = ',', required = true)]
        b: Vec<f64>,
        /// Actions c_1,...,c_{n-1} (comma separated).
        #[arg(long, value_delimiter = ',', required = true)]
        c: Vec<f64>,
        /// Relative tolerance for bifurcation-value detection.
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        /// Also write the JSON report to this file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Tabulate the classifier over a grid of actions.
    Scan {
        /// Path to a JSON grid specification.
        grid: PathBuf,
        /// Write the CSV here instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Evaluate the grid on one thread (the output is identical).
        #[arg(long, default_value_t = false)]
        serial: bool,
    },
    /// Run all propagators from matched initial data and compare them.
    Compare {
        /// Path to a JSON run configuration.
        config: PathBuf,
    },
}

pub fn run() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.cmd {
        Cmd::Simulate { config } => simulate::run(&config),
        Cmd::Verify {
            suite,
            seed,
            corrupt_tolerances,
        } => {
            let tol_scale = if corrupt_tolerances { 1e-30 } else { 1.0 };
            match verify::run_suite(&suite, seed, tol_scale) {
                Err(msg) => Err(Failure::Config(msg)),
                Ok((report, all_pass)) => {
                    print!("{report}");
                    if all_pass {
                        Ok(())
                    } else {
                        Err(Failure::Check(
                            "one or more verification checks failed".to_string(),
                        ))
                    }
                }
            }
        }
        Cmd::Classify {
            inertia,
            b,
            c,
            tol,
            out,
        } => classify::run(&inertia, &b, &c, tol, out.as_deref()),
        Cmd::Scan { grid, out, serial } => scan::run(&grid, out.as_deref(), serial),
        Cmd::Compare { config } => compare::run(&config),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Check(msg)) => {
            eprintln!("check failure: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
