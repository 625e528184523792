//! `prewet` command-line driver.
//!
//! Exit status: 0 on success, 1 on a runtime error, 2 when a built-in
//! assertion on the results fails, 3 on a configuration error.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(
    name = "prewet",
    version,
    about = "Exact computations and sampling for area-tilted walks on the half-line"
)]
struct Cli {
    /// JSON configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, env = "PREWET_OUT", default_value = "prewet-out")]
    out: PathBuf,
    /// Master seed for every random stream.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads; defaults to the number of logical cores.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Suppress the one-line report on stdout.
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, Subcommand)]
pub enum Command {
    /// Partition function, marginals, covariance and area events of one bridge.
    Exact,
    /// Exact (or heat-bath) path samples of one bridge.
    Sample,
    /// No-meeting probability of two independent free-endpoint walks.
    Couple,
    /// Mid-bridge height against λ.
    Scaling,
    /// Stretched-exponential tail of the mid-bridge height.
    Tails,
    /// Mean area and area-event decay.
    Area,
    /// Covariance decay against the spectral gap.
    Correlations,
    /// Total-variation relaxation of the free endpoint.
    Relaxation,
    /// Normalized even moments of the mid-bridge height.
    Moments,
    /// Exact identity and inequality grid plus the canonical fixture.
    OracleCheck,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Exact => "exact",
            Command::Sample => "sample",
            Command::Couple => "couple",
            Command::Scaling => "scaling",
            Command::Tails => "tails",
            Command::Area => "area",
            Command::Correlations => "correlations",
            Command::Relaxation => "relaxation",
            Command::Moments => "moments",
            Command::OracleCheck => "oracle-check",
        }
    }
}

pub enum Failure {
    Config(config::ConfigError),
    Assertion(String),
    Runtime(String),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(jobs) = cli.jobs {
        prewet::exec::configure_threads(jobs.max(1));
    }
    let run = commands::Run {
        command: cli.command,
        config: cli.config,
        out: cli.out,
        seed: cli.seed,
    };
    match commands::execute(&run) {
        Ok(report) => {
            if !cli.quiet {
                println!("{report}");
            }
            ExitCode::SUCCESS
        }
        Err(Failure::Config(e)) => {
            eprintln!("{e}");
            ExitCode::from(3)
        }
        Err(Failure::Assertion(msg)) => {
            eprintln!("assertion failed: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
