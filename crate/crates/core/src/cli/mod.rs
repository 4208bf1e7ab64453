//! The `ccsim` experiment runner: analysis curves, Monte Carlo validation,
//! allocation runs and parameter sweeps driven by a scenario file.

mod commands;
pub mod output;
pub mod scenario;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

pub use commands::{run_allocate, run_analyze, run_sweep, run_validate, Outcome};
pub use scenario::Scenario;

use crate::error::{Error, Result};

#[derive(Debug, Parser)]
#[command(
    name = "ccsim",
    version,
    about = "Cluster caching analytics and C-RAN allocation games"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Effective-capacity curves and cache-size sweeps.
    Analyze(RunArgs),
    /// Analytic results against Monte Carlo and brute-force oracles.
    Validate(RunArgs),
    /// Run one allocator on the scenario's cluster instance.
    Allocate(RunArgs),
    /// Paired-seed comparison of every allocator over cost coefficients.
    Sweep(RunArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Algorithm {
    Nested,
    Suboptimal,
    Orthogonal,
    FullReuse,
    All,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Nested => "nested",
            Algorithm::Suboptimal => "suboptimal",
            Algorithm::Orthogonal => "orthogonal",
            Algorithm::FullReuse => "full_reuse",
            Algorithm::All => "all",
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// Scenario file (TOML); defaults apply to anything omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Master seed, overriding the scenario's.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t = Algorithm::Nested)]
    pub algorithm: Algorithm,
    /// Uniform 10^6-interval quantizer and full trial counts.
    #[arg(long)]
    pub paper_exact: bool,
    /// Multiplies A(beta) in the analytic code; negative control only.
    #[arg(long, hide = true)]
    pub fault_a_beta: Option<f64>,
}

impl RunArgs {
    pub fn scenario(&self) -> Result<Scenario> {
        let mut s = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
                Scenario::from_toml(&text)?
            }
            None => Scenario::default(),
        };
        if let Some(seed) = self.seed {
            s.seed = seed;
        }
        if self.paper_exact {
            s = s.paper_exact();
        }
        Ok(s)
    }
}

/// Process exit code for an error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config { .. } | Error::Parameter(_) => 2,
        _ => 3,
    }
}

/// Runs a parsed command line and returns the process exit code: 0 on
/// success, 1 when a validation tolerance fails, 2 for invalid input and
/// 3 for runtime failures.
pub fn run(cli: Cli) -> i32 {
    let result = match &cli.command {
        Command::Analyze(a) => a.scenario().and_then(|s| run_analyze(&s, a)),
        Command::Validate(a) => a.scenario().and_then(|s| run_validate(&s, a)),
        Command::Allocate(a) => a.scenario().and_then(|s| run_allocate(&s, a)),
        Command::Sweep(a) => a.scenario().and_then(|s| run_sweep(&s, a)),
    };
    match result {
        Ok(Outcome::Success) => 0,
        Ok(Outcome::Failed(n)) => {
            eprintln!("{n} validation checks failed");
            1
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
