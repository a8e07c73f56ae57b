//! Command-line front door for the tree cover-time toolkit: experiment
//! configuration, orchestration, persistence, and report emission.
//!
//! Exit codes: 0 on success, 1 on runtime or validation failure, 2 on usage
//! errors (including settings missing from both flags and config).

mod commands;
mod config;
mod manifest;
mod svg;

use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "treecover",
    version,
    about = "Biased-walk cover times on binary trees: simulators, exact network oracles, and scaling-limit experiments"
)]
struct Cli {
    /// Sectioned key=value config file; flags take precedence over it
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Worker threads (0 = all cores); results never depend on this
    #[arg(long, global = true)]
    workers: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample cover times for one process family (CSV + manifest)
    Simulate(SimulateArgs),
    /// Two-sample Kolmogorov-Smirnov report between two sample CSVs
    Compare(CompareArgs),
    /// Nested cover times of the leaf chain across embedded levels
    Ladder(LadderArgs),
    /// Gaussian field: expected-supremum estimate, chaining bound, tail fit
    Gaussian(GaussianArgs),
    /// Growth-regime table and growth-rate curve (CSV + SVG)
    Table(TableArgs),
    /// Verify that trace reduction preserves effective resistance
    TraceCheck(TraceCheckArgs),
    /// Exact small-tree expectations (cover DP, hitting times, commute check)
    Oracle(OracleArgs),
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    depth: Option<u32>,
    /// raw | bar | tilde
    #[arg(long)]
    family: Option<String>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CompareArgs {
    /// First sample CSV
    #[arg(long)]
    a: Option<PathBuf>,
    /// Second sample CSV
    #[arg(long)]
    b: Option<PathBuf>,
    /// Pass threshold on the KS statistic (default: 2.2 x the 1% critical value)
    #[arg(long)]
    tolerance: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct LadderArgs {
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    depth: Option<u32>,
    /// Comma-separated embedded levels, e.g. 4,6,8,10
    #[arg(long)]
    levels: Option<String>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GaussianArgs {
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    depth: Option<u32>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Fit the cover-time tail from a samples.csv written by `simulate`
    #[arg(long)]
    tail_from: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TableArgs {
    /// Comma-separated biases, e.g. 0.5,1,1.5,2,3
    #[arg(long)]
    lambdas: Option<String>,
    /// Monte Carlo depth window lo:hi, e.g. 5:9
    #[arg(long)]
    depths: Option<String>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TraceCheckArgs {
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    depth: Option<u32>,
    /// Which subset to keep: bar | tilde
    #[arg(long)]
    keep: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct OracleArgs {
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    depth: Option<u32>,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Usage problems exit 2, everything else that fails exits 1.
pub enum CmdError {
    Usage(String),
    Runtime(String),
}

impl From<treecover_core::CoreError> for CmdError {
    fn from(e: treecover_core::CoreError) -> CmdError {
        CmdError::Runtime(e.to_string())
    }
}

impl From<std::io::Error> for CmdError {
    fn from(e: std::io::Error) -> CmdError {
        CmdError::Runtime(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match &cli.config {
        Some(path) => match config::ConfigFile::load(path) {
            Ok(c) => c,
            Err(e) => {
                eprintln!("usage error: {e}");
                return ExitCode::from(2);
            }
        },
        None => config::ConfigFile::default(),
    };
    let workers = cli
        .workers
        .or_else(|| cfg.get("global", "workers").and_then(|w| w.parse().ok()))
        .unwrap_or(0);
    if workers > 0 {
        // ignore failure: the pool may already exist in tests
        let _ = rayon::ThreadPoolBuilder::new().num_threads(workers).build_global();
    }
    let result = match cli.command {
        Command::Simulate(a) => commands::simulate(&cfg, a),
        Command::Compare(a) => commands::compare(&cfg, a),
        Command::Ladder(a) => commands::ladder(&cfg, a),
        Command::Gaussian(a) => commands::gaussian(&cfg, a),
        Command::Table(a) => commands::table(&cfg, a),
        Command::TraceCheck(a) => commands::trace_check(&cfg, a),
        Command::Oracle(a) => commands::oracle(&cfg, a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CmdError::Usage(m)) => {
            eprintln!("usage error: {m}\nrun `treecover --help` for usage");
            ExitCode::from(2)
        }
        Err(CmdError::Runtime(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
    }
}
