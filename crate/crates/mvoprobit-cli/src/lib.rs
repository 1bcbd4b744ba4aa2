//! Command-line front end: JSON configuration, CSV ingestion, command
//! dispatch, and result emission.

pub mod config;
pub mod error;
pub mod table;

mod commands;

use clap::{Parser, Subcommand};
use std::path::PathBuf;

#[derive(Debug, Parser)]
#[command(
    name = "mvoprobit",
    version,
    about = "Multivariate ordered probit models: estimation, simulation, staging and adoption contours"
)]
pub struct Cli {
    /// Cap the worker-thread count (results are identical at any setting).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate the model in the config on the input CSV.
    Fit {
        #[arg(long)]
        config: PathBuf,
        /// Exit with status 2 when the optimizer does not converge.
        #[arg(long)]
        strict: bool,
    },
    /// Draw a synthetic dataset from the config's simulate block.
    Simulate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Per-row marginal stage probabilities from a fitted model.
    Predict {
        #[arg(long)]
        config: PathBuf,
        /// Fit-result JSON produced by `fit`.
        #[arg(long)]
        params: PathBuf,
        /// Output CSV path (defaults to <output>.predictions.csv).
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Two-covariate adoption contour grid (CSV, optionally SVG).
    Contour {
        #[arg(long)]
        config: PathBuf,
        /// Fit-result JSON; overrides inline contour parameters.
        #[arg(long)]
        params: Option<PathBuf>,
    },
    /// Assign stage-of-change labels from raw survey answers.
    Stage {
        #[arg(long)]
        input: PathBuf,
        /// Instrument: walk_cycle or bikeshare.
        #[arg(long)]
        instrument: String,
        /// Merge-map preset name (default matches the instrument's 4-stage map).
        #[arg(long)]
        merge: Option<String>,
        #[arg(long)]
        output: PathBuf,
    },
    /// Append SEI and HHI multimodality columns to a trip diary CSV.
    Sei {
        #[arg(long)]
        input: PathBuf,
        /// Comma-separated list of per-mode frequency columns.
        #[arg(long)]
        modes: String,
        /// JSON file mapping band labels to midpoints (defaults built in).
        #[arg(long)]
        bands: Option<PathBuf>,
        #[arg(long)]
        output: PathBuf,
    },
    /// Evaluate one trivariate normal rectangle probability (debug).
    Mvnprob {
        /// Comma-separated upper bounds, e.g. 0,0,0 (use inf/-inf for open).
        #[arg(long)]
        upper: String,
        /// Comma-separated lower bounds; defaults to -inf,-inf,-inf.
        #[arg(long)]
        lower: Option<String>,
        /// Comma-separated correlations r12,r13,r23.
        #[arg(long)]
        rho: String,
    },
}

/// Runs the CLI and returns the process exit code: 0 success, 1 usage or
/// configuration errors, 2 numerical failure under --strict.
pub fn run_cli() -> i32 {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        // Ignore the error if a global pool already exists (e.g. in tests).
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    match commands::dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}
