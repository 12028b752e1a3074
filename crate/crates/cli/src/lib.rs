//! Command-line front end for the counting, volume, height and lattice experiments.

pub mod commands;
pub mod config;

use std::ffi::OsString;
use std::io::Write;

use clap::{Parser, Subcommand};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("config: {0}")]
    Config(String),
    #[error("numeric failure: {0}")]
    Numeric(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Numeric(_) => 3,
            _ => 2,
        }
    }
}

impl From<qdioph::Error> for CliError {
    fn from(e: qdioph::Error) -> Self {
        match e {
            qdioph::Error::Overflow(_) => CliError::Numeric(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "qdioph", about = "Counting experiments for Diophantine approximation over imaginary quadratic fields")]
pub struct Cli {
    /// Worker threads (falls back to COUNT_THREADS, then available parallelism).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Count solutions for one θ at the configured T.
    Count {
        #[arg(long)]
        config: std::path::PathBuf,
        /// `zero`, or 2mn comma-separated hex floats (re, im per entry, row-major).
        #[arg(long)]
        theta: String,
    },
    /// Run the convergence experiment over the plan's T grid.
    Asymptotics {
        #[arg(long)]
        config: std::path::PathBuf,
    },
    /// Closed-form and Monte Carlo region volumes.
    Volume {
        #[arg(long)]
        config: std::path::PathBuf,
        /// E_T, E_minus, E_plus or C0.
        #[arg(long, default_value = "E_T")]
        region: String,
        #[arg(long, default_value_t = 0.1)]
        eps: f64,
        /// Monte Carlo sample count; 0 skips the estimate.
        #[arg(long, default_value_t = 0)]
        mc: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Counts of rational lines by height, or dyadic tail blocks.
    Heights {
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = 3)]
        d: usize,
        #[arg(long)]
        xmax: f64,
        /// `count` or `blocks`.
        #[arg(long, default_value = "count")]
        table: String,
    },
    /// Enumerate echelon forms with bounded entries.
    Echelon {
        #[arg(long)]
        m: usize,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        bound: u32,
        /// Work over Q(√−D) instead of Q.
        #[arg(long)]
        field: Option<i64>,
    },
    /// Exhaustive check of the factorization X = X′·D on a small integer grid.
    Decomposition {
        #[arg(long)]
        d: usize,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = 2)]
        grid_bound: u32,
    },
    /// Mean lattice-point counts in discs over random unimodular planar lattices.
    Siegel {
        #[arg(long, required = true)]
        radius: Vec<f64>,
        #[arg(long, default_value_t = 10_000)]
        samples: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

fn configure_threads(flag: Option<usize>) -> Result<(), CliError> {
    let n = match flag {
        Some(n) => Some(n),
        None => match std::env::var("COUNT_THREADS") {
            Ok(v) => Some(v.trim().parse().map_err(|_| CliError::Usage(format!("COUNT_THREADS={v:?} is not a count")))?),
            Err(_) => None,
        },
    };
    if let Some(n) = n {
        if n == 0 {
            return Err(CliError::Usage("thread count must be positive".into()));
        }
        // a pool that is already built (repeated in-process runs) keeps its size
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = write!(err, "{e}");
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let result = configure_threads(cli.threads).and_then(|()| commands::dispatch(&cli.command, out, err));
    match result {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}
