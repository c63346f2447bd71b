use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

mod commands;

/// Intrinsic volume estimation from 2×⋯×2 configuration counts.
#[derive(Parser, Debug)]
#[command(name = "voxelvol", version, about)]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true, env = "VOXELVOL_THREADS")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TableFormat {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CoeffMode {
    Psi,
    Mu,
    Phi,
    Lambda,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Configuration classes under the cube symmetries.
    Classes {
        #[arg(short, long)]
        dim: usize,
        #[arg(long, value_enum, default_value = "json")]
        format: TableFormat,
    },
    /// Asymptotic coefficient table as CSV.
    Coeffs {
        #[arg(short, long)]
        dim: usize,
        #[arg(long, value_enum)]
        mode: CoeffMode,
        /// Phantom JSON, required for `phi` and `lambda`.
        #[arg(long)]
        phantom: Option<PathBuf>,
        /// Lattice rotation as a JSON `d×d` row-major matrix.
        #[arg(long)]
        rotation: Option<String>,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Samples a phantom on a posed lattice and writes a BVOX file.
    Voxelize {
        /// Phantom JSON.
        phantom: PathBuf,
        /// Lattice spacing.
        #[arg(short)]
        a: f64,
        /// Lattice rotation as a JSON `d×d` row-major matrix.
        #[arg(long)]
        rotation: Option<String>,
        /// Lattice translation in [0,1)^d, comma separated.
        #[arg(long, value_delimiter = ',')]
        c: Option<Vec<f64>>,
        /// Window margin around the body (default 2a, at least a).
        #[arg(long)]
        margin: Option<f64>,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Configuration histogram `l,count` of a BVOX file.
    Count {
        input: PathBuf,
        /// Use the per-cell reference counter.
        #[arg(long)]
        oracle: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluates a weighted estimator on a BVOX file.
    Estimate {
        input: PathBuf,
        /// Weight JSON `{i, d, weights: {class_id: value}}`.
        #[arg(long)]
        weights: PathBuf,
    },
    /// Design-based Monte Carlo run with a fit of `c₋₁/a + c₀`.
    ///
    /// Spacings in geometric progression (for example r/25, r/50, r/100)
    /// condition the fit well.
    Experiment {
        /// Design JSON.
        design: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        replicates: Option<usize>,
        #[arg(long, value_delimiter = ',')]
        spacings: Option<Vec<f64>>,
    },
    /// Lattice counts vs hit-or-miss volume vs asymptotic expansion.
    Hitmiss {
        /// Hit-or-miss design JSON.
        design: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        replicates: Option<usize>,
    },
    /// Existence of asymptotically unbiased weights.
    Feasibility {
        #[arg(short, long)]
        dim: usize,
        /// Build the constraints from quadrature instead of closed forms.
        #[arg(long)]
        quadrature: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Exit statuses.
const EXIT_USAGE: u8 = 2;
const EXIT_NUMERIC: u8 = 3;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_USAGE) } else { ExitCode::SUCCESS };
        }
    };
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be positive");
            return ExitCode::from(EXIT_USAGE);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_USAGE);
        }
    }
    match commands::dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_numeric() { EXIT_NUMERIC } else { EXIT_USAGE })
        }
    }
}
