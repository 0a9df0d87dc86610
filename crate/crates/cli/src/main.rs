use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};

use nsfrac::commands::{self, CommonOpts, Outcome};
use nsfrac::config;

/// Build and analyze non-stationary fractal interpolation functions:
/// operator trajectories, parameter condition checks, operator bounds, and
/// box-counting dimension estimates, plus a set-valued IFS driver.
#[derive(Parser)]
#[command(name = "nsfrac", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Shared {
    /// JSON run configuration.
    #[arg(short = 'c', long)]
    config: PathBuf,
    /// Tolerance override.
    #[arg(long)]
    tol: Option<f64>,
    /// Refinement depth override.
    #[arg(long)]
    depth: Option<usize>,
    /// Seed override for sampled checks.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Build the fractal function and write the curve CSV.
    Build {
        #[command(flatten)]
        shared: Shared,
        /// Curve CSV output path.
        #[arg(short = 'o', long, default_value = "curve.csv")]
        out: PathBuf,
        /// Optional JSON report path.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Evaluate the fractal function pointwise by its series.
    Evaluate {
        #[command(flatten)]
        shared: Shared,
        #[arg(short = 'o', long, default_value = "evaluate.csv")]
        out: PathBuf,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Check the function-space parameter conditions.
    Check {
        #[command(flatten)]
        shared: Shared,
        /// Space to check: bv | vbeta | convex-lip (defaults to the config).
        #[arg(long)]
        space: Option<String>,
        /// JSON report path (stdout when omitted).
        #[arg(short = 'o', long)]
        out: Option<PathBuf>,
    },
    /// Estimate the box-counting dimension and test the space's claim.
    Dimension {
        #[command(flatten)]
        shared: Shared,
        #[arg(long)]
        space: Option<String>,
        #[arg(long)]
        kmin: Option<u32>,
        #[arg(long)]
        kmax: Option<u32>,
        #[arg(short = 'o', long)]
        out: Option<PathBuf>,
    },
    /// Verify the fractal operator bounds on the configured germ.
    Bounds {
        #[command(flatten)]
        shared: Shared,
        #[arg(short = 'o', long)]
        out: Option<PathBuf>,
    },
    /// Compare the non-stationary limit against the stationary fixed point.
    CompareStationary {
        #[command(flatten)]
        shared: Shared,
        #[arg(short = 'o', long)]
        out: Option<PathBuf>,
    },
    /// Drive a sequence of plane IFSs on a finite point set.
    Ifs {
        #[command(flatten)]
        shared: Shared,
        #[arg(short = 'o', long)]
        out: Option<PathBuf>,
    },
}

fn init_threads() {
    if let Ok(value) = std::env::var("NSFRAC_THREADS") {
        if let Ok(n) = value.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build_global();
        }
    }
}

fn run() -> Result<Outcome> {
    let cli = Cli::parse();
    init_threads();
    let shared = match &cli.command {
        Command::Build { shared, .. }
        | Command::Evaluate { shared, .. }
        | Command::Check { shared, .. }
        | Command::Dimension { shared, .. }
        | Command::Bounds { shared, .. }
        | Command::CompareStationary { shared, .. }
        | Command::Ifs { shared, .. } => shared,
    };
    let cfg = config::load(&shared.config)?;
    let opts = CommonOpts {
        tol: shared.tol,
        depth: shared.depth,
        k_min: None,
        k_max: None,
        seed: shared.seed,
    };
    match &cli.command {
        Command::Build { out, report, .. } => commands::build(&cfg, out, report.as_deref(), &opts),
        Command::Evaluate { out, report, .. } => {
            commands::evaluate(&cfg, out, report.as_deref(), &opts)
        }
        Command::Check { space, out, .. } => {
            commands::check(&cfg, space.as_deref(), out.as_deref(), &opts)
        }
        Command::Dimension {
            space,
            kmin,
            kmax,
            out,
            ..
        } => {
            let opts = CommonOpts {
                k_min: *kmin,
                k_max: *kmax,
                ..opts
            };
            commands::dimension(&cfg, space.as_deref(), out.as_deref(), &opts)
        }
        Command::Bounds { out, .. } => commands::bounds(&cfg, out.as_deref(), &opts),
        Command::CompareStationary { out, .. } => {
            commands::compare_stationary(&cfg, out.as_deref(), &opts)
        }
        Command::Ifs { out, .. } => commands::ifs(&cfg, out.as_deref(), &opts),
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(Outcome::Pass) => ExitCode::from(0),
        Ok(Outcome::SoftFail) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
