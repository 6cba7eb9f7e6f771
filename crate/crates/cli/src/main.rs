//! `interscribe`: rotation numbers of interscribed polygons from the command
//! line.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(
    name = "interscribe",
    version,
    about = "Elliptic-integral ratios from almost-closed interscribed polygons"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Rotation number θ of a circle pair, or F(ψ, k) through one.
    Theta(ThetaArgs),
    /// Convergent table of the polygon between an ellipse and the unit circle.
    Ellipse(EllipseArgs),
    /// Trajectory and dynamics verdict for a numerical-range boundary.
    Nr(NrArgs),
    /// Cross-check the polygon pipeline against the quadrature oracle.
    Verify(VerifyArgs),
}

/// Flags shared by every subcommand.
#[derive(Debug, Args, Clone)]
pub struct Common {
    /// Significant decimal digits.
    #[arg(long)]
    pub digits: Option<u32>,
    /// Emit the report as JSON.
    #[arg(long)]
    pub json: bool,
    /// TOML file whose keys mirror the long flags.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ThetaArgs {
    /// Centre of the inner circle.
    #[arg(long, allow_hyphen_values = true)]
    pub c: Option<String>,
    /// Radius of the inner circle.
    #[arg(long, allow_hyphen_values = true)]
    pub r: Option<String>,
    /// Upper limit ψ of F(ψ, k), in radians.
    #[arg(long, allow_hyphen_values = true)]
    pub psi: Option<String>,
    /// Squared modulus k².
    #[arg(long, allow_hyphen_values = true)]
    pub k2: Option<String>,
    /// Maximum number of baby steps.
    #[arg(long)]
    pub budget: Option<String>,
    /// Compare against the quadrature oracle.
    #[arg(long)]
    pub verify: bool,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct EllipseArgs {
    /// Semi-axis along the real axis.
    #[arg(long, allow_hyphen_values = true)]
    pub a: Option<String>,
    /// Semi-axis along the imaginary axis.
    #[arg(long, allow_hyphen_values = true)]
    pub b: Option<String>,
    /// Centre on the real axis.
    #[arg(long, allow_hyphen_values = true)]
    pub c: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub alpha0: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub alpha1: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub alpha2: Option<String>,
    /// Cosine of the first chord angle, used with the α weights.
    #[arg(long = "cos-psi1", allow_hyphen_values = true)]
    pub cos_psi1: Option<String>,
    /// Number of vertices to iterate.
    #[arg(long)]
    pub budget: Option<String>,
    /// Stop once 1 − cos ψ falls below this value.
    #[arg(long = "eps-stop")]
    pub eps_stop: Option<String>,
    /// Check that the oracle ratio lies between the last two convergents.
    #[arg(long)]
    pub verify: bool,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct NrArgs {
    /// Upper-right entry of the matrix.
    #[arg(long, allow_hyphen_values = true)]
    pub a: Option<String>,
    /// First superdiagonal entry.
    #[arg(long, allow_hyphen_values = true)]
    pub b1: Option<String>,
    /// Second superdiagonal entry (defaults to b1).
    #[arg(long, allow_hyphen_values = true)]
    pub b2: Option<String>,
    /// Diagonal entries (default 0).
    #[arg(long, allow_hyphen_values = true)]
    pub c1: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub c2: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub c3: Option<String>,
    /// Start case: 3 (z0 = 1), 4 (z0 = −1) or 5 (tilted).
    #[arg(long)]
    pub start: Option<u8>,
    /// Custom start vertex "RE,IM" on the unit circle.
    #[arg(long, allow_hyphen_values = true, conflicts_with = "start")]
    pub z0: Option<String>,
    /// Number of trajectory steps.
    #[arg(long)]
    pub budget: Option<String>,
    /// Write k, cos_psi, sin_psi, lambda_sq, log_h per step to this CSV file.
    #[arg(long, value_name = "FILE")]
    pub trace: Option<PathBuf>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Verify one circle pair instead of the built-in sweep.
    #[arg(long, allow_hyphen_values = true)]
    pub c: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub r: Option<String>,
    /// Verify an ellipse (with --c as its centre, default 0).
    #[arg(long, allow_hyphen_values = true)]
    pub a: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub b: Option<String>,
    /// Random circle pairs added to the sweep.
    #[arg(long)]
    pub samples: Option<u64>,
    /// Seed of the random sweep.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Iteration budget of each case.
    #[arg(long)]
    pub budget: Option<String>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    pub jobs: Option<usize>,
    #[command(flatten)]
    pub common: Common,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Theta(args) => commands::theta(args),
        Command::Ellipse(args) => commands::ellipse(args),
        Command::Nr(args) => commands::nr(args),
        Command::Verify(args) => commands::verify(args),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("interscribe: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
