//! `hup`: chord-map dynamics, annihilating measures and Fourier/Radon checks
//! on plane curves, from the command line.
//!
//! Every subcommand prints a JSON report (or writes it to `--out`). Exit
//! status is 0 on success, 2 when a requested certificate or check fails and
//! 1 on bad input.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::report::Status;

#[derive(Parser, Debug)]
#[command(name = "hup", version, about = "Chord-map dynamics and annihilating measures on plane curves")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Write the JSON report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// CSV file for series output. Defaults to `<out>.csv` when --out is set.
    #[arg(long, global = true)]
    csv: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Monotone pieces of the projection and the I₀ / I₋ / I₊ split.
    Split(LineArgs),
    /// Whether the projection onto one line is injective.
    HupOneLine(LineArgs),
    /// Orbit of Φ₂∘Φ₁ from a starting parameter.
    Orbit(OrbitArgs),
    /// Rotation number of the composed chord maps.
    Rotation(RotationArgs),
    /// Search for a periodic orbit up to a period cap.
    Periodic(PeriodicArgs),
    /// Certify that an interval is wandering.
    Wandering(WanderingArgs),
    /// Certify that an interval is attractive and follow the nested images.
    Attract(AttractArgs),
    /// The sequence σ_k on a graph curve.
    Sigma(SigmaArgs),
    /// Breakpoints of the two partner maps at a cusp.
    Cusp(LineArgs),
    /// Build an annihilating density for a non-uniqueness configuration.
    Counterexample(CounterexampleArgs),
    /// Alternating-projection search for an annihilating density.
    Annihilate(AnnihilateArgs),
    /// Fourier transform of a density along lines through the origin.
    Verify(VerifyArgs),
    /// Radon projection of a density onto one direction.
    Radon(RadonArgs),
    /// Compare the 1-D transform of the Radon slice with the 2-D transform.
    SliceCheck(SliceCheckArgs),
    /// Reduce a pair of angles on an ellipse to the unit circle.
    EllipseReduce(EllipseArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Split(_) => "split",
            Command::HupOneLine(_) => "hup-one-line",
            Command::Orbit(_) => "orbit",
            Command::Rotation(_) => "rotation",
            Command::Periodic(_) => "periodic",
            Command::Wandering(_) => "wandering",
            Command::Attract(_) => "attract",
            Command::Sigma(_) => "sigma",
            Command::Cusp(_) => "cusp",
            Command::Counterexample(_) => "counterexample",
            Command::Annihilate(_) => "annihilate",
            Command::Verify(_) => "verify",
            Command::Radon(_) => "radon",
            Command::SliceCheck(_) => "slice-check",
            Command::EllipseReduce(_) => "ellipse-reduce",
        }
    }
}

#[derive(Args, Debug, Serialize)]
pub struct CurveArg {
    /// Curve spec as a JSON file or inline JSON, e.g. '{"type":"ellipse","a":2,"b":1}'.
    #[arg(long)]
    pub curve: String,
}

#[derive(Args, Debug, Serialize)]
pub struct PairArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub curve: CurveArg,
    /// First line angle in radians.
    #[arg(long, allow_negative_numbers = true)]
    pub theta1: f64,
    /// Second line angle in radians.
    #[arg(long, allow_negative_numbers = true)]
    pub theta2: f64,
}

#[derive(Args, Debug, Serialize)]
pub struct LineArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub curve: CurveArg,
    /// Line angle in radians.
    #[arg(long, allow_negative_numbers = true)]
    pub theta: f64,
}

#[derive(Args, Debug, Serialize)]
pub struct OrbitArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub pair: PairArgs,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub x0: f64,
    #[arg(long, default_value_t = 100)]
    pub n: usize,
}

#[derive(Args, Debug, Serialize)]
pub struct RotationArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub pair: PairArgs,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub x0: f64,
    /// Number of iterations.
    #[arg(long, default_value_t = hup_core::dynamics::DEFAULT_HORIZON)]
    pub n: usize,
}

#[derive(Args, Debug, Serialize)]
pub struct PeriodicArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub pair: PairArgs,
    #[arg(long, default_value_t = hup_core::dynamics::DEFAULT_PERIOD_CAP)]
    pub max_period: usize,
    /// Residual accepted for |Φ̃^q(x) − x − p| (default 1e-9, or HUP_DEFAULT_TOL).
    #[arg(long, allow_negative_numbers = true)]
    pub tol: Option<f64>,
}

#[derive(Args, Debug, Serialize)]
pub struct WanderingArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub pair: PairArgs,
    /// Interval endpoints `a b`.
    #[arg(long, num_args = 2, value_names = ["A", "B"], allow_negative_numbers = true)]
    pub interval: Vec<f64>,
    #[arg(long, default_value_t = hup_core::dynamics::DEFAULT_HORIZON)]
    pub horizon: usize,
}

#[derive(Args, Debug, Serialize)]
pub struct AttractArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub pair: PairArgs,
    #[arg(long, num_args = 2, value_names = ["A", "B"], allow_negative_numbers = true)]
    pub interval: Vec<f64>,
    /// Power of the map that must send the interval into itself.
    #[arg(long, default_value_t = 1)]
    pub k: usize,
    /// Cap on the number of nested images followed.
    #[arg(long, default_value_t = 10_000)]
    pub n_limit: usize,
}

#[derive(Args, Debug, Serialize)]
pub struct SigmaArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub pair: PairArgs,
    /// Starting point; defaults to the extremum of the first projection.
    #[arg(long, allow_negative_numbers = true)]
    pub sigma0: Option<f64>,
    #[arg(long, default_value_t = 100)]
    pub n: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    CircleRational,
    HyperbolaPerpendicular,
    GenericPeriodic,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Profile {
    Sine,
    Bump,
}

#[derive(Args, Debug, Serialize)]
pub struct TransformGrid {
    /// Range of t for the line samples `tθ`.
    #[arg(long, num_args = 2, value_names = ["LO", "HI"], default_values_t = [-50.0, 50.0], allow_negative_numbers = true)]
    pub t_range: Vec<f64>,
    #[arg(long, default_value_t = 501)]
    pub t_count: usize,
}

#[derive(Args, Debug, Serialize)]
pub struct CounterexampleArgs {
    #[arg(long, value_enum)]
    pub kind: Kind,
    /// Denominator for circle-rational (θ₂ = π/q).
    #[arg(long, default_value_t = 2)]
    pub q: usize,
    /// θ₁ for hyperbola-perpendicular and generic-periodic.
    #[arg(long, allow_negative_numbers = true)]
    pub theta1: Option<f64>,
    /// θ₂ for generic-periodic.
    #[arg(long, allow_negative_numbers = true)]
    pub theta2: Option<f64>,
    /// Closed curve for generic-periodic.
    #[arg(long)]
    pub curve: Option<String>,
    #[arg(long, value_enum, default_value_t = Profile::Sine)]
    pub profile: Profile,
    /// Check the transform on both lines.
    #[arg(long)]
    pub verify: bool,
    #[command(flatten)]
    #[serde(flatten)]
    pub grid: TransformGrid,
    /// Largest line modulus accepted by --verify (default 1e-8, or HUP_DEFAULT_TOL).
    #[arg(long, allow_negative_numbers = true)]
    pub tol: Option<f64>,
    /// Where to write the density file. Defaults to `<out>.density.json`,
    /// or `counterexample.density.json` without --out.
    #[arg(long)]
    pub density_out: Option<PathBuf>,
    /// Grid points in the density file.
    #[arg(long, default_value_t = hup_core::measure::DEFAULT_GRID)]
    pub file_grid: usize,
}

#[derive(Args, Debug, Serialize)]
pub struct AnnihilateArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub pair: PairArgs,
    #[arg(long, default_value_t = 4096)]
    pub grid: usize,
    #[arg(long, default_value_t = 10_000)]
    pub iterations: usize,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    /// Fourier modes in the random starting density.
    #[arg(long, default_value_t = 12)]
    pub modes: usize,
    /// Stop once the norm falls below this fraction of the start.
    #[arg(long, default_value_t = 1e-8)]
    pub stop_ratio: f64,
    /// Interpolation order used for f∘Φ on the grid (1 or 3).
    #[arg(long, default_value_t = 1)]
    pub order: usize,
    /// Write the final density here.
    #[arg(long)]
    pub density_out: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
pub struct DensityArg {
    /// Density file written by `counterexample` or `annihilate`.
    #[arg(long, conflicts_with = "density_fn")]
    pub density: Option<PathBuf>,
    /// Built-in density: one, zero, cos:K or sin:K (meaning cos 2πKs, sin 2πKs).
    #[arg(long)]
    pub density_fn: Option<String>,
}

#[derive(Args, Debug, Serialize)]
pub struct VerifyArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub curve: CurveArg,
    #[command(flatten)]
    #[serde(flatten)]
    pub density: DensityArg,
    /// Line angles in radians.
    #[arg(long, num_args = 1.., required = true, allow_negative_numbers = true)]
    pub lines: Vec<f64>,
    #[command(flatten)]
    #[serde(flatten)]
    pub grid: TransformGrid,
    /// Largest modulus accepted on every line (default 1e-8, or HUP_DEFAULT_TOL).
    #[arg(long, allow_negative_numbers = true)]
    pub tol: Option<f64>,
}

#[derive(Args, Debug, Serialize)]
pub struct RadonArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub line: LineArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub density: DensityArg,
    /// Range of projection values; defaults to the full projected range.
    #[arg(long, num_args = 2, value_names = ["LO", "HI"], allow_negative_numbers = true)]
    pub zeta_range: Option<Vec<f64>>,
    #[arg(long, default_value_t = 201)]
    pub zeta_count: usize,
}

#[derive(Args, Debug, Serialize)]
pub struct SliceCheckArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub line: LineArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub density: DensityArg,
    #[arg(long, num_args = 2, value_names = ["LO", "HI"], default_values_t = [-20.0, 20.0], allow_negative_numbers = true)]
    pub xi_range: Vec<f64>,
    #[arg(long, default_value_t = 81)]
    pub xi_count: usize,
    /// Largest discrepancy accepted (default 1e-6, or HUP_DEFAULT_TOL).
    #[arg(long, allow_negative_numbers = true)]
    pub tol: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scaling {
    Minor,
    Major,
}

#[derive(Args, Debug, Serialize)]
pub struct EllipseArgs {
    /// Semi-major axis.
    #[arg(long)]
    pub a: f64,
    /// Semi-minor axis.
    #[arg(long)]
    pub b: f64,
    #[arg(long, allow_negative_numbers = true)]
    pub theta1: f64,
    #[arg(long, allow_negative_numbers = true)]
    pub theta2: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub rotation: f64,
    /// Which semi-axis the linear map stretches.
    #[arg(long, value_enum, default_value_t = Scaling::Minor)]
    pub scaling: Scaling,
}

fn main() -> ExitCode {
    // clap would exit 2 on bad usage, which is reserved for certificate failures.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(1);
        }
    };
    let name = cli.command.name();
    match commands::run(name, cli.command, cli.out.as_deref(), cli.csv.as_deref()) {
        Ok(Status::Ok) => ExitCode::SUCCESS,
        Ok(Status::CertificateFailed) => ExitCode::from(2),
        Err(e) => {
            eprintln!("hup {name}: {e:#}");
            ExitCode::from(1)
        }
    }
}
