use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use spinreset::analysis::Observable;
use spinreset::{NSpins, ProtocolKind};

/// Rabi-driven spin ensembles under stochastic resetting.
///
/// Frequencies are in units of the detuning `Delta` (or of `Omega` when
/// `--delta 0`), times in units of its inverse.
#[derive(Debug, Parser)]
#[command(name = "spinreset", version)]
pub struct Cli {
    /// Worker threads (overrides SPINRESET_THREADS).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Exact stationary quantities at one parameter point.
    Stationary(StationaryArgs),
    /// Monte Carlo ensemble at one parameter point.
    Ensemble(EnsembleArgs),
    /// Stationary observables across a grid of Omega/Delta.
    Sweep(SweepArgs),
    /// Quasi-stationary sweeps for several finite spin counts.
    FiniteSize(FiniteSizeArgs),
    /// Power-law fit of an existing sweep file above the critical point.
    Fit(FitArgs),
    /// Cross-check closed forms, quadrature and Monte Carlo.
    Verify(VerifyArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

pub fn parse_protocol(s: &str) -> Result<ProtocolKind, String> {
    let n = match s {
        "1" | "I" | "i" => 1,
        "2" | "II" | "ii" => 2,
        "3" | "III" | "iii" => 3,
        _ => 0,
    };
    ProtocolKind::from_number(n).ok_or_else(|| format!("protocol must be 1, 2 or 3, got `{s}`"))
}

pub fn parse_n_spins(s: &str) -> Result<NSpins, String> {
    match s {
        "inf" | "infinity" | "thermodynamic" => Ok(NSpins::Thermodynamic),
        _ => {
            let n: u64 = s
                .parse()
                .map_err(|_| format!("expected an odd integer or `inf`, got `{s}`"))?;
            NSpins::finite(n).map_err(|e| e.to_string())
        }
    }
}

/// `lo:hi`.
pub fn parse_window(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s
        .split_once(':')
        .ok_or_else(|| format!("expected lo:hi, got `{s}`"))?;
    let lo: f64 = a.trim().parse().map_err(|_| format!("bad number `{a}`"))?;
    let hi: f64 = b.trim().parse().map_err(|_| format!("bad number `{b}`"))?;
    Ok((lo, hi))
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct PhysicsArgs {
    /// Reset protocol: 1 (unconditional), 2 (two-state), 3 (conditional flip).
    #[arg(long, value_parser = parse_protocol, default_value = "1")]
    pub protocol: ProtocolKind,
    /// Reset rate gamma.
    #[arg(long, default_value_t = 0.5, allow_negative_numbers = true)]
    pub gamma: f64,
    /// Cut waiting times off at this value (chopped exponential law).
    #[arg(long, allow_negative_numbers = true)]
    pub t_max: Option<f64>,
    /// Number of spins: an odd integer, or `inf` for the thermodynamic limit.
    #[arg(long, value_parser = parse_n_spins, default_value = "inf")]
    pub n_spins: NSpins,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct OutputArgs {
    /// Output file; the table goes to stdout when omitted.
    #[arg(long, short)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct MonteCarloArgs {
    /// Observation time T.
    #[arg(long, default_value_t = 30.0, allow_negative_numbers = true)]
    pub time: f64,
    #[arg(long, default_value_t = 20_000)]
    pub trajectories: u64,
    #[arg(long, default_value_t = 2023)]
    pub seed: u64,
    /// Abort a trajectory after this many resets.
    #[arg(long)]
    pub max_resets: Option<u64>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct StationaryArgs {
    #[command(flatten)]
    pub physics: PhysicsArgs,
    #[arg(long, allow_negative_numbers = true)]
    pub omega: f64,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub delta: f64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct EnsembleArgs {
    #[command(flatten)]
    pub physics: PhysicsArgs,
    #[arg(long, allow_negative_numbers = true)]
    pub omega: f64,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub delta: f64,
    #[command(flatten)]
    pub mc: MonteCarloArgs,
    /// Number of evenly spaced sample times on [0, T]; 1 samples only T.
    #[arg(long, default_value_t = 1)]
    pub grid_points: usize,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SweepArgs {
    #[command(flatten)]
    pub physics: PhysicsArgs,
    /// Values of Omega/Delta: `start:stop:step` or a comma-separated list.
    #[arg(long, allow_hyphen_values = true)]
    pub grid: String,
    #[command(flatten)]
    pub mc: MonteCarloArgs,
    /// Simulate every row, even where an exact stationary state exists.
    #[arg(long)]
    pub force_monte_carlo: bool,
    /// Also write `<prefix>_<observable>.svg` plots.
    #[arg(long)]
    pub svg: Option<PathBuf>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct FiniteSizeArgs {
    /// Reset protocol.
    #[arg(long, value_parser = parse_protocol, default_value = "2")]
    pub protocol: ProtocolKind,
    #[arg(long, default_value_t = 0.5, allow_negative_numbers = true)]
    pub gamma: f64,
    #[arg(long, allow_negative_numbers = true)]
    pub t_max: Option<f64>,
    /// Comma-separated odd spin counts.
    #[arg(long, default_value = "51,201,1001", value_delimiter = ',', value_parser = parse_n_spins)]
    pub sizes: Vec<NSpins>,
    /// Values of Omega/Delta: `start:stop:step` or a comma-separated list.
    #[arg(long, default_value = "0.8:1.2:0.05")]
    pub grid: String,
    #[arg(long, default_value_t = 2000.0)]
    pub time: f64,
    #[arg(long, default_value_t = 10_000)]
    pub trajectories: u64,
    #[arg(long, default_value_t = 2023)]
    pub seed: u64,
    #[arg(long)]
    pub max_resets: Option<u64>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    /// Fit `value - baseline`.
    Above,
    /// Fit `baseline - value`.
    Below,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct FitArgs {
    /// Sweep file written by `sweep` (CSV or JSON).
    pub input: PathBuf,
    #[arg(long, value_parser = parse_observable, default_value = "density")]
    pub observable: Observable,
    #[arg(long, default_value_t = 1.0)]
    pub critical_point: f64,
    /// Fit window `lo:hi` in Omega/Delta.
    #[arg(long, value_parser = parse_window, default_value = "1.02:1.25")]
    pub window: (f64, f64),
    /// Baseline subtracted before the fit; 1/2 for the density, 0 otherwise.
    #[arg(long, allow_hyphen_values = true)]
    pub baseline: Option<f64>,
    #[arg(long, value_enum, default_value = "above")]
    pub direction: Direction,
    /// Write the fit as JSON here as well as to stdout.
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

fn parse_observable(s: &str) -> Result<Observable, String> {
    s.parse()
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct VerifyArgs {
    /// Trajectories for the Monte Carlo checks.
    #[arg(long, default_value_t = 20_000)]
    pub trajectories: u64,
    #[arg(long, default_value_t = 2023)]
    pub seed: u64,
}
