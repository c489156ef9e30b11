//! Parameter sweeps in `Omega/Delta`, jump estimates at the critical point,
//! and log-log power-law fits.
//!
//! Sweeps are expressed in units of the detuning: each grid value `x` is
//! evaluated at `Omega = x`, `Delta = 1`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::finite_size::NSpins;
use crate::observables::{connected_correlation, lqu};
use crate::renewal::{
    stationary_density_closed_form, stationary_state_p1, stationary_state_p2, WaitingTime,
};
use crate::spin_dynamics::DriveParams;
use crate::trajectory_sim::{run_ensemble, ProtocolKind, SimConfig};

/// Critical drive strength in units of the detuning.
pub const CRITICAL_POINT: f64 = 1.0;

/// Default window `(Omega_c + 0.02, Omega_c + 0.25)` for power-law fits.
pub const DEFAULT_FIT_WINDOW: (f64, f64) = (1.02, 1.25);

pub const MIN_FIT_POINTS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Observable {
    Density,
    Correlation,
    Lqu,
}

impl std::str::FromStr for Observable {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "density" => Ok(Self::Density),
            "correlation" => Ok(Self::Correlation),
            "lqu" => Ok(Self::Lqu),
            other => Err(format!("unknown observable `{other}`")),
        }
    }
}

/// How a row was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RowRegime {
    /// Survival-weighted average of the trajectory from `|up>`.
    ClosedForm,
    /// Equal-weight mixture of the trajectories from `|up>` and `|down>`.
    Mixture,
    /// Thermodynamic limit exactly at `Omega = Delta`, evaluated with the
    /// below-critical convention.
    CriticalBoundary,
    MonteCarlo,
    /// The row could not be computed; see `error`.
    Failed,
}

impl RowRegime {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::ClosedForm => "closed_form",
            Self::Mixture => "mixture",
            Self::CriticalBoundary => "critical_boundary",
            Self::MonteCarlo => "monte_carlo",
            Self::Failed => "failed",
        }
    }

    pub fn is_exact(self) -> bool {
        matches!(
            self,
            Self::ClosedForm | Self::Mixture | Self::CriticalBoundary
        )
    }
}

impl std::str::FromStr for RowRegime {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        [
            Self::ClosedForm,
            Self::Mixture,
            Self::CriticalBoundary,
            Self::MonteCarlo,
            Self::Failed,
        ]
        .into_iter()
        .find(|r| r.as_str() == s)
        .ok_or_else(|| format!("unknown regime `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub omega_over_delta: f64,
    pub density: f64,
    pub density_stderr: f64,
    pub correlation: f64,
    pub correlation_stderr: f64,
    pub lqu: f64,
    pub lqu_stderr: f64,
    pub regime: RowRegime,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl SweepRow {
    pub fn value(&self, observable: Observable) -> (f64, f64) {
        match observable {
            Observable::Density => (self.density, self.density_stderr),
            Observable::Correlation => (self.correlation, self.correlation_stderr),
            Observable::Lqu => (self.lqu, self.lqu_stderr),
        }
    }

    fn failed(x: f64, error: &Error) -> Self {
        Self {
            omega_over_delta: x,
            density: f64::NAN,
            density_stderr: f64::NAN,
            correlation: f64::NAN,
            correlation_stderr: f64::NAN,
            lqu: f64::NAN,
            lqu_stderr: f64::NAN,
            regime: RowRegime::Failed,
            error: Some(error.to_string()),
        }
    }

    pub fn is_usable(&self) -> bool {
        self.regime != RowRegime::Failed
    }
}

/// Monte Carlo settings applied to every row that needs simulation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSettings {
    pub n_spins: NSpins,
    pub observation_time: f64,
    pub n_trajectories: u64,
    pub seed: u64,
    /// Simulate every row, including those with an exact stationary state.
    #[serde(default)]
    pub force_monte_carlo: bool,
    #[serde(default)]
    pub max_resets_per_trajectory: Option<u64>,
}

impl Default for SweepSettings {
    fn default() -> Self {
        Self {
            n_spins: NSpins::Thermodynamic,
            observation_time: 30.0,
            n_trajectories: 40_000,
            seed: 2023,
            force_monte_carlo: false,
            max_resets_per_trajectory: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub protocol: ProtocolKind,
    pub dist: WaitingTime,
    pub settings: SweepSettings,
    pub rows: Vec<SweepRow>,
    #[serde(default)]
    pub fits: Vec<PowerLawFit>,
    #[serde(default)]
    pub discontinuity: Option<Discontinuity>,
}

/// Seed for the row at `x`, decorrelated from neighbouring rows.
pub fn row_seed(seed: u64, x: f64) -> u64 {
    // splitmix64 finalizer
    let mut z = seed ^ x.to_bits().wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn validate_grid(grid: &[f64]) -> Result<()> {
    for (k, &x) in grid.iter().enumerate() {
        if !(x.is_finite() && x >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "grid value {x} must be finite and non-negative"
            )));
        }
        if k > 0 && x <= grid[k - 1] {
            return Err(Error::InvalidConfig(
                "sweep grid must be strictly increasing".into(),
            ));
        }
    }
    Ok(())
}

fn exact_row(
    protocol: ProtocolKind,
    dist: &WaitingTime,
    n_spins: NSpins,
    x: f64,
) -> Result<SweepRow> {
    exact_stationary_row(protocol, dist, n_spins, DriveParams::new(x, 1.0)?)
}

/// Exact stationary row for the unconditional or two-state protocol.
/// `omega_over_delta` is infinite when the detuning vanishes.
pub fn exact_stationary_row(
    protocol: ProtocolKind,
    dist: &WaitingTime,
    n_spins: NSpins,
    params: DriveParams,
) -> Result<SweepRow> {
    let (state, regime) = match protocol {
        ProtocolKind::UnconditionalReset => {
            (stationary_state_p1(params, dist), RowRegime::ClosedForm)
        }
        ProtocolKind::ConditionalTwoState => {
            let st = stationary_state_p2(params, dist, n_spins)?;
            let regime = if st.weights.critical_boundary {
                RowRegime::CriticalBoundary
            } else if st.weights.degenerate {
                RowRegime::ClosedForm
            } else {
                RowRegime::Mixture
            };
            (st, regime)
        }
        ProtocolKind::ConditionalFlip => {
            return Err(Error::InvalidConfig(
                "the conditional-flip protocol has no exact stationary state".into(),
            ))
        }
    };
    Ok(SweepRow {
        omega_over_delta: params.omega() / params.delta(),
        density: state.density,
        density_stderr: 0.0,
        correlation: connected_correlation(&state.pair),
        correlation_stderr: 0.0,
        lqu: lqu(&state.pair)?.value,
        lqu_stderr: 0.0,
        regime,
        error: None,
    })
}

fn monte_carlo_row(
    protocol: ProtocolKind,
    dist: &WaitingTime,
    settings: &SweepSettings,
    x: f64,
) -> Result<SweepRow> {
    let params = DriveParams::new(x, 1.0)?;
    let mut config = SimConfig::new(
        protocol,
        params,
        *dist,
        settings.n_spins,
        settings.observation_time,
        settings.n_trajectories,
        row_seed(settings.seed, x),
    );
    config.max_resets_per_trajectory = settings.max_resets_per_trajectory;
    let stats = run_ensemble(&config)?;
    let p = stats.final_point();
    Ok(SweepRow {
        omega_over_delta: x,
        density: p.density,
        density_stderr: p.density_stderr,
        correlation: p.correlation,
        correlation_stderr: p.correlation_stderr,
        lqu: p.lqu.unwrap_or(f64::NAN),
        lqu_stderr: p.lqu_stderr.unwrap_or(f64::NAN),
        regime: RowRegime::MonteCarlo,
        error: None,
    })
}

fn needs_monte_carlo(protocol: ProtocolKind, settings: &SweepSettings) -> bool {
    settings.force_monte_carlo
        || protocol == ProtocolKind::ConditionalFlip
        // At finite N the exact two-state stationary density is 1/2 for all
        // drives; the observable of interest is the quasi-stationary value.
        || (protocol == ProtocolKind::ConditionalTwoState && !settings.n_spins.is_thermodynamic())
}

/// One row per grid value. Rows that fail (for example on a resource
/// limit) are kept with regime [`RowRegime::Failed`].
pub fn sweep_stationary(
    protocol: ProtocolKind,
    dist: &WaitingTime,
    grid: &[f64],
    settings: &SweepSettings,
) -> Result<SweepResult> {
    validate_grid(grid)?;
    let mc = needs_monte_carlo(protocol, settings);
    let rows = grid
        .par_iter()
        .map(|&x| {
            let row = if mc {
                monte_carlo_row(protocol, dist, settings, x)
            } else {
                exact_row(protocol, dist, settings.n_spins, x)
            };
            row.unwrap_or_else(|e| SweepRow::failed(x, &e))
        })
        .collect();
    Ok(SweepResult {
        protocol,
        dist: *dist,
        settings: settings.clone(),
        rows,
        fits: Vec::new(),
        discontinuity: None,
    })
}

/// How a one-sided limit was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LimitMethod {
    ClosedForm,
    Extrapolated,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OneSidedLimit {
    pub value: f64,
    pub stderr: f64,
    pub method: LimitMethod,
    /// Slope from the two rows nearest the critical point on this side.
    pub slope: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Discontinuity {
    pub critical_point: f64,
    pub observable: Observable,
    /// `left - right`.
    pub jump: f64,
    pub stderr: f64,
    pub left: OneSidedLimit,
    pub right: OneSidedLimit,
}

impl Discontinuity {
    /// Change of slope across the critical point, when both slopes exist.
    pub fn slope_change(&self) -> Option<f64> {
        Some(self.right.slope? - self.left.slope?)
    }
}

/// Closed-form one-sided limits of an observable, when known.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct KnownLimits {
    pub left: Option<f64>,
    pub right: Option<f64>,
}

fn linear_limit(rows: &[(f64, f64, f64)], xc: f64) -> (f64, f64, f64) {
    let (x1, y1, s1) = rows[0];
    let (x2, y2, s2) = rows[1];
    let a1 = (xc - x2) / (x1 - x2);
    let a2 = (x1 - xc) / (x1 - x2);
    let value = a1 * y1 + a2 * y2;
    let stderr = (a1 * a1 * s1 * s1 + a2 * a2 * s2 * s2).sqrt();
    (value, stderr, (y1 - y2) / (x1 - x2))
}

/// Jump `left - right` at `critical_point` with caller-supplied closed-form
/// limits. Missing limits are extrapolated linearly from the two rows
/// nearest the critical point on that side; rows exactly at the critical
/// point are ignored.
pub fn estimate_discontinuity_with(
    rows: &[SweepRow],
    observable: Observable,
    critical_point: f64,
    known: KnownLimits,
) -> Result<Discontinuity> {
    let usable = |r: &&SweepRow| r.is_usable() && r.value(observable).0.is_finite();
    let mut left: Vec<(f64, f64, f64)> = rows
        .iter()
        .filter(usable)
        .filter(|r| r.omega_over_delta < critical_point)
        .map(|r| {
            let (v, s) = r.value(observable);
            (r.omega_over_delta, v, s)
        })
        .collect();
    left.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut right: Vec<(f64, f64, f64)> = rows
        .iter()
        .filter(usable)
        .filter(|r| r.omega_over_delta > critical_point)
        .map(|r| {
            let (v, s) = r.value(observable);
            (r.omega_over_delta, v, s)
        })
        .collect();
    right.sort_by(|a, b| a.0.total_cmp(&b.0));

    let side = |pts: &[(f64, f64, f64)], known: Option<f64>, name: &str| -> Result<OneSidedLimit> {
        let slope = (pts.len() >= 2).then(|| linear_limit(pts, critical_point).2);
        match known {
            Some(value) => {
                if pts.is_empty() {
                    return Err(Error::InsufficientBracketing {
                        critical_point,
                        detail: format!("no rows {name} the critical point"),
                    });
                }
                Ok(OneSidedLimit {
                    value,
                    stderr: 0.0,
                    method: LimitMethod::ClosedForm,
                    slope,
                })
            }
            None => {
                if pts.len() < 2 {
                    return Err(Error::InsufficientBracketing {
                        critical_point,
                        detail: format!("need two rows {name} the critical point to extrapolate"),
                    });
                }
                let (value, stderr, slope) = linear_limit(pts, critical_point);
                Ok(OneSidedLimit {
                    value,
                    stderr,
                    method: LimitMethod::Extrapolated,
                    slope: Some(slope),
                })
            }
        }
    };
    let l = side(&left, known.left, "below")?;
    let r = side(&right, known.right, "above")?;
    Ok(Discontinuity {
        critical_point,
        observable,
        jump: l.value - r.value,
        stderr: l.stderr.hypot(r.stderr),
        left: l,
        right: r,
    })
}

/// Closed-form density limits implied by the sweep's protocol.
///
/// In the thermodynamic limit every protocol coincides with the
/// unconditional one below the critical point. Above it, the exact rows of
/// the unconditional and two-state protocols supply the right limit;
/// Monte Carlo rows are extrapolated.
pub fn known_density_limits(sweep: &SweepResult, critical_point: f64) -> Result<KnownLimits> {
    if !sweep.settings.n_spins.is_thermodynamic() {
        return Ok(KnownLimits::default());
    }
    let at_critical = DriveParams::new(critical_point, 1.0)?;
    let left = Some(stationary_density_closed_form(at_critical, &sweep.dist));
    let right_exact = sweep
        .rows
        .iter()
        .filter(|r| r.omega_over_delta > critical_point && r.is_usable())
        .all(|r| r.regime.is_exact());
    let right = match sweep.protocol {
        _ if !right_exact => None,
        ProtocolKind::UnconditionalReset => left,
        ProtocolKind::ConditionalTwoState => Some(0.5),
        ProtocolKind::ConditionalFlip => None,
    };
    Ok(KnownLimits { left, right })
}

/// Density jump at `critical_point`, using closed-form limits where known.
pub fn estimate_discontinuity(sweep: &SweepResult, critical_point: f64) -> Result<Discontinuity> {
    let known = known_density_limits(sweep, critical_point)?;
    estimate_discontinuity_with(&sweep.rows, Observable::Density, critical_point, known)
}

/// Baseline subtracted before taking logarithms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "direction", content = "baseline")]
pub enum Offset {
    /// Fit `value - baseline`.
    Above(f64),
    /// Fit `baseline - value`.
    Below(f64),
}

impl Offset {
    pub fn apply(&self, value: f64) -> f64 {
        match *self {
            Self::Above(b) => value - b,
            Self::Below(b) => b - value,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFit {
    pub observable: Option<Observable>,
    pub exponent: f64,
    pub exponent_stderr: f64,
    pub amplitude: f64,
    pub fit_window: (f64, f64),
    /// RMS of the log-log residuals.
    pub residual: f64,
    pub critical_point: f64,
    pub offset: Offset,
    pub n_points: usize,
}

/// Ordinary least squares of `ln(offset(y))` against `ln(x - critical_point)`
/// over points with `x` in the closed window.
pub fn fit_power_law_points(
    points: &[(f64, f64)],
    critical_point: f64,
    window: (f64, f64),
    offset: Offset,
) -> Result<PowerLawFit> {
    let (lo, hi) = window;
    if !(lo > critical_point && hi > lo) {
        return Err(Error::InvalidConfig(format!(
            "fit window ({lo}, {hi}) must lie strictly above the critical point {critical_point}"
        )));
    }
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for &(x, y) in points.iter().filter(|(x, _)| *x >= lo && *x <= hi) {
        let o = offset.apply(y);
        if !(o > 0.0) {
            return Err(Error::NonPositiveOffset {
                omega_over_delta: x,
                offset: o,
            });
        }
        xs.push((x - critical_point).ln());
        ys.push(o.ln());
    }
    let n = xs.len();
    if n < MIN_FIT_POINTS {
        return Err(Error::TooFewPoints {
            found: n,
            required: MIN_FIT_POINTS,
        });
    }
    let nf = n as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    Ok(PowerLawFit {
        observable: None,
        exponent: slope,
        exponent_stderr: (ss_res / (nf - 2.0) / sxx).sqrt(),
        amplitude: intercept.exp(),
        fit_window: window,
        residual: (ss_res / nf).sqrt(),
        critical_point,
        offset,
        n_points: n,
    })
}

/// Power-law fit of one sweep observable above the critical point.
pub fn fit_power_law(
    sweep: &SweepResult,
    observable: Observable,
    critical_point: f64,
    window: (f64, f64),
    offset: Offset,
) -> Result<PowerLawFit> {
    fit_power_law_rows(&sweep.rows, observable, critical_point, window, offset)
}

/// [`fit_power_law`] on bare rows; failed rows are skipped.
pub fn fit_power_law_rows(
    rows: &[SweepRow],
    observable: Observable,
    critical_point: f64,
    window: (f64, f64),
    offset: Offset,
) -> Result<PowerLawFit> {
    let points: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.is_usable())
        .map(|r| (r.omega_over_delta, r.value(observable).0))
        .collect();
    let mut fit = fit_power_law_points(&points, critical_point, window, offset)?;
    fit.observable = Some(observable);
    Ok(fit)
}

/// `n` log-spaced values of `critical_point + d`, `d` from `lo - c` to `hi - c`.
pub fn log_spaced_window(critical_point: f64, window: (f64, f64), n: usize) -> Vec<f64> {
    let a = (window.0 - critical_point).ln();
    let b = (window.1 - critical_point).ln();
    match n {
        0 => Vec::new(),
        1 => vec![window.0],
        _ => (0..n)
            .map(|k| critical_point + (a + (b - a) * k as f64 / (n - 1) as f64).exp())
            .collect(),
    }
}

/// Inclusive arithmetic grid `start:stop:step`. Values are snapped to 12
/// decimals so that, e.g., `0.2:2:0.05` hits the critical point exactly.
pub fn linear_grid(start: f64, stop: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0 && step.is_finite() && start.is_finite() && stop.is_finite() && stop >= start) {
        return Err(Error::InvalidConfig(format!(
            "invalid grid {start}:{stop}:{step}"
        )));
    }
    let n = ((stop - start) / step + 1e-9).floor() as usize;
    if n > 10_000_000 {
        return Err(Error::InvalidConfig("grid has too many points".into()));
    }
    Ok((0..=n)
        .map(|k| ((start + step * k as f64) * 1e12).round() / 1e12)
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn poisson() -> WaitingTime {
        WaitingTime::poisson(0.5).unwrap()
    }

    fn synthetic(points: &[(f64, f64)]) -> Vec<SweepRow> {
        points
            .iter()
            .map(|&(x, y)| SweepRow {
                omega_over_delta: x,
                density: y,
                density_stderr: 0.01,
                correlation: 0.0,
                correlation_stderr: 0.0,
                lqu: 0.0,
                lqu_stderr: 0.0,
                regime: RowRegime::MonteCarlo,
                error: None,
            })
            .collect()
    }

    #[test]
    fn protocol_one_sweep_matches_closed_form() {
        let s = sweep_stationary(
            ProtocolKind::UnconditionalReset,
            &poisson(),
            &[0.5, 1.0, 2.0],
            &SweepSettings::default(),
        )
        .unwrap();
        let expected = [1.0 - 0.5 / 5.25, 1.0 - 2.0 / 8.25, 1.0 - 8.0 / 20.25];
        for (row, e) in s.rows.iter().zip(expected) {
            assert!((row.density - e).abs() < 1e-12);
            assert_eq!(row.regime, RowRegime::ClosedForm);
        }
        assert!((s.rows[0].density - 0.904762).abs() < 1e-6);
        assert!((s.rows[2].density - 0.604938).abs() < 1e-6);
    }

    #[test]
    fn protocol_two_sweep_has_plateau() {
        let grid = [0.6, 0.9, 1.0, 1.1, 1.6];
        let s = sweep_stationary(
            ProtocolKind::ConditionalTwoState,
            &poisson(),
            &grid,
            &SweepSettings::default(),
        )
        .unwrap();
        let p1 = sweep_stationary(
            ProtocolKind::UnconditionalReset,
            &poisson(),
            &grid,
            &SweepSettings::default(),
        )
        .unwrap();
        for (a, b) in s.rows.iter().zip(&p1.rows).take(3) {
            assert_eq!(a.density, b.density);
        }
        assert_eq!(s.rows[2].regime, RowRegime::CriticalBoundary);
        for r in &s.rows[3..] {
            assert!((r.density - 0.5).abs() < 1e-14);
            assert_eq!(r.regime, RowRegime::Mixture);
        }
        let d = estimate_discontinuity(&s, CRITICAL_POINT).unwrap();
        assert!((d.jump - (1.0 - 2.0 / 8.25 - 0.5)).abs() < 1e-12);
        assert!((d.jump - 0.257576).abs() < 1e-6);
    }

    #[test]
    fn protocol_one_has_no_jump() {
        let grid = [0.8, 0.9, 0.95, 1.05, 1.1, 1.2];
        let s = sweep_stationary(
            ProtocolKind::UnconditionalReset,
            &poisson(),
            &grid,
            &SweepSettings::default(),
        )
        .unwrap();
        let d = estimate_discontinuity(&s, CRITICAL_POINT).unwrap();
        assert_eq!(d.jump, 0.0);
        let free =
            estimate_discontinuity_with(&s.rows, Observable::Density, 1.0, KnownLimits::default())
                .unwrap();
        assert!(free.jump.abs() < 1e-3);
    }

    #[test]
    fn bracketing_is_required() {
        let rows = synthetic(&[(0.5, 0.9), (0.8, 0.8)]);
        assert!(matches!(
            estimate_discontinuity_with(&rows, Observable::Density, 1.0, KnownLimits::default()),
            Err(Error::InsufficientBracketing { .. })
        ));
    }

    #[test]
    fn jump_flips_sign_under_reflection() {
        let pts = [
            (0.7, 0.8),
            (0.9, 0.77),
            (0.95, 0.76),
            (1.05, 0.52),
            (1.1, 0.51),
            (1.3, 0.5),
        ];
        let rows = synthetic(&pts);
        let mirrored: Vec<(f64, f64)> = pts.iter().rev().map(|&(x, y)| (2.0 - x, y)).collect();
        let a =
            estimate_discontinuity_with(&rows, Observable::Density, 1.0, KnownLimits::default())
                .unwrap();
        let b = estimate_discontinuity_with(
            &synthetic(&mirrored),
            Observable::Density,
            1.0,
            KnownLimits::default(),
        )
        .unwrap();
        assert!((a.jump + b.jump).abs() < 1e-12);
        assert!((a.stderr - b.stderr).abs() < 1e-15);
    }

    #[test]
    fn recovers_exact_power_laws() {
        for beta in [0.2, 0.5, 1.0] {
            let pts: Vec<(f64, f64)> = log_spaced_window(1.0, (1.01, 1.3), 12)
                .into_iter()
                .map(|x| (x, 0.5 + 0.8 * (x - 1.0).powf(beta)))
                .collect();
            let fit = fit_power_law_points(&pts, 1.0, (1.01, 1.3), Offset::Above(0.5)).unwrap();
            assert!((fit.exponent - beta).abs() < 1e-6);
            assert!((fit.amplitude - 0.8).abs() < 1e-6);
            let mirrored: Vec<(f64, f64)> = pts.iter().map(|&(x, y)| (x, 1.0 - y)).collect();
            let fit =
                fit_power_law_points(&mirrored, 1.0, (1.01, 1.3), Offset::Below(0.5)).unwrap();
            assert!((fit.exponent - beta).abs() < 1e-6);
        }
    }

    #[test]
    fn fit_errors() {
        let pts: Vec<(f64, f64)> = (1..=6).map(|k| (1.0 + 0.03 * k as f64, 0.4)).collect();
        assert!(matches!(
            fit_power_law_points(&pts, 1.0, (1.02, 1.25), Offset::Above(0.5)),
            Err(Error::NonPositiveOffset { .. })
        ));
        let few = [(1.05, 0.6), (1.1, 0.7)];
        assert!(matches!(
            fit_power_law_points(&few, 1.0, (1.02, 1.25), Offset::Above(0.5)),
            Err(Error::TooFewPoints { found: 2, .. })
        ));
        assert!(fit_power_law_points(&few, 1.0, (0.9, 1.25), Offset::Above(0.5)).is_err());
    }

    #[test]
    fn failed_rows_do_not_abort_sweep() {
        let settings = SweepSettings {
            n_trajectories: 10,
            max_resets_per_trajectory: Some(1),
            ..SweepSettings::default()
        };
        let s = sweep_stationary(
            ProtocolKind::ConditionalFlip,
            &poisson(),
            &[0.5, 1.5],
            &settings,
        )
        .unwrap();
        assert!(s
            .rows
            .iter()
            .all(|r| r.regime == RowRegime::Failed && r.error.is_some()));
    }

    #[test]
    fn grids() {
        let g = linear_grid(0.2, 2.0, 0.05).unwrap();
        assert_eq!(g.len(), 37);
        assert_eq!(g[36], 2.0);
        assert_eq!(g[16], 1.0);
        assert!(linear_grid(1.0, 0.0, 0.1).is_err());
        let w = log_spaced_window(1.0, (1.02, 1.25), 5);
        assert!((w[0] - 1.02).abs() < 1e-14 && (w[4] - 1.25).abs() < 1e-14);
        assert!(validate_grid(&[0.1, 0.1]).is_err());
    }
}
