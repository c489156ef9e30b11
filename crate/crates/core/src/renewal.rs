//! Waiting-time laws, the last-renewal equation, and stationary states of
//! the unconditional (I) and two-state conditional (II) reset protocols.
//!
//! All survival-weighted time averages act on reset-free trajectories kept
//! as [`TrigSeries`]. Each harmonic `exp(-i nu t)` is mapped through the
//! closed-form kernel `L(nu) = (1/q_hat) int_0^inf q(t) exp(-i nu t) dt`.
//! An adaptive-quadrature route is provided for cross-checks.

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_finite, check_time, Error, Result};
use crate::finite_size::{BinomialTail, NSpins};
use crate::quad::{integrate, integrate_real, QuadOptions};
use crate::spin_dynamics::{
    flip_probability_unchecked, free_density_series, free_pair_series, free_qubit_series,
    DriveParams, Mat2, Mat4, QubitState, Spin, TwoQubitState,
};
use crate::trig::{Coefficient, TrigSeries};

/// Horizon, in units of `1/gamma`, at which Poisson integrals are cut off
/// on the quadrature route. `exp(-40)` is far below every tolerance used.
pub const POISSON_QUADRATURE_HORIZON: f64 = 40.0;

/// Distribution of the time between consecutive resets.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawWaitingTime", into = "RawWaitingTime")]
pub enum WaitingTime {
    /// `f(t) = gamma exp(-gamma t)`.
    Poisson { gamma: f64 },
    /// Exponential density truncated at `t_max` and renormalized.
    ChoppedExponential { gamma: f64, t_max: f64 },
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum RawWaitingTime {
    Poisson { gamma: f64 },
    ChoppedExponential { gamma: f64, t_max: f64 },
}

impl TryFrom<RawWaitingTime> for WaitingTime {
    type Error = Error;
    fn try_from(raw: RawWaitingTime) -> Result<Self> {
        match raw {
            RawWaitingTime::Poisson { gamma } => WaitingTime::poisson(gamma),
            RawWaitingTime::ChoppedExponential { gamma, t_max } => {
                WaitingTime::chopped(gamma, t_max)
            }
        }
    }
}

impl From<WaitingTime> for RawWaitingTime {
    fn from(w: WaitingTime) -> Self {
        match w {
            WaitingTime::Poisson { gamma } => RawWaitingTime::Poisson { gamma },
            WaitingTime::ChoppedExponential { gamma, t_max } => {
                RawWaitingTime::ChoppedExponential { gamma, t_max }
            }
        }
    }
}

fn check_positive(name: &'static str, v: f64) -> Result<f64> {
    check_finite(name, v)?;
    if v <= 0.0 {
        return Err(Error::InvalidParameter {
            name,
            value: v,
            reason: "must be positive",
        });
    }
    Ok(v)
}

impl WaitingTime {
    pub fn poisson(gamma: f64) -> Result<Self> {
        check_positive("gamma", gamma)?;
        Ok(Self::Poisson { gamma })
    }

    pub fn chopped(gamma: f64, t_max: f64) -> Result<Self> {
        check_positive("gamma", gamma)?;
        check_positive("t_max", t_max)?;
        Ok(Self::ChoppedExponential { gamma, t_max })
    }

    pub fn gamma(&self) -> f64 {
        match *self {
            Self::Poisson { gamma } | Self::ChoppedExponential { gamma, .. } => gamma,
        }
    }

    pub fn t_max(&self) -> Option<f64> {
        match *self {
            Self::Poisson { .. } => None,
            Self::ChoppedExponential { t_max, .. } => Some(t_max),
        }
    }

    pub fn is_poisson(&self) -> bool {
        matches!(self, Self::Poisson { .. })
    }

    /// `1 - exp(-gamma t_max)`, the normalization of the chopped law.
    fn chopped_mass(gamma: f64, t_max: f64) -> f64 {
        -(-gamma * t_max).exp_m1()
    }

    /// Waiting-time density `f(t)`.
    pub fn density(&self, t: f64) -> f64 {
        if t < 0.0 {
            return 0.0;
        }
        match *self {
            Self::Poisson { gamma } => gamma * (-gamma * t).exp(),
            Self::ChoppedExponential { gamma, t_max } => {
                if t > t_max {
                    0.0
                } else {
                    gamma * (-gamma * t).exp() / Self::chopped_mass(gamma, t_max)
                }
            }
        }
    }

    /// Survival probability `q(t) = int_t^inf f`.
    pub fn survival(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 1.0;
        }
        match *self {
            Self::Poisson { gamma } => (-gamma * t).exp(),
            Self::ChoppedExponential { gamma, t_max } => {
                if t >= t_max {
                    0.0
                } else {
                    // (e^{-g t} - e^{-g T}) / (1 - e^{-g T})
                    let num = (-gamma * t).exp() * -(-gamma * (t_max - t)).exp_m1();
                    num / Self::chopped_mass(gamma, t_max)
                }
            }
        }
    }

    /// Mean waiting time `q_hat = int_0^inf q(t) dt`.
    pub fn mean(&self) -> f64 {
        match *self {
            Self::Poisson { gamma } => 1.0 / gamma,
            Self::ChoppedExponential { .. } => self.survival_transform(0.0).re,
        }
    }

    /// `int_0^inf q(t) exp(-i nu t) dt`.
    pub fn survival_transform(&self, nu: f64) -> Complex64 {
        match *self {
            Self::Poisson { gamma } => Complex64::new(1.0, 0.0) / Complex64::new(gamma, nu),
            Self::ChoppedExponential { gamma, t_max } => {
                let s = Complex64::new(gamma, nu);
                let decayed = 1.0 - (-s * t_max).exp();
                let x = 0.5 * nu * t_max;
                let sinc = if x == 0.0 { 1.0 } else { x.sin() / x };
                let plain = Complex64::from_polar(t_max * sinc, -x);
                let tail = (-gamma * t_max).exp();
                (decayed / s - plain * tail) / Self::chopped_mass(gamma, t_max)
            }
        }
    }

    /// Normalized kernel `L(nu) = survival_transform(nu) / q_hat`.
    pub fn weighted_harmonic(&self, nu: f64) -> Complex64 {
        match *self {
            Self::Poisson { gamma } => Complex64::new(gamma, 0.0) / Complex64::new(gamma, nu),
            Self::ChoppedExponential { .. } => self.survival_transform(nu) / self.mean(),
        }
    }

    /// Upper limit of integration for the quadrature route.
    pub fn quadrature_horizon(&self) -> f64 {
        match *self {
            Self::Poisson { gamma } => POISSON_QUADRATURE_HORIZON / gamma,
            Self::ChoppedExponential { t_max, .. } => t_max,
        }
    }

    /// Inverse-CDF map from `u` in `[0, 1)` to a waiting time.
    pub fn sample_from_uniform(&self, u: f64) -> f64 {
        match *self {
            Self::Poisson { gamma } => -(-u).ln_1p() / gamma,
            Self::ChoppedExponential { gamma, t_max } => {
                let t = -(-u * Self::chopped_mass(gamma, t_max)).ln_1p() / gamma;
                if t < t_max {
                    t
                } else {
                    t_max.next_down()
                }
            }
        }
    }
}

/// Draws one waiting time.
pub fn sample_waiting_time<R: Rng + ?Sized>(dist: &WaitingTime, rng: &mut R) -> f64 {
    dist.sample_from_uniform(rng.random::<f64>())
}

pub fn survival_probability(dist: &WaitingTime, t: f64) -> Result<f64> {
    check_time(t)?;
    Ok(dist.survival(t))
}

/// Survival-weighted time average `(1/q_hat) int q(t) f(t) dt` of a
/// trigonometric trajectory, evaluated harmonic by harmonic.
pub fn exp_weighted_average<T: Coefficient>(dist: &WaitingTime, f: &TrigSeries<T>) -> T {
    f.transform(|nu| dist.weighted_harmonic(nu))
}

/// Quadrature route for [`exp_weighted_average`]. `max_frequency` bounds
/// the angular frequencies present in `f` and sets the initial panel count.
/// The normalization `q_hat` is integrated numerically as well.
pub fn exp_weighted_average_quadrature<T, F>(
    dist: &WaitingTime,
    f: F,
    max_frequency: f64,
    opts: QuadOptions,
) -> Result<T>
where
    T: Coefficient,
    F: Fn(f64) -> T,
{
    let end = dist.quadrature_horizon();
    let panels = initial_panels(end, max_frequency, dist.gamma());
    let weighted = integrate(
        |t| {
            let mut v = f(t);
            let q = dist.survival(t);
            let z = v.zero_like();
            let raw = std::mem::replace(&mut v, z);
            v.add_scaled(&raw, Complex64::new(q, 0.0));
            v
        },
        0.0,
        end,
        panels,
        opts,
    )?;
    let q_hat = integrate_real(|t| dist.survival(t), 0.0, end, panels, opts)?;
    let mut out = weighted.zero_like();
    out.add_scaled(&weighted, Complex64::new(1.0 / q_hat, 0.0));
    Ok(out)
}

fn initial_panels(end: f64, max_frequency: f64, gamma: f64) -> usize {
    let cycles = end * max_frequency.max(gamma) / std::f64::consts::PI;
    (cycles.ceil() as usize).clamp(4, 4000)
}

/// Convenience quadrature route for a series, evaluated pointwise.
pub fn exp_weighted_average_series_quadrature<T: Coefficient>(
    dist: &WaitingTime,
    f: &TrigSeries<T>,
    opts: QuadOptions,
) -> Result<T> {
    let max_frequency = f.frequencies().fold(0.0f64, |a, b| a.max(b.abs()));
    exp_weighted_average_quadrature(dist, |t| f.eval(t), max_frequency, opts)
}

/// Last-renewal state at time `t` under Poisson resetting:
/// `exp(-gamma t) f(t) + gamma int_0^t exp(-gamma s) f(s) ds`.
pub fn renewal_series_at_time<T: Coefficient>(gamma: f64, f: &TrigSeries<T>, t: f64) -> T {
    let decay = (-gamma * t).exp();
    f.transform(|nu| {
        let s = Complex64::new(gamma, nu);
        let phase = if nu == 0.0 {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::from_polar(1.0, -nu * t)
        };
        let partial = if t == 0.0 {
            Complex64::new(0.0, 0.0)
        } else {
            gamma * (1.0 - phase * decay) / s
        };
        phase * decay + partial
    })
}

/// Single-spin Protocol I state at time `t`, starting from `|up>`.
pub fn renewal_state_at_time(params: DriveParams, gamma: f64, t: f64) -> Result<QubitState> {
    check_positive("gamma", gamma)?;
    check_time(t)?;
    let series = free_qubit_series(params, &QubitState::up());
    Ok(QubitState::from_hermitian_unchecked(
        renewal_series_at_time(gamma, &series, t),
    ))
}

/// Two-spin Protocol I state at time `t`, starting from `|up up>`.
pub fn renewal_pair_state_at_time(
    params: DriveParams,
    gamma: f64,
    t: f64,
) -> Result<TwoQubitState> {
    check_positive("gamma", gamma)?;
    check_time(t)?;
    let series = free_pair_series(params, Spin::Up, Spin::Up);
    Ok(TwoQubitState::from_hermitian_unchecked(
        renewal_series_at_time(gamma, &series, t),
    ))
}

/// Protocol I excitation density at time `t`.
pub fn renewal_density_at_time(params: DriveParams, gamma: f64, t: f64) -> Result<f64> {
    check_positive("gamma", gamma)?;
    check_time(t)?;
    Ok(renewal_series_at_time(gamma, &free_density_series(params), t).re)
}

/// Reset bookkeeping for the two-state conditional protocol: reset
/// probabilities `R_ij` and the resulting mixture weights.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResetWeights {
    pub c_up: f64,
    pub c_down: f64,
    pub r_up_down: f64,
    pub r_down_up: f64,
    pub r_up_up: f64,
    pub r_down_down: f64,
    /// Both cross rates vanish; `c_up = 1` is a convention, not a ratio.
    pub degenerate: bool,
    /// Thermodynamic limit evaluated exactly at `Omega = Delta`.
    pub critical_boundary: bool,
}

impl ResetWeights {
    fn from_rates(r_ud: f64, r_du: f64, critical_boundary: bool) -> Self {
        let r_ud = r_ud.clamp(0.0, 1.0);
        let r_du = r_du.clamp(0.0, 1.0);
        let total = r_ud + r_du;
        let degenerate = total <= 0.0;
        let (c_up, c_down) = if degenerate {
            (1.0, 0.0)
        } else {
            (r_du / total, r_ud / total)
        };
        Self {
            c_up,
            c_down,
            r_up_down: r_ud,
            r_down_up: r_du,
            r_up_up: 1.0 - r_ud,
            r_down_down: 1.0 - r_du,
            degenerate,
            critical_boundary,
        }
    }

    /// Weights of a protocol that always resets to `|up>`.
    pub fn always_up() -> Self {
        Self {
            c_up: 1.0,
            c_down: 0.0,
            r_up_down: 0.0,
            r_down_up: 1.0,
            r_up_up: 1.0,
            r_down_down: 0.0,
            degenerate: false,
            critical_boundary: false,
        }
    }
}

/// Sum over the periodic windows `[k tau + lo, k tau + hi]` of
/// `int f(t) dt` for the waiting-time density, given the per-period
/// integral `window(gamma)` of `gamma exp(-gamma s)` over `[lo, hi]`.
fn periodic_exponential_sum(dist: &WaitingTime, tau: f64, lo: f64, hi: f64, window: f64) -> f64 {
    let gamma = dist.gamma();
    let ratio = (-gamma * tau).exp();
    match *dist {
        WaitingTime::Poisson { .. } => window / (1.0 - ratio),
        WaitingTime::ChoppedExponential { t_max, .. } => {
            // Windows fully below t_max form a geometric series.
            let full = if t_max >= hi {
                ((t_max - hi) / tau).floor() + 1.0
            } else {
                0.0
            };
            let mut total = if full > 0.0 {
                window * -(-gamma * tau * full).exp_m1() / (1.0 - ratio)
            } else {
                0.0
            };
            let start = full * tau + lo;
            if start < t_max {
                let end = (full * tau + hi).min(t_max);
                total += (-gamma * start).exp() - (-gamma * end).exp();
            }
            total / -(-gamma * t_max).exp_m1()
        }
    }
}

/// Probability `R_{up->down}` that a reset occurs while the measured density
/// is below 1/2, starting from `|up>`; by the up/down symmetry of the free
/// dynamics the same value is `R_{down->up}`.
fn cross_rate(params: DriveParams, dist: &WaitingTime, n_spins: NSpins) -> Result<(f64, bool)> {
    let w = params.effective_rabi();
    let amplitude = params.flip_amplitude();
    let gamma = dist.gamma();
    match n_spins {
        NSpins::Thermodynamic => {
            let boundary = params.omega() == params.delta();
            if amplitude <= 0.5 || w == 0.0 {
                return Ok((0.0, boundary));
            }
            // p(t) > 1/2  <=>  sin^2(w t) > 1/(2 A)
            let a = (0.5 / amplitude).sqrt().min(1.0).asin();
            let tau = std::f64::consts::PI / w;
            let lo = a / w;
            let hi = (std::f64::consts::PI - a) / w;
            let window = (-gamma * lo).exp() - (-gamma * hi).exp();
            Ok((
                periodic_exponential_sum(dist, tau, lo, hi, window),
                boundary,
            ))
        }
        NSpins::Finite(n) => {
            if w == 0.0 || amplitude == 0.0 {
                return Ok((0.0, false));
            }
            let tail = BinomialTail::new(n.get())?;
            let tau = std::f64::consts::PI / w;
            let opts = QuadOptions {
                abs_tol: 1e-14,
                rel_tol: 1e-11,
                max_segments: 50_000,
            };
            let window = integrate_real(
                |s| {
                    gamma
                        * (-gamma * s).exp()
                        * tail.below_half(flip_probability_unchecked(params, s))
                },
                0.0,
                tau,
                16,
                opts,
            )?;
            let total = match *dist {
                WaitingTime::Poisson { .. } => window / -(-gamma * tau).exp_m1(),
                WaitingTime::ChoppedExponential { t_max, .. } => {
                    let full = (t_max / tau).floor();
                    let geometric =
                        window * -(-gamma * tau * full).exp_m1() / -(-gamma * tau).exp_m1();
                    let start = full * tau;
                    let partial = if t_max > start {
                        integrate_real(
                            |s| {
                                gamma
                                    * (-gamma * s).exp()
                                    * tail.below_half(flip_probability_unchecked(params, s))
                            },
                            start,
                            t_max,
                            16,
                            opts,
                        )?
                    } else {
                        0.0
                    };
                    (geometric + partial) / -(-gamma * t_max).exp_m1()
                }
            };
            Ok((total, false))
        }
    }
}

/// Reset probabilities and mixture weights for the two-state conditional
/// protocol.
pub fn reset_rates(
    params: DriveParams,
    dist: &WaitingTime,
    n_spins: NSpins,
) -> Result<ResetWeights> {
    let (r, boundary) = cross_rate(params, dist, n_spins)?;
    Ok(ResetWeights::from_rates(r, r, boundary))
}

/// Stationary single- and two-spin states with the scalar density.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StationaryState {
    pub qubit: QubitState,
    pub pair: TwoQubitState,
    pub density: f64,
    pub weights: ResetWeights,
}

fn average_qubit(dist: &WaitingTime, params: DriveParams, spin: Spin) -> Mat2 {
    exp_weighted_average(dist, &free_qubit_series(params, &QubitState::basis(spin)))
}

fn average_pair(dist: &WaitingTime, params: DriveParams, spin: Spin) -> Mat4 {
    exp_weighted_average(dist, &free_pair_series(params, spin, spin))
}

fn mixture_state(
    params: DriveParams,
    dist: &WaitingTime,
    weights: ResetWeights,
) -> StationaryState {
    let mut qubit = average_qubit(dist, params, Spin::Up) * Complex64::new(weights.c_up, 0.0);
    let mut pair = average_pair(dist, params, Spin::Up) * Complex64::new(weights.c_up, 0.0);
    if weights.c_down > 0.0 {
        qubit += average_qubit(dist, params, Spin::Down) * Complex64::new(weights.c_down, 0.0);
        pair += average_pair(dist, params, Spin::Down) * Complex64::new(weights.c_down, 0.0);
    }
    let qubit = QubitState::from_hermitian_unchecked(qubit);
    let density = qubit.matrix()[(0, 0)].re;
    StationaryState {
        qubit,
        pair: TwoQubitState::from_hermitian_unchecked(pair),
        density,
        weights,
    }
}

/// Stationary state of the unconditional protocol (always reset to `|up>`).
pub fn stationary_state_p1(params: DriveParams, dist: &WaitingTime) -> StationaryState {
    mixture_state(params, dist, ResetWeights::always_up())
}

/// Stationary state of the two-state conditional protocol.
pub fn stationary_state_p2(
    params: DriveParams,
    dist: &WaitingTime,
    n_spins: NSpins,
) -> Result<StationaryState> {
    let weights = reset_rates(params, dist, n_spins)?;
    Ok(mixture_state(params, dist, weights))
}

/// Closed-form Protocol I stationary density under Poisson resetting,
/// `1 - 2 Omega^2 / (gamma^2 + 4 w^2)`.
pub fn poisson_density_closed_form(params: DriveParams, gamma: f64) -> f64 {
    let w2 = params.effective_rabi().powi(2);
    1.0 - 2.0 * params.omega().powi(2) / (gamma * gamma + 4.0 * w2)
}

/// Closed-form Protocol I stationary density under chopped-exponential
/// resetting.
pub fn chopped_density_closed_form(params: DriveParams, gamma: f64, t_max: f64) -> f64 {
    let w = params.effective_rabi();
    let o2 = params.omega().powi(2);
    if o2 == 0.0 {
        return 1.0;
    }
    let w2 = w * w;
    let gt = gamma * t_max;
    // e^{gT} - 1 - gT, accurate for small gT
    let denom = gt.exp_m1() - gt;
    let (s, c) = (w * t_max).sin_cos();
    let bracket = 2.0 * s * s - gamma / w * s * c + gt;
    let brace = 4.0 * w2 - gamma * gamma / denom * bracket;
    1.0 - o2 / (2.0 * w2 * (gamma * gamma + 4.0 * w2)) * brace
}

/// Closed-form Protocol I stationary density for either waiting-time law.
pub fn stationary_density_closed_form(params: DriveParams, dist: &WaitingTime) -> f64 {
    match *dist {
        WaitingTime::Poisson { gamma } => poisson_density_closed_form(params, gamma),
        WaitingTime::ChoppedExponential { gamma, t_max } => {
            chopped_density_closed_form(params, gamma, t_max)
        }
    }
}
