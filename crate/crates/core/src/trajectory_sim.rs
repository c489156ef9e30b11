//! Monte Carlo ensembles of reset trajectories.
//!
//! Between resets every observable is evaluated from closed forms in the
//! time since the last reset, so the only stochastic elements are the
//! waiting times and, at finite `N`, the measured spin counts.
//!
//! A trajectory is described by its reset-origin configuration: the scalar
//! density `n0` in the thermodynamic limit, the integer count `N0` of spins
//! that restarted from `|up>` at finite `N`.

use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_unit_interval, Error, Result};
use crate::finite_size::NSpins;
use crate::observables::lqu;
use crate::renewal::WaitingTime;
use crate::spin_dynamics::{
    flip_probability_unchecked, pair_matrix_from_weights, DriveParams, Mat4, PairWeights,
    TwoQubitState,
};
use crate::trig::Coefficient;

/// Trajectories per work unit. Units are accumulated sequentially.
pub const UNIT_SIZE: u64 = 256;

/// Contiguous trajectory groups used for jackknife errors.
pub const JACKKNIFE_GROUPS: u64 = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProtocolKind {
    /// Always reset to all spins up.
    UnconditionalReset,
    /// Reset to all up if the measured density exceeds 1/2, else all down.
    ConditionalTwoState,
    /// Reset to all up if the measured density exceeds 1/2, else flip every
    /// spin of the post-measurement configuration.
    ConditionalFlip,
}

impl ProtocolKind {
    pub fn from_number(n: u8) -> Option<Self> {
        match n {
            1 => Some(Self::UnconditionalReset),
            2 => Some(Self::ConditionalTwoState),
            3 => Some(Self::ConditionalFlip),
            _ => None,
        }
    }

    pub fn number(self) -> u8 {
        match self {
            Self::UnconditionalReset => 1,
            Self::ConditionalTwoState => 2,
            Self::ConditionalFlip => 3,
        }
    }
}

impl std::fmt::Display for ProtocolKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let roman = ["I", "II", "III"];
        write!(f, "{}", roman[self.number() as usize - 1])
    }
}

fn default_true() -> bool {
    true
}

/// Description of a Monte Carlo campaign.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub protocol: ProtocolKind,
    pub params: DriveParams,
    pub dist: WaitingTime,
    pub n_spins: NSpins,
    pub observation_time: f64,
    pub n_trajectories: u64,
    pub seed: u64,
    pub sample_grid: Vec<f64>,
    /// Abort with [`Error::ResourceLimit`] if any trajectory needs more resets.
    #[serde(default)]
    pub max_resets_per_trajectory: Option<u64>,
    /// Accumulate the mean two-spin density matrix and its LQU.
    #[serde(default = "default_true")]
    pub record_pair_state: bool,
}

impl SimConfig {
    /// Config sampling only at the observation time.
    pub fn new(
        protocol: ProtocolKind,
        params: DriveParams,
        dist: WaitingTime,
        n_spins: NSpins,
        observation_time: f64,
        n_trajectories: u64,
        seed: u64,
    ) -> Self {
        Self {
            protocol,
            params,
            dist,
            n_spins,
            observation_time,
            n_trajectories,
            seed,
            sample_grid: vec![observation_time],
            max_resets_per_trajectory: None,
            record_pair_state: true,
        }
    }

    /// Replaces the sample grid with `points` evenly spaced times on `[0, T]`.
    pub fn with_uniform_grid(mut self, points: usize) -> Self {
        self.sample_grid = uniform_grid(self.observation_time, points);
        self
    }

    pub fn validate(&self) -> Result<()> {
        let t = self.observation_time;
        if !(t.is_finite() && t > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "observation time must be positive and finite, got {t}"
            )));
        }
        if self.n_trajectories == 0 {
            return Err(Error::InvalidConfig("need at least one trajectory".into()));
        }
        if self.sample_grid.is_empty() {
            return Err(Error::InvalidConfig("sample grid is empty".into()));
        }
        for (k, &g) in self.sample_grid.iter().enumerate() {
            if !(0.0..=t).contains(&g) {
                return Err(Error::InvalidConfig(format!(
                    "grid time {g} lies outside [0, {t}]"
                )));
            }
            if k > 0 && g < self.sample_grid[k - 1] {
                return Err(Error::InvalidConfig("sample grid must be sorted".into()));
            }
        }
        if let NSpins::Finite(n) = self.n_spins {
            if n.get() < 3 {
                return Err(Error::InvalidConfig(
                    "finite ensembles need at least 3 spins for pair observables".into(),
                ));
            }
        }
        Ok(())
    }

    /// Finite-`N` conditional-flip runs use a post-measurement model that
    /// goes beyond the thermodynamic-limit description.
    pub fn is_finite_flip_extension(&self) -> bool {
        self.protocol == ProtocolKind::ConditionalFlip && !self.n_spins.is_thermodynamic()
    }
}

/// `points` evenly spaced times on `[0, t]` (a single point gives `[t]`).
pub fn uniform_grid(t: f64, points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![t],
        _ => (0..points)
            .map(|k| {
                if k + 1 == points {
                    t
                } else {
                    t * k as f64 / (points - 1) as f64
                }
            })
            .collect(),
    }
}

/// Reset-origin configuration of one trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryState {
    /// Fraction of spins that restarted from `|up>` at the last reset.
    pub n0: f64,
    pub last_reset: f64,
    /// Integer count behind `n0` at finite `N`.
    pub n_up: Option<u64>,
}

impl TrajectoryState {
    pub fn initial(n_spins: NSpins) -> Self {
        Self {
            n0: 1.0,
            last_reset: 0.0,
            n_up: n_spins.count(),
        }
    }

    /// Pair-origin weights implied by the current configuration.
    pub fn pair_weights(&self, n_spins: NSpins) -> PairWeights {
        match (n_spins, self.n_up) {
            (NSpins::Finite(n), Some(k)) => {
                PairWeights::finite(n.get(), k).expect("count within ensemble")
            }
            _ => PairWeights::thermodynamic_unchecked(self.n0),
        }
    }
}

/// Measured density at a reset.
///
/// In the thermodynamic limit the measurement is deterministic and equals
/// the mean `n0 (1 - p) + (1 - n0) p`. At finite `N` the `round(n0 N)` spins
/// that started up stay up with probability `1 - p` and the others end up
/// with probability `p`.
pub fn measurement_outcome<R: Rng + ?Sized>(
    _protocol: ProtocolKind,
    n_spins: NSpins,
    p: f64,
    n0: f64,
    rng: &mut R,
) -> Result<f64> {
    check_unit_interval("p", p)?;
    check_unit_interval("n0", n0)?;
    Ok(match n_spins {
        NSpins::Thermodynamic => n0 * (1.0 - p) + (1.0 - n0) * p,
        NSpins::Finite(n) => {
            let n = n.get();
            let n_up = (n0 * n as f64).round() as u64;
            measured_count(n, n_up, p, rng) as f64 / n as f64
        }
    })
}

fn measured_count<R: Rng + ?Sized>(n: u64, n_up: u64, p: f64, rng: &mut R) -> u64 {
    let stay = if n_up > 0 {
        Binomial::new(n_up, 1.0 - p)
            .expect("valid binomial")
            .sample(rng)
    } else {
        0
    };
    let rise = if n > n_up {
        Binomial::new(n - n_up, p)
            .expect("valid binomial")
            .sample(rng)
    } else {
        0
    };
    stay + rise
}

/// New origin density after a measurement with outcome `n_hat`.
pub fn apply_reset_rule(protocol: ProtocolKind, n_hat: f64) -> Result<f64> {
    check_unit_interval("n_hat", n_hat)?;
    Ok(match protocol {
        ProtocolKind::UnconditionalReset => 1.0,
        ProtocolKind::ConditionalTwoState => {
            if n_hat > 0.5 {
                1.0
            } else {
                0.0
            }
        }
        ProtocolKind::ConditionalFlip => {
            if n_hat > 0.5 {
                1.0
            } else {
                1.0 - n_hat
            }
        }
    })
}

/// Integer version of [`apply_reset_rule`] for `count` up spins out of `n`.
pub fn apply_reset_rule_count(protocol: ProtocolKind, n: u64, count: u64) -> u64 {
    let majority = 2 * count > n;
    match protocol {
        ProtocolKind::UnconditionalReset => n,
        ProtocolKind::ConditionalTwoState => {
            if majority {
                n
            } else {
                0
            }
        }
        ProtocolKind::ConditionalFlip => {
            if majority {
                n
            } else {
                n - count
            }
        }
    }
}

/// Observables of one trajectory at one grid time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub time: f64,
    pub since_reset: f64,
    pub n0: f64,
    pub density: f64,
    pub two_point: f64,
    pub pair: Option<Mat4>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResetEvent {
    pub time: f64,
    pub measured: f64,
    pub n0_after: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub samples: Vec<Sample>,
    pub resets: Vec<ResetEvent>,
}

fn sample_at(config: &SimConfig, state: &TrajectoryState, time: f64) -> Sample {
    let tau = time - state.last_reset;
    let p = flip_probability_unchecked(config.params, tau);
    let n0 = state.n0;
    let weights = state.pair_weights(config.n_spins);
    let up = 1.0 - p;
    let two_point = weights.up_up * up * up
        + (weights.up_down + weights.down_up) * up * p
        + weights.down_down * p * p;
    Sample {
        time,
        since_reset: tau,
        n0,
        density: n0 * up + (1.0 - n0) * p,
        two_point,
        pair: config
            .record_pair_state
            .then(|| pair_matrix_from_weights(config.params, tau, &weights)),
    }
}

fn simulate<R, S, E>(
    config: &SimConfig,
    rng: &mut R,
    mut on_sample: S,
    mut on_reset: E,
) -> Result<u64>
where
    R: Rng + ?Sized,
    S: FnMut(usize, &Sample),
    E: FnMut(&ResetEvent),
{
    let mut state = TrajectoryState::initial(config.n_spins);
    let mut next_reset = config.dist.sample_from_uniform(rng.random::<f64>());
    let mut resets = 0u64;
    for (k, &g) in config.sample_grid.iter().enumerate() {
        // A reset coinciding with a grid time happens after the sample.
        while next_reset < g {
            let tau = next_reset - state.last_reset;
            let p = flip_probability_unchecked(config.params, tau);
            let measured = match (config.n_spins, state.n_up) {
                (NSpins::Finite(n), Some(n_up)) => {
                    let n = n.get();
                    let count = measured_count(n, n_up, p, rng);
                    let after = apply_reset_rule_count(config.protocol, n, count);
                    state.n_up = Some(after);
                    state.n0 = after as f64 / n as f64;
                    count as f64 / n as f64
                }
                _ => {
                    let measured = state.n0 * (1.0 - p) + (1.0 - state.n0) * p;
                    state.n0 = apply_reset_rule(config.protocol, measured.clamp(0.0, 1.0))?;
                    measured
                }
            };
            state.last_reset = next_reset;
            on_reset(&ResetEvent {
                time: next_reset,
                measured,
                n0_after: state.n0,
            });
            resets += 1;
            if let Some(limit) = config.max_resets_per_trajectory {
                if resets > limit {
                    return Err(Error::ResourceLimit(format!(
                        "trajectory exceeded {limit} resets before t = {g}"
                    )));
                }
            }
            next_reset += config.dist.sample_from_uniform(rng.random::<f64>());
        }
        on_sample(k, &sample_at(config, &state, g));
    }
    Ok(resets)
}

/// Runs one trajectory and records every sample and reset.
pub fn run_trajectory<R: Rng + ?Sized>(config: &SimConfig, rng: &mut R) -> Result<Trajectory> {
    config.validate()?;
    let mut samples = Vec::with_capacity(config.sample_grid.len());
    let mut resets = Vec::new();
    simulate(config, rng, |_, s| samples.push(*s), |e| resets.push(*e))?;
    Ok(Trajectory { samples, resets })
}

/// Random stream of trajectory `index` under master `seed`.
pub fn trajectory_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

#[derive(Debug, Clone)]
struct PointAccumulator {
    density: f64,
    density_sq: f64,
    two_point: f64,
    two_point_sq: f64,
    cross: f64,
    below_half: u64,
    pair: Mat4,
}

impl PointAccumulator {
    fn new() -> Self {
        Self {
            density: 0.0,
            density_sq: 0.0,
            two_point: 0.0,
            two_point_sq: 0.0,
            cross: 0.0,
            below_half: 0,
            pair: Mat4::zeros(),
        }
    }

    fn push(&mut self, s: &Sample) {
        self.density += s.density;
        self.density_sq += s.density * s.density;
        self.two_point += s.two_point;
        self.two_point_sq += s.two_point * s.two_point;
        self.cross += s.density * s.two_point;
        if s.density < 0.5 {
            self.below_half += 1;
        }
        if let Some(m) = &s.pair {
            self.pair += m;
        }
    }

    fn merge(&mut self, other: &Self) {
        self.density += other.density;
        self.density_sq += other.density_sq;
        self.two_point += other.two_point;
        self.two_point_sq += other.two_point_sq;
        self.cross += other.cross;
        self.below_half += other.below_half;
        self.pair += other.pair;
    }
}

#[derive(Debug, Clone)]
struct Accumulator {
    count: u64,
    resets: u64,
    points: Vec<PointAccumulator>,
}

impl Accumulator {
    fn new(points: usize) -> Self {
        Self {
            count: 0,
            resets: 0,
            points: vec![PointAccumulator::new(); points],
        }
    }

    fn merge(mut self, other: &Self) -> Self {
        self.count += other.count;
        self.resets += other.resets;
        for (a, b) in self.points.iter_mut().zip(&other.points) {
            a.merge(b);
        }
        self
    }
}

/// Combines accumulators with a balanced binary tree in index order, so
/// the floating-point result depends only on the number of items.
fn pairwise_merge(items: &[Accumulator]) -> Accumulator {
    match items.len() {
        0 => unreachable!("merging an empty range"),
        1 => items[0].clone(),
        n => {
            let (l, r) = items.split_at(n / 2);
            pairwise_merge(l).merge(&pairwise_merge(r))
        }
    }
}

/// Ensemble averages at one grid time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub time: f64,
    pub density: f64,
    pub density_stderr: f64,
    pub two_point: f64,
    pub two_point_stderr: f64,
    pub correlation: f64,
    pub correlation_stderr: f64,
    /// Fraction of trajectories with instantaneous density below 1/2.
    pub below_half_fraction: f64,
    pub pair_state: Option<TwoQubitState>,
    pub lqu: Option<f64>,
    pub lqu_stderr: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleStats {
    pub config: SimConfig,
    pub points: Vec<GridPoint>,
    pub n_trajectories: u64,
    pub total_resets: u64,
    pub wall_time_seconds: f64,
    pub finite_flip_extension: bool,
}

impl EnsembleStats {
    pub fn final_point(&self) -> &GridPoint {
        self.points.last().expect("grid is non-empty")
    }

    /// Compares mean densities over the last two windows of the grid.
    pub fn stationarity(&self) -> Option<StationarityDiagnostic> {
        stationarity_diagnostic(&self.points)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StationarityDiagnostic {
    pub window_len: usize,
    pub earlier_mean: f64,
    pub later_mean: f64,
    pub difference: f64,
    pub stderr: f64,
    /// `|difference| <= 3 stderr`.
    pub consistent: bool,
}

/// Splits the trailing half of the grid into two equal windows and compares
/// their average densities. Standard errors treat grid points as
/// independent, so the diagnostic is conservative only for well-separated
/// grid times.
pub fn stationarity_diagnostic(points: &[GridPoint]) -> Option<StationarityDiagnostic> {
    let window_len = points.len() / 4;
    if window_len == 0 {
        return None;
    }
    let n = points.len();
    let later = &points[n - window_len..];
    let earlier = &points[n - 2 * window_len..n - window_len];
    let mean = |w: &[GridPoint]| w.iter().map(|p| p.density).sum::<f64>() / w.len() as f64;
    let var = |w: &[GridPoint]| {
        w.iter().map(|p| p.density_stderr.powi(2)).sum::<f64>() / (w.len() as f64).powi(2)
    };
    let (a, b) = (mean(earlier), mean(later));
    let stderr = (var(earlier) + var(later)).sqrt();
    let difference = b - a;
    Some(StationarityDiagnostic {
        window_len,
        earlier_mean: a,
        later_mean: b,
        difference,
        stderr,
        consistent: difference.abs() <= 3.0 * stderr,
    })
}

fn run_unit(config: &SimConfig, start: u64, end: u64) -> Result<Accumulator> {
    let mut acc = Accumulator::new(config.sample_grid.len());
    for index in start..end {
        let mut rng = trajectory_rng(config.seed, index);
        let points = &mut acc.points;
        acc.resets += simulate(config, &mut rng, |k, s| points[k].push(s), |_| {})?;
        acc.count += 1;
    }
    Ok(acc)
}

fn group_bounds(n: u64, groups: u64) -> Vec<(u64, u64)> {
    (0..groups)
        .map(|g| (g * n / groups, (g + 1) * n / groups))
        .filter(|(a, b)| b > a)
        .collect()
}

fn sample_stderr(sum: f64, sum_sq: f64, n: f64) -> f64 {
    if n < 2.0 {
        return f64::NAN;
    }
    let mean = sum / n;
    let var = ((sum_sq - n * mean * mean) / (n - 1.0)).max(0.0);
    (var / n).sqrt()
}

fn mean_pair(pair: &Mat4, n: u64) -> Mat4 {
    pair * Complex64::new(1.0 / n as f64, 0.0)
}

/// Averages `n_trajectories` independent trajectories.
///
/// Trajectory `i` draws from [`trajectory_rng`]`(seed, i)`. Trajectories are
/// split into [`JACKKNIFE_GROUPS`] contiguous groups and each group into
/// units of at most [`UNIT_SIZE`]. Units run in parallel and are merged in a
/// fixed tree, so results are bit-identical for any thread count.
pub fn run_ensemble(config: &SimConfig) -> Result<EnsembleStats> {
    config.validate()?;
    let started = Instant::now();
    let n = config.n_trajectories;
    let groups = group_bounds(n, JACKKNIFE_GROUPS.min(n));
    let mut units = Vec::new();
    for (g, &(a, b)) in groups.iter().enumerate() {
        let mut s = a;
        while s < b {
            let e = (s + UNIT_SIZE).min(b);
            units.push((g, s, e));
            s = e;
        }
    }
    let results: Vec<Accumulator> = units
        .par_iter()
        .map(|&(_, s, e)| run_unit(config, s, e))
        .collect::<Result<Vec<_>>>()?;
    let mut group_accs = Vec::with_capacity(groups.len());
    let mut offset = 0;
    for g in 0..groups.len() {
        let len = units[offset..].iter().take_while(|u| u.0 == g).count();
        group_accs.push(pairwise_merge(&results[offset..offset + len]));
        offset += len;
    }
    let total = pairwise_merge(&group_accs);
    let nf = total.count as f64;

    let mut points = Vec::with_capacity(config.sample_grid.len());
    for (k, &time) in config.sample_grid.iter().enumerate() {
        let acc = &total.points[k];
        let d = acc.density / nf;
        let x = acc.two_point / nf;
        let correlation = x - d * d;
        let correlation_stderr = if nf < 2.0 {
            f64::NAN
        } else {
            let var_d = ((acc.density_sq - nf * d * d) / (nf - 1.0)).max(0.0);
            let var_x = ((acc.two_point_sq - nf * x * x) / (nf - 1.0)).max(0.0);
            let cov = (acc.cross - nf * d * x) / (nf - 1.0);
            ((var_x - 4.0 * d * cov + 4.0 * d * d * var_d).max(0.0) / nf).sqrt()
        };
        let (pair_state, lqu_value, lqu_stderr) = if config.record_pair_state {
            let state = TwoQubitState::new(mean_pair(&acc.pair, total.count))?;
            let value = lqu(&state)?.value;
            let stderr = jackknife_lqu(&total, &group_accs, k)?;
            (Some(state), Some(value), Some(stderr))
        } else {
            (None, None, None)
        };
        points.push(GridPoint {
            time,
            density: d,
            density_stderr: sample_stderr(acc.density, acc.density_sq, nf),
            two_point: x,
            two_point_stderr: sample_stderr(acc.two_point, acc.two_point_sq, nf),
            correlation,
            correlation_stderr,
            below_half_fraction: acc.below_half as f64 / nf,
            pair_state,
            lqu: lqu_value,
            lqu_stderr,
        });
    }
    Ok(EnsembleStats {
        config: config.clone(),
        points,
        n_trajectories: total.count,
        total_resets: total.resets,
        wall_time_seconds: started.elapsed().as_secs_f64(),
        finite_flip_extension: config.is_finite_flip_extension(),
    })
}

fn jackknife_lqu(total: &Accumulator, groups: &[Accumulator], k: usize) -> Result<f64> {
    let g = groups.len();
    if g < 2 {
        return Ok(f64::NAN);
    }
    let mut values = Vec::with_capacity(g);
    for group in groups {
        let mut rest = total.points[k].pair;
        rest.add_scaled(&group.points[k].pair, Complex64::new(-1.0, 0.0));
        let n_rest = total.count - group.count;
        let state = TwoQubitState::from_hermitian_unchecked(mean_pair(&rest, n_rest));
        values.push(lqu(&state)?.value);
    }
    let mean = values.iter().sum::<f64>() / g as f64;
    let ss: f64 = values.iter().map(|v| (v - mean).powi(2)).sum();
    Ok(((g as f64 - 1.0) / g as f64 * ss).sqrt())
}
