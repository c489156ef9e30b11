//! Coherent, reset-free evolution of one and two non-interacting spins
//! under `H = Omega sigma^x + Delta sigma^z`.
//!
//! Basis convention: index 0 is `|up>` (the `sigma^z = +1` eigenstate, the
//! excited state with `n = 1`), index 1 is `|down>`. Two-spin matrices use
//! the Kronecker ordering `|a b>` -> `2a + b` with spin `j` in the first
//! slot.
//!
//! The propagator is the closed-form rotation
//! `U(t) = cos(w t) 1 - i sin(w t) (Omega sigma^x + Delta sigma^z) / w`
//! with `w = sqrt(Omega^2 + Delta^2)`. The sign of the rotation fixes the
//! sign of the Bloch `y` component; every exported scalar is insensitive to it.

use nalgebra::{Matrix2, Matrix4, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{check_finite, check_time, check_unit_interval, Error, Result};
use crate::trig::TrigSeries;

pub type Mat2 = Matrix2<Complex64>;
pub type Mat4 = Matrix4<Complex64>;

/// Absolute tolerance for Hermiticity, trace and positivity checks.
pub const STATE_TOLERANCE: f64 = 1e-10;

/// Bound on `x^2 + y^2 + z^2 - 1` accepted for a Bloch vector.
pub const BLOCH_TOLERANCE: f64 = 1e-10;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

#[inline]
fn re(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

pub fn sigma_x() -> Mat2 {
    Mat2::new(ZERO, ONE, ONE, ZERO)
}

pub fn sigma_y() -> Mat2 {
    Mat2::new(ZERO, -I, I, ZERO)
}

pub fn sigma_z() -> Mat2 {
    Mat2::new(ONE, ZERO, ZERO, -ONE)
}

/// Single-spin excitation operator `n = (1 + sigma^z) / 2`.
pub fn number_operator() -> Mat2 {
    Mat2::new(ONE, ZERO, ZERO, ZERO)
}

/// Drive parameters in units where frequencies are angular frequencies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawDrive", into = "RawDrive")]
pub struct DriveParams {
    omega: f64,
    delta: f64,
}

#[derive(Serialize, Deserialize)]
struct RawDrive {
    omega: f64,
    delta: f64,
}

impl TryFrom<RawDrive> for DriveParams {
    type Error = Error;
    fn try_from(raw: RawDrive) -> Result<Self> {
        DriveParams::new(raw.omega, raw.delta)
    }
}

impl From<DriveParams> for RawDrive {
    fn from(p: DriveParams) -> Self {
        RawDrive {
            omega: p.omega,
            delta: p.delta,
        }
    }
}

impl DriveParams {
    pub fn new(omega: f64, delta: f64) -> Result<Self> {
        check_finite("omega", omega)?;
        check_finite("delta", delta)?;
        if omega < 0.0 {
            return Err(Error::InvalidParameter {
                name: "omega",
                value: omega,
                reason: "Rabi frequency must be non-negative",
            });
        }
        if delta < 0.0 {
            return Err(Error::InvalidParameter {
                name: "delta",
                value: delta,
                reason: "detuning must be non-negative",
            });
        }
        Ok(Self { omega, delta })
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// `sqrt(Omega^2 + Delta^2)`.
    pub fn effective_rabi(&self) -> f64 {
        self.omega.hypot(self.delta)
    }

    /// `Omega^2 / (Omega^2 + Delta^2)`, the largest single-spin flip
    /// probability; zero when the Hamiltonian vanishes.
    pub fn flip_amplitude(&self) -> f64 {
        let w2 = self.omega * self.omega + self.delta * self.delta;
        if w2 == 0.0 {
            0.0
        } else {
            self.omega * self.omega / w2
        }
    }

    fn axis(&self) -> (f64, f64) {
        let w = self.effective_rabi();
        if w == 0.0 {
            (0.0, 1.0)
        } else {
            (self.omega / w, self.delta / w)
        }
    }
}

/// Computational basis state of one spin.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Spin {
    Up,
    Down,
}

impl Spin {
    pub fn flipped(self) -> Self {
        match self {
            Spin::Up => Spin::Down,
            Spin::Down => Spin::Up,
        }
    }

    pub fn excitation(self) -> f64 {
        match self {
            Spin::Up => 1.0,
            Spin::Down => 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlochVector {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl BlochVector {
    pub fn new(x: f64, y: f64, z: f64) -> Result<Self> {
        let v = Self { x, y, z };
        let r2 = v.norm_squared();
        if !r2.is_finite() || r2 > 1.0 + BLOCH_TOLERANCE {
            return Err(Error::InvalidParameter {
                name: "bloch_norm_squared",
                value: r2,
                reason: "Bloch vector must lie inside the unit ball",
            });
        }
        Ok(v)
    }

    pub fn norm_squared(&self) -> f64 {
        self.x * self.x + self.y * self.y + self.z * self.z
    }

    pub fn is_pure(&self) -> bool {
        (self.norm_squared() - 1.0).abs() <= BLOCH_TOLERANCE
    }
}

fn hermiticity_deviation<const D: usize>(m: &nalgebra::SMatrix<Complex64, D, D>) -> f64 {
    let mut dev: f64 = 0.0;
    for r in 0..D {
        for c in 0..D {
            dev = dev.max((m[(r, c)] - m[(c, r)].conj()).norm());
        }
    }
    dev
}

macro_rules! density_matrix {
    ($name:ident, $mat:ty, $dim:expr) => {
        impl $name {
            /// Validates Hermiticity, unit trace and positivity to
            /// [`STATE_TOLERANCE`], then stores the Hermitian part.
            pub fn new(matrix: $mat) -> Result<Self> {
                let deviation = hermiticity_deviation(&matrix);
                if !(deviation <= STATE_TOLERANCE) {
                    return Err(Error::NotHermitian { deviation });
                }
                let h = (matrix + matrix.adjoint()) * Complex64::new(0.5, 0.0);
                let trace = h.trace().re;
                if !((trace - 1.0).abs() <= STATE_TOLERANCE) {
                    return Err(Error::BadTrace { trace });
                }
                let min = SymmetricEigen::new(h)
                    .eigenvalues
                    .iter()
                    .copied()
                    .fold(f64::INFINITY, f64::min);
                if min < -STATE_TOLERANCE {
                    return Err(Error::NegativeEigenvalue { eigenvalue: min });
                }
                Ok(Self(h))
            }

            /// Hermitian part of `matrix` without validation. Callers must
            /// guarantee it is a density matrix.
            pub(crate) fn from_hermitian_unchecked(matrix: $mat) -> Self {
                Self((matrix + matrix.adjoint()) * Complex64::new(0.5, 0.0))
            }

            pub fn matrix(&self) -> &$mat {
                &self.0
            }

            pub fn purity(&self) -> f64 {
                (self.0 * self.0).trace().re
            }

            pub fn maximally_mixed() -> Self {
                Self(<$mat>::identity() * Complex64::new(1.0 / $dim as f64, 0.0))
            }
        }
    };
}

/// Single-spin density matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QubitState(Mat2);

/// Two-spin density matrix (spin `j` in the first tensor slot).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoQubitState(Mat4);

density_matrix!(QubitState, Mat2, 2);
density_matrix!(TwoQubitState, Mat4, 4);

/// Row-major real and imaginary parts, the serialized form of a state.
#[derive(Serialize, Deserialize)]
struct RawDensity {
    re: Vec<Vec<f64>>,
    im: Vec<Vec<f64>>,
}

macro_rules! density_serde {
    ($name:ident, $mat:ty, $dim:expr) => {
        impl Serialize for $name {
            fn serialize<S: serde::Serializer>(
                &self,
                serializer: S,
            ) -> std::result::Result<S::Ok, S::Error> {
                let rows = |f: fn(&Complex64) -> f64| {
                    (0..$dim)
                        .map(|r| (0..$dim).map(|c| f(&self.0[(r, c)])).collect())
                        .collect()
                };
                RawDensity {
                    re: rows(|z| z.re),
                    im: rows(|z| z.im),
                }
                .serialize(serializer)
            }
        }

        impl<'de> Deserialize<'de> for $name {
            fn deserialize<D: serde::Deserializer<'de>>(
                deserializer: D,
            ) -> std::result::Result<Self, D::Error> {
                use serde::de::Error as _;
                let raw = RawDensity::deserialize(deserializer)?;
                let shape_ok = raw.re.len() == $dim
                    && raw.im.len() == $dim
                    && raw.re.iter().chain(&raw.im).all(|row| row.len() == $dim);
                if !shape_ok {
                    return Err(D::Error::custom(concat!(
                        "expected ",
                        stringify!($dim),
                        "x",
                        stringify!($dim),
                        " matrix"
                    )));
                }
                let m = <$mat>::from_fn(|r, c| Complex64::new(raw.re[r][c], raw.im[r][c]));
                $name::new(m).map_err(D::Error::custom)
            }
        }
    };
}

density_serde!(QubitState, Mat2, 2);
density_serde!(TwoQubitState, Mat4, 4);

impl QubitState {
    pub fn basis(spin: Spin) -> Self {
        match spin {
            Spin::Up => Self(Mat2::new(ONE, ZERO, ZERO, ZERO)),
            Spin::Down => Self(Mat2::new(ZERO, ZERO, ZERO, ONE)),
        }
    }

    pub fn up() -> Self {
        Self::basis(Spin::Up)
    }

    pub fn down() -> Self {
        Self::basis(Spin::Down)
    }

    /// Diagonal mixture with excitation probability `n0`.
    pub fn diagonal(n0: f64) -> Result<Self> {
        check_unit_interval("n0", n0)?;
        Ok(Self(Mat2::new(
            Complex64::new(n0, 0.0),
            ZERO,
            ZERO,
            Complex64::new(1.0 - n0, 0.0),
        )))
    }

    pub fn from_bloch(v: BlochVector) -> Self {
        let half = Complex64::new(0.5, 0.0);
        let m =
            (Mat2::identity() + sigma_x() * re(v.x) + sigma_y() * re(v.y) + sigma_z() * re(v.z))
                * half;
        Self(m)
    }

    pub fn bloch(&self) -> BlochVector {
        let e = |op: Mat2| (self.0 * op).trace().re;
        BlochVector {
            x: e(sigma_x()),
            y: e(sigma_y()),
            z: e(sigma_z()),
        }
    }
}

pub fn kron2(a: &Mat2, b: &Mat2) -> Mat4 {
    a.kronecker(b)
}

impl TwoQubitState {
    pub fn product(a: &QubitState, b: &QubitState) -> Self {
        Self(kron2(&a.0, &b.0))
    }

    pub fn basis(a: Spin, b: Spin) -> Self {
        Self::product(&QubitState::basis(a), &QubitState::basis(b))
    }

    /// Reduced state of spin `j` (first slot).
    pub fn marginal_first(&self) -> QubitState {
        let m = &self.0;
        QubitState(Mat2::new(
            m[(0, 0)] + m[(1, 1)],
            m[(0, 2)] + m[(1, 3)],
            m[(2, 0)] + m[(3, 1)],
            m[(2, 2)] + m[(3, 3)],
        ))
    }

    /// Reduced state of spin `k` (second slot).
    pub fn marginal_second(&self) -> QubitState {
        let m = &self.0;
        QubitState(Mat2::new(
            m[(0, 0)] + m[(2, 2)],
            m[(0, 1)] + m[(2, 3)],
            m[(1, 0)] + m[(3, 2)],
            m[(1, 1)] + m[(3, 3)],
        ))
    }

    /// State with the two spins exchanged.
    pub fn swapped(&self) -> Self {
        let perm = [0usize, 2, 1, 3];
        let mut out = Mat4::zeros();
        for r in 0..4 {
            for c in 0..4 {
                out[(perm[r], perm[c])] = self.0[(r, c)];
            }
        }
        Self(out)
    }
}

fn check_params_time(t: f64) -> Result<f64> {
    check_time(t)
}

/// Probability that a spin prepared in a basis state is found flipped
/// after free evolution for `t`: `(Omega^2/w^2) sin^2(w t)`. The same
/// value holds for up->down and down->up.
pub fn flip_probability(params: DriveParams, t: f64) -> Result<f64> {
    check_params_time(t)?;
    Ok(flip_probability_unchecked(params, t))
}

#[inline]
pub(crate) fn flip_probability_unchecked(params: DriveParams, t: f64) -> f64 {
    let s = (params.effective_rabi() * t).sin();
    params.flip_amplitude() * s * s
}

/// `<n^F(t)>` for a product state in which a fraction `n0` of spins starts
/// up and the rest down.
pub fn free_excitation_density(params: DriveParams, t: f64, n0: f64) -> Result<f64> {
    check_params_time(t)?;
    check_unit_interval("n0", n0)?;
    Ok(free_excitation_density_unchecked(params, t, n0))
}

#[inline]
pub(crate) fn free_excitation_density_unchecked(params: DriveParams, t: f64, n0: f64) -> f64 {
    let p = flip_probability_unchecked(params, t);
    let from_up = 1.0 - p;
    let from_down = p;
    n0 * from_up + (1.0 - n0) * from_down
}

/// `exp(-i H t)` for a single spin.
pub fn propagator(params: DriveParams, t: f64) -> Mat2 {
    let w = params.effective_rabi();
    let (nx, nz) = params.axis();
    let (s, c) = (w * t).sin_cos();
    let gen = sigma_x() * re(nx) + sigma_z() * re(nz);
    Mat2::identity() * Complex64::new(c, 0.0) - gen * Complex64::new(0.0, s)
}

pub fn evolve_qubit(params: DriveParams, t: f64, initial: &QubitState) -> Result<QubitState> {
    check_params_time(t)?;
    let u = propagator(params, t);
    Ok(QubitState::from_hermitian_unchecked(
        u * initial.matrix() * u.adjoint(),
    ))
}

pub fn free_two_spin_state(
    params: DriveParams,
    t: f64,
    init_j: Spin,
    init_k: Spin,
) -> Result<TwoQubitState> {
    let a = evolve_qubit(params, t, &QubitState::basis(init_j))?;
    let b = evolve_qubit(params, t, &QubitState::basis(init_k))?;
    Ok(TwoQubitState::product(&a, &b))
}

/// Probabilities that spins `j` and `k` start in each basis pair, given
/// the origin configuration of the ensemble.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairWeights {
    pub up_up: f64,
    pub up_down: f64,
    pub down_up: f64,
    pub down_down: f64,
}

impl PairWeights {
    /// Independent spins, each up with probability `n0`.
    pub fn thermodynamic(n0: f64) -> Result<Self> {
        check_unit_interval("n0", n0)?;
        Ok(Self::thermodynamic_unchecked(n0))
    }

    pub(crate) fn thermodynamic_unchecked(n0: f64) -> Self {
        let m = 1.0 - n0;
        Self {
            up_up: n0 * n0,
            up_down: n0 * m,
            down_up: m * n0,
            down_down: m * m,
        }
    }

    /// Exact counting for `n_up` up spins among `n` sites (`n >= 2`).
    pub fn finite(n: u64, n_up: u64) -> Result<Self> {
        if n < 2 || n_up > n {
            return Err(Error::InvalidParameter {
                name: "n_up",
                value: n_up as f64,
                reason: "need n >= 2 and 0 <= n_up <= n",
            });
        }
        let (nf, kf) = (n as f64, n_up as f64);
        let norm = nf * (nf - 1.0);
        let mixed = kf * (nf - kf) / norm;
        Ok(Self {
            up_up: kf * (kf - 1.0) / norm,
            up_down: mixed,
            down_up: mixed,
            down_down: (nf - kf) * (nf - kf - 1.0) / norm,
        })
    }

    pub fn total(&self) -> f64 {
        self.up_up + self.up_down + self.down_up + self.down_down
    }

    pub(crate) fn entries(&self) -> [(Spin, Spin, f64); 4] {
        [
            (Spin::Up, Spin::Up, self.up_up),
            (Spin::Up, Spin::Down, self.up_down),
            (Spin::Down, Spin::Up, self.down_up),
            (Spin::Down, Spin::Down, self.down_down),
        ]
    }
}

/// `<n_j^F(t) n_k^F(t)>` for origin density `n0` in the thermodynamic limit,
/// assembled from the four basis initializations.
pub fn free_two_point_density(params: DriveParams, t: f64, n0: f64) -> Result<f64> {
    check_params_time(t)?;
    let weights = PairWeights::thermodynamic(n0)?;
    Ok(two_point_from_weights(params, t, &weights))
}

pub(crate) fn two_point_from_weights(params: DriveParams, t: f64, w: &PairWeights) -> f64 {
    let p = flip_probability_unchecked(params, t);
    let n = |s: Spin| match s {
        Spin::Up => 1.0 - p,
        Spin::Down => p,
    };
    w.entries().iter().map(|(a, b, c)| c * n(*a) * n(*b)).sum()
}

/// Two-spin state `sum_ab c_ab rho_a(t) (x) rho_b(t)` for the given origin
/// weights.
pub fn mixed_origin_pair_state(
    params: DriveParams,
    t: f64,
    w: &PairWeights,
) -> Result<TwoQubitState> {
    check_params_time(t)?;
    Ok(TwoQubitState::from_hermitian_unchecked(
        pair_matrix_from_weights(params, t, w),
    ))
}

pub(crate) fn pair_matrix_from_weights(params: DriveParams, t: f64, w: &PairWeights) -> Mat4 {
    let u = propagator(params, t);
    let up = u * QubitState::up().matrix() * u.adjoint();
    let down = u * QubitState::down().matrix() * u.adjoint();
    let pick = |s: Spin| match s {
        Spin::Up => &up,
        Spin::Down => &down,
    };
    let mut out = Mat4::zeros();
    for (a, b, c) in w.entries() {
        if c != 0.0 {
            out += kron2(pick(a), pick(b)) * Complex64::new(c, 0.0);
        }
    }
    out
}

/// Reset-free single-spin trajectory `rho^F(t)` as a trigonometric series
/// in harmonics of the effective Rabi frequency (harmonics -2, 0, 2).
pub fn free_qubit_series(params: DriveParams, initial: &QubitState) -> TrigSeries<Mat2> {
    let w = params.effective_rabi();
    if w == 0.0 {
        return TrigSeries::constant(*initial.matrix());
    }
    let (nx, nz) = params.axis();
    let gen = sigma_x() * re(nx) + sigma_z() * re(nz);
    let half = Complex64::new(0.5, 0.0);
    // U(t) = e^{-iwt} P_plus + e^{iwt} P_minus
    let p_plus = (Mat2::identity() + gen) * half;
    let p_minus = (Mat2::identity() - gen) * half;
    let rho = initial.matrix();
    let mut terms = Vec::with_capacity(4);
    for (s, ps) in [(1i32, &p_plus), (-1, &p_minus)] {
        for (sp, psp) in [(1i32, &p_plus), (-1, &p_minus)] {
            terms.push((s - sp, ps * rho * psp));
        }
    }
    TrigSeries::new(w, terms)
}

/// Reset-free two-spin trajectory from a product of basis states.
pub fn free_pair_series(params: DriveParams, init_j: Spin, init_k: Spin) -> TrigSeries<Mat4> {
    let a = free_qubit_series(params, &QubitState::basis(init_j));
    let b = free_qubit_series(params, &QubitState::basis(init_k));
    a.product(&b, kron2)
}

/// Reset-free excitation density starting from `|up>` as a series.
pub fn free_density_series(params: DriveParams) -> TrigSeries<Complex64> {
    let series = free_qubit_series(params, &QubitState::up());
    let terms = series
        .terms()
        .iter()
        .map(|(m, c)| (*m, c[(0, 0)]))
        .collect();
    TrigSeries::new(series.frequency(), terms)
}
