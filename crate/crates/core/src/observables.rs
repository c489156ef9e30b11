//! Scalar observables of one- and two-spin states.

use nalgebra::{Matrix3, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spin_dynamics::{
    kron2, sigma_x, sigma_y, sigma_z, DriveParams, Mat2, Mat4, QubitState, TwoQubitState,
    STATE_TOLERANCE,
};
use crate::trajectory_sim::ProtocolKind;

/// Eigenvalues in `[-EIGEN_CLAMP, 0)` are set to zero before square roots.
pub const EIGEN_CLAMP: f64 = 1e-10;

pub trait ExcitationDensity {
    /// `Tr[n rho]`, averaged over spins for multi-spin states.
    fn excitation_density(&self) -> f64;
}

impl ExcitationDensity for QubitState {
    fn excitation_density(&self) -> f64 {
        self.matrix()[(0, 0)].re
    }
}

impl ExcitationDensity for TwoQubitState {
    fn excitation_density(&self) -> f64 {
        0.5 * (self.marginal_first().excitation_density()
            + self.marginal_second().excitation_density())
    }
}

pub fn excitation_density<S: ExcitationDensity>(state: &S) -> f64 {
    state.excitation_density()
}

/// `<n_j n_k>`, the probability that both spins are up.
pub fn two_point_density(state: &TwoQubitState) -> f64 {
    state.matrix()[(0, 0)].re
}

/// `<n_j n_k> - <n_j><n_k>`.
pub fn connected_correlation(state: &TwoQubitState) -> f64 {
    let nj = state.marginal_first().excitation_density();
    let nk = state.marginal_second().excitation_density();
    two_point_density(state) - nj * nk
}

/// Unconditional protocol, Poisson resetting:
/// `4 Omega^4 (5 gamma^2 + 8 w^2) / [(gamma^2 + 4 w^2)^2 (gamma^2 + 16 w^2)]`.
pub fn protocol_one_correlation(params: DriveParams, gamma: f64) -> f64 {
    let o2 = params.omega().powi(2);
    let w2 = params.effective_rabi().powi(2);
    let g2 = gamma * gamma;
    4.0 * o2 * o2 * (5.0 * g2 + 8.0 * w2) / ((g2 + 4.0 * w2).powi(2) * (g2 + 16.0 * w2))
}

/// Two-state conditional protocol above the critical point, Poisson
/// resetting, equal weights on the two reset states.
pub fn protocol_two_mixture_correlation(params: DriveParams, gamma: f64) -> f64 {
    let o2 = params.omega().powi(2);
    let w2 = params.effective_rabi().powi(2);
    let g2 = gamma * gamma;
    0.25 - 2.0 * o2 * (g2 - 12.0 * o2 + 16.0 * w2) / (g2 * g2 + 20.0 * g2 * w2 + 64.0 * w2 * w2)
}

/// Closed-form stationary connected correlation in the thermodynamic limit.
/// For the two-state protocol the mixture formula applies for `Omega >
/// Delta`; at and below the critical point it coincides with protocol I.
pub fn connected_correlation_closed_form(
    protocol: ProtocolKind,
    params: DriveParams,
    gamma: f64,
) -> Result<f64> {
    if !(gamma > 0.0) || !gamma.is_finite() {
        return Err(Error::InvalidParameter {
            name: "gamma",
            value: gamma,
            reason: "must be positive",
        });
    }
    match protocol {
        ProtocolKind::UnconditionalReset => Ok(protocol_one_correlation(params, gamma)),
        ProtocolKind::ConditionalTwoState => {
            if params.omega() > params.delta() {
                Ok(protocol_two_mixture_correlation(params, gamma))
            } else {
                Ok(protocol_one_correlation(params, gamma))
            }
        }
        ProtocolKind::ConditionalFlip => Err(Error::InvalidConfig(
            "no closed-form correlation exists for the conditional-flip protocol".into(),
        )),
    }
}

/// Susceptibility `(1/N) sum_{j,k} C_jk` for site-independent correlations
/// `C`, which is `N C`.
pub fn uniform_susceptibility(correlation: f64, n_spins: u64) -> f64 {
    n_spins as f64 * correlation
}

/// Principal square root of a Hermitian positive-semidefinite matrix via
/// its eigendecomposition.
pub trait HermitianSqrt: Sized {
    fn hermitian_sqrt(&self) -> Result<Self>;
}

macro_rules! hermitian_sqrt_impl {
    ($mat:ty, $dim:expr) => {
        impl HermitianSqrt for $mat {
            fn hermitian_sqrt(&self) -> Result<Self> {
                let m = self;
                let mut deviation: f64 = 0.0;
                for r in 0..$dim {
                    for c in 0..$dim {
                        deviation = deviation.max((m[(r, c)] - m[(c, r)].conj()).norm());
                    }
                }
                if !(deviation <= STATE_TOLERANCE) {
                    return Err(Error::NotHermitian { deviation });
                }
                let h = (m + m.adjoint()) * Complex64::new(0.5, 0.0);
                let eig = SymmetricEigen::new(h);
                // Eigenvalues at roundoff level would otherwise contribute
                // their O(sqrt(eps)) square roots.
                let scale = eig.eigenvalues.iter().fold(0.0f64, |a, l| a.max(l.abs()));
                let floor = 64.0 * f64::EPSILON * scale;
                let mut out = <$mat>::zeros();
                for (k, &lambda) in eig.eigenvalues.iter().enumerate() {
                    if lambda < -EIGEN_CLAMP {
                        return Err(Error::NegativeEigenvalue { eigenvalue: lambda });
                    }
                    let root = if lambda <= floor { 0.0 } else { lambda.sqrt() };
                    if root > 0.0 {
                        let col = eig.eigenvectors.column(k);
                        out += col * col.adjoint() * Complex64::new(root, 0.0);
                    }
                }
                Ok(out)
            }
        }
    };
}

hermitian_sqrt_impl!(Mat2, 2);
hermitian_sqrt_impl!(Mat4, 4);

pub fn hermitian_sqrt<M: HermitianSqrt>(m: &M) -> Result<M> {
    m.hermitian_sqrt()
}

/// Local quantum uncertainty with respect to the first spin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LquResult {
    pub value: f64,
    pub w_matrix: Matrix3<f64>,
    pub lambda_max: f64,
}

fn local_paulis() -> [Mat4; 3] {
    let id = Mat2::identity();
    [
        kron2(&sigma_x(), &id),
        kron2(&sigma_y(), &id),
        kron2(&sigma_z(), &id),
    ]
}

/// Symmetrized `W_ab = Re Tr[sqrt(rho) A_a sqrt(rho) A_b]` with
/// `A_a = sigma^a (x) 1`.
pub fn lqu_w_matrix(state: &TwoQubitState) -> Result<Matrix3<f64>> {
    let root = hermitian_sqrt(state.matrix())?;
    let ops = local_paulis();
    let sandwiched: Vec<Mat4> = ops.iter().map(|a| root * a * root).collect();
    let mut w = Matrix3::zeros();
    for a in 0..3 {
        for b in 0..3 {
            w[(a, b)] = (sandwiched[a] * ops[b]).trace().re;
        }
    }
    Ok((w + w.transpose()) * 0.5)
}

pub fn lqu(state: &TwoQubitState) -> Result<LquResult> {
    let w = lqu_w_matrix(state)?;
    let lambda_max = SymmetricEigen::new(w)
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(LquResult {
        value: 1.0 - lambda_max,
        w_matrix: w,
        lambda_max,
    })
}

/// Whether the state is invariant under exchange of the two spins.
pub fn is_exchange_symmetric(state: &TwoQubitState, tolerance: f64) -> bool {
    let diff = state.matrix() - state.swapped().matrix();
    diff.iter().all(|z| z.norm() <= tolerance)
}

/// Mean density and two-point density from a stationary state, for
/// reporting.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairObservables {
    pub density: f64,
    pub two_point: f64,
    pub correlation: f64,
    pub lqu: f64,
}

pub fn pair_observables(state: &TwoQubitState) -> Result<PairObservables> {
    Ok(PairObservables {
        density: excitation_density(state),
        two_point: two_point_density(state),
        correlation: connected_correlation(state),
        lqu: lqu(state)?.value,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::renewal::{stationary_state_p1, WaitingTime};
    use crate::spin_dynamics::{BlochVector, Spin};
    use crate::trig::Coefficient;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn bell() -> TwoQubitState {
        let mut m = Mat4::zeros();
        for &(r, col) in &[(0, 0), (0, 3), (3, 0), (3, 3)] {
            m[(r, col)] = c(0.5);
        }
        TwoQubitState::new(m).unwrap()
    }

    #[test]
    fn density_examples() {
        assert_eq!(excitation_density(&QubitState::up()), 1.0);
        assert_eq!(excitation_density(&QubitState::maximally_mixed()), 0.5);
        assert_eq!(
            excitation_density(&TwoQubitState::basis(Spin::Up, Spin::Down)),
            0.5
        );
    }

    #[test]
    fn correlation_examples() {
        let a = QubitState::from_bloch(BlochVector::new(0.3, 0.1, -0.4).unwrap());
        let b = QubitState::from_bloch(BlochVector::new(-0.2, 0.5, 0.6).unwrap());
        assert!(connected_correlation(&TwoQubitState::product(&a, &b)).abs() < 1e-15);
        let mix = (TwoQubitState::basis(Spin::Up, Spin::Up).matrix()
            + TwoQubitState::basis(Spin::Down, Spin::Down).matrix())
            * c(0.5);
        assert_eq!(
            connected_correlation(&TwoQubitState::new(mix).unwrap()),
            0.25
        );
    }

    #[test]
    fn closed_form_examples() {
        let p = DriveParams::new(1.0, 1.0).unwrap();
        let v =
            connected_correlation_closed_form(ProtocolKind::UnconditionalReset, p, 0.5).unwrap();
        assert!((v - 69.0 / 2195.015625).abs() < 1e-15);
        assert!((v - 0.031435).abs() < 1e-6);
        let zero = DriveParams::new(0.0, 1.0).unwrap();
        assert_eq!(protocol_one_correlation(zero, 0.5), 0.0);
        let p2 = DriveParams::new(2.0, 1.0).unwrap();
        let v =
            connected_correlation_closed_form(ProtocolKind::ConditionalTwoState, p2, 0.5).unwrap();
        assert!((v - (0.25 - 258.0 / 1625.0625)).abs() < 1e-15);
        assert!((v - 0.091237).abs() < 1e-6);
        let below = DriveParams::new(0.6, 1.0).unwrap();
        assert_eq!(
            connected_correlation_closed_form(ProtocolKind::ConditionalTwoState, below, 0.5)
                .unwrap(),
            protocol_one_correlation(below, 0.5)
        );
        assert!(connected_correlation_closed_form(ProtocolKind::ConditionalFlip, p, 0.5).is_err());
    }

    #[test]
    fn stationary_state_reproduces_closed_form_correlation() {
        for &o in &[0.2, 0.7, 1.0, 1.4, 2.5] {
            for &g in &[0.1, 0.5, 2.0, 5.0] {
                let p = DriveParams::new(o, 1.0).unwrap();
                let st = stationary_state_p1(p, &WaitingTime::poisson(g).unwrap());
                let numeric = connected_correlation(&st.pair);
                assert!((numeric - protocol_one_correlation(p, g)).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn sqrt_examples() {
        let quarter = Mat4::identity() * c(0.25);
        let root = hermitian_sqrt(&quarter).unwrap();
        assert!((root - Mat4::identity() * c(0.5)).max_abs() < 1e-15);
        let d = Mat4::from_diagonal(&nalgebra::Vector4::new(c(0.1), c(0.2), c(0.3), c(0.4)));
        let root = hermitian_sqrt(&d).unwrap();
        for k in 0..4 {
            assert!((root[(k, k)].re - d[(k, k)].re.sqrt()).abs() < 1e-15);
        }
        let mut bad = Mat2::identity();
        bad[(0, 1)] = c(1.0);
        assert!(matches!(
            hermitian_sqrt(&bad),
            Err(Error::NotHermitian { .. })
        ));
        let neg = Mat2::from_diagonal(&nalgebra::Vector2::new(c(1.0), c(-0.01)));
        match hermitian_sqrt(&neg) {
            Err(Error::NegativeEigenvalue { eigenvalue }) => {
                assert!((eigenvalue + 0.01).abs() < 1e-15)
            }
            other => panic!("unexpected {other:?}"),
        }
        let tiny = Mat2::from_diagonal(&nalgebra::Vector2::new(c(1.0), c(-1e-12)));
        assert!(hermitian_sqrt(&tiny).is_ok());
    }

    #[test]
    fn lqu_examples() {
        let a = QubitState::from_bloch(BlochVector::new(0.6, 0.0, 0.8).unwrap());
        let b = QubitState::from_bloch(BlochVector::new(0.0, 1.0, 0.0).unwrap());
        let r = lqu(&TwoQubitState::product(&a, &b)).unwrap();
        assert!(r.value.abs() < 1e-10);
        assert!(lqu(&TwoQubitState::maximally_mixed()).unwrap().value.abs() < 1e-10);
        let r = lqu(&bell()).unwrap();
        assert!((r.value - 1.0).abs() < 1e-8);
        assert!((r.value - (1.0 - r.lambda_max)).abs() < 1e-15);
    }

    #[test]
    fn classical_mixture_has_zero_lqu() {
        let mut m = Mat4::zeros();
        for (k, w) in [0.4, 0.1, 0.2, 0.3].iter().enumerate() {
            m[(k, k)] = c(*w);
        }
        assert!(lqu(&TwoQubitState::new(m).unwrap()).unwrap().value.abs() < 1e-10);
    }

    #[test]
    fn stationary_state_is_exchange_symmetric() {
        let p = DriveParams::new(1.3, 1.0).unwrap();
        let st = stationary_state_p1(p, &WaitingTime::poisson(0.5).unwrap());
        assert!(is_exchange_symmetric(&st.pair, 1e-12));
        assert!(!is_exchange_symmetric(
            &TwoQubitState::basis(Spin::Up, Spin::Down),
            1e-12
        ));
    }

    #[test]
    fn susceptibility_scales_with_n() {
        let corr = 0.031;
        for n in [11u64, 101, 1001] {
            assert!((uniform_susceptibility(corr, n) / n as f64 - corr).abs() < 1e-12);
        }
    }
}
