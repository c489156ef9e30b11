use thiserror::Error;

/// Errors produced by the `spinreset` library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("matrix is not Hermitian (max deviation {deviation:e})")]
    NotHermitian { deviation: f64 },

    #[error("matrix has trace {trace}, expected 1")]
    BadTrace { trace: f64 },

    #[error("matrix has negative eigenvalue {eigenvalue:e}")]
    NegativeEigenvalue { eigenvalue: f64 },

    #[error("spin count must be odd and positive, got {0}")]
    EvenSpinCount(u64),

    #[error("asymptotic expansion has a pole at p = 1/2; use the exact or erf form")]
    AsymptoticPole,

    #[error("adaptive quadrature did not converge (estimated error {estimate:e}, tolerance {tolerance:e})")]
    QuadratureNonConvergence { estimate: f64, tolerance: f64 },

    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),

    #[error("resource limit exceeded: {0}")]
    ResourceLimit(String),

    #[error("not enough rows to bracket the critical point {critical_point} ({detail})")]
    InsufficientBracketing { critical_point: f64, detail: String },

    #[error("only {found} rows in fit window, need at least {required}")]
    TooFewPoints { found: usize, required: usize },

    #[error("non-positive offset {offset:e} at omega/delta = {omega_over_delta}")]
    NonPositiveOffset { omega_over_delta: f64, offset: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_finite(name: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::InvalidParameter {
            name,
            value,
            reason: "must be finite",
        })
    }
}

pub(crate) fn check_time(value: f64) -> Result<f64> {
    check_finite("t", value)?;
    if value < 0.0 {
        return Err(Error::InvalidParameter {
            name: "t",
            value,
            reason: "time must be non-negative",
        });
    }
    Ok(value)
}

pub(crate) fn check_unit_interval(name: &'static str, value: f64) -> Result<f64> {
    check_finite(name, value)?;
    if !(0.0..=1.0).contains(&value) {
        return Err(Error::InvalidParameter {
            name,
            value,
            reason: "must lie in [0, 1]",
        });
    }
    Ok(value)
}
