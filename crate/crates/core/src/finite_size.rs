//! Probability that a density measurement on `N` spins, all prepared in
//! `|up>` and each flipped independently with probability `p`, falls below
//! 1/2.
//!
//! Four regimes: the exact binomial tail, its normal (erf) approximation,
//! the large-`N` tail asymptotics, and the thermodynamic step function.

use serde::{Deserialize, Serialize};
use statrs::function::erf::erf;
use statrs::function::gamma::ln_gamma;

use crate::error::{check_unit_interval, Error, Result};

/// Largest `N` for which binomial coefficients are formed exactly.
pub const EXACT_COEFFICIENT_LIMIT: u64 = 60;

/// Positive odd spin count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u64", into = "u64")]
pub struct OddCount(u64);

impl OddCount {
    pub fn new(n: u64) -> Result<Self> {
        if n % 2 == 1 {
            Ok(Self(n))
        } else {
            Err(Error::EvenSpinCount(n))
        }
    }

    pub fn get(self) -> u64 {
        self.0
    }
}

impl TryFrom<u64> for OddCount {
    type Error = Error;
    fn try_from(n: u64) -> Result<Self> {
        Self::new(n)
    }
}

impl From<OddCount> for u64 {
    fn from(n: OddCount) -> u64 {
        n.0
    }
}

/// Ensemble size: a finite odd `N` or the thermodynamic limit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NSpins {
    Finite(OddCount),
    Thermodynamic,
}

impl NSpins {
    pub fn finite(n: u64) -> Result<Self> {
        OddCount::new(n).map(Self::Finite)
    }

    pub fn count(&self) -> Option<u64> {
        match self {
            Self::Finite(n) => Some(n.get()),
            Self::Thermodynamic => None,
        }
    }

    pub fn is_thermodynamic(&self) -> bool {
        matches!(self, Self::Thermodynamic)
    }
}

impl std::fmt::Display for NSpins {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Finite(n) => write!(f, "{}", n.get()),
            Self::Thermodynamic => write!(f, "inf"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Exact,
    NormalErf,
    Asymptotic,
    Thermodynamic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Approximation {
    NormalErf,
    Asymptotic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdProbability {
    pub value: f64,
    pub regime: Regime,
    pub n_spins: NSpins,
}

/// Cached binomial log-coefficients `ln C(N, k)` for `k <= (N-1)/2`.
#[derive(Debug, Clone)]
pub struct BinomialTail {
    n: u64,
    ln_coefficients: Vec<f64>,
}

impl BinomialTail {
    pub fn new(n: u64) -> Result<Self> {
        let n = OddCount::new(n)?.get();
        let half = (n - 1) / 2;
        let ln_coefficients = if n <= EXACT_COEFFICIENT_LIMIT {
            let mut c: u128 = 1;
            let mut out = Vec::with_capacity(half as usize + 1);
            for k in 0..=half {
                if k > 0 {
                    c = c * u128::from(n - k + 1) / u128::from(k);
                }
                out.push((c as f64).ln());
            }
            out
        } else {
            let ln_n = ln_gamma(n as f64 + 1.0);
            (0..=half)
                .map(|k| ln_n - ln_gamma(k as f64 + 1.0) - ln_gamma((n - k) as f64 + 1.0))
                .collect()
        };
        Ok(Self { n, ln_coefficients })
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    /// `sum_{k <= (N-1)/2} C(N,k) (1-p)^k p^(N-k)`, for `p` in `[0, 1]`.
    pub fn below_half(&self, p: f64) -> f64 {
        if p <= 0.0 {
            return 0.0;
        }
        if p >= 1.0 {
            return 1.0;
        }
        let ln_p = p.ln();
        let ln_q = (-p).ln_1p();
        let n = self.n as f64;
        let log_term = |k: usize| self.ln_coefficients[k] + k as f64 * ln_q + (n - k as f64) * ln_p;
        let max = (0..self.ln_coefficients.len())
            .map(log_term)
            .fold(f64::NEG_INFINITY, f64::max);
        if max == f64::NEG_INFINITY {
            return 0.0;
        }
        // Neumaier summation of the rescaled terms.
        let (mut sum, mut comp) = (0.0f64, 0.0f64);
        for k in 0..self.ln_coefficients.len() {
            let l = log_term(k) - max;
            if l < -745.0 {
                continue;
            }
            let x = l.exp();
            let t = sum + x;
            if sum.abs() >= x.abs() {
                comp += (sum - t) + x;
            } else {
                comp += (x - t) + sum;
            }
            sum = t;
        }
        ((sum + comp).ln() + max).exp().clamp(0.0, 1.0)
    }
}

fn check_probability(p: f64) -> Result<f64> {
    check_unit_interval("p", p)
}

/// Exact binomial tail probability.
pub fn transition_prob_exact(n_spins: u64, p: f64) -> Result<ThresholdProbability> {
    check_probability(p)?;
    let tail = BinomialTail::new(n_spins)?;
    Ok(ThresholdProbability {
        value: tail.below_half(p),
        regime: Regime::Exact,
        n_spins: NSpins::finite(n_spins)?,
    })
}

/// Normal-approximation forms, intended for `N >= 51`.
///
/// `Asymptotic` uses the leading large-argument expansion of both error
/// functions and is singular at `p = 1/2`.
pub fn transition_prob_approx(
    n_spins: u64,
    p: f64,
    variant: Approximation,
) -> Result<ThresholdProbability> {
    check_probability(p)?;
    let count = NSpins::finite(n_spins)?;
    let regime = match variant {
        Approximation::NormalErf => Regime::NormalErf,
        Approximation::Asymptotic => Regime::Asymptotic,
    };
    let wrap = |value: f64| ThresholdProbability {
        value: value.clamp(0.0, 1.0),
        regime,
        n_spins: count,
    };
    if p == 0.0 {
        return Ok(wrap(0.0));
    }
    if p == 1.0 {
        return Ok(wrap(1.0));
    }
    let n = n_spins as f64;
    let var = p * (1.0 - p);
    let value = match variant {
        Approximation::NormalErf => {
            let s = (2.0 * n * var).sqrt();
            0.5 * (erf((-0.5 * n + n * p) / s) - erf((-n + n * p) / s))
        }
        Approximation::Asymptotic => {
            if p == 0.5 {
                return Err(Error::AsymptoticPole);
            }
            let prefactor = (2.0 * var).sqrt() / (2.0 * (std::f64::consts::PI * n).sqrt());
            let near = (-n * (0.5 - p).powi(2) / (2.0 * var)).exp();
            let far = (-n * (1.0 - p).powi(2) / (2.0 * var)).exp() / (1.0 - p);
            if p < 0.5 {
                prefactor * (near / (0.5 - p) - far)
            } else {
                1.0 - prefactor * (near / (p - 0.5) + far)
            }
        }
    };
    Ok(wrap(value))
}

/// Step function `Theta(p - 1/2)` with `Theta(0) = 0`.
pub fn transition_prob_thermo(p: f64) -> Result<ThresholdProbability> {
    check_probability(p)?;
    Ok(ThresholdProbability {
        value: if p > 0.5 { 1.0 } else { 0.0 },
        regime: Regime::Thermodynamic,
        n_spins: NSpins::Thermodynamic,
    })
}

/// Probability of measuring a density above 1/2 starting from `|down>`
/// with flip probability `p`, evaluated as the complement of the lower tail
/// of `Binomial(N, p)`.
pub fn transition_prob_down_up(n_spins: NSpins, p: f64) -> Result<f64> {
    check_probability(p)?;
    match n_spins {
        NSpins::Finite(n) => Ok(1.0 - BinomialTail::new(n.get())?.below_half(1.0 - p)),
        NSpins::Thermodynamic => transition_prob_thermo(p).map(|x| x.value),
    }
}
