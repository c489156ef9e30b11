//! Finite trigonometric series with matrix or scalar coefficients.
//!
//! Every reset-free trajectory in this crate is of the form
//! `f(t) = sum_m c_m exp(-i m w t)` with a fixed base frequency `w` (the
//! effective Rabi frequency) and small integer harmonics `m`. Keeping the
//! trajectory in this form lets survival-weighted time integrals be done
//! term by term in closed form.

use nalgebra::SMatrix;
use num_complex::Complex64;

/// Values that can be accumulated with complex weights.
pub trait Coefficient: Clone + Send + Sync {
    fn zero_like(&self) -> Self;
    fn add_scaled(&mut self, other: &Self, factor: Complex64);
    /// Largest absolute value of any component.
    fn max_abs(&self) -> f64;
}

impl Coefficient for Complex64 {
    fn zero_like(&self) -> Self {
        Complex64::new(0.0, 0.0)
    }

    fn add_scaled(&mut self, other: &Self, factor: Complex64) {
        *self += other * factor;
    }

    fn max_abs(&self) -> f64 {
        self.re.abs().max(self.im.abs())
    }
}

impl<const R: usize, const C: usize> Coefficient for SMatrix<Complex64, R, C> {
    fn zero_like(&self) -> Self {
        Self::zeros()
    }

    fn add_scaled(&mut self, other: &Self, factor: Complex64) {
        for (a, b) in self.iter_mut().zip(other.iter()) {
            *a += b * factor;
        }
    }

    fn max_abs(&self) -> f64 {
        self.iter()
            .map(|z| z.re.abs().max(z.im.abs()))
            .fold(0.0, f64::max)
    }
}

/// `f(t) = sum_m c_m exp(-i m w t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrigSeries<T> {
    frequency: f64,
    terms: Vec<(i32, T)>,
}

impl<T: Coefficient> TrigSeries<T> {
    pub fn new(frequency: f64, terms: Vec<(i32, T)>) -> Self {
        let mut series = Self { frequency, terms };
        series.compact();
        series
    }

    pub fn constant(value: T) -> Self {
        Self {
            frequency: 0.0,
            terms: vec![(0, value)],
        }
    }

    pub fn frequency(&self) -> f64 {
        self.frequency
    }

    pub fn terms(&self) -> &[(i32, T)] {
        &self.terms
    }

    /// Angular frequencies `m w` present in the series.
    pub fn frequencies(&self) -> impl Iterator<Item = f64> + '_ {
        self.terms
            .iter()
            .map(move |(m, _)| f64::from(*m) * self.frequency)
    }

    pub fn eval(&self, t: f64) -> T {
        self.transform(|nu| Complex64::from_polar(1.0, -nu * t))
    }

    /// Applies a linear functional defined on pure exponentials:
    /// returns `sum_m c_m kernel(m w)`, where `kernel(nu)` is the image of
    /// `exp(-i nu t)`.
    pub fn transform<F>(&self, kernel: F) -> T
    where
        F: Fn(f64) -> Complex64,
    {
        let mut out = self.terms[0].1.zero_like();
        for (m, c) in &self.terms {
            out.add_scaled(c, kernel(f64::from(*m) * self.frequency));
        }
        out
    }

    /// Convex combination of two series sharing a base frequency.
    pub fn mix(&self, wa: f64, other: &Self, wb: f64) -> Self {
        let frequency = common_frequency(self.frequency, other.frequency);
        let mut terms = Vec::with_capacity(self.terms.len() + other.terms.len());
        for (m, c) in &self.terms {
            let mut scaled = c.zero_like();
            scaled.add_scaled(c, Complex64::new(wa, 0.0));
            terms.push((*m, scaled));
        }
        for (m, c) in &other.terms {
            let mut scaled = c.zero_like();
            scaled.add_scaled(c, Complex64::new(wb, 0.0));
            terms.push((*m, scaled));
        }
        Self::new(frequency, terms)
    }

    /// Pointwise product `f(t) g(t)` under a bilinear map on coefficients.
    pub fn product<U, V, F>(&self, other: &TrigSeries<U>, combine: F) -> TrigSeries<V>
    where
        U: Coefficient,
        V: Coefficient,
        F: Fn(&T, &U) -> V,
    {
        let frequency = common_frequency(self.frequency, other.frequency);
        let mut terms = Vec::with_capacity(self.terms.len() * other.terms.len());
        for (ma, a) in &self.terms {
            for (mb, b) in &other.terms {
                terms.push((ma + mb, combine(a, b)));
            }
        }
        TrigSeries::new(frequency, terms)
    }

    fn compact(&mut self) {
        self.terms.sort_by_key(|(m, _)| *m);
        let mut merged: Vec<(i32, T)> = Vec::with_capacity(self.terms.len());
        for (m, c) in self.terms.drain(..) {
            match merged.last_mut() {
                Some((last, acc)) if *last == m => acc.add_scaled(&c, Complex64::new(1.0, 0.0)),
                _ => merged.push((m, c)),
            }
        }
        self.terms = merged;
    }
}

fn common_frequency(a: f64, b: f64) -> f64 {
    // A constant series carries frequency 0 and combines with anything.
    if a == 0.0 {
        b
    } else if b == 0.0 || a == b {
        a
    } else {
        let scale = a.abs().max(b.abs());
        assert!(
            (a - b).abs() <= 1e-14 * scale,
            "series with different base frequencies ({a} vs {b}) cannot be combined"
        );
        a
    }
}
