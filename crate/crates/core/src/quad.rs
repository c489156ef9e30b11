//! Globally adaptive Gauss-Kronrod (7/15) quadrature for scalar and
//! matrix-valued integrands.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::trig::Coefficient;

// Kronrod abscissae on [0, 1]; the odd-indexed entries are the Gauss nodes.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_225,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];

const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Tolerances and limits for [`integrate`].
#[derive(Debug, Clone, Copy)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_segments: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self {
            abs_tol: 1e-13,
            rel_tol: 1e-12,
            max_segments: 20_000,
        }
    }
}

struct Segment<T> {
    a: f64,
    b: f64,
    value: T,
    error: f64,
}

impl<T> PartialEq for Segment<T> {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}

impl<T> Eq for Segment<T> {}

impl<T> PartialOrd for Segment<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<T> Ord for Segment<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn kronrod<T, F>(f: &F, a: f64, b: f64) -> (T, f64)
where
    T: Coefficient,
    F: Fn(f64) -> T,
{
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut gauss = fc.zero_like();
    gauss.add_scaled(&fc, Complex64::new(WG[3], 0.0));
    let mut kron = fc.zero_like();
    kron.add_scaled(&fc, Complex64::new(WGK[7], 0.0));
    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        kron.add_scaled(&f1, Complex64::new(WGK[j], 0.0));
        kron.add_scaled(&f2, Complex64::new(WGK[j], 0.0));
        if j % 2 == 1 {
            gauss.add_scaled(&f1, Complex64::new(WG[j / 2], 0.0));
            gauss.add_scaled(&f2, Complex64::new(WG[j / 2], 0.0));
        }
    }
    let mut value = kron.zero_like();
    value.add_scaled(&kron, Complex64::new(half, 0.0));
    let mut diff = value.clone();
    diff.add_scaled(&gauss, Complex64::new(-half, 0.0));
    (value, diff.max_abs())
}

/// Integrates `f` over `[a, b]`, starting from `initial_panels` equal
/// panels and bisecting the panel with the largest error estimate until the
/// summed estimate falls below tolerance.
pub fn integrate<T, F>(f: F, a: f64, b: f64, initial_panels: usize, opts: QuadOptions) -> Result<T>
where
    T: Coefficient,
    F: Fn(f64) -> T,
{
    let panels = initial_panels.max(1);
    let width = (b - a) / panels as f64;
    let mut heap = BinaryHeap::with_capacity(2 * panels);
    for k in 0..panels {
        let lo = a + width * k as f64;
        let hi = if k + 1 == panels { b } else { lo + width };
        let (value, error) = kronrod(&f, lo, hi);
        heap.push(Segment {
            a: lo,
            b: hi,
            value,
            error,
        });
    }
    let mut total_err: f64 = heap.iter().map(|s| s.error).sum();
    let mut running = sum_segments(&heap);
    loop {
        let tol = opts.abs_tol.max(opts.rel_tol * running.max_abs());
        if total_err <= tol {
            return Ok(sum_segments(&heap));
        }
        if heap.len() >= opts.max_segments {
            return Err(Error::QuadratureNonConvergence {
                estimate: total_err,
                tolerance: tol,
            });
        }
        let worst = heap.pop().expect("heap is non-empty");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            return Err(Error::QuadratureNonConvergence {
                estimate: total_err,
                tolerance: tol,
            });
        }
        total_err -= worst.error;
        running.add_scaled(&worst.value, Complex64::new(-1.0, 0.0));
        for (lo, hi) in [(worst.a, mid), (mid, worst.b)] {
            let (value, error) = kronrod(&f, lo, hi);
            total_err += error;
            running.add_scaled(&value, Complex64::new(1.0, 0.0));
            heap.push(Segment {
                a: lo,
                b: hi,
                value,
                error,
            });
        }
        total_err = total_err.max(0.0);
    }
}

fn sum_segments<T: Coefficient>(heap: &BinaryHeap<Segment<T>>) -> T {
    // Sort by position so the sum does not depend on heap layout.
    let mut segs: Vec<&Segment<T>> = heap.iter().collect();
    segs.sort_by(|x, y| x.a.total_cmp(&y.a));
    let mut acc = segs[0].value.zero_like();
    for s in segs {
        acc.add_scaled(&s.value, Complex64::new(1.0, 0.0));
    }
    acc
}

/// Real-valued convenience wrapper around [`integrate`].
pub fn integrate_real<F>(
    f: F,
    a: f64,
    b: f64,
    initial_panels: usize,
    opts: QuadOptions,
) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    integrate(|t| Complex64::new(f(t), 0.0), a, b, initial_panels, opts).map(|z| z.re)
}
