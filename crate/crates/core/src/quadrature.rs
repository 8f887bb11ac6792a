//! Globally adaptive Gauss–Kronrod (7/15) quadrature.
//!
//! The rule is open: integrands are never evaluated at interval endpoints, so
//! integrable algebraic endpoint singularities (speed densities such as
//! `u^(p-2)` near a reflecting boundary) are handled by bisection alone.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

/// Default absolute tolerance.
pub const ABS_TOL: f64 = 1e-10;
/// Default subdivision budget.
pub const MAX_SUBDIVISIONS: usize = 1_000_000;

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
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] =
    [0.129_484_966_168_869_7, 0.279_705_391_489_276_7, 0.381_830_050_505_118_9, 0.417_959_183_673_469_4];

#[derive(Debug, Clone, Copy)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_subdivisions: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self { abs_tol: ABS_TOL, rel_tol: 1e-13, max_subdivisions: MAX_SUBDIVISIONS }
    }
}

struct Piece {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Piece {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Piece {}
impl PartialOrd for Piece {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Piece {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn kronrod<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Result<(f64, f64)> {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = fc * WGK[7];
    let mut g = fc * WG[3];
    for j in 0..7 {
        let x = h * XGK[j];
        let f1 = f(c - x);
        let f2 = f(c + x);
        if !f1.is_finite() || !f2.is_finite() {
            return Err(Error::Numeric(format!("non-finite integrand near {} on [{a}, {b}]", c - x)));
        }
        k += WGK[j] * (f1 + f2);
        if j % 2 == 1 {
            g += WG[j / 2] * (f1 + f2);
        }
    }
    if !fc.is_finite() {
        return Err(Error::Numeric(format!("non-finite integrand at {c}")));
    }
    Ok((k * h, ((k - g) * h).abs()))
}

/// Integrates `f` over the finite interval `[a, b]` with default options.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64) -> Result<f64> {
    integrate_with(f, a, b, QuadOptions::default())
}

pub fn integrate_with<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, opts: QuadOptions) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::Numeric(format!("quadrature over unbounded interval [{a}, {b}]")));
    }
    if b < a {
        return integrate_with(f, b, a, opts).map(|v| -v);
    }
    let (v, e) = kronrod(&f, a, b)?;
    let mut heap = BinaryHeap::new();
    heap.push(Piece { a, b, value: v, error: e });
    let mut total = v;
    let mut total_err = e;
    let mut splits = 0usize;
    // Pieces too small to split further keep their error but leave the heap.
    let mut frozen_err = 0.0;
    loop {
        let tol = opts.abs_tol.max(opts.rel_tol * total.abs());
        if total_err <= tol {
            return Ok(total);
        }
        let Some(p) = heap.pop() else {
            // Everything left is below floating-point resolution.
            if frozen_err <= 10.0 * tol {
                return Ok(total);
            }
            return Err(Error::Numeric(format!("quadrature on [{a}, {b}] stalled with error {frozen_err:e}")));
        };
        let mid = 0.5 * (p.a + p.b);
        if mid <= p.a || mid >= p.b {
            frozen_err += p.error;
            continue;
        }
        splits += 1;
        if splits > opts.max_subdivisions {
            return Err(Error::Numeric(format!(
                "quadrature on [{a}, {b}] did not converge within {} subdivisions (error {total_err:e})",
                opts.max_subdivisions
            )));
        }
        let (v1, e1) = kronrod(&f, p.a, mid)?;
        let (v2, e2) = kronrod(&f, mid, p.b)?;
        total += v1 + v2 - p.value;
        total_err += e1 + e2 - p.error;
        heap.push(Piece { a: p.a, b: mid, value: v1, error: e1 });
        heap.push(Piece { a: mid, b: p.b, value: v2, error: e2 });
        // Guard against cancellation drift in the running sums.
        if splits.is_multiple_of(4096) {
            total = heap.iter().map(|p| p.value).sum();
            total_err = heap.iter().map(|p| p.error).sum::<f64>() + frozen_err;
        }
    }
}
