//! Globally adaptive Gauss-Kronrod (7/15) quadrature.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

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
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];

// Gauss weights for the odd-indexed Kronrod nodes (1, 3, 5, 7).
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

const MAX_INTERVALS: usize = 20_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    pub value: f64,
    pub error: f64,
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

fn kronrod<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Piece {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = WGK[7] * fc;
    let mut g = WG[3] * fc;
    for (i, (&x, &w)) in XGK.iter().zip(WGK.iter()).take(7).enumerate() {
        let pair = f(c - h * x) + f(c + h * x);
        k += w * pair;
        if i % 2 == 1 {
            g += WG[i / 2] * pair;
        }
    }
    Piece {
        a,
        b,
        value: k * h,
        error: ((k - g) * h).abs(),
    }
}

/// Integrates `f` over `[a, b]` to absolute tolerance `abs_tol`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, abs_tol: f64) -> Result<Quadrature> {
    if a == b {
        return Ok(Quadrature {
            value: 0.0,
            error: 0.0,
        });
    }
    let mut heap = BinaryHeap::new();
    let first = kronrod(&f, a, b);
    let (mut value, mut error) = (first.value, first.error);
    heap.push(first);
    while error > abs_tol {
        if heap.len() >= MAX_INTERVALS || !value.is_finite() {
            return Err(Error::InvalidState("quadrature did not converge"));
        }
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.a + worst.b);
        let left = kronrod(&f, worst.a, mid);
        let right = kronrod(&f, mid, worst.b);
        value += left.value + right.value - worst.value;
        error += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
        // re-sum occasionally so cancellation in the running totals cannot stall
        if heap.len() % 64 == 0 {
            value = heap.iter().map(|p| p.value).sum();
            error = heap.iter().map(|p| p.error).sum();
        }
    }
    let value = heap.iter().map(|p| p.value).sum();
    let error = heap.iter().map(|p| p.error).sum();
    Ok(Quadrature { value, error })
}

/// Integrates over `[a, b]` after the substitution `t = a + (b - a) s^2 (3 - 2 s)`,
/// which flattens inverse-square-root endpoint singularities at both ends.
pub fn integrate_smoothstep<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    abs_tol: f64,
) -> Result<Quadrature> {
    let w = b - a;
    integrate(
        |s| {
            let jac = 6.0 * w * s * (1.0 - s);
            if jac == 0.0 {
                return 0.0;
            }
            let v = f(a + w * s * s * (3.0 - 2.0 * s));
            if v == 0.0 {
                0.0
            } else {
                v * jac
            }
        },
        0.0,
        1.0,
        abs_tol,
    )
}

/// Integrates over `[a, inf)` through `x = a + s / (1 - s)`.
pub fn integrate_to_infinity<F: Fn(f64) -> f64>(f: F, a: f64, abs_tol: f64) -> Result<Quadrature> {
    integrate(
        |s| {
            if s >= 1.0 {
                return 0.0;
            }
            let one_minus = 1.0 - s;
            let v = f(a + s / one_minus);
            if v == 0.0 {
                0.0
            } else {
                v / (one_minus * one_minus)
            }
        },
        0.0,
        1.0,
        abs_tol,
    )
}
