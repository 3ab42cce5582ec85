//! One-dimensional quadrature.
//!
//! Two rules are provided: a globally adaptive 7/15-point Gauss–Kronrod rule
//! for smooth (or mildly peaked) integrands, and a tanh-sinh rule for
//! integrands with algebraic singularities at the interval endpoints.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::{Error, Result};

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

// Gauss weights for the nodes XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Result of a quadrature call.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
}

/// Tolerances and limits for [`gauss_kronrod`].
#[derive(Debug, Clone, Copy)]
pub struct GkOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
    /// Number of equal pieces the range is split into before adapting.
    pub initial_pieces: usize,
}

impl Default for GkOptions {
    fn default() -> Self {
        Self {
            abs_tol: 1e-12,
            rel_tol: 1e-12,
            max_intervals: 20_000,
            initial_pieces: 1,
        }
    }
}

#[derive(Debug, Clone, Copy)]
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

fn kronrod15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Piece {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = half * XGK[j];
        let pair = f(center - dx) + f(center + dx);
        kronrod += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    let value = kronrod * half;
    let error = ((kronrod - gauss) * half).abs();
    Piece { a, b, value, error }
}

/// Globally adaptive Gauss–Kronrod (G7/K15) integration of `f` over `[a, b]`.
///
/// The interval with the largest error estimate is bisected until the summed
/// error drops below `max(abs_tol, rel_tol * |value|)`.
pub fn gauss_kronrod<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, opts: GkOptions) -> Result<Estimate> {
    if a == b {
        return Ok(Estimate {
            value: 0.0,
            error: 0.0,
            evaluations: 0,
        });
    }
    if b < a {
        let e = gauss_kronrod(f, b, a, opts)?;
        return Ok(Estimate {
            value: -e.value,
            ..e
        });
    }
    let pieces = opts.initial_pieces.max(1);
    let width = (b - a) / pieces as f64;
    let mut heap = BinaryHeap::with_capacity(pieces * 2);
    for k in 0..pieces {
        let lo = a + k as f64 * width;
        let hi = if k + 1 == pieces { b } else { lo + width };
        heap.push(kronrod15(&f, lo, hi));
    }
    let mut evaluations = 15 * pieces;
    loop {
        let (value, error) = heap
            .iter()
            .fold((0.0, 0.0), |(v, e), p| (v + p.value, e + p.error));
        let target = opts.abs_tol.max(opts.rel_tol * value.abs());
        if error <= target {
            return Ok(Estimate {
                value,
                error,
                evaluations,
            });
        }
        if heap.len() >= opts.max_intervals {
            return Err(Error::Quadrature {
                estimate: value,
                error,
            });
        }
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // Interval can no longer be split in floating point.
            return Err(Error::Quadrature {
                estimate: value,
                error,
            });
        }
        heap.push(kronrod15(&f, worst.a, mid));
        heap.push(kronrod15(&f, mid, worst.b));
        evaluations += 30;
    }
}

/// Tanh-sinh (double exponential) integration over a finite `[a, b]`.
///
/// The integrand receives `(x, x - a, b - x)`; the two distances are computed
/// without cancellation so integrands singular at an endpoint (for instance
/// `1 / sqrt(b - x)`) can be evaluated accurately right up to it.
pub fn tanh_sinh<F: Fn(f64, f64, f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<Estimate> {
    if a == b {
        return Ok(Estimate {
            value: 0.0,
            error: 0.0,
            evaluations: 0,
        });
    }
    if b < a {
        let e = tanh_sinh_forward(&|x, da, db| f(x, db, da), b, a, tol)?;
        return Ok(Estimate {
            value: -e.value,
            ..e
        });
    }
    tanh_sinh_forward(&f, a, b, tol)
}

fn tanh_sinh_forward<F: Fn(f64, f64, f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> Result<Estimate> {
    let half = 0.5 * (b - a);
    let pi_2 = std::f64::consts::FRAC_PI_2;
    // Abscissae beyond |t| = T_MAX are within ~1e-300 of an endpoint.
    const T_MAX: f64 = 6.5;
    const MAX_LEVEL: usize = 12;

    let mut evaluations = 0usize;
    // Contribution of the node at parameter t (and its mirror at -t).
    let node = |t: f64, evaluations: &mut usize| -> f64 {
        let s = pi_2 * t.sinh();
        let cosh_s = s.cosh();
        let weight = half * pi_2 * t.cosh() / (cosh_s * cosh_s);
        // 1 - tanh(s) = 2 / (1 + e^{2s})
        let e2s = (2.0 * s).exp();
        let right_gap = half * 2.0 / (1.0 + e2s);
        let left_gap = half * 2.0 * e2s / (1.0 + e2s);
        let mut total = 0.0;
        if weight == 0.0 {
            return 0.0;
        }
        // node at +t sits right_gap to the left of b
        if right_gap > 0.0 {
            let x = b - right_gap;
            let v = f(x, left_gap, right_gap);
            *evaluations += 1;
            if v.is_finite() {
                total += weight * v;
            }
        }
        if t != 0.0 && right_gap > 0.0 {
            // mirror node at -t: distance to a = right_gap
            let x = a + right_gap;
            let v = f(x, right_gap, left_gap);
            *evaluations += 1;
            if v.is_finite() {
                total += weight * v;
            }
        }
        total
    };

    let mut h = 1.0;
    let mut sum = node(0.0, &mut evaluations);
    let mut k = 1;
    while (k as f64) * h <= T_MAX {
        sum += node(k as f64 * h, &mut evaluations);
        k += 1;
    }
    let mut estimate = sum * h;
    for _level in 1..=MAX_LEVEL {
        h *= 0.5;
        let mut k = 1;
        while (k as f64) * h <= T_MAX {
            sum += node(k as f64 * h, &mut evaluations);
            k += 2;
        }
        let next = sum * h;
        let error = (next - estimate).abs();
        estimate = next;
        if error <= tol * estimate.abs().max(1.0) {
            return Ok(Estimate {
                value: estimate,
                error,
                evaluations,
            });
        }
    }
    Err(Error::Quadrature {
        estimate,
        error: f64::NAN,
    })
}
