//! Adaptive Gauss–Kronrod (7/15) quadrature.
//!
//! Used to check the closed-form antiderivatives and to integrate densities
//! whose support runs to infinity.

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
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_728_0,
];

// Gauss weights for the odd Kronrod nodes (1, 3, 5, 7).
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

const MAX_INTERVALS: usize = 20_000;

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

fn kronrod<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for (j, (&x, &w)) in XGK.iter().zip(WGK.iter()).take(7).enumerate() {
        let dx = half * x;
        let pair = f(center - dx) + f(center + dx);
        kronrod += w * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    (kronrod * half, ((kronrod - gauss) * half).abs())
}

/// Integrates `f` over the finite interval [a, b].
///
/// Bisects the interval with the largest error estimate until the total
/// error is below `max(abs_tol, rel_tol·|value|)`.
pub fn integrate<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
) -> Result<Estimate> {
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::Quadrature(format!("non-finite bounds [{a}, {b}]")));
    }
    if a == b {
        return Ok(Estimate { value: 0.0, error: 0.0 });
    }
    let (v, e) = kronrod(&f, a, b);
    let mut intervals = vec![(a, b, v, e)];
    let mut total = v;
    let mut total_err = e;
    while total_err > abs_tol.max(rel_tol * total.abs()) {
        if intervals.len() >= MAX_INTERVALS {
            return Err(Error::Quadrature(format!(
                "{MAX_INTERVALS} subintervals exhausted on [{a}, {b}], error {total_err:e}"
            )));
        }
        let (idx, _) = intervals
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .expect("nonempty");
        let (lo, hi, v0, e0) = intervals.swap_remove(idx);
        let mid = 0.5 * (lo + hi);
        let (v1, e1) = kronrod(&f, lo, mid);
        let (v2, e2) = kronrod(&f, mid, hi);
        total += v1 + v2 - v0;
        total_err += e1 + e2 - e0;
        intervals.push((lo, mid, v1, e1));
        intervals.push((mid, hi, v2, e2));
    }
    // re-sum to shed the drift of the running totals
    let value = intervals.iter().map(|iv| iv.2).sum();
    let error = intervals.iter().map(|iv| iv.3).sum();
    Ok(Estimate { value, error })
}

/// Integrates a nonnegative, eventually decaying `f` over [a, ∞).
///
/// The half-line is walked in consecutive chunks of width `chunk`; the walk
/// stops once `quiet_chunks` successive chunks each contribute less than
/// `abs_tol` (plus `rel_tol` of the running total).
pub fn integrate_to_infinity<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    chunk: f64,
    abs_tol: f64,
    rel_tol: f64,
) -> Result<Estimate> {
    if !(chunk.is_finite() && chunk > 0.0) {
        return Err(Error::Quadrature(format!("chunk width must be > 0, got {chunk}")));
    }
    const MAX_CHUNKS: usize = 1_000_000;
    let quiet_chunks = 8;
    let mut total = 0.0;
    let mut err = 0.0;
    let mut quiet = 0;
    let mut lo = a;
    for _ in 0..MAX_CHUNKS {
        let hi = lo + chunk;
        let piece = integrate(&f, lo, hi, abs_tol * 1e-3, rel_tol)?;
        total += piece.value;
        err += piece.error;
        if piece.value.abs() < (abs_tol + rel_tol * total.abs()) * 1e-2 {
            quiet += 1;
            if quiet >= quiet_chunks {
                return Ok(Estimate { value: total, error: err });
            }
        } else {
            quiet = 0;
        }
        lo = hi;
    }
    Err(Error::Quadrature(format!(
        "integrand still significant after {MAX_CHUNKS} chunks of width {chunk}"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn polynomial_is_exact() {
        let est = integrate(|x| 3.0 * x * x - x + 2.0, -1.0, 2.0, 1e-14, 1e-14).unwrap();
        assert_relative_eq!(est.value, 9.0 - 1.5 + 6.0, max_relative = 1e-13);
    }

    #[test]
    fn oscillatory_integrand() {
        let est = integrate(|x| (50.0 * x).sin().powi(2), 0.0, PI, 1e-12, 1e-12).unwrap();
        assert_relative_eq!(est.value, PI / 2.0, max_relative = 1e-10);
    }

    #[test]
    fn exponential_tail() {
        let est = integrate_to_infinity(|x| 2.0 * (-2.0 * x).exp(), 0.0, 1.0, 1e-12, 1e-12).unwrap();
        assert_relative_eq!(est.value, 1.0, max_relative = 1e-10);
    }

    #[test]
    fn bad_bounds() {
        assert!(integrate(|x| x, 0.0, f64::INFINITY, 1e-9, 1e-9).is_err());
        assert!(integrate_to_infinity(|x| x, 0.0, 0.0, 1e-9, 1e-9).is_err());
    }
}
