//! Safeguarded Newton–bisection for increasing scalar functions.

use crate::error::{Error, Result};

pub const MAX_ITER: usize = 100;

/// Finds the root of an increasing function `f` on `[lo, hi]`, where
/// `f(lo) <= 0 <= f(hi)`. `f` returns `(value, derivative)`.
///
/// Newton steps are taken while they stay strictly inside the current bracket
/// and shrink the residual fast enough; otherwise the bracket is bisected. Once
/// `|f| <= ftol` a single Newton polish step is attempted, so well-conditioned
/// roots come back accurate to a few ulps.
pub fn solve_increasing<F>(mut f: F, mut lo: f64, mut hi: f64, guess: Option<f64>, ftol: f64) -> Result<f64>
where
    F: FnMut(f64) -> (f64, f64),
{
    debug_assert!(lo <= hi && hi.is_finite());
    let mut x = match guess {
        Some(g) if g > lo && g < hi => g,
        _ => 0.5 * (lo + hi),
    };
    let mut dx_old = hi - lo;
    let mut last = f64::INFINITY;

    for _ in 0..MAX_ITER {
        let (fx, dfx) = f(x);
        last = fx;
        if fx.abs() <= ftol {
            if dfx > 0.0 && dfx.is_finite() {
                let xp = x - fx / dfx;
                if xp >= lo && xp <= hi && xp != x {
                    let (fp, _) = f(xp);
                    if fp.abs() <= fx.abs() {
                        return Ok(xp);
                    }
                }
            }
            return Ok(x);
        }
        if fx < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        if hi - lo <= 4.0 * f64::EPSILON * hi.abs().max(lo.abs()).max(f64::MIN_POSITIVE) {
            return Ok(x);
        }

        let newton = if dfx > 0.0 && dfx.is_finite() { Some(x - fx / dfx) } else { None };
        let step_ok = newton
            .map(|xn| xn > lo && xn < hi && (2.0 * fx).abs() <= (dx_old * dfx).abs())
            .unwrap_or(false);
        let xn = if step_ok { newton.unwrap() } else { 0.5 * (lo + hi) };
        dx_old = (xn - x).abs();
        x = xn;
    }
    Err(Error::NonConvergence { what: "scalar Newton-bisection", iterations: MAX_ITER, residual: last })
}

/// Doubles `start` until `value(hi) >= 0`. Used to bracket roots of
/// increasing functions without an a-priori upper bound.
pub fn expand_upper(mut value: impl FnMut(f64) -> f64, start: f64) -> Result<f64> {
    let mut hi = start.max(f64::MIN_POSITIVE);
    for _ in 0..2100 {
        if value(hi) >= 0.0 {
            return Ok(hi);
        }
        hi *= 2.0;
        if !hi.is_finite() {
            break;
        }
    }
    Err(Error::NonConvergence { what: "bracket expansion", iterations: 2100, residual: f64::NAN })
}
