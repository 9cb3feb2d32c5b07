//! Bracketing root finders used as numeric oracles for the closed-form thresholds.

use crate::error::{Error, Result};

/// Bisection on `[lo, hi]`; `f(lo)` and `f(hi)` must differ in sign.
///
/// Stops when the bracket is narrower than `tol` or an exact zero is hit.
pub fn bisect<F>(f: F, mut lo: f64, mut hi: f64, tol: f64) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    let mut f_lo = f(lo);
    let f_hi = f(hi);
    if f_lo == 0.0 {
        return Ok(lo);
    }
    if f_hi == 0.0 {
        return Ok(hi);
    }
    if f_lo.signum() == f_hi.signum() || f_lo.is_nan() || f_hi.is_nan() {
        return Err(Error::NoBracket { lo, hi, f_lo, f_hi });
    }
    // 200 halvings exhaust any f64 bracket.
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= tol || mid == lo || mid == hi {
            break;
        }
        let f_mid = f(mid);
        if f_mid == 0.0 {
            return Ok(mid);
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Grows `hi` geometrically from `start` until `f` changes sign relative to `f(lo)`.
pub fn expand_bracket<F>(f: F, lo: f64, start: f64, max_hi: f64) -> Option<f64>
where
    F: Fn(f64) -> f64,
{
    let sign = f(lo).signum();
    let mut hi = start;
    while hi <= max_hi {
        if f(hi).signum() != sign {
            return Some(hi);
        }
        hi *= 2.0;
    }
    None
}

/// Locations on `grid` where `f` changes sign between consecutive points,
/// each refined by bisection.
pub fn sign_changes<F>(f: F, grid: &[f64], tol: f64) -> Vec<f64>
where
    F: Fn(f64) -> f64,
{
    let values: Vec<f64> = grid.iter().map(|&x| f(x)).collect();
    grid.windows(2)
        .zip(values.windows(2))
        .filter(|(_, v)| v[0].signum() != v[1].signum())
        .filter_map(|(x, _)| bisect(&f, x[0], x[1], tol).ok())
        .collect()
}
