//! Scalar root finding and maximisation helpers.

use crate::error::{Error, Result};

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Golden-section maximisation of a unimodal function on `[lo, hi]`.
///
/// Stops once the bracket is narrower than `tol`; returns the best point seen.
pub fn golden_section_max<F>(mut f: F, lo: f64, hi: f64, tol: f64) -> Result<(f64, f64)>
where
    F: FnMut(f64) -> Result<f64>,
{
    if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
        return Err(Error::InvalidParameter(format!(
            "golden-section bracket [{lo}, {hi}] is invalid"
        )));
    }
    let (mut a, mut b) = (lo, hi);
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = f(x1)?;
    let mut f2 = f(x2)?;
    let mut iterations = 0;
    while b - a > tol && iterations < 200 {
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = f(x2)?;
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = f(x1)?;
        }
        iterations += 1;
    }
    let mid = 0.5 * (a + b);
    let fm = f(mid)?;
    let mut best = (mid, fm);
    for cand in [(x1, f1), (x2, f2)] {
        if cand.1 > best.1 {
            best = cand;
        }
    }
    Ok(best)
}

/// Bisection for a sign change of `g` on `[lo, hi]`.
///
/// Terminates when `|g| <= residual_tol` or the bracket collapses to rounding.
pub fn bisect<F>(mut g: F, lo: f64, hi: f64, residual_tol: f64) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    let (mut a, mut b) = (lo, hi);
    let mut ga = g(a)?;
    let gb = g(b)?;
    if ga == 0.0 {
        return Ok(a);
    }
    if gb == 0.0 {
        return Ok(b);
    }
    if ga.signum() == gb.signum() {
        return Err(Error::NoConvergence(format!(
            "bisection bracket [{lo}, {hi}] has no sign change ({ga}, {gb})"
        )));
    }
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            return Ok(m);
        }
        let gm = g(m)?;
        if gm.abs() <= residual_tol {
            return Ok(m);
        }
        if gm.signum() == ga.signum() {
            a = m;
            ga = gm;
        } else {
            b = m;
        }
    }
    Ok(0.5 * (a + b))
}

/// Number of strict local maxima of a sampled curve, counting sign changes of
/// the first difference from rising to falling (flat steps are skipped).
pub fn count_local_maxima(values: &[f64]) -> usize {
    let mut count = 0;
    let mut last_sign = 0i8;
    for w in values.windows(2) {
        let diff = w[1] - w[0];
        let sign = if diff > 0.0 {
            1
        } else if diff < 0.0 {
            -1
        } else {
            0
        };
        if sign == 0 {
            continue;
        }
        if last_sign == 1 && sign == -1 {
            count += 1;
        }
        last_sign = sign;
    }
    if last_sign == 1 {
        count += 1;
    }
    count
}
