//! Tuning checks and averaged-system diagnostics for the extremum seekers.
//!
//! The averaged system lives in scaled coordinates `(d_f, g_f, eta_f, alpha)`
//! on the fast time scale `omega * t`, specialised to a quadratic map with
//! curvature `h`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::es_controllers::{EsParams, Variant};
use crate::sim_engine::SimTrace;

const MIN_FIT_SAMPLES: usize = 10;
const LOG_FLOOR: f64 = 1e-15;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Eigenvalue {
    pub re: f64,
    pub im: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuningReport {
    pub variant: Variant,
    pub cond_13_ok: bool,
    pub cond_14_ok: bool,
    /// Smallest admissible gain.
    pub k_lower_bound: f64,
    pub degeneracy_warnings: Vec<String>,
    pub h_used: f64,
    pub block_determinant: f64,
    pub jacobian_eigenvalues: Vec<Eigenvalue>,
    pub hurwitz: bool,
}

impl TuningReport {
    pub fn conditions_hold(&self) -> bool {
        self.cond_13_ok && self.cond_14_ok
    }
}

/// Equilibrium of the averaged system in scaled coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AveragedState {
    pub d_tilde_f: f64,
    pub g_hat_f: f64,
    pub eta_tilde_f: f64,
    pub alpha: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub fitted_rate: f64,
    pub r_squared: f64,
    pub window: (f64, f64),
}

fn require_concave(h: f64) -> Result<()> {
    if h < 0.0 && h.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("curvature h must be negative, got {h}")))
    }
}

fn nearly_equal(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

/// Evaluates the decay-rate and gain conditions and the averaged spectrum.
pub fn check_conditions(params: &EsParams, h: f64) -> Result<TuningReport> {
    require_concave(h)?;
    let lambda = params.effective_lambda();
    let (k, wl, wh, w) = (params.gain_k, params.omega_l, params.omega_h, params.omega);

    let cond_13_ok = lambda < 0.5 * wl.min(wh);
    let k_lower_bound = (wl - lambda) * (lambda / wl) / (-h);
    let cond_14_ok = k > k_lower_bound;

    let mut degeneracy_warnings = Vec::new();
    if nearly_equal(wl, lambda) {
        degeneracy_warnings.push(format!("omega_l equals lambda ({lambda})"));
    }
    if nearly_equal(wh, 2.0 * lambda) {
        degeneracy_warnings.push(format!("omega_h equals 2 lambda ({})", 2.0 * lambda));
    }
    let k_degenerate = lambda * (lambda - wl) / (wl * h);
    if nearly_equal(k, k_degenerate) {
        degeneracy_warnings.push(format!("gain_k equals the degenerate value {k_degenerate}"));
    }
    if params.variant != Variant::Classic && lambda == 0.0 {
        degeneracy_warnings.push("lambda is zero; the dither never decays".to_string());
    }

    let trace = 2.0 * lambda - wl;
    let block_determinant = lambda * (lambda - wl) - k * wl * h;
    let disc = 0.25 * trace * trace - block_determinant;
    let mut eig = if disc >= 0.0 {
        let r = disc.sqrt();
        vec![
            Eigenvalue { re: 0.5 * trace + r, im: 0.0 },
            Eigenvalue { re: 0.5 * trace - r, im: 0.0 },
        ]
    } else {
        let r = (-disc).sqrt();
        vec![
            Eigenvalue { re: 0.5 * trace, im: r },
            Eigenvalue { re: 0.5 * trace, im: -r },
        ]
    };
    eig.push(Eigenvalue { re: 2.0 * lambda - wh, im: 0.0 });
    if params.variant != Variant::Classic {
        eig.push(Eigenvalue { re: -lambda, im: 0.0 });
    }
    for e in &mut eig {
        e.re /= w;
        e.im /= w;
    }
    let hurwitz = eig.iter().all(|e| e.re < 0.0);
    Ok(TuningReport {
        variant: params.variant,
        cond_13_ok,
        cond_14_ok,
        k_lower_bound,
        degeneracy_warnings,
        h_used: h,
        block_determinant,
        jacobian_eigenvalues: eig,
        hurwitz,
    })
}

/// Averaged vector field on the fast time scale for a quadratic map.
///
/// State order is `[d_f, g_f, eta_f, alpha]`. The dither scale is frozen in the
/// first three rows, which do not depend on it for a quadratic map.
pub fn averaged_dynamics(params: &EsParams, h: f64, x: &[f64; 4]) -> [f64; 4] {
    let lambda = params.effective_lambda();
    let (k, wl, wh, a) = (params.gain_k, params.omega_l, params.omega_h, params.amp_a);
    let [d, g, eta, alpha] = *x;
    let inv_w = 1.0 / params.omega;
    [
        inv_w * (lambda * d + k * g),
        inv_w * ((lambda - wl) * g + wl * h * d),
        inv_w * ((2.0 * lambda - wh) * eta + wh * 0.5 * h * (d * d + 0.5 * a * a)),
        inv_w * (-lambda * alpha),
    ]
}

pub fn averaged_equilibrium(params: &EsParams, h: f64) -> Result<AveragedState> {
    require_concave(h)?;
    let lambda = params.effective_lambda();
    let denom = params.omega_h - 2.0 * lambda;
    if denom == 0.0 {
        return Err(Error::Degenerate("omega_h equals 2 lambda".into()));
    }
    Ok(AveragedState {
        d_tilde_f: 0.0,
        g_hat_f: 0.0,
        eta_tilde_f: params.omega_h * h * params.amp_a * params.amp_a / (4.0 * denom),
        alpha: if params.variant == Variant::Classic { params.alpha0 } else { 0.0 },
    })
}

/// Window from the first halving of `|error|` to the last sample, or the whole
/// series if it never halves.
pub fn default_rate_window(times: &[f64], errors: &[f64]) -> Option<(f64, f64)> {
    let (first, last) = (errors.first()?.abs(), *times.last()?);
    let start = times
        .iter()
        .zip(errors)
        .find(|(_, e)| e.abs() <= 0.5 * first)
        .map_or(times[0], |(t, _)| *t);
    Some((if start < last { start } else { times[0] }, last))
}

/// Least-squares decay rate of `|error|` on a log scale.
pub fn fit_exponential_rate(times: &[f64], errors: &[f64], window: Option<(f64, f64)>) -> Result<RateFit> {
    if times.len() != errors.len() {
        return Err(Error::InvalidParameter("times and errors differ in length".into()));
    }
    let window = match window {
        Some(w) => w,
        None => default_rate_window(times, errors).ok_or(Error::WindowTooShort(0))?,
    };
    let pts: Vec<(f64, f64)> = times
        .iter()
        .zip(errors)
        .filter(|(t, _)| **t >= window.0 && **t <= window.1)
        .map(|(t, e)| (*t, e.abs().max(LOG_FLOOR).ln()))
        .collect();
    if pts.len() < MIN_FIT_SAMPLES {
        return Err(Error::WindowTooShort(pts.len()));
    }
    let n = pts.len() as f64;
    let mean_t = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let (mut stt, mut sty, mut syy) = (0.0, 0.0, 0.0);
    for (t, y) in &pts {
        let (dt, dy) = (t - mean_t, y - mean_y);
        stt += dt * dt;
        sty += dt * dy;
        syy += dy * dy;
    }
    if stt == 0.0 {
        return Err(Error::WindowTooShort(1));
    }
    let slope = sty / stt;
    let r_squared = if syy == 0.0 { 1.0 } else { (sty * sty / (stt * syy)).clamp(0.0, 1.0) };
    Ok(RateFit { fitted_rate: -slope, r_squared, window })
}

fn sample_near(trace: &SimTrace, t: f64) -> Option<f64> {
    let times = &trace.time;
    let dt = if times.len() > 1 { times[1] - times[0] } else { 0.0 };
    let idx = match times.binary_search_by(|x| x.total_cmp(&t)) {
        Ok(i) => i,
        Err(0) => 0,
        Err(i) if i >= times.len() => times.len() - 1,
        Err(i) => {
            if t - times[i - 1] <= times[i] - t {
                i - 1
            } else {
                i
            }
        }
    };
    let tol = 0.5 * dt + 1e-9 * t.abs().max(1.0);
    ((times[idx] - t).abs() <= tol).then(|| trace.d_hat[idx])
}

/// Checks that the duty estimate is within `tol` of `d_star` at the stop time
/// and no worse there than at half and three quarters of the horizon.
pub fn prescribed_time_check(trace: &SimTrace, d_star: f64, horizon: f64, stop_fraction: f64, tol: f64) -> bool {
    let Some(&t0) = trace.time.first() else {
        return false;
    };
    let err = |frac: f64| sample_near(trace, t0 + frac * horizon).map(|d| (d - d_star).abs());
    let (Some(stop), Some(half), Some(three_q)) = (err(stop_fraction), err(0.5), err(0.75)) else {
        return false;
    };
    stop.is_finite() && stop <= tol && stop <= half && stop <= three_q
}
