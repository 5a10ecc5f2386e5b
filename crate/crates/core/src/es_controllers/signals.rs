use std::f64::consts::TAU;

use super::{EsParams, Variant};
use crate::error::{Error, Result};

/// Perturbation added to the duty estimate and the matching demodulator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dither {
    pub perturb: f64,
    pub demod: f64,
}

/// Blow-up function `T / (T + t0 - t)` on `[t0, t0 + T)`.
pub fn mu(t: f64, t0: f64, horizon: f64) -> Result<f64> {
    if !(horizon > 0.0) {
        return Err(Error::Domain(format!("horizon must be positive, got {horizon}")));
    }
    if !(t >= t0 && t < t0 + horizon) {
        return Err(Error::Domain(format!(
            "t = {t} lies outside the prescribed-time window [{t0}, {})",
            t0 + horizon
        )));
    }
    Ok(horizon / (horizon + t0 - t))
}

fn require_pt(params: &EsParams, what: &str) -> Result<()> {
    if params.variant == Variant::UnbiasedPT {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{what} is defined for the prescribed-time variant only")))
    }
}

/// Dilated-time offset `tau - t0` reached at blow-up value `m`.
fn dilated_offset(q: f64, horizon: f64, m: f64) -> f64 {
    if q == 1.0 {
        horizon * m.ln()
    } else {
        horizon * (m.powf(q - 1.0) - 1.0) / (q - 1.0)
    }
}

/// Closed-form dither scale of the prescribed-time variant.
pub fn alpha_pt_closed_form(params: &EsParams, t: f64) -> Result<f64> {
    require_pt(params, "alpha_pt_closed_form")?;
    let m = mu(t, params.t0, params.pt_horizon)?;
    let lt = params.lambda * params.pt_horizon;
    let q = params.pt_q;
    Ok(if q == 1.0 {
        params.alpha0 * m.powf(-lt)
    } else {
        params.alpha0 * (-(lt / (q - 1.0)) * (m.powf(q - 1.0) - 1.0)).exp()
    })
}

/// Perturbation and demodulation signals at time `t`.
///
/// Constant-frequency sinusoids for the classic and exponential variants,
/// chirps driven by the blow-up clock for the prescribed-time variant.
pub fn dither_signals(params: &EsParams, t: f64) -> Result<Dither> {
    let phase = match params.variant {
        Variant::Classic | Variant::UnbiasedExp => params.omega * t,
        Variant::UnbiasedPT => {
            let m = mu(t, params.t0, params.pt_horizon)?;
            params.omega * (params.t0 + dilated_offset(params.pt_q, params.pt_horizon, m))
        }
    };
    let s = phase.sin();
    Ok(Dither { perturb: params.amp_a * s, demod: 2.0 / params.amp_a * s })
}

/// Maps real time `t` into dilated time.
pub fn time_dilate(params: &EsParams, t: f64) -> Result<f64> {
    require_pt(params, "time_dilate")?;
    let (t0, horizon, q) = (params.t0, params.pt_horizon, params.pt_q);
    mu(t, t0, horizon)?;
    let x = (t - t0) / horizon;
    Ok(if q == 1.0 {
        t0 - horizon * (-x).ln_1p()
    } else {
        t0 + horizon * ((-(q - 1.0) * (-x).ln_1p()).exp_m1()) / (q - 1.0)
    })
}

/// Inverse of [`time_dilate`].
pub fn time_contract(params: &EsParams, tau: f64) -> Result<f64> {
    require_pt(params, "time_contract")?;
    let (t0, horizon, q) = (params.t0, params.pt_horizon, params.pt_q);
    if !(tau >= t0) || !tau.is_finite() {
        return Err(Error::Domain(format!("dilated time {tau} lies before t0 = {t0}")));
    }
    let s = tau - t0;
    Ok(if q == 1.0 {
        t0 - horizon * (-s / horizon).exp_m1()
    } else {
        let ratio = horizon / (horizon + (q - 1.0) * s);
        t0 - horizon * (ratio.ln() / (q - 1.0)).exp_m1()
    })
}

/// Largest stop fraction of the horizon at which the chirp still has at least
/// 50 samples per period with step `dt`.
pub fn max_safe_stop_fraction(params: &EsParams, dt: f64) -> f64 {
    let mu_max = (TAU / (50.0 * dt * params.omega)).powf(1.0 / params.pt_q.max(1.0));
    if mu_max <= 1.0 {
        0.0
    } else {
        1.0 - 1.0 / mu_max
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pt(q: f64) -> EsParams {
        EsParams { variant: Variant::UnbiasedPT, pt_q: q, t0: 0.7, ..EsParams::default() }
    }

    #[test]
    fn mu_values() {
        assert_eq!(mu(2.0, 2.0, 6.0).unwrap(), 1.0);
        assert_eq!(mu(5.0, 2.0, 6.0).unwrap(), 2.0);
        assert!((mu(2.0 + 0.99 * 6.0, 2.0, 6.0).unwrap() - 100.0).abs() < 1e-9);
        assert!(mu(8.0, 2.0, 6.0).is_err());
        assert!(mu(1.9, 2.0, 6.0).is_err());
    }

    #[test]
    fn alpha_closed_form_values() {
        let p = EsParams { lambda: 0.05, ..pt(1.0) };
        assert_eq!(alpha_pt_closed_form(&p, p.t0).unwrap(), p.alpha0);
        let half = alpha_pt_closed_form(&p, p.t0 + 3.0).unwrap();
        assert!((half - 2f64.powf(-0.3)).abs() < 1e-15);
        let late = alpha_pt_closed_form(&p, p.t0 + 6.0 * (1.0 - 1e-12)).unwrap();
        assert!(late < 1e-3);
        let q2 = EsParams { lambda: 0.05, ..pt(2.0) };
        let near = alpha_pt_closed_form(&q2, q2.t0 + 6.0 * (1.0 - 1e-6)).unwrap();
        assert!(near < 1e-100);
        assert!(alpha_pt_closed_form(&EsParams::default(), 0.0).is_err());
    }

    #[test]
    fn pt_dither_starts_at_plain_sine() {
        for q in [1.0, 2.0, 3.0] {
            let p = pt(q);
            let d = dither_signals(&p, p.t0).unwrap();
            assert_eq!(d.perturb, p.amp_a * (p.omega * p.t0).sin());
        }
    }

    #[test]
    fn demodulation_has_unit_mean_product() {
        let p = EsParams::default();
        let n = 10_000;
        let period = TAU / p.omega;
        let mean: f64 = (0..n)
            .map(|k| {
                let d = dither_signals(&p, period * k as f64 / n as f64).unwrap();
                d.perturb * d.demod
            })
            .sum::<f64>()
            / n as f64;
        assert!((mean - 1.0).abs() < 1e-12);
    }

    #[test]
    fn dilation_endpoints() {
        for q in [1.0, 2.0, 3.0] {
            let p = pt(q);
            assert_eq!(time_dilate(&p, p.t0).unwrap(), p.t0);
            assert_eq!(time_contract(&p, p.t0).unwrap(), p.t0);
        }
        assert!(time_dilate(&pt(1.0), 0.7 + 6.0).is_err());
        assert!(time_contract(&pt(1.0), 0.0).is_err());
    }

    #[test]
    fn safe_stop_fraction_matches_guard() {
        let p = EsParams { omega: 20.0, ..pt(1.0) };
        let f = max_safe_stop_fraction(&p, 1e-3);
        let m = 1.0 / (1.0 - f);
        assert!((p.omega * m * 50.0 * 1e-3 - TAU).abs() < 1e-9);
        assert_eq!(max_safe_stop_fraction(&p, 1.0), 0.0);
    }

    proptest! {
        #[test]
        fn dilation_round_trip(q in prop::sample::select(vec![1.0, 1.5, 2.0, 3.0]), frac in 0.0f64..0.999) {
            let p = pt(q);
            let t = p.t0 + frac * p.pt_horizon;
            let back = time_contract(&p, time_dilate(&p, t).unwrap()).unwrap();
            prop_assert!((back - t).abs() < 1e-10);
        }

        #[test]
        fn chirp_matches_dilated_sine(q in prop::sample::select(vec![1.0, 2.0, 3.0]), frac in 0.0f64..=5.0 / 6.0) {
            let p = pt(q);
            let t = p.t0 + frac * p.pt_horizon;
            let tau = time_dilate(&p, t).unwrap();
            let d = dither_signals(&p, t).unwrap();
            prop_assert!((d.perturb - p.amp_a * (p.omega * tau).sin()).abs() < 1e-12);
        }
    }
}
