use super::signals::{dither_signals, mu};
use super::{ControllerState, EsParams, Variant};
use crate::error::{Error, Result};
use crate::power_stage::MAX_DUTY;

/// Duty cycle sent to the converter after saturation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AppliedDuty {
    pub duty: f64,
    pub saturated: bool,
}

/// Time derivative of the controller state given the measured power.
pub fn derivatives(params: &EsParams, state: &ControllerState, measured_power: f64, t: f64) -> Result<ControllerState> {
    let scale = match params.variant {
        Variant::UnbiasedPT => mu(t, params.t0, params.pt_horizon)?.powf(params.pt_q),
        _ => 1.0,
    };
    let dither = dither_signals(params, t)?;
    let d_hat = params.gain_k * state.g_hat * scale;
    let g_hat = (-params.omega_l * state.g_hat
        + params.omega_l * (measured_power - state.eta) * (1.0 / state.alpha) * dither.demod)
        * scale;
    let eta = (-params.omega_h * state.eta + params.omega_h * measured_power) * scale;
    let alpha = match params.variant {
        Variant::UnbiasedPT => -(params.lambda * scale * state.alpha),
        _ => -(params.effective_lambda() * (state.alpha - params.alpha_floor())),
    };
    let out = ControllerState { d_hat, g_hat, eta, alpha };
    if out.is_finite() {
        Ok(out)
    } else {
        Err(Error::NonFinite(format!("controller derivatives at t = {t}")))
    }
}

/// `d_hat + alpha * perturb(t)`, clipped to `[0, MAX_DUTY]`.
pub fn applied_duty(params: &EsParams, state: &ControllerState, t: f64) -> Result<AppliedDuty> {
    let raw = state.d_hat + state.alpha * dither_signals(params, t)?.perturb;
    let duty = raw.clamp(0.0, MAX_DUTY);
    Ok(AppliedDuty { duty, saturated: duty != raw })
}

/// State at `t0` with the washout filter warm-started on the first measurement.
pub fn initial_state(params: &EsParams, first_power: f64) -> ControllerState {
    ControllerState { d_hat: params.initial_duty, g_hat: 0.0, eta: first_power, alpha: params.alpha0 }
}
