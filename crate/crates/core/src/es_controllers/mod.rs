//! Extremum-seeking control laws for the duty cycle.
//!
//! Three variants share one state vector `(d_hat, g_hat, eta, alpha)`:
//!
//! * [`Variant::Classic`] keeps the dither amplitude fixed at `alpha0`.
//! * [`Variant::UnbiasedExp`] shrinks the dither exponentially at rate `lambda`
//!   while the demodulation gain grows as `1 / alpha`. With the amplitude floor
//!   enabled, `alpha` settles at `beta` instead of zero.
//! * [`Variant::UnbiasedPT`] runs the same structure on a blow-up clock
//!   `mu(t) = T / (T + t0 - t)`, with chirped dither, so convergence completes
//!   within the horizon `T`.
//!
//! All laws are written in measurable coordinates: the washout input is
//! `P - eta`, never the unknown optimum.

mod law;
mod signals;

pub use law::{applied_duty, derivatives, initial_state, AppliedDuty};
pub use signals::{
    alpha_pt_closed_form, dither_signals, max_safe_stop_fraction, mu, time_contract, time_dilate, Dither,
};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{ensure_non_negative, ensure_positive, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Variant {
    #[serde(rename = "classic")]
    Classic,
    #[serde(rename = "uES")]
    UnbiasedExp,
    #[serde(rename = "uPT-ES")]
    UnbiasedPT,
}

impl Variant {
    pub fn tag(self) -> &'static str {
        match self {
            Variant::Classic => "classic",
            Variant::UnbiasedExp => "uES",
            Variant::UnbiasedPT => "uPT-ES",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Variant {
    type Err = Error;

    /// Accepts `classic`, `ues`/`unbiased_exp` and `uptes`/`upt-es`/`unbiased_pt`,
    /// case-insensitively.
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "classic" => Ok(Variant::Classic),
            "ues" | "unbiased_exp" | "unbiasedexp" => Ok(Variant::UnbiasedExp),
            "uptes" | "upt-es" | "upt_es" | "unbiased_pt" | "unbiasedpt" => Ok(Variant::UnbiasedPT),
            other => Err(Error::InvalidParameter(format!(
                "unknown controller variant `{other}` (expected classic, uES or uPT-ES)"
            ))),
        }
    }
}

/// Tuning of one extremum-seeking controller.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EsParams {
    pub variant: Variant,
    /// Integrator gain on the gradient estimate.
    pub gain_k: f64,
    /// Dither frequency, rad/s.
    pub omega: f64,
    /// Washout (high-pass) corner, rad/s.
    pub omega_h: f64,
    /// Gradient low-pass corner, rad/s.
    pub omega_l: f64,
    /// Dither amplitude.
    pub amp_a: f64,
    /// Dither decay rate, 1/s. Ignored by the classic variant.
    pub lambda: f64,
    /// Initial dither scale.
    pub alpha0: f64,
    /// Dither floor reached when `amplitude_floor` is set.
    pub beta: f64,
    /// Enables the floor `alpha -> beta` for the exponential variant.
    pub amplitude_floor: bool,
    /// Blow-up exponent, at least 1.
    pub pt_q: f64,
    /// Prescribed horizon `T`, s.
    pub pt_horizon: f64,
    /// Fraction of the horizon after which prescribed-time runs stop.
    pub pt_stop_fraction: f64,
    /// Start time, s.
    pub t0: f64,
    /// Duty estimate at `t0`.
    pub initial_duty: f64,
}

impl Default for EsParams {
    fn default() -> Self {
        Self {
            variant: Variant::UnbiasedExp,
            gain_k: 0.01,
            omega: 5.0,
            omega_h: 3.0,
            omega_l: 3.0,
            amp_a: 0.2,
            lambda: 0.05,
            alpha0: 1.0,
            beta: 0.1,
            amplitude_floor: true,
            pt_q: 1.0,
            pt_horizon: 6.0,
            pt_stop_fraction: 5.0 / 6.0,
            t0: 0.0,
            initial_duty: 0.25,
        }
    }
}

impl EsParams {
    pub fn validate(&self) -> Result<()> {
        ensure_positive(self.gain_k, "gain_k")?;
        ensure_positive(self.omega, "omega")?;
        ensure_positive(self.omega_h, "omega_h")?;
        ensure_positive(self.omega_l, "omega_l")?;
        ensure_positive(self.amp_a, "amp_a")?;
        ensure_positive(self.alpha0, "alpha0")?;
        ensure_non_negative(self.beta, "beta")?;
        if self.variant != Variant::Classic {
            ensure_non_negative(self.lambda, "lambda")?;
        }
        if !self.t0.is_finite() || !self.initial_duty.is_finite() {
            return Err(Error::InvalidParameter("t0 and initial_duty must be finite".into()));
        }
        if self.variant == Variant::UnbiasedPT {
            if !(self.pt_q >= 1.0) || !self.pt_q.is_finite() {
                return Err(Error::InvalidParameter(format!("pt_q must be >= 1, got {}", self.pt_q)));
            }
            ensure_positive(self.pt_horizon, "pt_horizon")?;
            if !(self.pt_stop_fraction > 0.0 && self.pt_stop_fraction < 1.0) {
                return Err(Error::InvalidParameter(format!(
                    "pt_stop_fraction must lie in (0, 1), got {}",
                    self.pt_stop_fraction
                )));
            }
        }
        Ok(())
    }

    /// Decay rate actually applied to `alpha`.
    pub fn effective_lambda(&self) -> f64 {
        match self.variant {
            Variant::Classic => 0.0,
            _ => self.lambda,
        }
    }

    /// Level `alpha` relaxes towards: `alpha0` for classic, `beta` with the
    /// floor enabled, zero otherwise.
    pub fn alpha_floor(&self) -> f64 {
        match self.variant {
            Variant::Classic => self.alpha0,
            Variant::UnbiasedExp if self.amplitude_floor => self.beta,
            _ => 0.0,
        }
    }

    /// Time at which a run of this controller ends, given a requested duration.
    pub fn stop_time(&self, duration: f64) -> f64 {
        match self.variant {
            Variant::UnbiasedPT => (self.t0 + duration).min(self.t0 + self.pt_stop_fraction * self.pt_horizon),
            _ => self.t0 + duration,
        }
    }
}

/// Live controller states.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControllerState {
    /// Duty estimate.
    pub d_hat: f64,
    /// Gradient estimate.
    pub g_hat: f64,
    /// Washout filter state (filtered power).
    pub eta: f64,
    /// Dither scale.
    pub alpha: f64,
}

impl ControllerState {
    pub fn to_array(self) -> [f64; 4] {
        [self.d_hat, self.g_hat, self.eta, self.alpha]
    }

    pub fn from_array(a: [f64; 4]) -> Self {
        Self { d_hat: a[0], g_hat: a[1], eta: a[2], alpha: a[3] }
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|v| v.is_finite())
    }
}
