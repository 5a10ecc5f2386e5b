use thiserror::Error;

use crate::sim_engine::SimTrace;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("solver did not converge: {0}")]
    NoConvergence(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("degenerate parameters: {0}")]
    Degenerate(String),

    #[error("inductor current {0} A is negative; discontinuous conduction is not modelled")]
    ConductionModeViolation(f64),

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("fit window holds {0} samples, at least 10 are required")]
    WindowTooShort(usize),

    #[error(
        "time step {dt} s exceeds the resolution limit {max_dt} s; \
         the largest safe stop fraction at this step is {max_safe_stop_fraction:.4}"
    )]
    ResolutionGuard {
        dt: f64,
        max_dt: f64,
        max_safe_stop_fraction: f64,
    },

    #[error("simulation aborted at t = {time} s: {reason}")]
    SimulationAborted {
        time: f64,
        reason: Box<Error>,
        partial: Box<SimTrace>,
    },

    #[error("{source_name}:{line}: {message}")]
    Config {
        source_name: String,
        line: usize,
        message: String,
    },

    #[error("config key `{key}`: {message}")]
    ConfigValue { key: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn ensure_positive(value: f64, what: &str) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "{what} must be finite and positive, got {value}"
        )))
    }
}

pub(crate) fn ensure_non_negative(value: f64, what: &str) -> Result<()> {
    if value.is_finite() && value >= 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "{what} must be finite and non-negative, got {value}"
        )))
    }
}
