pub mod compare;
pub mod pv_curve;
pub mod simulate;
pub mod sweep;
pub mod validate;

use anyhow::Result;
use esmppt::analysis::{check_conditions, fit_exponential_rate, TuningReport};
use esmppt::config::Bundle;
use esmppt::presets;
use esmppt::sim_engine::SimTrace;

use crate::inputs::load_preset;
use crate::Outcome;

pub fn list_presets(name: Option<&str>) -> Result<Outcome> {
    match name {
        None => {
            for n in presets::names() {
                println!("{n}");
            }
        }
        Some(n) => {
            let (cfg, source) = load_preset(n)?;
            println!("# {source}");
            print!("{}", cfg.canonical_text());
        }
    }
    Ok(Outcome::Success)
}

/// Tuning report against the curvature of the plant at the start of the run.
pub fn tuning_report(bundle: &Bundle) -> Result<TuningReport> {
    let env = bundle.scenario.environment_at(bundle.controller.t0);
    let h = bundle.plant.optimum(&env)?.curvature;
    Ok(check_conditions(&bundle.controller, h)?)
}

/// Fitted exponential decay rates of the duty estimate, applied duty and
/// power errors; `NaN` where the trace is too short to fit.
pub fn error_rates(trace: &SimTrace) -> [f64; 3] {
    let err = |x: &[f64], star: &[f64]| -> Vec<f64> { x.iter().zip(star).map(|(a, b)| (a - b).abs()).collect() };
    let rate = |e: Vec<f64>| fit_exponential_rate(&trace.time, &e, None).map(|f| f.fitted_rate).unwrap_or(f64::NAN);
    [
        rate(err(&trace.d_hat, &trace.oracle_d_star)),
        rate(err(&trace.duty_applied, &trace.oracle_d_star)),
        rate(err(&trace.power, &trace.oracle_p_star)),
    ]
}
