use std::path::Path;

use anyhow::Result;
use esmppt::config::Bundle;
use esmppt::export::write_trace;
use esmppt::sim_engine::{compute_metrics, run as run_sim, SimTrace};
use esmppt::Error;

use super::tuning_report;
use crate::inputs::ConfigArgs;
use crate::manifest::{prepare_out_dir, write_json, write_text, RunManifest};
use crate::svg::{LinePlot, Series};
use crate::Outcome;

fn trace_csv(trace: &SimTrace) -> Result<String> {
    let mut buf = Vec::new();
    write_trace(&mut buf, trace)?;
    Ok(String::from_utf8(buf)?)
}

pub fn power_plot(title: &str) -> LinePlot {
    LinePlot::new(title, "time [s]", "power [W]")
}

pub fn run(config: &ConfigArgs, seed: Option<u64>, force: bool, epsilon: f64, out: &Path) -> Result<Outcome> {
    let mut resolved = config.resolve()?;
    if let Some(seed) = seed {
        resolved.config.set("scenario.rng_seed", &seed.to_string(), "--seed")?;
        resolved.sources.push(format!("--seed {seed}"));
    }
    let bundle = Bundle::from_config(&resolved.config)?;
    let report = tuning_report(&bundle)?;
    if !report.conditions_hold() && !force {
        eprintln!("{}", serde_json::to_string_pretty(&report)?);
        eprintln!("error: tuning conditions fail; rerun with --force to simulate anyway");
        return Ok(Outcome::ValidationFailed);
    }
    prepare_out_dir(out)?;

    let mut manifest = RunManifest::new("simulate", out);
    manifest.config_sources = resolved.sources.clone();
    manifest.snapshot.insert("run".into(), resolved.config.snapshot());
    manifest.rng_seeds.push(bundle.scenario.rng_seed);
    manifest.forced = force && !report.conditions_hold();
    manifest.tuning = Some(report);
    write_json(out, "manifest.json", &manifest)?;

    let trace = match run_sim(&bundle.plant, &bundle.controller, &bundle.scenario, None) {
        Ok(t) => t,
        Err(Error::SimulationAborted { time, reason, partial }) => {
            write_text(out, "trace_partial.csv", &trace_csv(&partial)?)?;
            anyhow::bail!("simulation aborted at t = {time} s: {reason}; partial trace written");
        }
        Err(e) => return Err(e.into()),
    };
    let metrics = compute_metrics(&trace, epsilon);

    write_text(out, "trace.csv", &trace_csv(&trace)?)?;
    write_json(out, "metrics.json", &metrics)?;
    let power = power_plot("Power")
        .with(Series::new("measured", &trace.time, &trace.power))
        .with(Series::new("optimum", &trace.time, &trace.oracle_p_star));
    write_text(out, "power.svg", &power.render())?;
    let duty = LinePlot::new("Duty cycle", "time [s]", "duty")
        .with(Series::new("applied", &trace.time, &trace.duty_applied))
        .with(Series::new("estimate", &trace.time, &trace.d_hat))
        .with(Series::new("optimum", &trace.time, &trace.oracle_d_star));
    write_text(out, "duty.svg", &duty.render())?;
    Ok(Outcome::Success)
}
