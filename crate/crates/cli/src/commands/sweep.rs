use std::path::Path;

use anyhow::{bail, Context, Result};
use esmppt::config::{is_known_key, Bundle, KvConfig};
use esmppt::sim_engine::{compute_metrics, run as run_sim};
use rayon::prelude::*;

use super::error_rates;
use crate::inputs::ConfigArgs;
use crate::manifest::{prepare_out_dir, write_json, write_text, RunManifest};
use crate::Outcome;

const METRIC_COLUMNS: [&str; 9] = [
    "convergence_time",
    "steady_bias",
    "dither_amplitude_final",
    "tracking_rmse",
    "energy_captured_ratio",
    "d_hat_error_rate",
    "duty_error_rate",
    "power_error_rate",
    "error",
];

fn parse_values(raw: &str, key: &str) -> Result<Vec<String>> {
    let values: Vec<String> = raw.split(',').map(str::trim).filter(|v| !v.is_empty()).map(String::from).collect();
    if values.is_empty() {
        bail!("--values for `{key}` is empty");
    }
    Ok(values)
}

/// Every combination of the axis values, first axis slowest.
fn grid(axes: &[(String, Vec<String>)]) -> Vec<Vec<String>> {
    axes.iter().fold(vec![Vec::new()], |acc, (_, values)| {
        acc.iter()
            .flat_map(|prefix| {
                values.iter().map(move |v| {
                    let mut p = prefix.clone();
                    p.push(v.clone());
                    p
                })
            })
            .collect()
    })
}

fn run_point(base: &KvConfig, axes: &[(String, Vec<String>)], point: &[String], epsilon: f64) -> Vec<String> {
    let attempt = || -> Result<Vec<String>> {
        let mut cfg = base.clone();
        for ((key, _), value) in axes.iter().zip(point) {
            cfg.set(key, value, "--values")?;
        }
        let bundle = Bundle::from_config(&cfg)?;
        let trace = run_sim(&bundle.plant, &bundle.controller, &bundle.scenario, None)?;
        let m = compute_metrics(&trace, epsilon);
        let [d_hat_rate, duty_rate, power_rate] = error_rates(&trace);
        let mut row: Vec<String> = [
            m.convergence_time,
            m.steady_bias,
            m.dither_amplitude_final,
            m.tracking_rmse,
            m.energy_captured_ratio,
            d_hat_rate,
            duty_rate,
            power_rate,
        ]
        .iter()
        .map(f64::to_string)
        .collect();
        row.push(String::new());
        Ok(row)
    };
    attempt().unwrap_or_else(|e| {
        let mut row = vec!["NaN".to_string(); METRIC_COLUMNS.len() - 1];
        row.push(format!("{e:#}"));
        row
    })
}

pub fn run(config: &ConfigArgs, params: &[String], values: &[String], jobs: usize, epsilon: f64, out: &Path) -> Result<Outcome> {
    if params.len() != values.len() {
        bail!("every --param needs one --values list ({} params, {} lists)", params.len(), values.len());
    }
    if params.len() > 2 {
        bail!("sweeps vary at most two parameters");
    }
    let mut axes = Vec::new();
    for (key, raw) in params.iter().zip(values) {
        if !is_known_key(key) {
            bail!("unknown parameter path `{key}`");
        }
        axes.push((key.clone(), parse_values(raw, key)?));
    }
    let resolved = config.resolve()?;
    let points = grid(&axes);
    prepare_out_dir(out)?;

    let pool = rayon::ThreadPoolBuilder::new().num_threads(jobs).build().context("building worker pool")?;
    let rows: Vec<Vec<String>> =
        pool.install(|| points.par_iter().map(|p| run_point(&resolved.config, &axes, p, epsilon)).collect());

    let mut w = csv::Writer::from_writer(Vec::new());
    let header: Vec<&str> = axes.iter().map(|(k, _)| k.as_str()).chain(METRIC_COLUMNS).collect();
    w.write_record(&header)?;
    for (point, row) in points.iter().zip(&rows) {
        w.write_record(point.iter().chain(row))?;
    }
    write_text(out, "sweep.csv", &String::from_utf8(w.into_inner()?)?)?;

    let mut manifest = RunManifest::new("sweep", out);
    manifest.config_sources = resolved.sources;
    manifest.snapshot.insert("base".into(), resolved.config.snapshot());
    manifest.rng_seeds.push(resolved.config.get("scenario.rng_seed").and_then(|s| s.parse().ok()).unwrap_or(0));
    write_json(out, "manifest.json", &manifest)?;
    Ok(Outcome::Success)
}
