use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{bail, Result};
use esmppt::config::{Bundle, KvConfig};
use esmppt::es_controllers::Variant;
use esmppt::sim_engine::{compute_metrics, run as run_sim, MetricsReport};
use serde::Serialize;

use super::simulate::power_plot;
use crate::inputs::load_preset;
use crate::manifest::{prepare_out_dir, write_json, write_text, RunManifest};
use crate::svg::Series;
use crate::Outcome;

#[derive(Debug, Serialize)]
struct Row {
    preset: String,
    variant: Variant,
    metrics: MetricsReport,
}

#[derive(Debug, Serialize)]
struct Ranking {
    duration: f64,
    dt: f64,
    epsilon: f64,
    rows: Vec<Row>,
    /// Best preset per metric; `null` when no value is finite.
    winners: BTreeMap<String, Option<String>>,
}

const LOWER_IS_BETTER: [&str; 4] = ["convergence_time", "steady_bias", "dither_amplitude_final", "tracking_rmse"];

fn metric(m: &MetricsReport, name: &str) -> f64 {
    match name {
        "convergence_time" => m.convergence_time,
        "steady_bias" => m.steady_bias,
        "dither_amplitude_final" => m.dither_amplitude_final,
        "tracking_rmse" => m.tracking_rmse,
        _ => m.energy_captured_ratio,
    }
}

fn winner(rows: &[Row], name: &str, lower: bool) -> Option<String> {
    rows.iter()
        .filter(|r| metric(&r.metrics, name).is_finite())
        .min_by(|a, b| {
            let (x, y) = (metric(&a.metrics, name), metric(&b.metrics, name));
            if lower { x.total_cmp(&y) } else { y.total_cmp(&x) }
        })
        .map(|r| r.preset.clone())
}

pub fn run(presets: &[String], sets: &[String], duration: Option<f64>, dt: Option<f64>, epsilon: f64, out: &Path) -> Result<Outcome> {
    let mut configs: Vec<(String, KvConfig, Bundle)> = Vec::new();
    let mut sources = Vec::new();
    for name in presets {
        let (mut cfg, src) = load_preset(name)?;
        sources.push(src);
        for kv in sets {
            let Some((k, v)) = kv.split_once('=') else {
                bail!("--set expects KEY=VALUE, got `{kv}`");
            };
            cfg.set(k.trim(), v.trim(), "--set")?;
        }
        let bundle = Bundle::from_config(&cfg)?;
        if let Some((first, _, b0)) = configs.first() {
            if b0.plant != bundle.plant {
                bail!("preset `{name}` uses a different plant than `{first}`; compare needs one shared plant");
            }
        }
        configs.push((name.clone(), cfg, bundle));
    }
    sources.extend(sets.iter().map(|kv| format!("--set {kv}")));

    let mut scenario = configs[0].2.scenario.clone();
    scenario.duration = duration.unwrap_or_else(|| configs.iter().map(|c| c.2.scenario.duration).fold(f64::INFINITY, f64::min));
    scenario.dt = dt.unwrap_or_else(|| configs.iter().map(|c| c.2.scenario.dt).fold(f64::INFINITY, f64::min));
    prepare_out_dir(out)?;

    let mut rows = Vec::new();
    let mut plot = power_plot("Power by controller");
    let mut manifest = RunManifest::new("compare", out);
    manifest.config_sources = sources;
    for (name, cfg, bundle) in &configs {
        let trace = run_sim(&bundle.plant, &bundle.controller, &scenario, None)?;
        if rows.is_empty() {
            plot.series.push(Series::new("optimum", &trace.time, &trace.oracle_p_star));
        }
        plot.series.push(Series::new(name.as_str(), &trace.time, &trace.power));
        rows.push(Row { preset: name.clone(), variant: bundle.controller.variant, metrics: compute_metrics(&trace, epsilon) });
        manifest.snapshot.insert(name.clone(), cfg.snapshot());
        manifest.rng_seeds.push(scenario.rng_seed);
    }

    let mut winners = BTreeMap::new();
    for name in LOWER_IS_BETTER {
        winners.insert(name.to_string(), winner(&rows, name, true));
    }
    winners.insert("energy_captured_ratio".into(), winner(&rows, "energy_captured_ratio", false));

    let mut table = csv::Writer::from_writer(Vec::new());
    table.write_record(["preset", "variant", "convergence_time", "steady_bias", "dither_amplitude_final", "tracking_rmse", "energy_captured_ratio"])?;
    for r in &rows {
        let m = &r.metrics;
        let mut rec = vec![r.preset.clone(), r.variant.to_string()];
        rec.extend(
            [m.convergence_time, m.steady_bias, m.dither_amplitude_final, m.tracking_rmse, m.energy_captured_ratio]
                .map(|v| v.to_string()),
        );
        table.write_record(&rec)?;
    }
    let table = String::from_utf8(table.into_inner()?)?;
    let ranking = Ranking { duration: scenario.duration, dt: scenario.dt, epsilon, rows, winners };
    write_json(out, "ranking.json", &ranking)?;
    write_text(out, "ranking.csv", &table)?;
    write_text(out, "compare.svg", &plot.render())?;
    write_json(out, "manifest.json", &manifest)?;
    Ok(Outcome::Success)
}
