use std::path::Path;

use anyhow::{bail, Context, Result};
use esmppt::config::pv_params;
use esmppt::export::write_pv_family;
use esmppt::pv_model::{mpp_oracle, open_circuit_voltage, pv_curve, Environment};
use serde::Serialize;

use crate::inputs::ConfigArgs;
use crate::manifest::{prepare_out_dir, write_json, write_text, RunManifest};
use crate::svg::{LinePlot, Series};
use crate::Outcome;

const KELVIN_OFFSET: f64 = 273.15;

#[derive(Debug, Serialize)]
struct MppRow {
    irradiance: f64,
    temperature: f64,
    v_oc: f64,
    v_mpp: f64,
    i_mpp: f64,
    p_mpp: f64,
}

pub fn run(config: &ConfigArgs, irradiance: &[f64], temperature_c: &[f64], points: usize, out: &Path) -> Result<Outcome> {
    if irradiance.is_empty() || temperature_c.is_empty() {
        bail!("--g and --t need at least one value each");
    }
    let resolved = config.resolve()?;
    let params = pv_params(&resolved.config)?;
    prepare_out_dir(out)?;

    let mut curves = Vec::new();
    let mut mpps = Vec::new();
    let mut plot = LinePlot::new("P-V curves", "voltage [V]", "power [W]");
    for &t_c in temperature_c {
        for &g in irradiance {
            let env = Environment::new(g, t_c + KELVIN_OFFSET)?;
            let context = || format!("solving the module at G = {g} W/m^2, T = {t_c} C");
            let curve = pv_curve(&params, &env, points).with_context(context)?;
            let mpp = mpp_oracle(&params, &env).with_context(context)?;
            let v_oc = open_circuit_voltage(&params, &env).with_context(context)?;
            mpps.push(MppRow {
                irradiance: g,
                temperature: env.temperature,
                v_oc,
                v_mpp: mpp.voltage,
                i_mpp: mpp.current,
                p_mpp: mpp.power,
            });
            let v: Vec<f64> = curve.iter().map(|p| p.voltage).collect();
            let p: Vec<f64> = curve.iter().map(|p| p.power).collect();
            plot.series.push(Series::new(format!("{g} W/m2, {t_c} C"), &v, &p));
            curves.push((env, curve));
        }
    }

    let mut csv = Vec::new();
    write_pv_family(&mut csv, &curves)?;
    write_text(out, "pv_curve.csv", std::str::from_utf8(&csv)?)?;
    write_text(out, "pv_curve.svg", &plot.render())?;
    write_json(out, "mpp.json", &mpps)?;

    let mut manifest = RunManifest::new("pv-curve", out);
    manifest.config_sources = resolved.sources;
    manifest.snapshot.insert("module".into(), resolved.config.snapshot());
    write_json(out, "manifest.json", &manifest)?;
    Ok(Outcome::Success)
}
