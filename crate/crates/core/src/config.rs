//! Flat `key = value` configuration files.
//!
//! Blank lines and `#` comments are ignored. Later sources override earlier
//! ones through [`KvConfig::merge`]. Missing keys fall back to the reference
//! module, the reference plant, and the default controller tuning.
//!
//! | prefix        | keys |
//! |---------------|------|
//! | `pv.`         | `i_sc_ref i_0_ref r_s r_p n_ideality alpha_i e_g n_series_cells g_ref t_ref` (`r_p = inf` drops the shunt) |
//! | `converter.`  | `inductance capacitance` |
//! | `load.`       | `kind` (`constant_voltage` or `resistive`), `value`, `internal_resistance` |
//! | `plant.`      | `kind` (`pv` or `quadratic`), `mode` (`quasi_static` or `dynamic`) |
//! | `quadratic.`  | `d_star p_star curvature` |
//! | `es.`         | `variant gain_k omega omega_h omega_l amp_a lambda alpha0 beta amplitude_floor pt_q pt_horizon pt_stop_fraction t0 initial_duty` |
//! | `scenario.`   | `duration dt noise_std rng_seed` |
//! | `keyframe.N.` | `time irradiance temperature` |

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::es_controllers::{EsParams, Variant};
use crate::power_stage::{ConverterParams, LoadKind, LoadSpec, Plant, PlantConfig, PlantMode, QuadraticMap};
use crate::pv_model::{Environment, PvModuleParams};
use crate::sim_engine::{Keyframe, Scenario};

pub const PV_KEYS: &[&str] = &[
    "pv.i_sc_ref",
    "pv.i_0_ref",
    "pv.r_s",
    "pv.r_p",
    "pv.n_ideality",
    "pv.alpha_i",
    "pv.e_g",
    "pv.n_series_cells",
    "pv.g_ref",
    "pv.t_ref",
];

pub const PLANT_KEYS: &[&str] = &[
    "converter.inductance",
    "converter.capacitance",
    "load.kind",
    "load.value",
    "load.internal_resistance",
    "plant.kind",
    "plant.mode",
    "quadratic.d_star",
    "quadratic.p_star",
    "quadratic.curvature",
];

pub const CONTROLLER_KEYS: &[&str] = &[
    "es.variant",
    "es.gain_k",
    "es.omega",
    "es.omega_h",
    "es.omega_l",
    "es.amp_a",
    "es.lambda",
    "es.alpha0",
    "es.beta",
    "es.amplitude_floor",
    "es.pt_q",
    "es.pt_horizon",
    "es.pt_stop_fraction",
    "es.t0",
    "es.initial_duty",
];

pub const SCENARIO_KEYS: &[&str] = &["scenario.duration", "scenario.dt", "scenario.noise_std", "scenario.rng_seed"];

const KEYFRAME_FIELDS: &[&str] = &["time", "irradiance", "temperature"];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Entry {
    pub value: String,
    /// `source:line` the value came from.
    pub origin: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct KvConfig {
    entries: BTreeMap<String, Entry>,
}

fn valid_key(key: &str) -> bool {
    !key.is_empty()
        && key.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '.' | '_' | '-'))
        && !key.starts_with('.')
        && !key.ends_with('.')
}

pub fn is_known_key(key: &str) -> bool {
    if [PV_KEYS, PLANT_KEYS, CONTROLLER_KEYS, SCENARIO_KEYS].iter().any(|set| set.contains(&key)) {
        return true;
    }
    let mut parts = key.split('.');
    matches!(
        (parts.next(), parts.next(), parts.next(), parts.next()),
        (Some("keyframe"), Some(idx), Some(field), None)
            if idx.parse::<usize>().is_ok() && KEYFRAME_FIELDS.contains(&field)
    )
}

impl KvConfig {
    pub fn parse(text: &str, source_name: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let err = |message: String| Error::Config { source_name: source_name.to_string(), line, message };
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| err(format!("expected `key = value`, found `{content}`")))?;
            let (key, value) = (key.trim(), value.trim());
            if !valid_key(key) {
                return Err(err(format!("invalid key `{key}`")));
            }
            if value.is_empty() {
                return Err(err(format!("key `{key}` has no value")));
            }
            let entry = Entry { value: value.to_string(), origin: format!("{source_name}:{line}") };
            if let Some(prev) = entries.insert(key.to_string(), entry) {
                return Err(err(format!("duplicate key `{key}` (first set at {})", prev.origin)));
            }
        }
        Ok(Self { entries })
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text, &path.display().to_string())
    }

    /// Overlays `other` on top of `self`.
    pub fn merge(&mut self, other: &KvConfig) {
        for (k, v) in &other.entries {
            self.entries.insert(k.clone(), v.clone());
        }
    }

    pub fn set(&mut self, key: &str, value: &str, origin: &str) -> Result<()> {
        if !valid_key(key) {
            return Err(Error::ConfigValue { key: key.to_string(), message: "invalid key".into() });
        }
        self.entries.insert(key.to_string(), Entry { value: value.to_string(), origin: origin.to_string() });
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|e| e.value.as_str())
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    fn typed<T: FromStr>(&self, key: &str, what: &str) -> Result<Option<T>> {
        match self.entries.get(key) {
            None => Ok(None),
            Some(e) => e.value.parse::<T>().map(Some).map_err(|_| Error::ConfigValue {
                key: key.to_string(),
                message: format!("`{}` at {} is not {what}", e.value, e.origin),
            }),
        }
    }

    pub fn f64_or(&self, key: &str, default: f64) -> Result<f64> {
        Ok(self.typed::<f64>(key, "a number")?.unwrap_or(default))
    }

    pub fn u64_or(&self, key: &str, default: u64) -> Result<u64> {
        Ok(self.typed::<u64>(key, "a non-negative integer")?.unwrap_or(default))
    }

    pub fn bool_or(&self, key: &str, default: bool) -> Result<bool> {
        Ok(self.typed::<bool>(key, "true or false")?.unwrap_or(default))
    }

    /// Fails on the first key outside the documented schema.
    pub fn check_known_keys(&self) -> Result<()> {
        match self.entries.iter().find(|(k, _)| !is_known_key(k)) {
            None => Ok(()),
            Some((k, e)) => Err(Error::ConfigValue {
                key: k.clone(),
                message: format!("unknown key (set at {})", e.origin),
            }),
        }
    }

    /// Sorted `key = value` lines with no provenance; equal snapshots mean
    /// equal inputs.
    pub fn canonical_text(&self) -> String {
        let mut out = String::new();
        for (k, e) in &self.entries {
            let _ = writeln!(out, "{k} = {}", e.value);
        }
        out
    }

    pub fn snapshot(&self) -> BTreeMap<String, String> {
        self.entries.iter().map(|(k, e)| (k.clone(), e.value.clone())).collect()
    }

    /// Subset of entries whose keys describe the plant.
    pub fn plant_snapshot(&self) -> BTreeMap<String, String> {
        self.snapshot()
            .into_iter()
            .filter(|(k, _)| PV_KEYS.contains(&k.as_str()) || PLANT_KEYS.contains(&k.as_str()))
            .collect()
    }
}

pub fn pv_params(cfg: &KvConfig) -> Result<PvModuleParams> {
    let d = PvModuleParams::reference_module();
    let cells = cfg.u64_or("pv.n_series_cells", d.n_series_cells as u64)?;
    let p = PvModuleParams {
        i_sc_ref: cfg.f64_or("pv.i_sc_ref", d.i_sc_ref)?,
        i_0_ref: cfg.f64_or("pv.i_0_ref", d.i_0_ref)?,
        r_s: cfg.f64_or("pv.r_s", d.r_s)?,
        r_p: cfg.f64_or("pv.r_p", d.r_p)?,
        n_ideality: cfg.f64_or("pv.n_ideality", d.n_ideality)?,
        alpha_i: cfg.f64_or("pv.alpha_i", d.alpha_i)?,
        e_g: cfg.f64_or("pv.e_g", d.e_g)?,
        n_series_cells: u32::try_from(cells).map_err(|_| Error::ConfigValue {
            key: "pv.n_series_cells".into(),
            message: "too large".into(),
        })?,
        g_ref: cfg.f64_or("pv.g_ref", d.g_ref)?,
        t_ref: cfg.f64_or("pv.t_ref", d.t_ref)?,
    };
    p.validate()?;
    Ok(p)
}

fn choice<'a>(cfg: &'a KvConfig, key: &str, default: &'a str, allowed: &[&str]) -> Result<&'a str> {
    let v = cfg.get(key).unwrap_or(default);
    if allowed.contains(&v) {
        Ok(v)
    } else {
        Err(Error::ConfigValue { key: key.to_string(), message: format!("`{v}` is not one of {allowed:?}") })
    }
}

pub fn plant_config(cfg: &KvConfig) -> Result<PlantConfig> {
    let d = PlantConfig::reference();
    let kind = match choice(cfg, "load.kind", "constant_voltage", &["constant_voltage", "resistive"])? {
        "resistive" => LoadKind::Resistive,
        _ => LoadKind::ConstantVoltage,
    };
    let mode = match choice(cfg, "plant.mode", "quasi_static", &["quasi_static", "dynamic"])? {
        "dynamic" => PlantMode::Dynamic,
        _ => PlantMode::QuasiStatic,
    };
    let default_load = if kind == LoadKind::Resistive { 40.0 } else { d.load.value };
    let pc = PlantConfig {
        pv: pv_params(cfg)?,
        converter: ConverterParams {
            inductance: cfg.f64_or("converter.inductance", d.converter.inductance)?,
            capacitance: cfg.f64_or("converter.capacitance", d.converter.capacitance)?,
        },
        load: LoadSpec {
            kind,
            value: cfg.f64_or("load.value", default_load)?,
            internal_resistance: cfg.f64_or("load.internal_resistance", 0.0)?,
        },
        mode,
    };
    pc.validate()?;
    Ok(pc)
}

pub fn plant(cfg: &KvConfig) -> Result<Plant> {
    let p = match choice(cfg, "plant.kind", "pv", &["pv", "quadratic"])? {
        "quadratic" => Plant::Quadratic(QuadraticMap {
            d_star: cfg.f64_or("quadratic.d_star", 0.34)?,
            p_star: cfg.f64_or("quadratic.p_star", 17.0)?,
            curvature: cfg.f64_or("quadratic.curvature", -10.0)?,
        }),
        _ => Plant::Pv(plant_config(cfg)?),
    };
    p.validate()?;
    Ok(p)
}

pub fn controller(cfg: &KvConfig) -> Result<EsParams> {
    let d = EsParams::default();
    let variant = match cfg.get("es.variant") {
        Some(v) => Variant::from_str(v)
            .map_err(|e| Error::ConfigValue { key: "es.variant".into(), message: e.to_string() })?,
        None => d.variant,
    };
    let p = EsParams {
        variant,
        gain_k: cfg.f64_or("es.gain_k", d.gain_k)?,
        omega: cfg.f64_or("es.omega", d.omega)?,
        omega_h: cfg.f64_or("es.omega_h", d.omega_h)?,
        omega_l: cfg.f64_or("es.omega_l", d.omega_l)?,
        amp_a: cfg.f64_or("es.amp_a", d.amp_a)?,
        lambda: cfg.f64_or("es.lambda", d.lambda)?,
        alpha0: cfg.f64_or("es.alpha0", d.alpha0)?,
        beta: cfg.f64_or("es.beta", d.beta)?,
        amplitude_floor: cfg.bool_or("es.amplitude_floor", d.amplitude_floor)?,
        pt_q: cfg.f64_or("es.pt_q", d.pt_q)?,
        pt_horizon: cfg.f64_or("es.pt_horizon", d.pt_horizon)?,
        pt_stop_fraction: cfg.f64_or("es.pt_stop_fraction", d.pt_stop_fraction)?,
        t0: cfg.f64_or("es.t0", d.t0)?,
        initial_duty: cfg.f64_or("es.initial_duty", d.initial_duty)?,
    };
    p.validate()?;
    Ok(p)
}

pub fn scenario(cfg: &KvConfig) -> Result<Scenario> {
    let mut indices: Vec<usize> = cfg
        .keys()
        .filter_map(|k| k.strip_prefix("keyframe."))
        .filter_map(|rest| rest.split('.').next()?.parse().ok())
        .collect();
    indices.sort_unstable();
    indices.dedup();
    let std_env = Environment::standard();
    let keyframes = if indices.is_empty() {
        vec![Keyframe { time: 0.0, irradiance: std_env.irradiance, temperature: std_env.temperature }]
    } else {
        indices
            .iter()
            .map(|i| {
                let key = |f: &str| format!("keyframe.{i}.{f}");
                let time = cfg.get(&key("time")).ok_or_else(|| Error::ConfigValue {
                    key: key("time"),
                    message: "every keyframe needs a time".into(),
                })?;
                let time = time.parse().map_err(|_| Error::ConfigValue {
                    key: key("time"),
                    message: format!("`{time}` is not a number"),
                })?;
                Ok(Keyframe {
                    time,
                    irradiance: cfg.f64_or(&key("irradiance"), std_env.irradiance)?,
                    temperature: cfg.f64_or(&key("temperature"), std_env.temperature)?,
                })
            })
            .collect::<Result<Vec<_>>>()?
    };
    let s = Scenario {
        duration: cfg.f64_or("scenario.duration", 100.0)?,
        dt: cfg.f64_or("scenario.dt", 0.01)?,
        keyframes,
        noise_std: cfg.f64_or("scenario.noise_std", 0.0)?,
        rng_seed: cfg.u64_or("scenario.rng_seed", 0)?,
    };
    s.validate()?;
    Ok(s)
}

/// Plant, controller and scenario resolved from one merged config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bundle {
    pub plant: Plant,
    pub controller: EsParams,
    pub scenario: Scenario,
}

impl Bundle {
    pub fn from_config(cfg: &KvConfig) -> Result<Self> {
        cfg.check_known_keys()?;
        Ok(Self { plant: plant(cfg)?, controller: controller(cfg)?, scenario: scenario(cfg)? })
    }
}
