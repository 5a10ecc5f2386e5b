//! Boost converter between the PV module and its load.
//!
//! In quasi-static mode the converter sits at its averaged steady state, so the
//! duty cycle maps directly to extracted power. Dynamic mode keeps the inductor
//! current and output voltage as states; the PV terminal voltage is then an
//! algebraic function of the inductor current.

use serde::{Deserialize, Serialize};

use crate::error::{ensure_non_negative, ensure_positive, Error, Result};
use crate::pv_model::{CellConditions, Environment, PvModuleParams};
use crate::search::{bisect, golden_section_max};

/// Upper end of the usable duty range.
pub const MAX_DUTY: f64 = 0.98;

const FIXED_POINT_TOL: f64 = 1e-12;
const ORACLE_GRID: usize = 101;
const ORACLE_DUTY_TOL: f64 = 1e-7;
const CURVATURE_STEP: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConverterParams {
    /// H.
    pub inductance: f64,
    /// F.
    pub capacitance: f64,
}

impl Default for ConverterParams {
    fn default() -> Self {
        Self { inductance: 10e-3, capacitance: 1e-3 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LoadKind {
    ConstantVoltage,
    Resistive,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LoadSpec {
    pub kind: LoadKind,
    /// Bus voltage (V) for a constant-voltage load, resistance (Ω) otherwise.
    pub value: f64,
    /// Source resistance of a constant-voltage bus, Ω. Ignored for resistive loads.
    pub internal_resistance: f64,
}

impl LoadSpec {
    pub fn constant_voltage(volts: f64) -> Self {
        Self { kind: LoadKind::ConstantVoltage, value: volts, internal_resistance: 0.0 }
    }

    pub fn resistive(ohms: f64) -> Self {
        Self { kind: LoadKind::Resistive, value: ohms, internal_resistance: 0.0 }
    }

    /// Load current drawn at output voltage `v_o`.
    pub fn output_current(&self, v_o: f64) -> f64 {
        match self.kind {
            LoadKind::ConstantVoltage => (v_o - self.value) / self.internal_resistance,
            LoadKind::Resistive => v_o / self.value,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlantMode {
    QuasiStatic,
    Dynamic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlantConfig {
    pub pv: PvModuleParams,
    pub converter: ConverterParams,
    pub load: LoadSpec,
    pub mode: PlantMode,
}

impl PlantConfig {
    /// Reference module feeding a 34.7 V bus, which puts the optimum near d = 0.34.
    pub fn reference() -> Self {
        Self {
            pv: PvModuleParams::reference_module(),
            converter: ConverterParams::default(),
            load: LoadSpec::constant_voltage(34.7),
            mode: PlantMode::QuasiStatic,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.pv.validate()?;
        ensure_positive(self.load.value, "load.value")?;
        ensure_non_negative(self.load.internal_resistance, "load.internal_resistance")?;
        if self.mode == PlantMode::Dynamic {
            ensure_positive(self.converter.inductance, "converter.inductance")?;
            ensure_positive(self.converter.capacitance, "converter.capacitance")?;
            if self.load.kind == LoadKind::ConstantVoltage && self.load.internal_resistance <= 0.0 {
                return Err(Error::InvalidParameter(
                    "dynamic mode with a constant-voltage load needs load.internal_resistance > 0".into(),
                ));
            }
        }
        Ok(())
    }

    /// Same plant with the converter at steady state.
    pub fn quasi_static(&self) -> Self {
        Self { mode: PlantMode::QuasiStatic, ..*self }
    }
}

impl Default for PlantConfig {
    fn default() -> Self {
        Self::reference()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DynamicPlantState {
    /// A.
    pub inductor_current: f64,
    /// V.
    pub output_voltage: f64,
}

/// Full averaged steady state at one duty cycle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SteadyState {
    pub pv_voltage: f64,
    pub pv_current: f64,
    pub output_voltage: f64,
    pub power: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DutyOptimum {
    pub duty: f64,
    pub power: f64,
    /// Second derivative of power with respect to duty at the optimum, W.
    pub curvature: f64,
}

fn check_duty(duty: f64) -> Result<()> {
    if (0.0..1.0).contains(&duty) {
        Ok(())
    } else {
        Err(Error::Domain(format!("duty must lie in [0, 1), got {duty}")))
    }
}

fn steady_state_with(cfg: &PlantConfig, cell: &CellConditions, duty: f64) -> Result<SteadyState> {
    check_duty(duty)?;
    let gain = 1.0 - duty;
    let load = cfg.load;
    let v = match load.kind {
        LoadKind::ConstantVoltage if load.internal_resistance == 0.0 => gain * load.value,
        LoadKind::ConstantVoltage => {
            let r = load.internal_resistance;
            let hi = cell.open_circuit_voltage()?.max(gain * load.value);
            bisect(
                |v| Ok(v - gain * (load.value + r * gain * cell.current(v)?)),
                0.0,
                hi,
                FIXED_POINT_TOL,
            )?
        }
        LoadKind::Resistive => {
            let v_oc = cell.open_circuit_voltage()?;
            if v_oc == 0.0 {
                0.0
            } else {
                bisect(|v| Ok(v - gain * gain * load.value * cell.current(v)?), 0.0, v_oc, FIXED_POINT_TOL)?
            }
        }
    };
    let i = cell.current(v)?;
    Ok(SteadyState {
        pv_voltage: v,
        pv_current: i,
        output_voltage: if gain > 0.0 { v / gain } else { f64::INFINITY },
        power: v * i,
    })
}

pub fn steady_state_point(cfg: &PlantConfig, env: &Environment, duty: f64) -> Result<SteadyState> {
    cfg.validate()?;
    steady_state_with(cfg, &CellConditions::new(&cfg.pv, env)?, duty)
}

/// Extracted PV power at a fixed duty cycle.
pub fn steady_state_map(cfg: &PlantConfig, env: &Environment, duty: f64) -> Result<f64> {
    if cfg.mode != PlantMode::QuasiStatic {
        return Err(Error::InvalidParameter("steady_state_map needs a quasi-static plant".into()));
    }
    Ok(steady_state_point(cfg, env, duty)?.power)
}

pub fn duty_power_curve(cfg: &PlantConfig, env: &Environment, n_points: usize) -> Result<Vec<(f64, f64)>> {
    if n_points < 2 {
        return Err(Error::InvalidParameter(format!("n_points must be at least 2, got {n_points}")));
    }
    cfg.validate()?;
    let qs = cfg.quasi_static();
    let cell = CellConditions::new(&cfg.pv, env)?;
    (0..n_points)
        .map(|k| {
            let d = MAX_DUTY * k as f64 / (n_points - 1) as f64;
            Ok((d, steady_state_with(&qs, &cell, d)?.power))
        })
        .collect()
}

/// PV terminal voltage that delivers current `i_l`.
pub fn pv_voltage_at_current(cell: &CellConditions, i_l: f64) -> Result<f64> {
    if i_l >= cell.current(0.0)? {
        return Ok(0.0);
    }
    let v_oc = cell.open_circuit_voltage()?;
    if i_l <= 0.0 {
        return Ok(v_oc);
    }
    bisect(|v| Ok(cell.current(v)? - i_l), 0.0, v_oc, 1e-12)
}

pub fn dynamic_step_derivatives(
    cfg: &PlantConfig,
    env: &Environment,
    state: &DynamicPlantState,
    duty: f64,
) -> Result<DynamicPlantState> {
    if cfg.mode != PlantMode::Dynamic {
        return Err(Error::InvalidParameter("dynamic_step_derivatives needs a dynamic plant".into()));
    }
    cfg.validate()?;
    dynamic_derivatives_with(cfg, &CellConditions::new(&cfg.pv, env)?, state, duty).map(|(d, _)| d)
}

/// Converter derivatives plus the PV power drawn at this state.
pub(crate) fn dynamic_derivatives_with(
    cfg: &PlantConfig,
    cell: &CellConditions,
    state: &DynamicPlantState,
    duty: f64,
) -> Result<(DynamicPlantState, f64)> {
    check_duty(duty)?;
    if !(state.inductor_current.is_finite() && state.output_voltage.is_finite()) {
        return Err(Error::NonFinite("converter state".into()));
    }
    if state.inductor_current < 0.0 {
        return Err(Error::ConductionModeViolation(state.inductor_current));
    }
    let v = pv_voltage_at_current(cell, state.inductor_current)?;
    let gain = 1.0 - duty;
    let di = (v - gain * state.output_voltage) / cfg.converter.inductance;
    let dv = (gain * state.inductor_current - cfg.load.output_current(state.output_voltage))
        / cfg.converter.capacitance;
    Ok((
        DynamicPlantState { inductor_current: di, output_voltage: dv },
        v * state.inductor_current,
    ))
}

/// Optimal duty cycle, its power, and the curvature there.
pub fn optimal_duty_oracle(cfg: &PlantConfig, env: &Environment) -> Result<DutyOptimum> {
    cfg.validate()?;
    let qs = cfg.quasi_static();
    let cell = CellConditions::new(&cfg.pv, env)?;
    let power = |d: f64| steady_state_with(&qs, &cell, d).map(|s| s.power);
    let step = MAX_DUTY / (ORACLE_GRID - 1) as f64;
    let mut best_k = 0;
    let mut best_p = f64::NEG_INFINITY;
    for k in 0..ORACLE_GRID {
        let p = power(step * k as f64)?;
        if p > best_p {
            best_p = p;
            best_k = k;
        }
    }
    let lo = step * best_k.saturating_sub(1) as f64;
    let hi = (step * (best_k + 1) as f64).min(MAX_DUTY);
    let (duty, p) = golden_section_max(power, lo, hi, ORACLE_DUTY_TOL)?;
    let (duty, p) = if p >= best_p { (duty, p) } else { (step * best_k as f64, best_p) };
    let dl = (duty - CURVATURE_STEP).max(0.0);
    let dr = dl + 2.0 * CURVATURE_STEP;
    let dm = dl + CURVATURE_STEP;
    let curvature = (power(dr)? - 2.0 * power(dm)? + power(dl)?) / (CURVATURE_STEP * CURVATURE_STEP);
    Ok(DutyOptimum { duty, power: p, curvature })
}

/// Synthetic map `P(d) = p_star + (curvature / 2)(d - d_star)^2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadraticMap {
    pub d_star: f64,
    pub p_star: f64,
    pub curvature: f64,
}

impl QuadraticMap {
    pub fn validate(&self) -> Result<()> {
        if !(self.d_star.is_finite() && self.p_star.is_finite()) {
            return Err(Error::InvalidParameter("quadratic map optimum must be finite".into()));
        }
        if !(self.curvature < 0.0) || !self.curvature.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "quadratic map curvature must be negative, got {}",
                self.curvature
            )));
        }
        Ok(())
    }

    pub fn power(&self, duty: f64) -> f64 {
        let e = duty - self.d_star;
        self.p_star + 0.5 * self.curvature * e * e
    }
}

/// Anything the controllers can be closed around.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Plant {
    Pv(PlantConfig),
    Quadratic(QuadraticMap),
}

impl Plant {
    pub fn validate(&self) -> Result<()> {
        match self {
            Plant::Pv(cfg) => cfg.validate(),
            Plant::Quadratic(map) => map.validate(),
        }
    }

    pub fn is_dynamic(&self) -> bool {
        matches!(self, Plant::Pv(cfg) if cfg.mode == PlantMode::Dynamic)
    }

    /// Static power at `duty` under `env`; dynamic plants use their steady state.
    pub fn power(&self, env: &Environment, duty: f64) -> Result<f64> {
        match self {
            Plant::Pv(cfg) => steady_state_point(cfg, env, duty).map(|s| s.power),
            Plant::Quadratic(map) => Ok(map.power(duty)),
        }
    }

    pub fn optimum(&self, env: &Environment) -> Result<DutyOptimum> {
        match self {
            Plant::Pv(cfg) => optimal_duty_oracle(cfg, env),
            Plant::Quadratic(map) => Ok(DutyOptimum {
                duty: map.d_star,
                power: map.p_star,
                curvature: map.curvature,
            }),
        }
    }
}

impl From<PlantConfig> for Plant {
    fn from(cfg: PlantConfig) -> Self {
        Plant::Pv(cfg)
    }
}

impl From<QuadraticMap> for Plant {
    fn from(map: QuadraticMap) -> Self {
        Plant::Quadratic(map)
    }
}
