//! Single-diode photovoltaic module.
//!
//! A module is `n_series_cells` identical cells in series: the module voltage is
//! split evenly across cells and the same current flows through each of them.
//! `r_s` and `r_p` are per-cell resistances. Setting `r_p` to
//! [`f64::INFINITY`] drops the shunt branch.

use serde::{Deserialize, Serialize};

use crate::error::{ensure_non_negative, ensure_positive, Error, Result};
use crate::search::{bisect, golden_section_max};

/// Boltzmann constant, J/K.
pub const BOLTZMANN: f64 = 1.380649e-23;
/// Elementary charge, C.
pub const ELEMENTARY_CHARGE: f64 = 1.602176634e-19;

const NEWTON_MAX_ITER: usize = 100;
const RESIDUAL_TOL: f64 = 1e-10;
const ORACLE_GRID: usize = 1024;
const ORACLE_VOLTAGE_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PvModuleParams {
    /// Short-circuit current at reference conditions, A.
    pub i_sc_ref: f64,
    /// Diode saturation current at reference temperature, A.
    pub i_0_ref: f64,
    /// Series resistance per cell, Ω.
    pub r_s: f64,
    /// Shunt resistance per cell, Ω.
    pub r_p: f64,
    pub n_ideality: f64,
    /// Temperature coefficient of the short-circuit current, A/K.
    pub alpha_i: f64,
    /// Band gap, eV.
    pub e_g: f64,
    pub n_series_cells: u32,
    /// Reference irradiance, W/m².
    pub g_ref: f64,
    /// Reference temperature, K.
    pub t_ref: f64,
}

impl PvModuleParams {
    /// 60-cell silicon module used throughout the examples and presets.
    pub fn reference_module() -> Self {
        Self {
            i_sc_ref: 5.5,
            i_0_ref: 1e-10,
            r_s: 0.5,
            r_p: 200.0,
            n_ideality: 1.2,
            alpha_i: 0.0047,
            e_g: 1.121,
            n_series_cells: 60,
            g_ref: 1000.0,
            t_ref: 298.15,
        }
    }

    pub fn validate(&self) -> Result<()> {
        ensure_positive(self.i_sc_ref, "i_sc_ref")?;
        ensure_positive(self.i_0_ref, "i_0_ref")?;
        ensure_non_negative(self.r_s, "r_s")?;
        if !(self.r_p > 0.0) {
            return Err(Error::InvalidParameter(format!("r_p must be positive, got {}", self.r_p)));
        }
        ensure_positive(self.n_ideality, "n_ideality")?;
        if !self.alpha_i.is_finite() {
            return Err(Error::InvalidParameter("alpha_i must be finite".into()));
        }
        ensure_non_negative(self.e_g, "e_g")?;
        if self.n_series_cells < 1 {
            return Err(Error::InvalidParameter("n_series_cells must be at least 1".into()));
        }
        ensure_positive(self.g_ref, "g_ref")?;
        ensure_positive(self.t_ref, "t_ref")?;
        Ok(())
    }
}

impl Default for PvModuleParams {
    fn default() -> Self {
        Self::reference_module()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Environment {
    /// W/m².
    pub irradiance: f64,
    /// K.
    pub temperature: f64,
}

impl Environment {
    pub fn new(irradiance: f64, temperature: f64) -> Result<Self> {
        let env = Self { irradiance, temperature };
        env.validate()?;
        Ok(env)
    }

    /// 1000 W/m² at 25 °C.
    pub fn standard() -> Self {
        Self { irradiance: 1000.0, temperature: 298.15 }
    }

    pub fn validate(&self) -> Result<()> {
        ensure_non_negative(self.irradiance, "irradiance")?;
        ensure_positive(self.temperature, "temperature")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IvPoint {
    pub voltage: f64,
    pub current: f64,
    pub power: f64,
}

impl IvPoint {
    pub fn new(voltage: f64, current: f64) -> Self {
        Self { voltage, current, power: voltage * current }
    }
}

pub fn thermal_voltage(temperature: f64) -> f64 {
    BOLTZMANN * temperature / ELEMENTARY_CHARGE
}

pub fn photo_current(params: &PvModuleParams, env: &Environment) -> f64 {
    (params.i_sc_ref + params.alpha_i * (env.temperature - params.t_ref)) * env.irradiance / params.g_ref
}

pub fn saturation_current(params: &PvModuleParams, temperature: f64) -> f64 {
    let ratio = temperature / params.t_ref;
    let exponent = ELEMENTARY_CHARGE * params.e_g / (params.n_ideality * BOLTZMANN)
        * (1.0 / params.t_ref - 1.0 / temperature);
    params.i_0_ref * ratio.powi(3) * exponent.exp()
}

/// Operating-point constants of one module under one environment.
///
/// Building this once and calling [`CellConditions::current`] repeatedly avoids
/// recomputing the photocurrent and saturation current for every voltage.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellConditions {
    pub photo_current: f64,
    pub saturation_current: f64,
    /// n·V_T, V.
    pub diode_voltage: f64,
    pub r_s: f64,
    pub r_p: f64,
    pub n_series_cells: f64,
}

impl CellConditions {
    pub fn new(params: &PvModuleParams, env: &Environment) -> Result<Self> {
        params.validate()?;
        env.validate()?;
        Ok(Self {
            photo_current: photo_current(params, env),
            saturation_current: saturation_current(params, env.temperature),
            diode_voltage: params.n_ideality * thermal_voltage(env.temperature),
            r_s: params.r_s,
            r_p: params.r_p,
            n_series_cells: params.n_series_cells as f64,
        })
    }

    pub fn residual(&self, module_voltage: f64, current: f64) -> f64 {
        let u = module_voltage / self.n_series_cells + current * self.r_s;
        current - self.photo_current
            + self.saturation_current * (u / self.diode_voltage).exp_m1()
            + u / self.r_p
    }

    fn residual_slope(&self, module_voltage: f64, current: f64) -> f64 {
        let u = module_voltage / self.n_series_cells + current * self.r_s;
        1.0 + self.saturation_current * self.r_s / self.diode_voltage * (u / self.diode_voltage).exp()
            + self.r_s / self.r_p
    }

    /// Terminal current at `module_voltage` by damped Newton from the photocurrent.
    ///
    /// The iteration is kept inside a sign-change bracket; a start point whose
    /// diode exponent would overflow is pulled back to the largest plausible
    /// junction voltage first.
    pub fn current(&self, module_voltage: f64) -> Result<f64> {
        if !(module_voltage >= 0.0) || !module_voltage.is_finite() {
            return Err(Error::Domain(format!("module voltage must be finite and >= 0, got {module_voltage}")));
        }
        let vc = module_voltage / self.n_series_cells;
        if self.r_s == 0.0 {
            let i = self.photo_current - self.saturation_current * (vc / self.diode_voltage).exp_m1() - vc / self.r_p;
            return self.accept(module_voltage, i, self.residual(module_voltage, i));
        }
        let (mut lo, mut hi) = (-vc / self.r_s, self.photo_current);
        let u_cap = self.diode_voltage * ((self.photo_current.max(0.0) + 1.0) / self.saturation_current).ln();
        let mut i = self.photo_current;
        if vc + i * self.r_s > u_cap {
            i = ((u_cap - vc) / self.r_s).clamp(lo, hi);
        }
        let mut r = self.residual(module_voltage, i);
        for _ in 0..NEWTON_MAX_ITER {
            if !r.is_finite() || r.abs() <= RESIDUAL_TOL * 1e-2 {
                break;
            }
            if r > 0.0 {
                hi = i;
            } else {
                lo = i;
            }
            let mut step = r / self.residual_slope(module_voltage, i);
            let mut next = i - step;
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
                step = i - next;
            }
            let mut r_next = self.residual(module_voltage, next);
            let mut halvings = 0;
            while !(r_next.abs() < r.abs()) && halvings < 60 {
                step *= 0.5;
                next = i - step;
                r_next = self.residual(module_voltage, next);
                halvings += 1;
            }
            if next == i || !(r_next.abs() < r.abs()) {
                break;
            }
            i = next;
            r = r_next;
        }
        self.accept(module_voltage, i, r)
    }

    fn accept(&self, module_voltage: f64, current: f64, residual: f64) -> Result<f64> {
        if residual.abs() <= RESIDUAL_TOL && current.is_finite() {
            Ok(current)
        } else {
            Err(Error::NoConvergence(format!(
                "single-diode current at V = {module_voltage} V (residual {residual:e})"
            )))
        }
    }

    /// Voltage at which the terminal current vanishes.
    pub fn open_circuit_voltage(&self) -> Result<f64> {
        if self.photo_current <= 0.0 {
            return Ok(0.0);
        }
        let ideal = self.n_series_cells
            * self.diode_voltage
            * (self.photo_current / self.saturation_current).ln_1p();
        let mut hi = ideal.max(1e-6);
        while self.current(hi)? > 0.0 {
            hi *= 2.0;
        }
        bisect(|v| self.current(v), 0.0, hi, 0.0)
    }
}

pub fn solve_current(params: &PvModuleParams, env: &Environment, module_voltage: f64) -> Result<f64> {
    CellConditions::new(params, env)?.current(module_voltage)
}

pub fn open_circuit_voltage(params: &PvModuleParams, env: &Environment) -> Result<f64> {
    CellConditions::new(params, env)?.open_circuit_voltage()
}

/// Uniform voltage sweep from short circuit to open circuit.
pub fn pv_curve(params: &PvModuleParams, env: &Environment, n_points: usize) -> Result<Vec<IvPoint>> {
    if n_points < 2 {
        return Err(Error::InvalidParameter(format!("n_points must be at least 2, got {n_points}")));
    }
    let cell = CellConditions::new(params, env)?;
    let v_oc = cell.open_circuit_voltage()?;
    (0..n_points)
        .map(|k| {
            let v = v_oc * k as f64 / (n_points - 1) as f64;
            Ok(IvPoint::new(v, cell.current(v)?))
        })
        .collect()
}

/// Maximum power point by grid scan plus golden-section refinement.
pub fn mpp_oracle(params: &PvModuleParams, env: &Environment) -> Result<IvPoint> {
    mpp_oracle_with_grid(params, env, ORACLE_GRID)
}

pub fn mpp_oracle_with_grid(params: &PvModuleParams, env: &Environment, grid_points: usize) -> Result<IvPoint> {
    let cell = CellConditions::new(params, env)?;
    if cell.photo_current <= 0.0 {
        return Ok(IvPoint::new(0.0, 0.0));
    }
    let v_oc = cell.open_circuit_voltage()?;
    let n = grid_points.max(3);
    let step = v_oc / (n - 1) as f64;
    let mut best = IvPoint::new(0.0, cell.current(0.0)?);
    let mut best_k = 0;
    for k in 1..n {
        let v = step * k as f64;
        let p = IvPoint::new(v, cell.current(v)?);
        if p.power > best.power {
            best = p;
            best_k = k;
        }
    }
    let lo = step * best_k.saturating_sub(1) as f64;
    let hi = (step * (best_k + 1) as f64).min(v_oc);
    let (v, _) = golden_section_max(|v| Ok(v * cell.current(v)?), lo, hi, ORACLE_VOLTAGE_TOL)?;
    let refined = IvPoint::new(v, cell.current(v)?);
    Ok(if refined.power >= best.power { refined } else { best })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::search::count_local_maxima;
    use proptest::prelude::*;

    fn reference() -> PvModuleParams {
        PvModuleParams::reference_module()
    }

    fn at(g: f64, t: f64) -> Environment {
        Environment::new(g, t).unwrap()
    }

    fn ideal_diode() -> PvModuleParams {
        PvModuleParams { r_s: 0.0, r_p: f64::INFINITY, ..reference() }
    }

    #[test]
    fn photo_current_reference_and_dark() {
        let p = reference();
        assert_eq!(photo_current(&p, &Environment::standard()), 5.5);
        assert_eq!(photo_current(&p, &at(0.0, 310.0)), 0.0);
    }

    #[test]
    fn photo_current_half_sun() {
        assert!((photo_current(&reference(), &at(500.0, 298.15)) - 2.75).abs() < 1e-15);
    }

    #[test]
    fn saturation_current_at_reference() {
        assert_eq!(saturation_current(&reference(), 298.15), 1e-10);
    }

    #[test]
    fn saturation_current_hot_golden() {
        let hot = saturation_current(&reference(), 323.15);
        assert!((hot / 2.120947794897e-9 - 1.0).abs() < 1e-11, "{hot:e}");
    }

    #[test]
    fn ideal_short_circuit_is_photo_current() {
        let p = ideal_diode();
        let env = Environment::standard();
        let i = solve_current(&p, &env, 0.0).unwrap();
        assert!((i - photo_current(&p, &env)).abs() < 1e-12);
    }

    #[test]
    fn ideal_open_circuit_closed_form() {
        let p = ideal_diode();
        let env = Environment::standard();
        let n_vt = p.n_ideality * thermal_voltage(env.temperature);
        let v_oc = p.n_series_cells as f64 * n_vt * (photo_current(&p, &env) / p.i_0_ref).ln_1p();
        let i = solve_current(&p, &env, v_oc).unwrap();
        assert!(i.abs() < 1e-10, "{i:e}");
        assert!((open_circuit_voltage(&p, &env).unwrap() - v_oc).abs() < 1e-9);
    }

    #[test]
    fn reference_module_golden_values() {
        // Frozen from an independent brentq/minimize_scalar oracle.
        let env = Environment::standard();
        let v_oc = open_circuit_voltage(&reference(), &env).unwrap();
        assert!((v_oc - 45.74700413658417).abs() < 1e-8, "{v_oc}");
        let i_sc = solve_current(&reference(), &env, 0.0).unwrap();
        assert!((i_sc - 1.5051685018569092).abs() < 1e-10, "{i_sc}");
        let mpp = mpp_oracle(&reference(), &env).unwrap();
        assert!((mpp.voltage - 22.8840539053328).abs() < 1e-4, "{mpp:?}");
        assert!((mpp.power - 17.231986342271146).abs() < 1e-9, "{mpp:?}");
    }

    #[test]
    fn curve_is_monotone_and_unimodal() {
        let curve = pv_curve(&reference(), &Environment::standard(), 200).unwrap();
        assert_eq!(curve.len(), 200);
        assert!(curve.windows(2).all(|w| w[1].current <= w[0].current));
        let powers: Vec<f64> = curve.iter().map(|p| p.power).collect();
        assert_eq!(count_local_maxima(&powers), 1);
        assert_eq!(curve[0].voltage, 0.0);
        assert!(curve.last().unwrap().current.abs() < 1e-9);
    }

    #[test]
    fn curve_needs_two_points() {
        assert!(matches!(
            pv_curve(&reference(), &Environment::standard(), 1),
            Err(Error::InvalidParameter(_))
        ));
    }

    #[test]
    fn irradiance_and_temperature_trends() {
        let p = reference();
        let base = at(1000.0, 298.15);
        let bright = at(2000.0, 298.15);
        let hot = at(1000.0, 338.15);
        let mpp = |e: &Environment| mpp_oracle(&p, e).unwrap().power;
        assert!(mpp(&bright) > mpp(&base));
        assert!(solve_current(&p, &bright, 0.0).unwrap() > solve_current(&p, &base, 0.0).unwrap());
        assert!(open_circuit_voltage(&p, &hot).unwrap() < open_circuit_voltage(&p, &base).unwrap());
        assert!(mpp(&hot) < mpp(&base));
    }

    #[test]
    fn dark_module_has_zero_mpp() {
        let mpp = mpp_oracle(&reference(), &at(0.0, 298.15)).unwrap();
        assert_eq!(mpp, IvPoint::new(0.0, 0.0));
    }

    #[test]
    fn oracle_monotone_in_irradiance() {
        let p = reference();
        let pw = |g| mpp_oracle(&p, &at(g, 298.15)).unwrap().power;
        let (lo, mid, hi) = (pw(600.0), pw(800.0), pw(1000.0));
        assert!(lo < mid && mid < hi);
    }

    #[test]
    fn oracle_beats_every_grid_point() {
        let p = reference();
        let env = Environment::standard();
        let mpp = mpp_oracle(&p, &env).unwrap();
        for pt in pv_curve(&p, &env, 1024).unwrap() {
            assert!(mpp.power >= pt.power);
        }
    }

    #[test]
    fn oracle_grid_density_invariance() {
        let p = reference();
        let env = at(700.0, 310.0);
        let a = mpp_oracle_with_grid(&p, &env, 1024).unwrap();
        let b = mpp_oracle_with_grid(&p, &env, 2048).unwrap();
        assert!((a.voltage - b.voltage).abs() < 1e-6 * 5.0);
        assert!((a.power - b.power).abs() < 1e-10);
    }

    #[test]
    fn rejects_negative_voltage_and_bad_params() {
        assert!(matches!(
            solve_current(&reference(), &Environment::standard(), -1.0),
            Err(Error::Domain(_))
        ));
        let bad = PvModuleParams { n_series_cells: 0, ..reference() };
        assert!(bad.validate().is_err());
        assert!(Environment::new(-1.0, 300.0).is_err());
        assert!(Environment::new(100.0, 0.0).is_err());
    }

    proptest! {
        #[test]
        fn residual_within_tolerance(
            g in 0.0f64..1500.0,
            t in 250.0f64..350.0,
            frac in 0.0f64..1.0,
        ) {
            let p = reference();
            let env = at(g, t);
            let cell = CellConditions::new(&p, &env).unwrap();
            let v = cell.open_circuit_voltage().unwrap() * frac;
            let i = cell.current(v).unwrap();
            prop_assert!(cell.residual(v, i).abs() <= 1e-10);
        }

        #[test]
        fn current_non_increasing(
            g in 50.0f64..1500.0,
            t in 260.0f64..340.0,
            r_s in 0.0f64..1.0,
            r_p in 50.0f64..1000.0,
        ) {
            let p = PvModuleParams { r_s, r_p, ..reference() };
            let curve = pv_curve(&p, &at(g, t), 200).unwrap();
            for w in curve.windows(2) {
                prop_assert!(w[1].current <= w[0].current + 1e-12);
            }
            let powers: Vec<f64> = curve.iter().map(|q| q.power).collect();
            prop_assert_eq!(count_local_maxima(&powers), 1);
        }

        #[test]
        fn photo_current_linear_in_g(g in 0.0f64..2000.0, t in 250.0f64..350.0) {
            let p = reference();
            let i1 = photo_current(&p, &at(g, t));
            let i2 = photo_current(&p, &at(2.0 * g, t));
            prop_assert!((i2 - 2.0 * i1).abs() <= 1e-12 * i2.abs().max(1.0));
        }
    }
}
