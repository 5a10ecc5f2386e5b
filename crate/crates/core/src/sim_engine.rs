//! Closed-loop simulation of a controller against a plant.
//!
//! Integration uses fixed-step RK4 on the joint state
//! `[d_hat, g_hat, eta, alpha, i_l, v_o]`; the converter entries stay idle for
//! static plants. Measurement noise is drawn once per step from a seeded
//! ChaCha generator, held across the RK stages, and only reaches the
//! controller. The trace always records true power.

use std::f64::consts::TAU;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{ensure_non_negative, ensure_positive, Error, Result};
use crate::es_controllers::{
    applied_duty, derivatives, initial_state, max_safe_stop_fraction, mu, AppliedDuty, ControllerState, EsParams,
    Variant,
};
use crate::integrate::rk4_step_with_k1;
use crate::power_stage::{dynamic_derivatives_with, steady_state_point, DutyOptimum, DynamicPlantState, Plant};
use crate::pv_model::{CellConditions, Environment};

const MAX_STEP: f64 = 0.01;
const SAMPLES_PER_PERIOD: f64 = 50.0;
const ORACLE_REFRESH: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Keyframe {
    pub time: f64,
    pub irradiance: f64,
    pub temperature: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub duration: f64,
    pub dt: f64,
    /// Piecewise-linear environment profile, held constant outside its span.
    pub keyframes: Vec<Keyframe>,
    /// Standard deviation of additive measurement noise, W.
    pub noise_std: f64,
    pub rng_seed: u64,
}

impl Scenario {
    pub fn constant(env: Environment, duration: f64, dt: f64) -> Self {
        Self {
            duration,
            dt,
            keyframes: vec![Keyframe { time: 0.0, irradiance: env.irradiance, temperature: env.temperature }],
            noise_std: 0.0,
            rng_seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        ensure_positive(self.dt, "scenario.dt")?;
        ensure_positive(self.duration, "scenario.duration")?;
        if self.duration < self.dt {
            return Err(Error::InvalidParameter("scenario.duration must be at least one step".into()));
        }
        ensure_non_negative(self.noise_std, "scenario.noise_std")?;
        if self.keyframes.is_empty() {
            return Err(Error::InvalidParameter("scenario needs at least one keyframe".into()));
        }
        for k in &self.keyframes {
            Environment::new(k.irradiance, k.temperature)?;
            if !k.time.is_finite() {
                return Err(Error::InvalidParameter("keyframe times must be finite".into()));
            }
        }
        if self.keyframes.windows(2).any(|w| w[1].time <= w[0].time) {
            return Err(Error::InvalidParameter("keyframe times must be strictly increasing".into()));
        }
        Ok(())
    }

    pub fn environment_at(&self, t: f64) -> Environment {
        let k = &self.keyframes;
        let first = k[0];
        let last = k[k.len() - 1];
        let (g, temp) = if t <= first.time {
            (first.irradiance, first.temperature)
        } else if t >= last.time {
            (last.irradiance, last.temperature)
        } else {
            let j = k.partition_point(|f| f.time <= t);
            let (a, b) = (k[j - 1], k[j]);
            let w = (t - a.time) / (b.time - a.time);
            (
                a.irradiance + w * (b.irradiance - a.irradiance),
                a.temperature + w * (b.temperature - a.temperature),
            )
        };
        Environment { irradiance: g, temperature: temp }
    }
}

/// Uniformly sampled closed-loop trajectory.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SimTrace {
    pub time: Vec<f64>,
    pub duty_applied: Vec<f64>,
    pub d_hat: Vec<f64>,
    pub g_hat: Vec<f64>,
    pub eta: Vec<f64>,
    pub alpha: Vec<f64>,
    pub power: Vec<f64>,
    pub env_irradiance: Vec<f64>,
    pub env_temperature: Vec<f64>,
    pub oracle_d_star: Vec<f64>,
    pub oracle_p_star: Vec<f64>,
    pub saturation_flag: Vec<bool>,
}

impl SimTrace {
    pub fn len(&self) -> usize {
        self.time.len()
    }

    pub fn is_empty(&self) -> bool {
        self.time.is_empty()
    }

    pub fn final_state(&self) -> Option<ControllerState> {
        let i = self.len().checked_sub(1)?;
        Some(ControllerState { d_hat: self.d_hat[i], g_hat: self.g_hat[i], eta: self.eta[i], alpha: self.alpha[i] })
    }

    fn push(&mut self, t: f64, s: &Sample, state: &ControllerState, oracle: &DutyOptimum) {
        self.time.push(t);
        self.duty_applied.push(s.applied.duty);
        self.d_hat.push(state.d_hat);
        self.g_hat.push(state.g_hat);
        self.eta.push(state.eta);
        self.alpha.push(state.alpha);
        self.power.push(s.power);
        self.env_irradiance.push(s.env.irradiance);
        self.env_temperature.push(s.env.temperature);
        self.oracle_d_star.push(oracle.duty);
        self.oracle_p_star.push(oracle.power);
        self.saturation_flag.push(s.applied.saturated);
    }
}

mod inf_as_null {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}

/// Summary figures of one trace. A convergence time of `+inf` (JSON `null`)
/// means the power band was never entered for good.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    #[serde(with = "inf_as_null")]
    pub convergence_time: f64,
    pub steady_bias: f64,
    pub dither_amplitude_final: f64,
    pub tracking_rmse: f64,
    pub energy_captured_ratio: f64,
}

struct Sample {
    derivative: [f64; 6],
    power: f64,
    applied: AppliedDuty,
    env: Environment,
}

struct Loop<'a> {
    plant: &'a Plant,
    params: &'a EsParams,
    scenario: &'a Scenario,
}

impl Loop<'_> {
    fn eval(&self, t: f64, y: &[f64; 6], noise: f64) -> Result<Sample> {
        let env = self.scenario.environment_at(t);
        let state = ControllerState::from_array([y[0], y[1], y[2], y[3]]);
        let applied = applied_duty(self.params, &state, t)?;
        let (plant_rate, power) = match self.plant {
            Plant::Pv(cfg) if self.plant.is_dynamic() => {
                let cell = CellConditions::new(&cfg.pv, &env)?;
                let conv = DynamicPlantState { inductor_current: y[4], output_voltage: y[5] };
                let (rate, p) = dynamic_derivatives_with(cfg, &cell, &conv, applied.duty)?;
                ([rate.inductor_current, rate.output_voltage], p)
            }
            _ => ([0.0, 0.0], self.plant.power(&env, applied.duty)?),
        };
        let c = derivatives(self.params, &state, power + noise, t)?;
        Ok(Sample {
            derivative: [c.d_hat, c.g_hat, c.eta, c.alpha, plant_rate[0], plant_rate[1]],
            power,
            applied,
            env,
        })
    }
}

struct OracleCache {
    env: Environment,
    value: DutyOptimum,
}

impl OracleCache {
    fn new(plant: &Plant, env: Environment) -> Result<Self> {
        Ok(Self { env, value: plant.optimum(&env)? })
    }

    fn get(&mut self, plant: &Plant, env: Environment) -> Result<DutyOptimum> {
        let moved = |a: f64, b: f64| (a - b).abs() > ORACLE_REFRESH * b.abs() || (b == 0.0 && a != 0.0);
        if moved(env.irradiance, self.env.irradiance) || moved(env.temperature, self.env.temperature) {
            *self = Self::new(plant, env)?;
        }
        Ok(self.value)
    }
}

/// Largest step the resolution guard allows for this controller and stop time.
pub fn max_step(params: &EsParams, stop_time: f64) -> Result<f64> {
    let omega_eff = match params.variant {
        Variant::UnbiasedPT => params.omega * mu(stop_time, params.t0, params.pt_horizon)?.powf(params.pt_q),
        _ => params.omega,
    };
    Ok(MAX_STEP.min(TAU / (SAMPLES_PER_PERIOD * omega_eff)))
}

/// Integrates the closed loop from `controller.t0`.
///
/// Prescribed-time controllers stop at `pt_stop_fraction` of their horizon if
/// that comes before the end of the scenario. Without an explicit initial
/// state, the washout filter starts at the first power measurement.
pub fn run(
    plant: &Plant,
    controller: &EsParams,
    scenario: &Scenario,
    initial: Option<ControllerState>,
) -> Result<SimTrace> {
    plant.validate()?;
    controller.validate()?;
    scenario.validate()?;
    let t0 = controller.t0;
    let t_end = controller.stop_time(scenario.duration);
    let dt = scenario.dt;
    let limit = max_step(controller, t_end)?;
    if dt > limit * (1.0 + 1e-12) {
        return Err(Error::ResolutionGuard {
            dt,
            max_dt: limit,
            max_safe_stop_fraction: max_safe_stop_fraction(controller, dt),
        });
    }
    let n_steps = ((t_end - t0) / dt + 1e-9).floor() as usize;

    let mut rng = ChaCha8Rng::seed_from_u64(scenario.rng_seed);
    let normal = Normal::new(0.0, scenario.noise_std).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let mut draw = || if scenario.noise_std > 0.0 { normal.sample(&mut rng) } else { 0.0 };

    let lp = Loop { plant, params: controller, scenario };
    let env0 = scenario.environment_at(t0);
    let mut y = [0.0; 6];
    let first_noise = draw();
    let state0 = match initial {
        Some(s) => s,
        None => {
            let probe = initial_state(controller, 0.0);
            let d0 = applied_duty(controller, &probe, t0)?.duty;
            initial_state(controller, plant.power(&env0, d0)? + first_noise)
        }
    };
    y[..4].copy_from_slice(&state0.to_array());
    if let Plant::Pv(cfg) = plant {
        if plant.is_dynamic() {
            let d0 = applied_duty(controller, &state0, t0)?.duty;
            let ss = steady_state_point(&cfg.quasi_static(), &env0, d0)?;
            y[4] = ss.pv_current;
            y[5] = ss.output_voltage;
        }
    }

    let mut oracle = OracleCache::new(plant, env0)?;
    let mut trace = SimTrace::default();
    let mut noise = first_noise;
    for i in 0..=n_steps {
        let t = t0 + i as f64 * dt;
        let sample = match lp.eval(t, &y, noise) {
            Ok(s) => s,
            Err(e @ Error::NonFinite(_)) => return Err(abort(t, e, trace)),
            Err(e) => return Err(e),
        };
        let opt = oracle.get(plant, sample.env)?;
        let state = ControllerState::from_array([y[0], y[1], y[2], y[3]]);
        trace.push(t, &sample, &state, &opt);
        if i == n_steps {
            break;
        }
        let held = noise;
        let stepped = rk4_step_with_k1(|ts, ys| lp.eval(ts, ys, held).map(|s| s.derivative), t, &y, dt, &sample.derivative);
        y = match stepped {
            Ok(next) if next.iter().all(|v| v.is_finite()) => next,
            Ok(_) => return Err(abort(t + dt, Error::NonFinite("state after step".into()), trace)),
            Err(e @ Error::NonFinite(_)) => return Err(abort(t, e, trace)),
            Err(e) => return Err(e),
        };
        noise = draw();
    }
    Ok(trace)
}

fn abort(time: f64, reason: Error, partial: SimTrace) -> Error {
    Error::SimulationAborted { time, reason: Box::new(reason), partial: Box::new(partial) }
}

/// Irradiance held at `base` until 40 s, ramped linearly to `depth * base` by
/// 115 s and back to `base` by 180 s.
pub fn shading_scenario(base: Environment, depth: f64, dt: f64) -> Scenario {
    let g = base.irradiance;
    let temp = base.temperature;
    let kf = |time, irradiance| Keyframe { time, irradiance, temperature: temp };
    Scenario {
        duration: 180.0,
        dt,
        keyframes: vec![kf(0.0, g), kf(40.0, g), kf(115.0, depth * g), kf(180.0, g)],
        noise_std: 0.0,
        rng_seed: 0,
    }
}

/// Built-in shading run: standard conditions dimmed to 40 % and back.
///
/// Only the exponential variant is accepted; `beta = 0` serves as the
/// floor-less negative control.
pub fn run_shading_scenario(plant: &Plant, controller: &EsParams) -> Result<SimTrace> {
    if controller.variant != Variant::UnbiasedExp {
        return Err(Error::InvalidParameter("the shading scenario runs the uES variant only".into()));
    }
    let mut scenario = shading_scenario(Environment::standard(), 0.4, MAX_STEP);
    for k in &mut scenario.keyframes {
        k.time += controller.t0;
    }
    run(plant, controller, &scenario, None)
}

fn trapezoid(t: &[f64], y: &[f64]) -> f64 {
    t.windows(2).zip(y.windows(2)).map(|(t, y)| 0.5 * (t[1] - t[0]) * (y[0] + y[1])).sum()
}

pub fn compute_metrics(trace: &SimTrace, epsilon: f64) -> MetricsReport {
    let n = trace.len();
    if n == 0 {
        return MetricsReport {
            convergence_time: f64::INFINITY,
            steady_bias: f64::NAN,
            dither_amplitude_final: f64::NAN,
            tracking_rmse: f64::NAN,
            energy_captured_ratio: f64::NAN,
        };
    }
    let t0 = trace.time[0];
    let outside = |i: usize| {
        let p_star = trace.oracle_p_star[i];
        !((trace.power[i] - p_star).abs() <= epsilon * p_star.abs())
    };
    let convergence_time = match (0..n).rev().find(|&i| outside(i)) {
        None => 0.0,
        Some(i) if i + 1 == n => f64::INFINITY,
        Some(i) => trace.time[i + 1] - t0,
    };

    let tail = n.div_ceil(10).max(1);
    let window = n - tail..n;
    let d = &trace.duty_applied[window.clone()];
    let mean_d = d.iter().sum::<f64>() / tail as f64;
    let mean_star = trace.oracle_d_star[window].iter().sum::<f64>() / tail as f64;
    let (lo, hi) = d.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(*v), hi.max(*v)));

    let sq = trace.power.iter().zip(&trace.oracle_p_star).map(|(p, s)| (p - s) * (p - s)).sum::<f64>();
    let energy_ratio = if n == 1 {
        trace.power[0] / trace.oracle_p_star[0]
    } else {
        trapezoid(&trace.time, &trace.power) / trapezoid(&trace.time, &trace.oracle_p_star)
    };
    MetricsReport {
        convergence_time,
        steady_bias: (mean_d - mean_star).abs(),
        dither_amplitude_final: 0.5 * (hi - lo),
        tracking_rmse: (sq / n as f64).sqrt(),
        energy_captured_ratio: energy_ratio,
    }
}
