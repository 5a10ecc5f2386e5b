//! Classic fourth-order Runge-Kutta on fixed-size state arrays.

use crate::error::Result;

fn axpy<const N: usize>(y: &[f64; N], h: f64, k: &[f64; N]) -> [f64; N] {
    let mut out = *y;
    for i in 0..N {
        out[i] += h * k[i];
    }
    out
}

/// One RK4 step of `y' = f(t, y)`.
pub fn rk4_step<const N: usize, F>(mut f: F, t: f64, y: &[f64; N], dt: f64) -> Result<[f64; N]>
where
    F: FnMut(f64, &[f64; N]) -> Result<[f64; N]>,
{
    let k1 = f(t, y)?;
    rk4_step_with_k1(f, t, y, dt, &k1)
}

/// RK4 step reusing an already evaluated first stage.
pub fn rk4_step_with_k1<const N: usize, F>(
    mut f: F,
    t: f64,
    y: &[f64; N],
    dt: f64,
    k1: &[f64; N],
) -> Result<[f64; N]>
where
    F: FnMut(f64, &[f64; N]) -> Result<[f64; N]>,
{
    let half = 0.5 * dt;
    let k2 = f(t + half, &axpy(y, half, k1))?;
    let k3 = f(t + half, &axpy(y, half, &k2))?;
    let k4 = f(t + dt, &axpy(y, dt, &k3))?;
    let mut out = *y;
    for i in 0..N {
        out[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    Ok(out)
}

/// Integrates `n_steps` uniform steps from `(t0, y0)` and returns the final state.
pub fn integrate<const N: usize, F>(mut f: F, t0: f64, y0: [f64; N], dt: f64, n_steps: usize) -> Result<[f64; N]>
where
    F: FnMut(f64, &[f64; N]) -> Result<[f64; N]>,
{
    let mut y = y0;
    for i in 0..n_steps {
        y = rk4_step(&mut f, t0 + i as f64 * dt, &y, dt)?;
    }
    Ok(y)
}
