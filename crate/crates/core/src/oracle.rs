//! Reference solutions sharing no stepping code with the discretizations:
//! RK4 trajectories, backward characteristics for the Liouville equation,
//! Burgers characteristics and exact free Schrodinger evolution.

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{check_len, invalid, Error, Result};
use crate::field::FlowField;
use crate::grid::GridSpec;

/// Values with the step used and a step-halving accuracy estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    pub values: Vec<f64>,
    pub method: &'static str,
    pub step: f64,
    pub accuracy: f64,
}

/// RK4 trajectory sampled at every step.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub result: OracleResult,
}

fn rk4_step<F: Fn(&[f64], &mut [f64])>(f: &F, q: &mut [f64], h: f64, scratch: &mut [Vec<f64>; 5]) {
    let [k1, k2, k3, k4, tmp] = scratch;
    let n = q.len();
    f(q, k1);
    (0..n).for_each(|i| tmp[i] = q[i] + 0.5 * h * k1[i]);
    f(tmp, k2);
    (0..n).for_each(|i| tmp[i] = q[i] + 0.5 * h * k2[i]);
    f(tmp, k3);
    (0..n).for_each(|i| tmp[i] = q[i] + h * k3[i]);
    f(tmp, k4);
    (0..n).for_each(|i| q[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]));
}

fn integrate<F: Fn(&[f64], &mut [f64])>(f: &F, q0: &[f64], horizon: f64, steps: usize) -> Result<Vec<Vec<f64>>> {
    let h = horizon / steps as f64;
    let n = q0.len();
    let mut scratch = [vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]];
    let mut q = q0.to_vec();
    let mut out = Vec::with_capacity(steps + 1);
    out.push(q.clone());
    for s in 0..steps {
        rk4_step(f, &mut q, h, &mut scratch);
        if q.iter().any(|v| !v.is_finite()) {
            return Err(Error::Divergence(format!("RK4 state non-finite at step {}", s + 1)));
        }
        out.push(q.clone());
    }
    Ok(out)
}

fn step_count(horizon: f64, dt: f64) -> Result<usize> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(invalid("dt", format!("{dt} must be positive")));
    }
    if !(horizon >= 0.0 && horizon.is_finite()) {
        return Err(invalid("horizon", format!("{horizon} must be >= 0")));
    }
    Ok(((horizon / dt) - 1e-9 * (horizon / dt)).ceil().max(1.0) as usize)
}

/// Classical RK4 for `dq/dt = F(q)` up to `horizon`.
pub fn rk4(field: &FlowField, q0: &[f64], horizon: f64, dt: f64) -> Result<Trajectory> {
    check_len(field.dim(), q0.len())?;
    let steps = step_count(horizon, dt)?;
    let f = |x: &[f64], o: &mut [f64]| field.eval_into(x, o);
    let states = integrate(&f, q0, horizon, steps)?;
    let fine = integrate(&f, q0, horizon, 2 * steps)?;
    let last = states.last().cloned().unwrap_or_default();
    let accuracy = last
        .iter()
        .zip(fine.last().unwrap())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let h = horizon / steps as f64;
    Ok(Trajectory {
        times: (0..=steps).map(|n| n as f64 * h).collect(),
        states,
        result: OracleResult {
            values: last,
            method: "rk4",
            step: h,
            accuracy,
        },
    })
}

/// Characteristics may travel at most this far before being treated as escaped.
pub const WRAP_BUDGET: f64 = 1e6;

fn wrap(x: f64) -> f64 {
    x.rem_euclid(1.0)
}

fn divergence_at(field: &FlowField, x: &[f64]) -> f64 {
    if let Some(div) = field.divergence_fn() {
        return div(x);
    }
    let h = 1e-6;
    let mut y = x.to_vec();
    let mut total = 0.0;
    for i in 0..x.len() {
        y[i] = x[i] + h;
        let plus = field.eval(&y)[i];
        y[i] = x[i] - h;
        let minus = field.eval(&y)[i];
        y[i] = x[i];
        total += (plus - minus) / (2.0 * h);
    }
    total
}

/// Backward characteristic from `(t, x)`: foot point (wrapped) and
/// `int_0^t div F(X(s)) ds`.
fn backward_characteristic(field: &FlowField, x: &[f64], horizon: f64, steps: usize) -> Result<(Vec<f64>, f64)> {
    let d = x.len();
    let mut y = x.to_vec();
    y.push(0.0);
    let f = |z: &[f64], o: &mut [f64]| {
        let p: Vec<f64> = z[..d].iter().map(|v| wrap(*v)).collect();
        let v = field.eval(&p);
        for i in 0..d {
            o[i] = -v[i];
        }
        o[d] = divergence_at(field, &p);
    };
    let h = horizon / steps as f64;
    let mut scratch = [vec![0.0; d + 1], vec![0.0; d + 1], vec![0.0; d + 1], vec![0.0; d + 1], vec![0.0; d + 1]];
    for _ in 0..steps {
        rk4_step(&f, &mut y, h, &mut scratch);
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::Divergence("backward characteristic non-finite".into()));
    }
    if y[..d].iter().zip(x).any(|(a, b)| (a - b).abs() > WRAP_BUDGET) {
        return Err(Error::Domain("characteristic escaped the periodic wrap budget".into()));
    }
    let integral = y[d];
    y.truncate(d);
    Ok((y.into_iter().map(wrap).collect(), integral))
}

fn liouville_values<R>(field: &FlowField, rho0: &R, horizon: f64, points: &[Vec<f64>], steps: usize) -> Result<Vec<f64>>
where
    R: Fn(&[f64]) -> f64,
{
    points
        .iter()
        .map(|x| {
            if horizon == 0.0 {
                return Ok(rho0(x));
            }
            let (foot, integral) = backward_characteristic(field, x, horizon, steps)?;
            Ok(rho0(&foot) * (-integral).exp())
        })
        .collect()
}

/// `rho(t, x) = rho0(X(0; x, t)) exp(-int_0^t div F)` at each point, with
/// backward RK4 characteristics of step `dt`.
pub fn characteristics_liouville<R>(
    field: &FlowField,
    rho0: R,
    horizon: f64,
    points: &[Vec<f64>],
    dt: f64,
) -> Result<OracleResult>
where
    R: Fn(&[f64]) -> f64,
{
    if let Some(p) = points.iter().find(|p| p.len() != field.dim()) {
        return Err(Error::SizeMismatch {
            expected: field.dim(),
            actual: p.len(),
        });
    }
    let steps = step_count(horizon, dt)?;
    let values = liouville_values(field, &rho0, horizon, points, steps)?;
    let fine = liouville_values(field, &rho0, horizon, points, 2 * steps)?;
    let accuracy = values
        .iter()
        .zip(&fine)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    Ok(OracleResult {
        values,
        method: "backward characteristics (rk4)",
        step: horizon / steps as f64,
        accuracy,
    })
}

/// [`characteristics_liouville`] at every node of `grid` with `dt = dx / 10`.
pub fn characteristics_liouville_on_grid<R>(
    field: &FlowField,
    rho0: R,
    horizon: f64,
    grid: &GridSpec,
) -> Result<OracleResult>
where
    R: Fn(&[f64]) -> f64,
{
    let points: Vec<Vec<f64>> = (0..grid.len()).map(|k| grid.point(k)).collect();
    characteristics_liouville(field, rho0, horizon, &points, grid.dx() / 10.0)
}

/// Pre-caustic Burgers solution at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BurgersPoint {
    pub velocity: f64,
    /// Foot of the characteristic through the point, in `[0, 1)`.
    pub foot: f64,
    /// Jacobian density `1 / (1 + u0'(foot) t)`.
    pub density: f64,
    pub residual: f64,
}

/// Centered-difference caustic time `1 / max |u0'|` over `samples` nodes.
pub fn caustic_time<U: Fn(f64) -> f64>(u0: &U, samples: usize) -> f64 {
    let h = 1.0 / samples as f64;
    let slope = (0..samples)
        .map(|j| {
            let x = j as f64 * h;
            ((u0(wrap(x + h)) - u0(wrap(x - h))) / (2.0 * h)).abs()
        })
        .fold(0.0, f64::max);
    if slope == 0.0 {
        f64::INFINITY
    } else {
        1.0 / slope
    }
}

/// Nodes used by the caustic estimate.
pub const CAUSTIC_SAMPLES: usize = 1024;
/// Fraction of the caustic time beyond which the oracle refuses.
pub const CAUSTIC_SAFETY: f64 = 0.9;

fn five_point_derivative<U: Fn(f64) -> f64>(u0: &U, x: f64) -> f64 {
    let h = 1e-3;
    (-u0(wrap(x + 2.0 * h)) + 8.0 * u0(wrap(x + h)) - 8.0 * u0(wrap(x - h)) + u0(wrap(x - 2.0 * h)))
        / (12.0 * h)
}

/// Solve `u = u0(x - u t)` by the damped iteration `u <- (u + u0(x - u t)) / 2`.
pub fn burgers_characteristics<U>(u0: U, horizon: f64, xs: &[f64]) -> Result<Vec<BurgersPoint>>
where
    U: Fn(f64) -> f64,
{
    if !(horizon >= 0.0) {
        return Err(invalid("horizon", format!("{horizon} must be >= 0")));
    }
    let tc = caustic_time(&u0, CAUSTIC_SAMPLES);
    if horizon >= CAUSTIC_SAFETY * tc {
        return Err(Error::Caustic(format!(
            "t = {horizon} is past {CAUSTIC_SAFETY} x estimated caustic time {tc}"
        )));
    }
    xs.iter()
        .map(|&x| {
            let mut u = u0(wrap(x));
            let mut converged = false;
            for _ in 0..100_000 {
                let next = 0.5 * u + 0.5 * u0(wrap(x - u * horizon));
                let change = (next - u).abs();
                u = next;
                if change <= 1e-14 {
                    converged = true;
                    break;
                }
            }
            let foot = wrap(x - u * horizon);
            let residual = (u - u0(foot)).abs();
            if !converged || residual > 1e-12 {
                return Err(Error::Caustic(format!("fixed point stalled at x = {x} (residual {residual:e})")));
            }
            Ok(BurgersPoint {
                velocity: u,
                foot,
                density: 1.0 / (1.0 + five_point_derivative(&u0, foot) * horizon),
                residual,
            })
        })
        .collect()
}

/// Multiply every Fourier mode by `exp(-i hbar mu^2 t / 2)`.
pub fn free_schrodinger_exact(grid: &GridSpec, u0: &[Complex64], hbar: f64, horizon: f64) -> Result<Vec<Complex64>> {
    check_len(grid.len(), u0.len())?;
    let m = grid.points();
    let mut planner = FftPlanner::new();
    let fwd = planner.plan_fft_forward(m);
    let inv = planner.plan_fft_inverse(m);
    let mut data = u0.to_vec();
    let each_line = |data: &mut [Complex64], axis: usize, f: &dyn Fn(&mut [Complex64])| {
        let stride = grid.stride(axis);
        let outer = grid.len() / (m * stride);
        let mut buf = vec![Complex64::new(0.0, 0.0); m];
        for o in 0..outer {
            for i in 0..stride {
                let base = o * m * stride + i;
                (0..m).for_each(|k| buf[k] = data[base + k * stride]);
                f(&mut buf);
                (0..m).for_each(|k| data[base + k * stride] = buf[k]);
            }
        }
    };
    for axis in 0..grid.dim() {
        each_line(&mut data, axis, &|l| fwd.process(l));
    }
    let freq = |b: usize| {
        let s = if b < m / 2 { b as f64 } else { b as f64 - m as f64 };
        2.0 * PI * s
    };
    for (k, c) in data.iter_mut().enumerate() {
        let mu2: f64 = (0..grid.dim()).map(|a| freq(grid.component(k, a)).powi(2)).sum();
        *c *= Complex64::from_polar(1.0, -hbar * mu2 * horizon / 2.0);
    }
    for axis in 0..grid.dim() {
        each_line(&mut data, axis, &|l| inv.process(l));
    }
    let scale = 1.0 / grid.len() as f64;
    data.iter_mut().for_each(|c| *c *= scale);
    Ok(data)
}
