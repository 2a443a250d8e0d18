//! Vector fields driving transport: ODE right-hand sides and Hamiltonians.

use std::fmt;
use std::sync::Arc;

use crate::error::{invalid, Result};
use crate::grid::GridSpec;

type VectorFn = Arc<dyn Fn(&[f64], &mut [f64]) + Send + Sync>;
type ScalarFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
type PhaseFn = Arc<dyn Fn(&[f64], &[f64], &mut [f64]) + Send + Sync>;

/// Right-hand side `F` of `dq/dt = F(q)` with sup-norm metadata.
#[derive(Clone)]
pub struct FlowField {
    dim: usize,
    eval: VectorFn,
    divergence: Option<ScalarFn>,
    sup_per_axis: Vec<f64>,
    div_sup: f64,
}

impl fmt::Debug for FlowField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FlowField")
            .field("dim", &self.dim)
            .field("sup_per_axis", &self.sup_per_axis)
            .field("div_sup", &self.div_sup)
            .field("analytic_divergence", &self.divergence.is_some())
            .finish()
    }
}

impl FlowField {
    /// Field with caller-supplied bounds `sup |F_i|` and `sup |div F|`.
    pub fn new<F>(dim: usize, eval: F, sup_per_axis: Vec<f64>, div_sup: f64) -> Result<Self>
    where
        F: Fn(&[f64], &mut [f64]) + Send + Sync + 'static,
    {
        if sup_per_axis.len() != dim {
            return Err(invalid("sup_per_axis", "one bound per axis is required"));
        }
        if sup_per_axis
            .iter()
            .chain(std::iter::once(&div_sup))
            .any(|s| !(s.is_finite() && *s >= 0.0))
        {
            return Err(invalid("bounds", "sup bounds must be finite and nonnegative"));
        }
        Ok(Self {
            dim,
            eval: Arc::new(eval),
            divergence: None,
            sup_per_axis,
            div_sup,
        })
    }

    /// Field whose bounds are estimated by sampling `samples` points per axis
    /// (node values plus central-difference divergence).
    pub fn sampled<F>(dim: usize, eval: F, samples: usize) -> Result<Self>
    where
        F: Fn(&[f64], &mut [f64]) + Send + Sync + 'static,
    {
        let probe = GridSpec::with_roles(
            vec![crate::grid::AxisRole::Position; dim],
            samples.next_power_of_two(),
            usize::MAX,
        )?;
        let eval: VectorFn = Arc::new(eval);
        let values = sample_nodes(&probe, &*eval, dim);
        let sups = axis_sups(&values);
        let div = central_divergence(&probe, &values);
        let div_sup = div.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        Ok(Self {
            dim,
            eval,
            divergence: None,
            sup_per_axis: sups,
            div_sup,
        })
    }

    pub fn with_divergence<D>(mut self, div: D) -> Self
    where
        D: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        self.divergence = Some(Arc::new(div));
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn eval_into(&self, x: &[f64], out: &mut [f64]) {
        (self.eval)(x, out)
    }

    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        (self.eval)(x, &mut out);
        out
    }

    pub fn divergence_fn(&self) -> Option<&(dyn Fn(&[f64]) -> f64 + Send + Sync)> {
        self.divergence.as_deref()
    }

    pub fn sup_per_axis(&self) -> &[f64] {
        &self.sup_per_axis
    }

    pub fn div_sup(&self) -> f64 {
        self.div_sup
    }

    /// `sum_i sup |F_i|`.
    pub fn speed_sum(&self) -> f64 {
        self.sup_per_axis.iter().sum()
    }

    /// Nodal samples, one vector per axis.
    pub fn sample(&self, grid: &GridSpec) -> Vec<Vec<f64>> {
        sample_nodes(grid, &*self.eval, self.dim)
    }

    /// Nodal divergence: analytic when available, central differences otherwise.
    pub fn nodal_divergence(&self, grid: &GridSpec, samples: &[Vec<f64>]) -> Vec<f64> {
        match &self.divergence {
            Some(div) => {
                let mut x = vec![0.0; grid.dim()];
                (0..grid.len())
                    .map(|k| {
                        grid.point_into(k, &mut x);
                        div(&x)
                    })
                    .collect()
            }
            None => central_divergence(grid, samples),
        }
    }
}

fn sample_nodes(
    grid: &GridSpec,
    eval: &(dyn Fn(&[f64], &mut [f64]) + Send + Sync),
    dim: usize,
) -> Vec<Vec<f64>> {
    let mut out = vec![vec![0.0; grid.len()]; dim];
    let mut x = vec![0.0; grid.dim()];
    let mut f = vec![0.0; dim];
    for k in 0..grid.len() {
        grid.point_into(k, &mut x);
        eval(&x, &mut f);
        for (axis, v) in f.iter().enumerate() {
            out[axis][k] = *v;
        }
    }
    out
}

fn axis_sups(values: &[Vec<f64>]) -> Vec<f64> {
    values
        .iter()
        .map(|v| v.iter().fold(0.0f64, |a, x| a.max(x.abs())))
        .collect()
}

/// Periodic central-difference divergence of nodal samples.
pub fn central_divergence(grid: &GridSpec, samples: &[Vec<f64>]) -> Vec<f64> {
    let inv = 0.5 / grid.dx();
    (0..grid.len())
        .map(|k| {
            samples
                .iter()
                .enumerate()
                .map(|(axis, f)| {
                    (f[grid.neighbor(k, axis, 1)] - f[grid.neighbor(k, axis, -1)]) * inv
                })
                .sum()
        })
        .collect()
}

/// Phase-space Hamiltonian through its gradients `dH/dx`, `dH/dp`.
#[derive(Clone)]
pub struct HamiltonianField {
    dim: usize,
    dh_dx: PhaseFn,
    dh_dp: PhaseFn,
    sup_dh_dx: Vec<f64>,
    sup_dh_dp: Vec<f64>,
}

impl fmt::Debug for HamiltonianField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("HamiltonianField")
            .field("dim", &self.dim)
            .field("sup_dh_dx", &self.sup_dh_dx)
            .field("sup_dh_dp", &self.sup_dh_dp)
            .finish()
    }
}

impl HamiltonianField {
    pub fn new<X, P>(
        dim: usize,
        dh_dx: X,
        dh_dp: P,
        sup_dh_dx: Vec<f64>,
        sup_dh_dp: Vec<f64>,
    ) -> Result<Self>
    where
        X: Fn(&[f64], &[f64], &mut [f64]) + Send + Sync + 'static,
        P: Fn(&[f64], &[f64], &mut [f64]) + Send + Sync + 'static,
    {
        if sup_dh_dx.len() != dim || sup_dh_dp.len() != dim {
            return Err(invalid("sups", "one bound per axis is required"));
        }
        if sup_dh_dx
            .iter()
            .chain(&sup_dh_dp)
            .any(|s| !(s.is_finite() && *s >= 0.0))
        {
            return Err(invalid("sups", "bounds must be finite and nonnegative"));
        }
        Ok(Self {
            dim,
            dh_dx: Arc::new(dh_dx),
            dh_dp: Arc::new(dh_dp),
            sup_dh_dx,
            sup_dh_dp,
        })
    }

    /// `H = |p|^2/2 + V(x)` on the momentum box `[0,1)^d`.
    pub fn kinetic_plus_potential<G>(dim: usize, grad_v: G, sup_grad_v: Vec<f64>) -> Result<Self>
    where
        G: Fn(&[f64], &mut [f64]) + Send + Sync + 'static,
    {
        Self::new(
            dim,
            move |x, _p, out| grad_v(x, out),
            |_x, p, out| out.copy_from_slice(p),
            sup_grad_v,
            vec![1.0; dim],
        )
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn dh_dx(&self, x: &[f64], p: &[f64], out: &mut [f64]) {
        (self.dh_dx)(x, p, out)
    }

    pub fn dh_dp(&self, x: &[f64], p: &[f64], out: &mut [f64]) {
        (self.dh_dp)(x, p, out)
    }

    pub fn sup_dh_dx(&self) -> &[f64] {
        &self.sup_dh_dx
    }

    pub fn sup_dh_dp(&self) -> &[f64] {
        &self.sup_dh_dp
    }

    /// `sum_i (sup |dH/dx_i| + sup |dH/dp_i|)`.
    pub fn speed_sum(&self) -> f64 {
        self.sup_dh_dx.iter().chain(&self.sup_dh_dp).sum()
    }
}
