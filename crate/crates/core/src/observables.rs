//! Quadrature observables for Liouville, KvN, level-set and Schrodinger states.

use num_complex::Complex64;

use crate::error::{check_len, Error, Result};
use crate::grid::{AxisRole, GridSpec};
use crate::spectral::{for_each_line, GridTransform};

/// One-axis quadrature weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Quadrature {
    /// All ones: the trapezoid rule on a periodic grid.
    #[default]
    PeriodicTrapezoid,
    /// `[1/2, 1, ..., 1, 1/2]` on the sampled nodes.
    EndpointTrapezoid,
}

impl Quadrature {
    pub fn weights(self, points: usize) -> Vec<f64> {
        let mut w = vec![1.0; points];
        if self == Quadrature::EndpointTrapezoid && points > 1 {
            w[0] = 0.5;
            w[points - 1] = 0.5;
        }
        w
    }

    /// Tensor-product weight of flat index `k` over the listed axes.
    fn tensor_weight(self, grid: &GridSpec, axes: &[usize], table: &[f64], k: usize) -> f64 {
        match self {
            Quadrature::PeriodicTrapezoid => 1.0,
            Quadrature::EndpointTrapezoid => axes.iter().map(|&a| table[grid.component(k, a)]).product(),
        }
    }
}

/// Which axes an expectation integrates over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum IntegrationTarget {
    #[default]
    All,
    /// Momentum axes only, leaving a function of position.
    MomentumAxes,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ObservableSpec {
    pub quadrature: Quadrature,
    pub target: IntegrationTarget,
}

impl ObservableSpec {
    pub fn momentum_moments() -> Self {
        Self {
            quadrature: Quadrature::default(),
            target: IntegrationTarget::MomentumAxes,
        }
    }
}

/// Squared modulus of a real or complex amplitude.
pub trait Amplitude: Copy {
    fn modulus_sqr(self) -> f64;
    fn modulus(self) -> f64 {
        self.modulus_sqr().sqrt()
    }
}

impl Amplitude for f64 {
    fn modulus_sqr(self) -> f64 {
        self * self
    }
    fn modulus(self) -> f64 {
        self.abs()
    }
}

impl Amplitude for Complex64 {
    fn modulus_sqr(self) -> f64 {
        self.norm_sqr()
    }
    fn modulus(self) -> f64 {
        self.norm()
    }
}

fn weighted_sum<G, V>(grid: &GridSpec, spec: &ObservableSpec, g: G, value: V) -> f64
where
    G: Fn(&[f64]) -> f64,
    V: Fn(usize) -> f64,
{
    let axes: Vec<usize> = (0..grid.dim()).collect();
    let table = spec.quadrature.weights(grid.points());
    let mut x = vec![0.0; grid.dim()];
    let mut total = 0.0;
    for k in 0..grid.len() {
        grid.point_into(k, &mut x);
        total += spec.quadrature.tensor_weight(grid, &axes, &table, k) * g(&x) * value(k);
    }
    total / grid.len() as f64
}

/// `(1/M^d) sum_j w_j G(x_j) rho_j`.
pub fn expect_liouville<G>(grid: &GridSpec, spec: &ObservableSpec, rho: &[f64], g: G) -> Result<f64>
where
    G: Fn(&[f64]) -> f64,
{
    check_len(grid.len(), rho.len())?;
    Ok(weighted_sum(grid, spec, g, |k| rho[k]))
}

/// `(1/M^{d/2}) psi^dagger G_M psi` with `G_M = diag(w G) / M^{d/2}`.
pub fn expect_kvn<T, G>(grid: &GridSpec, spec: &ObservableSpec, psi: &[T], g: G) -> Result<f64>
where
    T: Amplitude,
    G: Fn(&[f64]) -> f64,
{
    check_len(grid.len(), psi.len())?;
    Ok(weighted_sum(grid, spec, g, |k| psi[k].modulus_sqr()))
}

/// Momentum-integrated moments `(1/M^d) sum_l G(x_j, p_l) w_{j,l}` per
/// position node, in the row-major order of the position sub-grid.
pub fn expect_hje<G>(phase: &GridSpec, spec: &ObservableSpec, w: &[f64], g: G) -> Result<Vec<f64>>
where
    G: Fn(&[f64], &[f64]) -> f64,
{
    check_len(phase.len(), w.len())?;
    if spec.target != IntegrationTarget::MomentumAxes {
        return Err(Error::Unsupported("level-set moments integrate momentum axes only".into()));
    }
    let x_axes = phase.axes_with_role(AxisRole::Position);
    let p_axes = phase.axes_with_role(AxisRole::Momentum);
    if x_axes.is_empty() || x_axes.len() != p_axes.len() {
        return Err(Error::Unsupported("phase grid needs matching x and p axes".into()));
    }
    let x_grid = phase.sub_grid(AxisRole::Position)?;
    let table = spec.quadrature.weights(phase.points());
    let scale = 1.0 / (phase.points() as f64).powi(p_axes.len() as i32);
    let mut out = vec![0.0; x_grid.len()];
    let mut y = vec![0.0; phase.dim()];
    let mut x = vec![0.0; x_axes.len()];
    let mut p = vec![0.0; p_axes.len()];
    for k in 0..phase.len() {
        phase.point_into(k, &mut y);
        x.iter_mut().zip(&x_axes).for_each(|(xi, &a)| *xi = y[a]);
        p.iter_mut().zip(&p_axes).for_each(|(pi, &a)| *pi = y[a]);
        let kx = x_axes
            .iter()
            .fold(0, |acc, &a| acc * phase.points() + phase.component(k, a));
        let wq = spec.quadrature.tensor_weight(phase, &p_axes, &table, k);
        out[kx] += scale * wq * g(&x, &p) * w[k];
    }
    Ok(out)
}

/// First moments `q_i = <x_i>` of a Liouville density.
pub fn recover_ode_solution(grid: &GridSpec, spec: &ObservableSpec, rho: &[f64]) -> Result<Vec<f64>> {
    (0..grid.dim())
        .map(|i| expect_liouville(grid, spec, rho, |x| x[i]))
        .collect()
}

/// Schrodinger observable kinds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SchrodingerQuantity {
    Density,
    Current,
    Energy,
}

/// Nodal profile of density `|u|^2`, current `hbar Im(conj(u) u')` or
/// kinetic energy density `(hbar^2/2)|u'|^2`.
pub fn schrodinger_profile(
    grid: &GridSpec,
    u: &[Complex64],
    hbar: f64,
    which: SchrodingerQuantity,
) -> Result<Vec<f64>> {
    check_len(grid.len(), u.len())?;
    if which == SchrodingerQuantity::Density {
        return Ok(u.iter().map(|c| c.norm_sqr()).collect());
    }
    if grid.dim() != 1 {
        return Err(Error::Unsupported(format!(
            "current and energy densities are one-dimensional, grid has dim {}",
            grid.dim()
        )));
    }
    let du = symmetric_derivative(grid, u)?;
    Ok(match which {
        SchrodingerQuantity::Current => u
            .iter()
            .zip(&du)
            .map(|(a, b)| hbar * (a.conj() * b).im)
            .collect(),
        SchrodingerQuantity::Energy => du.iter().map(|b| 0.5 * hbar * hbar * b.norm_sqr()).collect(),
        SchrodingerQuantity::Density => unreachable!(),
    })
}

/// Spectral first derivative with the unpaired Nyquist mode dropped, so that
/// real data has a real derivative.
pub fn symmetric_derivative(grid: &GridSpec, u: &[Complex64]) -> Result<Vec<Complex64>> {
    let t = GridTransform::new(grid)?;
    let mu = t.plan().frequencies().to_vec();
    let mut out = u.to_vec();
    t.to_coefficients_axis(0, &mut out);
    for_each_line(grid, 0, &mut out, |_, line| {
        line[0] = Complex64::new(0.0, 0.0);
        line.iter_mut().zip(&mu).skip(1).for_each(|(c, m)| *c *= Complex64::new(0.0, *m));
    });
    t.from_coefficients_axis(0, &mut out);
    Ok(out)
}

/// One node of [`schrodinger_profile`].
pub fn schrodinger_observable(
    grid: &GridSpec,
    u: &[Complex64],
    hbar: f64,
    which: SchrodingerQuantity,
    node: usize,
) -> Result<f64> {
    if node >= grid.len() {
        return Err(Error::Index {
            component: node,
            limit: grid.len(),
        });
    }
    Ok(schrodinger_profile(grid, u, hbar, which)?[node])
}

/// `sum |u|^2 dx^d`.
pub fn mass<T: Amplitude>(grid: &GridSpec, u: &[T]) -> f64 {
    u.iter().map(|c| c.modulus_sqr()).sum::<f64>() * grid.dx().powi(grid.dim() as i32)
}

pub fn l2_norm<T: Amplitude>(v: &[T]) -> f64 {
    v.iter().map(|c| c.modulus_sqr()).sum::<f64>().sqrt()
}

pub fn l1_norm<T: Amplitude>(v: &[T]) -> f64 {
    v.iter().map(|c| c.modulus()).sum()
}

/// Multiplicative sampling factors computed from initial states.
pub mod factors {
    use super::*;

    fn half_power(grid_points: usize, dims: usize, exponent: f64) -> f64 {
        (grid_points as f64).powf(dims as f64 * exponent)
    }

    /// `||rho^0||_2 / M^{d/2}`.
    pub fn liouville(grid: &GridSpec, rho0: &[f64]) -> f64 {
        l2_norm(rho0) / half_power(grid.points(), grid.dim(), 0.5)
    }

    /// `||rho^0||_1 / M^{d/2}`, the reading under which it equals the KvN
    /// factor squared.
    pub fn liouville_l1(grid: &GridSpec, rho0: &[f64]) -> f64 {
        l1_norm(rho0) / half_power(grid.points(), grid.dim(), 0.5)
    }

    /// `||psi^0||_2 / M^{d/4}`.
    pub fn kvn<T: Amplitude>(grid: &GridSpec, psi0: &[T]) -> f64 {
        l2_norm(psi0) / half_power(grid.points(), grid.dim(), 0.25)
    }

    /// `||w^0||_2 / M^{d/2}` with `d` the number of position axes.
    pub fn levelset(phase: &GridSpec, w0: &[f64]) -> f64 {
        let d = phase.axes_with_role(AxisRole::Position).len();
        l2_norm(w0) / half_power(phase.points(), d, 0.5)
    }

    /// `||u^0||_2`.
    pub fn schrodinger(u0: &[Complex64]) -> f64 {
        l2_norm(u0)
    }
}
