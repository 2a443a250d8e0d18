//! Fourier machinery on periodic grids.
//!
//! Basis functions are `exp(i mu_k x)` with `mu_k = 2 pi (k - N)`, `N = M/2`,
//! for `k = 0..M`. The interpolation matrix `Phi[j,k] = exp(i mu_k x_j)` equals
//! `sqrt(M) S F` where `S = diag(1, -1, 1, ...)` and `F` is the unitary DFT
//! `y_k = M^{-1/2} sum_j exp(+2 pi i jk/M) x_j`.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{check_len, invalid, Result};
use crate::grid::GridSpec;

/// One-axis transform plan of size `M = 2^m`.
#[derive(Clone)]
pub struct DftPlan {
    size: usize,
    scale: f64,
    plus: Arc<dyn Fft<f64>>,
    minus: Arc<dyn Fft<f64>>,
    frequencies: Vec<f64>,
}

impl std::fmt::Debug for DftPlan {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DftPlan").field("size", &self.size).finish()
    }
}

impl DftPlan {
    pub fn new(size: usize) -> Result<Self> {
        if size < 2 || !size.is_power_of_two() {
            return Err(invalid("size", format!("{size} is not a power of two >= 2")));
        }
        let mut planner = FftPlanner::new();
        let half = size / 2;
        Ok(Self {
            size,
            scale: 1.0 / (size as f64).sqrt(),
            plus: planner.plan_fft_inverse(size),
            minus: planner.plan_fft_forward(size),
            frequencies: (0..size)
                .map(|k| 2.0 * PI * (k as f64 - half as f64))
                .collect(),
        })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    /// `mu_k = 2 pi (k - N)` in coefficient order.
    pub fn frequencies(&self) -> &[f64] {
        &self.frequencies
    }

    /// Entry `j` of `S`.
    pub fn sign(j: usize) -> f64 {
        if j % 2 == 0 {
            1.0
        } else {
            -1.0
        }
    }

    /// Coefficient index `k` of standard DFT bin `b`.
    pub fn shifted_from_bin(&self, bin: usize) -> usize {
        (bin + self.size / 2) % self.size
    }

    /// Standard DFT bin of coefficient index `k`.
    pub fn bin_from_shifted(&self, k: usize) -> usize {
        (k + self.size / 2) % self.size
    }

    /// Unitary `F` in place.
    pub fn forward(&self, v: &mut [Complex64]) {
        debug_assert_eq!(v.len(), self.size);
        self.plus.process(v);
        v.iter_mut().for_each(|x| *x *= self.scale);
    }

    /// Unitary `F^{-1}` in place.
    pub fn inverse(&self, v: &mut [Complex64]) {
        debug_assert_eq!(v.len(), self.size);
        self.minus.process(v);
        v.iter_mut().for_each(|x| *x *= self.scale);
    }

    /// Nodal values to coefficients: `c = Phi^{-1} u = M^{-1/2} F^{-1} S u`.
    pub fn to_coefficients(&self, v: &mut [Complex64]) {
        apply_sign(v);
        self.minus.process(v);
        let s = 1.0 / self.size as f64;
        v.iter_mut().for_each(|x| *x *= s);
    }

    /// Coefficients to nodal values: `u = Phi c = M^{1/2} S F c`.
    pub fn from_coefficients(&self, v: &mut [Complex64]) {
        self.plus.process(v);
        apply_sign(v);
    }

    /// Dense `Phi`.
    pub fn interpolation_matrix(&self) -> DMatrix<Complex64> {
        let m = self.size;
        DMatrix::from_fn(m, m, |j, k| {
            Complex64::from_polar(1.0, self.frequencies[k] * j as f64 / m as f64)
        })
    }
}

fn apply_sign(v: &mut [Complex64]) {
    v.iter_mut().skip(1).step_by(2).for_each(|x| *x = -*x);
}

/// Visit every grid line along `axis`, handing a contiguous copy to `f`
/// together with the flat index of the line's first node.
pub fn for_each_line<F>(grid: &GridSpec, axis: usize, data: &mut [Complex64], mut f: F)
where
    F: FnMut(usize, &mut [Complex64]),
{
    let m = grid.points();
    let stride = grid.stride(axis);
    let outer = grid.len() / (m * stride);
    let mut buf = vec![Complex64::new(0.0, 0.0); m];
    for o in 0..outer {
        for i in 0..stride {
            let base = o * m * stride + i;
            for (k, b) in buf.iter_mut().enumerate() {
                *b = data[base + k * stride];
            }
            f(base, &mut buf);
            for (k, b) in buf.iter().enumerate() {
                data[base + k * stride] = *b;
            }
        }
    }
}

/// Tensor-product transform helper for a whole grid.
#[derive(Debug, Clone)]
pub struct GridTransform {
    grid: GridSpec,
    plan: DftPlan,
}

impl GridTransform {
    pub fn new(grid: &GridSpec) -> Result<Self> {
        Ok(Self {
            grid: grid.clone(),
            plan: DftPlan::new(grid.points())?,
        })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn plan(&self) -> &DftPlan {
        &self.plan
    }

    pub fn to_coefficients_axis(&self, axis: usize, data: &mut [Complex64]) {
        for_each_line(&self.grid, axis, data, |_, line| self.plan.to_coefficients(line));
    }

    pub fn from_coefficients_axis(&self, axis: usize, data: &mut [Complex64]) {
        for_each_line(&self.grid, axis, data, |_, line| self.plan.from_coefficients(line));
    }

    pub fn forward_axis(&self, axis: usize, data: &mut [Complex64]) {
        for_each_line(&self.grid, axis, data, |_, line| self.plan.forward(line));
    }

    pub fn inverse_axis(&self, axis: usize, data: &mut [Complex64]) {
        for_each_line(&self.grid, axis, data, |_, line| self.plan.inverse(line));
    }

    pub fn to_coefficients(&self, data: &mut [Complex64]) -> Result<()> {
        check_len(self.grid.len(), data.len())?;
        (0..self.grid.dim()).for_each(|a| self.to_coefficients_axis(a, data));
        Ok(())
    }

    pub fn from_coefficients(&self, data: &mut [Complex64]) -> Result<()> {
        check_len(self.grid.len(), data.len())?;
        (0..self.grid.dim()).for_each(|a| self.from_coefficients_axis(a, data));
        Ok(())
    }

    /// Apply the momentum operator `P_axis = Phi D_mu Phi^{-1}` along one axis.
    pub fn apply_momentum(&self, axis: usize, data: &mut [Complex64]) -> Result<()> {
        check_len(self.grid.len(), data.len())?;
        let mu = self.plan.frequencies();
        for_each_line(&self.grid, axis, data, |_, line| {
            self.plan.to_coefficients(line);
            line.iter_mut().zip(mu).for_each(|(c, m)| *c *= m);
            self.plan.from_coefficients(line);
        });
        Ok(())
    }

    /// Spectral derivative `d/dx_axis = i P_axis`.
    pub fn derivative(&self, axis: usize, data: &[Complex64]) -> Result<Vec<Complex64>> {
        let mut out = data.to_vec();
        self.apply_momentum(axis, &mut out)?;
        out.iter_mut().for_each(|v| *v *= Complex64::i());
        Ok(out)
    }
}

/// Dense one-axis momentum matrix `P = Phi D_mu Phi^{-1}`.
pub fn momentum_matrix(plan: &DftPlan) -> DMatrix<Complex64> {
    let m = plan.size();
    let mut p = DMatrix::zeros(m, m);
    let mut col = vec![Complex64::new(0.0, 0.0); m];
    for c in 0..m {
        col.iter_mut().for_each(|v| *v = Complex64::new(0.0, 0.0));
        col[c] = Complex64::new(1.0, 0.0);
        plan.to_coefficients(&mut col);
        col.iter_mut().zip(plan.frequencies()).for_each(|(v, mu)| *v *= mu);
        plan.from_coefficients(&mut col);
        for (r, v) in col.iter().enumerate() {
            p[(r, c)] = *v;
        }
    }
    p
}

/// Embed a one-axis matrix as `I (x) ... (x) A (x) ... (x) I` on `grid`.
pub fn embed_axis_operator(grid: &GridSpec, axis: usize, a: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let n = grid.len();
    let mut out = DMatrix::zeros(n, n);
    for r in 0..n {
        let jr = grid.component(r, axis);
        for c_comp in 0..grid.points() {
            let c = grid.neighbor(r, axis, c_comp as isize - jr as isize);
            out[(r, c)] = a[(jr, c_comp)];
        }
    }
    out
}
