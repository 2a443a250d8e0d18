//! First-order upwind schemes for the Liouville, KvN and level-set equations.

use crate::error::{check_len, Error, Result};
use crate::field::{FlowField, HamiltonianField};
use crate::grid::{AxisRole, GridSpec, TimeGrid};
use crate::sparse::CsrMatrix;

/// Outcome of a CFL check: `margin = 1 - lambda * sum(sups)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CflReport {
    pub satisfied: bool,
    pub margin: f64,
}

/// Tolerance absorbing round-off at the CFL boundary.
const CFL_SLACK: f64 = 1e-12;

/// Check `lambda * sum(speed_sups) <= 1`.
pub fn check_cfl(speed_sups: &[f64], lambda: f64) -> CflReport {
    let margin = 1.0 - lambda * speed_sups.iter().sum::<f64>();
    CflReport {
        satisfied: margin >= -CFL_SLACK,
        margin,
    }
}

pub fn check_cfl_flow(field: &FlowField, lambda: f64) -> CflReport {
    check_cfl(field.sup_per_axis(), lambda)
}

pub fn check_cfl_hamiltonian(ham: &HamiltonianField, lambda: f64) -> CflReport {
    let sups: Vec<f64> = ham.sup_dh_dx().iter().chain(ham.sup_dh_dp()).copied().collect();
    check_cfl(&sups, lambda)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SchemeKind {
    /// Conservative form with face-averaged speeds.
    Liouville,
    /// Nodal form with the half-divergence reaction term.
    Kvn,
    /// Nodal form on the phase grid.
    Hje,
}

/// Speeds used by one axis of a stencil.
///
/// For the conservative form `right[j]` is the speed on face `j + 1/2` and
/// `left[j]` on face `j - 1/2`; for nodal forms both hold the node speed.
#[derive(Debug, Clone, PartialEq)]
pub struct AxisCoefficients {
    pub axis: usize,
    pub right: Vec<f64>,
    pub left: Vec<f64>,
}

/// Assembled one-step matrix `w^{n+1} = B w^n`.
#[derive(Debug, Clone)]
pub struct UpwindScheme {
    pub kind: SchemeKind,
    pub matrix: CsrMatrix,
    pub lambda: f64,
    pub dt: f64,
    pub dx: f64,
    pub cfl: CflReport,
    /// `sup |div F|` used by the norm and condition bounds.
    pub div_sup: f64,
    pub coefficients: Vec<AxisCoefficients>,
}

impl UpwindScheme {
    pub fn len(&self) -> usize {
        self.matrix.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.matrix.rows() == 0
    }

    /// `B w`.
    pub fn step(&self, w: &[f64]) -> Result<Vec<f64>> {
        self.matrix.matvec(w)
    }

    /// Apply `n` steps, returning the final state.
    pub fn evolve(&self, w0: &[f64], n: usize) -> Result<Vec<f64>> {
        check_len(self.len(), w0.len())?;
        let mut w = w0.to_vec();
        for step in 0..n {
            w = self.step(&w)?;
            if w.iter().any(|v| !v.is_finite()) {
                return Err(Error::Divergence(format!("non-finite state after step {}", step + 1)));
            }
        }
        Ok(w)
    }

    /// `1 + dt * sup |div F|`, the a-priori bound on `||B||_2`.
    pub fn norm_bound(&self) -> f64 {
        1.0 + self.dt * self.div_sup
    }
}

fn lambda_of(grid: &GridSpec, tg: &TimeGrid) -> f64 {
    tg.dt() / grid.dx()
}

fn refuse_unstable(report: CflReport, lambda: f64, sups: &[f64]) -> Result<()> {
    if report.satisfied {
        Ok(())
    } else {
        Err(Error::Stability {
            load: lambda * sups.iter().sum::<f64>(),
        })
    }
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |a, x| a.max(x.abs()))
}

/// Conservative upwind matrix for `rho_t + div(F rho) = 0`.
pub fn assemble_liouville(grid: &GridSpec, tg: &TimeGrid, field: &FlowField) -> Result<UpwindScheme> {
    check_len(grid.dim(), field.dim())?;
    let lambda = lambda_of(grid, tg);
    let nodal = field.sample(grid);
    let coefficients: Vec<AxisCoefficients> = nodal
        .iter()
        .enumerate()
        .map(|(axis, f)| {
            let right: Vec<f64> = (0..grid.len())
                .map(|k| 0.5 * (f[grid.neighbor(k, axis, 1)] + f[k]))
                .collect();
            let left = (0..grid.len())
                .map(|k| right[grid.neighbor(k, axis, -1)])
                .collect();
            AxisCoefficients { axis, right, left }
        })
        .collect();
    let sups: Vec<f64> = field
        .sup_per_axis()
        .iter()
        .zip(&coefficients)
        .map(|(s, c)| s.max(max_abs(&c.right)))
        .collect();
    let cfl = check_cfl(&sups, lambda);
    refuse_unstable(cfl, lambda, &sups)?;

    let mut trips = Vec::with_capacity(grid.len() * (2 * grid.dim() + 1));
    for k in 0..grid.len() {
        let mut diag = 1.0;
        for c in &coefficients {
            let a = c.right[k];
            let b = c.left[k];
            diag -= lambda * (a.max(0.0) - b.min(0.0));
            trips.push((k, grid.neighbor(k, c.axis, 1), -lambda * a.min(0.0)));
            trips.push((k, grid.neighbor(k, c.axis, -1), lambda * b.max(0.0)));
        }
        trips.push((k, k, diag));
    }
    Ok(UpwindScheme {
        kind: SchemeKind::Liouville,
        matrix: CsrMatrix::from_triplets(grid.len(), grid.len(), trips),
        lambda,
        dt: tg.dt(),
        dx: grid.dx(),
        cfl,
        div_sup: field.div_sup(),
        coefficients,
    })
}

fn assemble_nodal(
    grid: &GridSpec,
    lambda: f64,
    speeds: &[Vec<f64>],
    reaction: Option<&[f64]>,
) -> (CsrMatrix, Vec<AxisCoefficients>) {
    let mut trips = Vec::with_capacity(grid.len() * (2 * grid.dim() + 1));
    for k in 0..grid.len() {
        let mut diag = 1.0 - reaction.map_or(0.0, |r| r[k]);
        for (axis, f) in speeds.iter().enumerate() {
            let b = f[k];
            diag -= lambda * (b.max(0.0) - b.min(0.0));
            trips.push((k, grid.neighbor(k, axis, 1), -lambda * b.min(0.0)));
            trips.push((k, grid.neighbor(k, axis, -1), lambda * b.max(0.0)));
        }
        trips.push((k, k, diag));
    }
    let coefficients = speeds
        .iter()
        .enumerate()
        .map(|(axis, f)| AxisCoefficients {
            axis,
            right: f.clone(),
            left: f.clone(),
        })
        .collect();
    (
        CsrMatrix::from_triplets(grid.len(), grid.len(), trips),
        coefficients,
    )
}

/// Nodal upwind matrix for `psi_t + F.grad(psi) + (div F / 2) psi = 0`.
pub fn assemble_kvn(grid: &GridSpec, tg: &TimeGrid, field: &FlowField) -> Result<UpwindScheme> {
    check_len(grid.dim(), field.dim())?;
    let lambda = lambda_of(grid, tg);
    let nodal = field.sample(grid);
    let sups: Vec<f64> = field
        .sup_per_axis()
        .iter()
        .zip(&nodal)
        .map(|(s, f)| s.max(max_abs(f)))
        .collect();
    let cfl = check_cfl(&sups, lambda);
    refuse_unstable(cfl, lambda, &sups)?;
    let div = field.nodal_divergence(grid, &nodal);
    let div_sup = field.div_sup().max(max_abs(&div));
    let reaction: Vec<f64> = div.iter().map(|d| 0.5 * tg.dt() * d).collect();
    let (matrix, coefficients) = assemble_nodal(grid, lambda, &nodal, Some(&reaction));
    Ok(UpwindScheme {
        kind: SchemeKind::Kvn,
        matrix,
        lambda,
        dt: tg.dt(),
        dx: grid.dx(),
        cfl,
        div_sup,
        coefficients,
    })
}

/// Nodal upwind matrix for `phi_t + grad_p H . grad_x phi - grad_x H . grad_p phi = 0`.
pub fn assemble_hje(phase: &GridSpec, tg: &TimeGrid, ham: &HamiltonianField) -> Result<UpwindScheme> {
    let x_axes = phase.axes_with_role(AxisRole::Position);
    let p_axes = phase.axes_with_role(AxisRole::Momentum);
    let d = ham.dim();
    if x_axes.len() != d || p_axes.len() != d {
        return Err(Error::SizeMismatch {
            expected: 2 * d,
            actual: phase.dim(),
        });
    }
    let lambda = lambda_of(phase, tg);
    let mut speeds = vec![vec![0.0; phase.len()]; phase.dim()];
    let mut y = vec![0.0; phase.dim()];
    let (mut x, mut p) = (vec![0.0; d], vec![0.0; d]);
    let (mut gx, mut gp) = (vec![0.0; d], vec![0.0; d]);
    for k in 0..phase.len() {
        phase.point_into(k, &mut y);
        for i in 0..d {
            x[i] = y[x_axes[i]];
            p[i] = y[p_axes[i]];
        }
        ham.dh_dx(&x, &p, &mut gx);
        ham.dh_dp(&x, &p, &mut gp);
        for i in 0..d {
            speeds[x_axes[i]][k] = gp[i];
            speeds[p_axes[i]][k] = -gx[i];
        }
    }
    let mut sups = vec![0.0; phase.dim()];
    for i in 0..d {
        sups[x_axes[i]] = ham.sup_dh_dp()[i].max(max_abs(&speeds[x_axes[i]]));
        sups[p_axes[i]] = ham.sup_dh_dx()[i].max(max_abs(&speeds[p_axes[i]]));
    }
    let cfl = check_cfl(&sups, lambda);
    refuse_unstable(cfl, lambda, &sups)?;
    let (matrix, coefficients) = assemble_nodal(phase, lambda, &speeds, None);
    Ok(UpwindScheme {
        kind: SchemeKind::Hje,
        matrix,
        lambda,
        dt: tg.dt(),
        dx: phase.dx(),
        cfl,
        div_sup: 0.0,
        coefficients,
    })
}
