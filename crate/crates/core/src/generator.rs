//! Spectral generators: KvN Hamiltonians, the phase-space Liouville generator,
//! the Schrodinger generator, and the asymmetric transport generator with its
//! positive splitting. Dense forms are size-capped; per-line factorizations
//! serve the splitting propagators.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{check_len, invalid, Error, Result};
use crate::field::FlowField;
use crate::grid::{AxisRole, GridSpec};
use crate::spectral::{embed_axis_operator, momentum_matrix, DftPlan};

/// Largest dense generator dimension.
pub const DENSE_BUDGET: usize = 4096;

/// Hermitian matrix `H` with `A = -iH`; evolution is `exp(-iHt)`.
#[derive(Debug, Clone)]
pub struct HermitianGenerator {
    matrix: DMatrix<Complex64>,
    certificate: f64,
    eigen: std::sync::OnceLock<(DVector<f64>, DMatrix<Complex64>)>,
}

fn check_dense(n: usize) -> Result<()> {
    if n > DENSE_BUDGET {
        Err(Error::Budget {
            what: "dense generator rows",
            required: n,
            limit: DENSE_BUDGET,
        })
    } else {
        Ok(())
    }
}

/// Largest entry modulus.
pub fn max_abs(m: &DMatrix<Complex64>) -> f64 {
    m.iter().map(|c| c.norm()).fold(0.0, f64::max)
}

/// `max |H - H^dagger|` entrywise.
pub fn hermiticity_defect(m: &DMatrix<Complex64>) -> f64 {
    let mut worst = 0.0f64;
    for r in 0..m.nrows() {
        for c in r..m.ncols() {
            worst = worst.max((m[(r, c)] - m[(c, r)].conj()).norm());
        }
    }
    worst
}

impl HermitianGenerator {
    pub const CERTIFICATE_TOLERANCE: f64 = 1e-10;

    pub fn new(matrix: DMatrix<Complex64>) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(invalid("matrix", "generator must be square"));
        }
        check_dense(matrix.nrows())?;
        let certificate = hermiticity_defect(&matrix);
        if certificate > Self::CERTIFICATE_TOLERANCE * (1.0 + max_abs(&matrix)) {
            return Err(Error::Internal(format!(
                "generator is not Hermitian (defect {certificate:e})"
            )));
        }
        Ok(Self {
            matrix,
            certificate,
            eigen: std::sync::OnceLock::new(),
        })
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    /// Hermiticity certificate `max |H - H^dagger|`.
    pub fn certificate(&self) -> f64 {
        self.certificate
    }

    fn eigen(&self) -> &(DVector<f64>, DMatrix<Complex64>) {
        self.eigen.get_or_init(|| {
            let sym = (&self.matrix + self.matrix.adjoint()) * Complex64::new(0.5, 0.0);
            let e = SymmetricEigen::new(sym);
            (e.eigenvalues, e.eigenvectors)
        })
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = self.eigen().0.iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        ev
    }

    /// `exp(-i H t) v` by eigendecomposition.
    pub fn expm_apply(&self, t: f64, v: &[Complex64]) -> Result<Vec<Complex64>> {
        check_len(self.dim(), v.len())?;
        let (vals, vecs) = self.eigen();
        Ok(apply_eigen_exp(vals, vecs, t, v))
    }

    /// `H v`.
    pub fn apply(&self, v: &[Complex64]) -> Result<Vec<Complex64>> {
        check_len(self.dim(), v.len())?;
        let out = &self.matrix * DVector::from_column_slice(v);
        Ok(out.iter().copied().collect())
    }
}

fn apply_eigen_exp(
    vals: &DVector<f64>,
    vecs: &DMatrix<Complex64>,
    t: f64,
    v: &[Complex64],
) -> Vec<Complex64> {
    let x = DVector::from_column_slice(v);
    let mut c = vecs.ad_mul(&x);
    for (ci, lam) in c.iter_mut().zip(vals.iter()) {
        *ci *= Complex64::from_polar(1.0, -lam * t);
    }
    (vecs * c).iter().copied().collect()
}

/// `exp(-i diag(a) t) v`.
pub fn expm_apply_diagonal(diag: &[f64], t: f64, v: &[Complex64]) -> Result<Vec<Complex64>> {
    check_len(diag.len(), v.len())?;
    Ok(v
        .iter()
        .zip(diag)
        .map(|(x, a)| x * Complex64::from_polar(1.0, -a * t))
        .collect())
}

fn diag_matrix(values: &[f64]) -> DMatrix<Complex64> {
    DMatrix::from_diagonal(&DVector::from_iterator(
        values.len(),
        values.iter().map(|v| Complex64::new(*v, 0.0)),
    ))
}

fn half_anticommutator(diag: &DMatrix<Complex64>, p: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    (diag * p + p * diag) * Complex64::new(0.5, 0.0)
}

/// KvN axis Hamiltonian `H_j = (F_j P_j + P_j F_j) / 2` on the full grid.
pub fn build_kvn_hamiltonian(
    grid: &GridSpec,
    field: &FlowField,
    axis: usize,
) -> Result<HermitianGenerator> {
    check_len(grid.dim(), field.dim())?;
    if axis >= grid.dim() {
        return Err(invalid("axis", format!("{axis} >= dim {}", grid.dim())));
    }
    check_dense(grid.len())?;
    let plan = DftPlan::new(grid.points())?;
    let p = embed_axis_operator(grid, axis, &momentum_matrix(&plan));
    let f = diag_matrix(&field.sample(grid)[axis]);
    HermitianGenerator::new(half_anticommutator(&f, &p))
}

/// Phase-space generator `sum_l (P_{x_l} D_{p_l} - V_l(x) P_{p_l})` for
/// `H = |p|^2/2 + V`, where `grad_v` returns `dV/dx_l`.
pub fn build_liouville_phase_generator<G>(phase: &GridSpec, grad_v: G) -> Result<HermitianGenerator>
where
    G: Fn(&[f64], &mut [f64]),
{
    let x_axes = phase.axes_with_role(AxisRole::Position);
    let p_axes = phase.axes_with_role(AxisRole::Momentum);
    let d = x_axes.len();
    if d == 0 || p_axes.len() != d {
        return Err(invalid("grid", "phase grid needs matching x and p axes"));
    }
    check_dense(phase.len())?;
    let plan = DftPlan::new(phase.points())?;
    let p1 = momentum_matrix(&plan);
    let n = phase.len();
    let mut y = vec![0.0; phase.dim()];
    let mut x = vec![0.0; d];
    let mut g = vec![0.0; d];
    let mut p_vals = vec![vec![0.0; n]; d];
    let mut force = vec![vec![0.0; n]; d];
    for k in 0..n {
        phase.point_into(k, &mut y);
        for i in 0..d {
            x[i] = y[x_axes[i]];
        }
        grad_v(&x, &mut g);
        for i in 0..d {
            p_vals[i][k] = y[p_axes[i]];
            force[i][k] = g[i];
        }
    }
    let mut total = DMatrix::zeros(n, n);
    for i in 0..d {
        let px = embed_axis_operator(phase, x_axes[i], &p1);
        let pp = embed_axis_operator(phase, p_axes[i], &p1);
        // diagonals commute with momentum along the other family of axes
        total += &px * diag_matrix(&p_vals[i]);
        total -= diag_matrix(&force[i]) * &pp;
    }
    HermitianGenerator::new(total)
}

/// Schrodinger generator `(hbar/2) sum_j P_j^2 + V / hbar`.
pub fn build_schrodinger_generator<V>(grid: &GridSpec, potential: V, hbar: f64) -> Result<HermitianGenerator>
where
    V: Fn(&[f64]) -> f64,
{
    if !(hbar > 0.0) {
        return Err(invalid("hbar", format!("{hbar} must be positive")));
    }
    check_dense(grid.len())?;
    let plan = DftPlan::new(grid.points())?;
    let p1 = momentum_matrix(&plan);
    let p2 = &p1 * &p1;
    let n = grid.len();
    let mut total = DMatrix::zeros(n, n);
    for axis in 0..grid.dim() {
        total += embed_axis_operator(grid, axis, &p2) * Complex64::new(0.5 * hbar, 0.0);
    }
    let mut x = vec![0.0; grid.dim()];
    for k in 0..n {
        grid.point_into(k, &mut x);
        total[(k, k)] += potential(&x) / hbar;
    }
    HermitianGenerator::new(total)
}

/// Eigen-factorized Hermitian matrix acting on one grid line.
#[derive(Debug, Clone)]
pub struct LineFactor {
    values: DVector<f64>,
    vectors: DMatrix<Complex64>,
}

impl LineFactor {
    pub fn new(h: DMatrix<Complex64>) -> Self {
        let sym = (&h + h.adjoint()) * Complex64::new(0.5, 0.0);
        let e = SymmetricEigen::new(sym);
        Self {
            values: e.eigenvalues,
            vectors: e.eigenvectors,
        }
    }

    /// In-place `exp(-i H t)` on a line.
    pub fn apply_exp(&self, t: f64, line: &mut [Complex64]) {
        let out = apply_eigen_exp(&self.values, &self.vectors, t, line);
        line.copy_from_slice(&out);
    }
}

/// Values of `F_axis` along each grid line of `axis`, keyed by line start.
pub fn line_samples(grid: &GridSpec, samples: &[f64], axis: usize) -> Vec<(usize, Vec<f64>)> {
    let m = grid.points();
    let stride = grid.stride(axis);
    let outer = grid.len() / (m * stride);
    let mut out = Vec::with_capacity(outer * stride);
    for o in 0..outer {
        for i in 0..stride {
            let base = o * m * stride + i;
            out.push((base, (0..m).map(|k| samples[base + k * stride]).collect()));
        }
    }
    out
}

/// Per-line factors of the KvN Hamiltonian along `axis`.
pub fn kvn_line_factors(grid: &GridSpec, field: &FlowField, axis: usize) -> Result<Vec<LineFactor>> {
    check_len(grid.dim(), field.dim())?;
    let plan = DftPlan::new(grid.points())?;
    let p = momentum_matrix(&plan);
    let f = field.sample(grid);
    Ok(line_samples(grid, &f[axis], axis)
        .into_iter()
        .map(|(_, vals)| LineFactor::new(half_anticommutator(&diag_matrix(&vals), &p)))
        .collect())
}

/// Line exponential of a KvN axis Hamiltonian. A line with constant speed
/// `c` has Hamiltonian `c P`, which is diagonal in the Fourier basis.
#[derive(Debug, Clone)]
pub enum LineExp {
    Uniform(f64),
    Dense(LineFactor),
}

impl LineExp {
    /// In-place `exp(-i H t)` on a line.
    pub fn apply_exp(&self, plan: &DftPlan, t: f64, line: &mut [Complex64]) {
        match self {
            LineExp::Uniform(speed) => {
                plan.to_coefficients(line);
                for (c, mu) in line.iter_mut().zip(plan.frequencies()) {
                    *c *= Complex64::from_polar(1.0, -speed * mu * t);
                }
                plan.from_coefficients(line);
            }
            LineExp::Dense(f) => f.apply_exp(t, line),
        }
    }
}

/// Per-line exponentials along `axis`, using the Fourier diagonalization on
/// lines where the speed is constant to rounding.
pub fn kvn_line_exponentials(grid: &GridSpec, field: &FlowField, axis: usize) -> Result<Vec<LineExp>> {
    check_len(grid.dim(), field.dim())?;
    let plan = DftPlan::new(grid.points())?;
    let p = momentum_matrix(&plan);
    let f = field.sample(grid);
    Ok(line_samples(grid, &f[axis], axis)
        .into_iter()
        .map(|(_, vals)| {
            let first = vals[0];
            let scale = first.abs().max(1.0);
            if vals.iter().all(|v| (v - first).abs() <= 1e-14 * scale) {
                LineExp::Uniform(first)
            } else {
                LineExp::Dense(LineFactor::new(half_anticommutator(&diag_matrix(&vals), &p)))
            }
        })
        .collect())
}

/// Positive splitting `Lambda_F = Lambda_plus - Lambda_minus` with
/// `Lambda_minus = s I`, `s = floor + max(0, -min F)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PositiveSplit {
    pub plus: Vec<f64>,
    pub shift: f64,
    pub floor: f64,
}

impl PositiveSplit {
    pub fn new(values: &[f64], floor: f64) -> Result<Self> {
        if !(floor > 0.0) {
            return Err(invalid("floor", format!("{floor} must be positive")));
        }
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let shift = floor + (-min).max(0.0);
        Ok(Self {
            plus: values.iter().map(|v| v + shift).collect(),
            shift,
            floor,
        })
    }

    pub fn minus(&self) -> Vec<f64> {
        vec![self.shift; self.plus.len()]
    }
}

/// Asymmetric transport generator `A = P Lambda_F` along one axis, with the
/// symmetrized parts `sqrt(Lambda_pm) P sqrt(Lambda_pm)`.
#[derive(Debug, Clone)]
pub struct AsymGenerator {
    pub axis: usize,
    pub split: PositiveSplit,
    /// Dense `A` on the full grid.
    pub matrix: DMatrix<Complex64>,
    pub sym_plus: HermitianGenerator,
    pub sym_minus: HermitianGenerator,
}

pub const DEFAULT_FLOOR: f64 = 1.0;

pub fn build_asym_generator(
    grid: &GridSpec,
    field: &FlowField,
    axis: usize,
    floor: f64,
) -> Result<AsymGenerator> {
    check_len(grid.dim(), field.dim())?;
    check_dense(grid.len())?;
    let plan = DftPlan::new(grid.points())?;
    let p = embed_axis_operator(grid, axis, &momentum_matrix(&plan));
    let f = field.sample(grid).swap_remove(axis);
    let split = PositiveSplit::new(&f, floor)?;
    let sqrt_plus = diag_matrix(&split.plus.iter().map(|v| v.sqrt()).collect::<Vec<_>>());
    let sqrt_minus = diag_matrix(&split.minus().iter().map(|v| v.sqrt()).collect::<Vec<_>>());
    Ok(AsymGenerator {
        axis,
        matrix: &p * diag_matrix(&f),
        sym_plus: HermitianGenerator::new(&sqrt_plus * &p * &sqrt_plus)?,
        sym_minus: HermitianGenerator::new(&sqrt_minus * &p * &sqrt_minus)?,
        split,
    })
}

/// Per-line data for the non-unitary splitting along one axis.
#[derive(Debug, Clone)]
pub struct AsymLine {
    pub start: usize,
    pub sqrt_plus: Vec<f64>,
    pub sqrt_minus: Vec<f64>,
    pub plus: LineFactor,
    pub minus: LineFactor,
}

pub fn asym_line_factors(
    grid: &GridSpec,
    field: &FlowField,
    axis: usize,
    floor: f64,
) -> Result<Vec<AsymLine>> {
    check_len(grid.dim(), field.dim())?;
    let plan = DftPlan::new(grid.points())?;
    let p = momentum_matrix(&plan);
    let f = field.sample(grid);
    let global = PositiveSplit::new(&f[axis], floor)?;
    line_samples(grid, &f[axis], axis)
        .into_iter()
        .map(|(start, vals)| {
            let plus: Vec<f64> = vals.iter().map(|v| v + global.shift).collect();
            if plus.iter().any(|v| *v <= 0.0) {
                return Err(Error::Internal("non-positive splitting diagonal".into()));
            }
            let sqrt_plus: Vec<f64> = plus.iter().map(|v| v.sqrt()).collect();
            let sqrt_minus = vec![global.shift.sqrt(); vals.len()];
            let sp = diag_matrix(&sqrt_plus);
            let sm = diag_matrix(&sqrt_minus);
            Ok(AsymLine {
                start,
                plus: LineFactor::new(&sp * &p * &sp),
                minus: LineFactor::new(&sm * &p * &sm),
                sqrt_plus,
                sqrt_minus,
            })
        })
        .collect()
}
