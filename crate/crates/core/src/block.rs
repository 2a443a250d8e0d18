//! Time-history block system `L w = f` and its conditioning diagnostics.

use crate::error::{check_len, Error, Result};
use crate::sparse::CsrMatrix;
use crate::upwind::UpwindScheme;

/// Default cap on the total unknown count for dense-style diagnostics.
pub const DIAGNOSTIC_BUDGET: usize = 4096;

/// Block lower-bidiagonal system with `I` on the diagonal and `-B` below it.
///
/// Rows `1..=steps` encode `w^{n} - B w^{n-1} = f^n` with `f^1 = B w^0`;
/// the optional dilation tail appends `w^{n} - w^{n-1} = 0`.
#[derive(Debug, Clone)]
pub struct BlockSystem {
    block: CsrMatrix,
    steps: usize,
    dilation: usize,
    rhs_first: Vec<f64>,
    dt: f64,
    div_sup: f64,
}

impl BlockSystem {
    pub fn new(scheme: &UpwindScheme, w0: &[f64], steps: usize, dilation: usize) -> Result<Self> {
        check_len(scheme.len(), w0.len())?;
        if steps == 0 {
            return Err(crate::error::invalid("steps", "at least one step is required"));
        }
        Ok(Self {
            rhs_first: scheme.step(w0)?,
            block: scheme.matrix.clone(),
            steps,
            dilation,
            dt: scheme.dt,
            div_sup: scheme.div_sup,
        })
    }

    pub fn block(&self) -> &CsrMatrix {
        &self.block
    }

    pub fn block_size(&self) -> usize {
        self.block.rows()
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn dilation(&self) -> usize {
        self.dilation
    }

    pub fn block_count(&self) -> usize {
        self.steps + self.dilation
    }

    pub fn size(&self) -> usize {
        self.block_count() * self.block_size()
    }

    /// Right-hand side: `B w^0` in the first block, zeros elsewhere.
    pub fn rhs(&self) -> Vec<f64> {
        let mut f = vec![0.0; self.size()];
        f[..self.block_size()].copy_from_slice(&self.rhs_first);
        f
    }

    /// Sub-diagonal operator feeding block `i` (1-based) from block `i - 1`.
    fn apply_sub(&self, i: usize, x: &[f64]) -> Vec<f64> {
        if i <= self.steps {
            self.block.matvec(x).expect("block size checked")
        } else {
            x.to_vec()
        }
    }

    fn apply_sub_transpose(&self, i: usize, x: &[f64]) -> Vec<f64> {
        if i <= self.steps {
            self.block.matvec_transpose(x).expect("block size checked")
        } else {
            x.to_vec()
        }
    }

    /// `L x`.
    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_len(self.size(), x.len())?;
        let n = self.block_size();
        let mut y = x.to_vec();
        for i in 1..self.block_count() {
            let sub = self.apply_sub(i + 1, &x[(i - 1) * n..i * n]);
            for (yk, s) in y[i * n..(i + 1) * n].iter_mut().zip(sub) {
                *yk -= s;
            }
        }
        Ok(y)
    }

    /// `L^T x`.
    pub fn apply_transpose(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_len(self.size(), x.len())?;
        let n = self.block_size();
        let mut y = x.to_vec();
        for i in 0..self.block_count() - 1 {
            let sub = self.apply_sub_transpose(i + 2, &x[(i + 1) * n..(i + 2) * n]);
            for (yk, s) in y[i * n..(i + 1) * n].iter_mut().zip(sub) {
                *yk -= s;
            }
        }
        Ok(y)
    }

    /// Solve `L x = b` by forward substitution.
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        check_len(self.size(), b.len())?;
        let n = self.block_size();
        let mut x = b.to_vec();
        for i in 1..self.block_count() {
            let sub = self.apply_sub(i + 1, &x[(i - 1) * n..i * n]);
            for (xk, s) in x[i * n..(i + 1) * n].iter_mut().zip(sub) {
                *xk += s;
            }
        }
        Ok(x)
    }

    /// Solve `L^T x = b` by backward substitution.
    pub fn solve_transpose(&self, b: &[f64]) -> Result<Vec<f64>> {
        check_len(self.size(), b.len())?;
        let n = self.block_size();
        let mut x = b.to_vec();
        for i in (0..self.block_count() - 1).rev() {
            let sub = self.apply_sub_transpose(i + 2, &x[(i + 1) * n..(i + 2) * n]);
            for (xk, s) in x[i * n..(i + 1) * n].iter_mut().zip(sub) {
                *xk += s;
            }
        }
        Ok(x)
    }

    /// Time history `w^1, ..., w^{steps + dilation}` from the exact solve.
    pub fn history(&self) -> Result<Vec<Vec<f64>>> {
        let x = self.solve(&self.rhs())?;
        Ok(x.chunks(self.block_size()).map(<[f64]>::to_vec).collect())
    }

    /// Dense copy of `L` for small systems.
    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        let n = self.block_size();
        let size = self.size();
        let mut m = nalgebra::DMatrix::identity(size, size);
        let b = self.block.to_dense();
        for i in 1..self.block_count() {
            let (r0, c0) = (i * n, (i - 1) * n);
            if i < self.steps {
                for r in 0..n {
                    for c in 0..n {
                        m[(r0 + r, c0 + c)] = -b[(r, c)];
                    }
                }
            } else {
                for r in 0..n {
                    m[(r0 + r, c0 + r)] = -1.0;
                }
            }
        }
        m
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn div_sup(&self) -> f64 {
        self.div_sup
    }
}

/// Measured and predicted conditioning of a block system.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionReport {
    pub sigma_max: f64,
    pub sigma_min: f64,
    pub kappa_est: f64,
    /// `(2 + dt ||div F||) e^{||div F|| + 1} / dt`.
    pub kappa_bound: f64,
    pub norm_b: f64,
    /// `1 + dt ||div F||`.
    pub norm_b_bound: f64,
    pub max_row_nnz: usize,
    pub within_bounds: bool,
}

const POWER_TOL: f64 = 1e-13;
const POWER_MAX_ITERS: usize = 20_000;

/// Largest eigenvalue of a symmetric positive semidefinite operator.
fn power_iteration<F>(n: usize, mut apply: F) -> f64
where
    F: FnMut(&[f64]) -> Vec<f64>,
{
    let mut v: Vec<f64> = (0..n)
        .map(|i| 1.0 + 0.5 * ((i as f64 * 0.618_033_988_75).fract() - 0.5))
        .collect();
    normalize(&mut v);
    let mut est = 0.0;
    for _ in 0..POWER_MAX_ITERS {
        let mut w = apply(&v);
        let rq: f64 = w.iter().zip(&v).map(|(a, b)| a * b).sum();
        let norm = normalize(&mut w);
        if norm == 0.0 {
            return 0.0;
        }
        v = w;
        if (rq - est).abs() <= POWER_TOL * rq.abs() {
            return rq;
        }
        est = rq;
    }
    est
}

fn normalize(v: &mut [f64]) -> f64 {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
    }
    n
}

/// Spectral norm of a sparse matrix by power iteration on `A^T A`.
pub fn spectral_norm(a: &CsrMatrix) -> f64 {
    power_iteration(a.cols(), |v| {
        let av = a.matvec(v).expect("square");
        a.matvec_transpose(&av).expect("square")
    })
    .sqrt()
}

/// Singular-value extremes of `L`, `||B||_2`, and the a-priori bounds.
pub fn condition_diagnostics(sys: &BlockSystem, budget: usize) -> Result<ConditionReport> {
    if sys.size() > budget {
        return Err(Error::Budget {
            what: "block system unknowns for diagnostics",
            required: sys.size(),
            limit: budget,
        });
    }
    let n = sys.size();
    let sigma_max = power_iteration(n, |v| {
        let lv = sys.apply(v).expect("sized");
        sys.apply_transpose(&lv).expect("sized")
    })
    .sqrt();
    let inv_max = power_iteration(n, |v| {
        let y = sys.solve_transpose(v).expect("sized");
        sys.solve(&y).expect("sized")
    })
    .sqrt();
    let sigma_min = 1.0 / inv_max;
    let kappa_est = sigma_max / sigma_min;
    let dt = sys.dt();
    let div = sys.div_sup();
    let kappa_bound = (2.0 + dt * div) * (div + 1.0).exp() / dt;
    let norm_b = spectral_norm(sys.block());
    let norm_b_bound = 1.0 + dt * div;
    let tol = 1e-10;
    Ok(ConditionReport {
        sigma_max,
        sigma_min,
        kappa_est,
        kappa_bound,
        norm_b,
        norm_b_bound,
        max_row_nnz: sys.block().max_row_nnz(),
        within_bounds: kappa_est <= kappa_bound * (1.0 + tol) && norm_b <= norm_b_bound * (1.0 + tol),
    })
}

/// `max_n ||w^n|| / ||w^N||`, reported alongside runs.
pub fn decay_factor<T: AsRef<[f64]>>(history: &[T]) -> Option<f64> {
    let norms: Vec<f64> = history
        .iter()
        .map(|w| w.as_ref().iter().map(|x| x * x).sum::<f64>().sqrt())
        .collect();
    let last = *norms.last()?;
    if last == 0.0 {
        return None;
    }
    Some(norms.iter().fold(0.0f64, |a, &b| a.max(b)) / last)
}
