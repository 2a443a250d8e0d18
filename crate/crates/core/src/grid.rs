//! Uniform periodic grids on the unit box, multi-index flattening, and the
//! mesh strategies that turn a target precision into concrete spacings.

use crate::error::{invalid, Error, Result};

/// Default cap on the number of grid nodes `M^dim`.
pub const DEFAULT_NODE_BUDGET: usize = 1 << 24;

/// Largest per-axis exponent `m` accepted by the mesh strategies (`M = 2^m`).
pub const MAX_AXIS_EXPONENT: u32 = 30;

/// Role of one grid axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AxisRole {
    Position,
    Momentum,
}

/// Tensor grid with `M = 2^m` points on every axis of `[0,1)^dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    dim: usize,
    points: usize,
    spacing: f64,
    roles: Vec<AxisRole>,
    len: usize,
}

/// Components `(j_1, ..., j_dim)` of a grid node.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MultiIndex(pub Vec<usize>);

impl GridSpec {
    /// Position grid of dimension `dim` with `points` nodes per axis.
    pub fn new(dim: usize, points: usize) -> Result<Self> {
        Self::with_roles(vec![AxisRole::Position; dim], points, DEFAULT_NODE_BUDGET)
    }

    /// Phase-space grid over `(x_1..x_d, p_1..p_d)`.
    pub fn phase_space(d: usize, points: usize) -> Result<Self> {
        let mut roles = vec![AxisRole::Position; d];
        roles.extend(std::iter::repeat_n(AxisRole::Momentum, d));
        Self::with_roles(roles, points, DEFAULT_NODE_BUDGET)
    }

    pub fn with_roles(roles: Vec<AxisRole>, points: usize, budget: usize) -> Result<Self> {
        let dim = roles.len();
        if dim == 0 {
            return Err(invalid("dim", "grid needs at least one axis"));
        }
        if points < 2 || !points.is_power_of_two() {
            return Err(invalid(
                "points_per_axis",
                format!("{points} is not a power of two >= 2"),
            ));
        }
        let len = (0..dim)
            .try_fold(1usize, |acc, _| acc.checked_mul(points))
            .filter(|&n| n <= budget)
            .ok_or(Error::Budget {
                what: "grid nodes",
                required: (points as f64).powi(dim as i32).min(usize::MAX as f64) as usize,
                limit: budget,
            })?;
        Ok(Self {
            dim,
            points,
            spacing: 1.0 / points as f64,
            roles,
            len,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Nodes per axis `M`.
    pub fn points(&self) -> usize {
        self.points
    }

    /// Spacing `1/M`.
    pub fn dx(&self) -> f64 {
        self.spacing
    }

    pub fn roles(&self) -> &[AxisRole] {
        &self.roles
    }

    /// Total node count `M^dim`.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Axes tagged with `role`, in order.
    pub fn axes_with_role(&self, role: AxisRole) -> Vec<usize> {
        (0..self.dim).filter(|&a| self.roles[a] == role).collect()
    }

    /// Distance in the flat array between neighbours along `axis`.
    pub fn stride(&self, axis: usize) -> usize {
        self.points.pow((self.dim - 1 - axis) as u32)
    }

    /// Coordinate of node index `j` on any axis.
    pub fn coordinate(&self, j: usize) -> f64 {
        j as f64 * self.spacing
    }

    /// Node coordinates `j * dx` along one axis.
    pub fn axis_nodes(&self) -> Vec<f64> {
        (0..self.points).map(|j| self.coordinate(j)).collect()
    }

    /// Row-major base-`M` flattening.
    pub fn flatten(&self, index: &MultiIndex) -> Result<usize> {
        if index.0.len() != self.dim {
            return Err(Error::SizeMismatch {
                expected: self.dim,
                actual: index.0.len(),
            });
        }
        index.0.iter().try_fold(0usize, |acc, &j| {
            if j >= self.points {
                Err(Error::Index {
                    component: j,
                    limit: self.points,
                })
            } else {
                Ok(acc * self.points + j)
            }
        })
    }

    pub fn unflatten(&self, mut k: usize) -> MultiIndex {
        let mut comps = vec![0; self.dim];
        for c in comps.iter_mut().rev() {
            *c = k % self.points;
            k /= self.points;
        }
        MultiIndex(comps)
    }

    /// Component of flat index `k` along `axis`.
    pub fn component(&self, k: usize, axis: usize) -> usize {
        (k / self.stride(axis)) % self.points
    }

    /// Coordinates of flat node `k`.
    pub fn point(&self, k: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        self.point_into(k, &mut out);
        out
    }

    pub fn point_into(&self, k: usize, out: &mut [f64]) {
        for (axis, x) in out.iter_mut().enumerate() {
            *x = self.coordinate(self.component(k, axis));
        }
    }

    /// Periodic neighbour of `k` shifted by `offset` cells along `axis`.
    pub fn neighbor(&self, k: usize, axis: usize, offset: isize) -> usize {
        let stride = self.stride(axis);
        let j = self.component(k, axis) as isize;
        let m = self.points as isize;
        let shifted = (j + offset).rem_euclid(m) as usize;
        k - (j as usize) * stride + shifted * stride
    }

    /// Sub-grid made of the axes with `role` (same `M`).
    pub fn sub_grid(&self, role: AxisRole) -> Result<GridSpec> {
        let n = self.axes_with_role(role).len();
        GridSpec::with_roles(vec![role; n], self.points, usize::MAX)
    }
}

/// Uniform time stepping `T = N_t * dt`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    dt: f64,
    steps: usize,
    horizon: f64,
}

impl TimeGrid {
    pub fn new(dt: f64, steps: usize) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(invalid("dt", format!("{dt} must be positive and finite")));
        }
        if steps == 0 {
            return Err(invalid("steps", "at least one step is required"));
        }
        Ok(Self {
            dt,
            steps,
            horizon: dt * steps as f64,
        })
    }

    /// Largest `dt <= dt_target` with an integer step count reaching `horizon`.
    pub fn from_target(dt_target: f64, horizon: f64) -> Result<Self> {
        if !(dt_target > 0.0 && dt_target.is_finite()) {
            return Err(invalid("dt", format!("{dt_target} must be positive and finite")));
        }
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(invalid("horizon", format!("{horizon} must be positive")));
        }
        let steps = ceil_tolerant(horizon / dt_target).max(1.0) as usize;
        Ok(Self {
            dt: horizon / steps as f64,
            steps,
            horizon,
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// Time after `n` steps.
    pub fn time(&self, n: usize) -> f64 {
        n as f64 * self.dt
    }
}

/// Sobolev regularity `l`; `f64::INFINITY` selects the smooth limit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SobolevOrder(f64);

impl SobolevOrder {
    pub const SMOOTH: SobolevOrder = SobolevOrder(f64::INFINITY);

    pub fn new(ell: f64) -> Result<Self> {
        if ell >= 1.0 {
            Ok(Self(ell))
        } else {
            Err(invalid("ell", format!("{ell} must be >= 1")))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// `1/l`, zero in the smooth limit.
    pub fn inverse(self) -> f64 {
        if self.0.is_infinite() {
            0.0
        } else {
            1.0 / self.0
        }
    }
}

/// Which discretisation a mesh strategy serves.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeshKind {
    Upwind,
    Spectral,
    SchrodingerWavefunction,
    SchrodingerObservable,
}

/// Intended output of a Schrodinger mesh.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SchrodingerPurpose {
    Wavefunction,
    Observable,
}

/// Multipliers standing in for the constants hidden by asymptotic scalings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeshConstants {
    pub dx: f64,
    pub dt: f64,
    pub omega: f64,
}

impl Default for MeshConstants {
    fn default() -> Self {
        Self {
            dx: 1.0,
            dt: 1.0,
            omega: 1.0,
        }
    }
}

/// Concrete mesh derived from a target precision.
#[derive(Debug, Clone, PartialEq)]
pub struct MeshStrategy {
    pub kind: MeshKind,
    pub target_eps: f64,
    pub dim: usize,
    pub sobolev_order: SobolevOrder,
    /// Exponent on `d` in the finite-difference cost; recorded, not used for spacing.
    pub time_order: Option<f64>,
    /// Grid exponent `m` with `dx = 2^-m`.
    pub axis_exponent: u32,
    pub dx: f64,
    /// Upper bound on the time step; see [`TimeGrid::from_target`].
    pub dt: f64,
    pub omega: Option<f64>,
    pub hbar: Option<f64>,
    /// Sum of transport speed bounds used to tie `dt` to the CFL limit.
    pub speed_sum: Option<f64>,
    pub constants: MeshConstants,
    /// Unrounded targets before snapping to the grid.
    pub dx_target: f64,
    pub dt_target: f64,
    pub omega_target: Option<f64>,
}

impl MeshStrategy {
    pub fn points(&self) -> usize {
        1usize << self.axis_exponent
    }

    /// Mollifier width in cells, when a width is part of the strategy.
    pub fn omega_cells(&self) -> Option<usize> {
        self.omega.map(|w| (w / self.dx).round() as usize)
    }

    pub fn time_grid(&self, horizon: f64) -> Result<TimeGrid> {
        TimeGrid::from_target(self.dt, horizon)
    }
}

fn ceil_tolerant(x: f64) -> f64 {
    (x - 1e-9 * x.abs().max(1.0)).ceil()
}

/// Snap a target spacing down to `2^-m`, returning `(m, 2^-m)`.
pub fn round_spacing_down(target: f64) -> Result<(u32, f64)> {
    if !(target > 0.0 && target.is_finite()) {
        return Err(invalid("dx", format!("target {target} must be positive")));
    }
    let m = ceil_tolerant(-target.log2()).max(0.0);
    if m > MAX_AXIS_EXPONENT as f64 {
        return Err(Error::Budget {
            what: "points per axis (log2)",
            required: m as usize,
            limit: MAX_AXIS_EXPONENT as usize,
        });
    }
    let m = m as u32;
    Ok((m, 1.0 / (1u64 << m) as f64))
}

/// Snap a mollifier width up to a whole number of cells, at least two.
pub fn round_width_up(target: f64, dx: f64) -> f64 {
    let cells = ceil_tolerant(target / dx).max(2.0);
    cells * dx
}

fn check_eps(eps: f64) -> Result<()> {
    if eps > 0.0 && eps < 1.0 {
        Ok(())
    } else {
        Err(invalid("eps", format!("{eps} must lie in (0, 1)")))
    }
}

fn check_dim(d: usize) -> Result<()> {
    if d >= 1 {
        Ok(())
    } else {
        Err(invalid("d", "dimension must be >= 1"))
    }
}

/// Upwind mesh: `dx ~ eps^3/d`, `dt = dx/(d C_F)`, `omega = (d dx)^(1/3)`.
pub fn mesh_for_upwind(eps: f64, d: usize, speed_sum: f64) -> Result<MeshStrategy> {
    mesh_for_upwind_with(eps, d, speed_sum, MeshConstants::default())
}

pub fn mesh_for_upwind_with(
    eps: f64,
    d: usize,
    speed_sum: f64,
    constants: MeshConstants,
) -> Result<MeshStrategy> {
    check_eps(eps)?;
    check_dim(d)?;
    if !(speed_sum > 0.0 && speed_sum.is_finite()) {
        return Err(invalid("speed_sum", format!("{speed_sum} must be positive")));
    }
    let df = d as f64;
    let dx_target = constants.dx * eps.powi(3) / df;
    let (m, dx) = round_spacing_down(dx_target)?;
    let dt_target = constants.dt * dx / (df * speed_sum);
    let omega_target = constants.omega * (df * dx).cbrt();
    Ok(MeshStrategy {
        kind: MeshKind::Upwind,
        target_eps: eps,
        dim: d,
        sobolev_order: SobolevOrder::SMOOTH,
        time_order: None,
        axis_exponent: m,
        dx,
        dt: dt_target.min(1.0),
        omega: Some(round_width_up(omega_target, dx).min(1.0)),
        hbar: None,
        speed_sum: Some(speed_sum),
        constants,
        dx_target,
        dt_target,
        omega_target: Some(omega_target),
    })
}

/// Spectral mesh: `dx ~ eps^(1+2/l)/d^(1/l)`, `dt ~ eps^2`, `omega ~ eps`.
pub fn mesh_for_spectral(eps: f64, d: usize, ell: SobolevOrder) -> Result<MeshStrategy> {
    mesh_for_spectral_with(eps, d, ell, MeshConstants::default())
}

pub fn mesh_for_spectral_with(
    eps: f64,
    d: usize,
    ell: SobolevOrder,
    constants: MeshConstants,
) -> Result<MeshStrategy> {
    check_eps(eps)?;
    check_dim(d)?;
    let inv = ell.inverse();
    let df = d as f64;
    let dx_target = constants.dx * eps.powf(1.0 + 2.0 * inv) / df.powf(inv);
    let (m, dx) = round_spacing_down(dx_target)?;
    let dt_target = constants.dt * eps * eps;
    let omega_target = constants.omega * eps;
    Ok(MeshStrategy {
        kind: MeshKind::Spectral,
        target_eps: eps,
        dim: d,
        sobolev_order: ell,
        time_order: None,
        axis_exponent: m,
        dx,
        dt: dt_target.min(1.0),
        omega: Some(round_width_up(omega_target, dx).min(1.0)),
        hbar: None,
        speed_sum: None,
        constants,
        dx_target,
        dt_target,
        omega_target: Some(omega_target),
    })
}

/// Semiclassical Schrodinger mesh with `hbar = sqrt(eps)`.
pub fn mesh_for_schrodinger(
    eps: f64,
    d: usize,
    ell: SobolevOrder,
    purpose: SchrodingerPurpose,
) -> Result<MeshStrategy> {
    mesh_for_schrodinger_with(eps, d, ell, purpose, MeshConstants::default())
}

pub fn mesh_for_schrodinger_with(
    eps: f64,
    d: usize,
    ell: SobolevOrder,
    purpose: SchrodingerPurpose,
    constants: MeshConstants,
) -> Result<MeshStrategy> {
    check_eps(eps)?;
    check_dim(d)?;
    let inv = ell.inverse();
    let df = d as f64;
    let (kind, dt_exp, dx_exp) = match purpose {
        SchrodingerPurpose::Wavefunction => {
            (MeshKind::SchrodingerWavefunction, 1.5, 0.5 + 2.5 * inv)
        }
        SchrodingerPurpose::Observable => (MeshKind::SchrodingerObservable, 1.0, 0.5 + 2.0 * inv),
    };
    let dx_target = constants.dx * eps.powf(dx_exp) / df.powf(inv);
    let (m, dx) = round_spacing_down(dx_target)?;
    let dt_target = constants.dt * eps.powf(dt_exp);
    Ok(MeshStrategy {
        kind,
        target_eps: eps,
        dim: d,
        sobolev_order: ell,
        time_order: None,
        axis_exponent: m,
        dx,
        dt: dt_target.min(1.0),
        omega: None,
        hbar: Some(eps.sqrt()),
        speed_sum: None,
        constants,
        dx_target,
        dt_target,
        omega_target: None,
    })
}
