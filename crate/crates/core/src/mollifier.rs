//! Compactly supported smoothed deltas and initial-state builders.

use num_complex::Complex64;

use crate::error::{invalid, Error, Result};
use crate::grid::{AxisRole, GridSpec};

/// Kernel profile on `[-1, 1]` with unit integral.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelKind {
    /// `1 - |s|`
    Hat,
    /// `(1 + cos(pi s)) / 2`
    Cosine,
}

impl KernelKind {
    pub fn profile(self, s: f64) -> f64 {
        let a = s.abs();
        if a >= 1.0 {
            return 0.0;
        }
        match self {
            KernelKind::Hat => 1.0 - a,
            KernelKind::Cosine => 0.5 * (1.0 + (std::f64::consts::PI * a).cos()),
        }
    }
}

/// Smoothed delta `(1/w) beta(x/w)` of width `w`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mollifier {
    kind: KernelKind,
    width: f64,
}

/// Distance between two points on the unit circle.
pub fn periodic_distance(a: f64, b: f64) -> f64 {
    let r = (a - b).rem_euclid(1.0);
    r.min(1.0 - r)
}

impl Mollifier {
    pub fn new(kind: KernelKind, width: f64) -> Result<Self> {
        if !(width > 0.0 && width <= 0.5) {
            return Err(invalid("omega", format!("{width} must lie in (0, 1/2]")));
        }
        Ok(Self { kind, width })
    }

    /// Width equal to `cells` grid spacings of `grid`.
    pub fn on_grid(kind: KernelKind, cells: usize, grid: &GridSpec) -> Result<Self> {
        let m = Self::new(kind, cells as f64 * grid.dx())?;
        m.check_resolved(grid)?;
        Ok(m)
    }

    pub fn kind(&self) -> KernelKind {
        self.kind
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    /// Width in units of the grid spacing.
    pub fn support_cells(&self, grid: &GridSpec) -> f64 {
        self.width / grid.dx()
    }

    pub fn check_resolved(&self, grid: &GridSpec) -> Result<()> {
        let min = 2.0 * grid.dx();
        if self.width < min * (1.0 - 1e-12) {
            Err(Error::UnderResolved {
                width: self.width,
                min,
            })
        } else {
            Ok(())
        }
    }

    /// One-dimensional value at `x` for a delta centred at `center`.
    pub fn eval(&self, x: f64, center: f64) -> f64 {
        self.kind.profile(periodic_distance(x, center) / self.width) / self.width
    }

    /// Tensor-product value.
    pub fn eval_nd(&self, x: &[f64], center: &[f64]) -> f64 {
        x.iter()
            .zip(center)
            .map(|(&xi, &ci)| self.eval(xi, ci))
            .product()
    }
}

/// Which linear representation an initial state belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Representation {
    Liouville,
    Kvn,
    LevelSet,
    Schrodinger,
}

/// Sampled initial state with its trapezoid mass.
#[derive(Debug, Clone, PartialEq)]
pub struct InitialState<T> {
    pub representation: Representation,
    pub values: Vec<T>,
    /// `sum |v|^k dx^dim` with `k = 1` for densities and `k = 2` for amplitudes.
    pub mass: f64,
}

fn check_center(center: &[f64], grid: &GridSpec) -> Result<()> {
    if center.len() != grid.dim() {
        return Err(Error::SizeMismatch {
            expected: grid.dim(),
            actual: center.len(),
        });
    }
    if center.iter().any(|c| !(0.0..=1.0).contains(c)) {
        return Err(Error::Domain(format!("center {center:?} outside the unit box")));
    }
    Ok(())
}

/// Smoothed delta `delta_w(x - q0)` sampled at the nodes.
pub fn init_liouville(
    grid: &GridSpec,
    moll: &Mollifier,
    q0: &[f64],
) -> Result<InitialState<f64>> {
    moll.check_resolved(grid)?;
    check_center(q0, grid)?;
    let mut x = vec![0.0; grid.dim()];
    let values: Vec<f64> = (0..grid.len())
        .map(|k| {
            grid.point_into(k, &mut x);
            moll.eval_nd(&x, q0)
        })
        .collect();
    let cell = grid.dx().powi(grid.dim() as i32);
    let mass = values.iter().sum::<f64>() * cell;
    Ok(InitialState {
        representation: Representation::Liouville,
        values,
        mass,
    })
}

/// Pointwise square root of the Liouville state.
pub fn init_kvn(grid: &GridSpec, moll: &Mollifier, q0: &[f64]) -> Result<InitialState<f64>> {
    let rho = init_liouville(grid, moll, q0)?;
    Ok(InitialState {
        representation: Representation::Kvn,
        values: rho.values.iter().map(|v| v.sqrt()).collect(),
        mass: rho.mass,
    })
}

/// Level-set state `a0sq(x) * prod_i delta_w(p_i - u0_i(x))` on a phase grid.
pub fn init_levelset<U, A>(
    phase: &GridSpec,
    moll: &Mollifier,
    u0: U,
    a0sq: Option<A>,
) -> Result<InitialState<f64>>
where
    U: Fn(&[f64]) -> Vec<f64>,
    A: Fn(&[f64]) -> f64,
{
    moll.check_resolved(phase)?;
    let x_axes = phase.axes_with_role(AxisRole::Position);
    let p_axes = phase.axes_with_role(AxisRole::Momentum);
    if x_axes.len() != p_axes.len() || x_axes.is_empty() {
        return Err(invalid("grid", "level-set state needs matching x and p axes"));
    }
    let d = x_axes.len();
    let x_grid = phase.sub_grid(AxisRole::Position)?;
    let p_grid = phase.sub_grid(AxisRole::Momentum)?;
    let margin = moll.width();
    let mut centers = Vec::with_capacity(x_grid.len());
    let mut amps = Vec::with_capacity(x_grid.len());
    let mut x = vec![0.0; d];
    for kx in 0..x_grid.len() {
        x_grid.point_into(kx, &mut x);
        let c = u0(&x);
        if c.len() != d {
            return Err(Error::SizeMismatch {
                expected: d,
                actual: c.len(),
            });
        }
        if c.iter().any(|&ci| ci < margin || ci > 1.0 - margin) {
            return Err(Error::Domain(format!(
                "momentum centre {c:?} at x = {x:?} leaves the box with margin {margin}"
            )));
        }
        amps.push(a0sq.as_ref().map_or(1.0, |a| a(&x)));
        centers.push(c);
    }
    let mut p = vec![0.0; d];
    let np = p_grid.len();
    let mut values = vec![0.0; phase.len()];
    for (kx, (c, amp)) in centers.iter().zip(&amps).enumerate() {
        for kp in 0..np {
            p_grid.point_into(kp, &mut p);
            values[kx * np + kp] = amp * moll.eval_nd(&p, c);
        }
    }
    let cell = phase.dx().powi(phase.dim() as i32);
    let mass = values.iter().sum::<f64>() * cell;
    Ok(InitialState {
        representation: Representation::LevelSet,
        values,
        mass,
    })
}

/// WKB state `A0(x) exp(i S0(x) / hbar)`.
pub fn init_wkb<A, S>(
    grid: &GridSpec,
    amplitude: A,
    phase: S,
    hbar: f64,
) -> Result<InitialState<Complex64>>
where
    A: Fn(&[f64]) -> f64,
    S: Fn(&[f64]) -> f64,
{
    if !(hbar > 0.0 && hbar.is_finite()) {
        return Err(invalid("hbar", format!("{hbar} must be positive")));
    }
    let mut x = vec![0.0; grid.dim()];
    let values: Vec<Complex64> = (0..grid.len())
        .map(|k| {
            grid.point_into(k, &mut x);
            Complex64::from_polar(amplitude(&x), phase(&x) / hbar)
        })
        .collect();
    let cell = grid.dx().powi(grid.dim() as i32);
    let mass = values.iter().map(|v| v.norm_sqr()).sum::<f64>() * cell;
    Ok(InitialState {
        representation: Representation::Schrodinger,
        values,
        mass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kernel_values() {
        let hat = Mollifier::new(KernelKind::Hat, 0.25).unwrap();
        assert_eq!(hat.eval(0.3, 0.3), 4.0);
        assert_eq!(hat.eval(0.55, 0.3), 0.0);
        let cos = Mollifier::new(KernelKind::Cosine, 0.25).unwrap();
        assert!((cos.eval(0.425, 0.3) - 2.0).abs() < 1e-14);
    }

    #[test]
    fn kernel_wraps_across_the_boundary() {
        let hat = Mollifier::new(KernelKind::Hat, 0.25).unwrap();
        assert!((hat.eval(0.95, 0.05) - hat.eval(0.15, 0.05)).abs() < 1e-14);
    }

    #[test]
    fn under_resolved_width_rejected() {
        let g = GridSpec::new(1, 16).unwrap();
        let m = Mollifier::new(KernelKind::Hat, 1.5 / 16.0).unwrap();
        assert!(matches!(
            init_liouville(&g, &m, &[0.5]),
            Err(Error::UnderResolved { .. })
        ));
    }

    #[test]
    fn aligned_hat_has_unit_mass() {
        let g = GridSpec::new(1, 64).unwrap();
        let m = Mollifier::on_grid(KernelKind::Hat, 5, &g).unwrap();
        let s = init_liouville(&g, &m, &[0.25]).unwrap();
        assert!((s.mass - 1.0).abs() < 1e-14);
        let g2 = GridSpec::new(2, 32).unwrap();
        let m2 = Mollifier::on_grid(KernelKind::Hat, 4, &g2).unwrap();
        let s2 = init_liouville(&g2, &m2, &[0.5, 0.25]).unwrap();
        assert!((s2.mass - 1.0).abs() < 1e-13);
    }

    #[test]
    fn kvn_squares_to_liouville() {
        let g = GridSpec::new(2, 16).unwrap();
        let m = Mollifier::on_grid(KernelKind::Cosine, 3, &g).unwrap();
        let rho = init_liouville(&g, &m, &[0.4, 0.6]).unwrap();
        let psi = init_kvn(&g, &m, &[0.4, 0.6]).unwrap();
        for (r, p) in rho.values.iter().zip(&psi.values) {
            assert!(p * p == *r || ((p * p - r) / r).abs() <= f64::EPSILON);
        }
        let m = Mollifier::on_grid(KernelKind::Hat, 4, &g).unwrap();
        let psi = init_kvn(&g, &m, &[0.5, 0.5]).unwrap();
        let peak = psi.values.iter().cloned().fold(0.0, f64::max);
        assert!((peak - 1.0 / m.width()).abs() < 1e-12);
    }

    #[test]
    fn levelset_rejects_escaping_centre() {
        let g = GridSpec::phase_space(1, 32).unwrap();
        let m = Mollifier::on_grid(KernelKind::Hat, 4, &g).unwrap();
        let r = init_levelset(&g, &m, |_x: &[f64]| vec![0.02], None::<fn(&[f64]) -> f64>);
        assert!(matches!(r, Err(Error::Domain(_))));
    }

    #[test]
    fn wkb_modulus_matches_amplitude() {
        let g = GridSpec::new(1, 32).unwrap();
        let s = init_wkb(&g, |x| 1.0 + x[0], |x| x[0] * x[0], 0.1).unwrap();
        for (k, v) in s.values.iter().enumerate() {
            assert!((v.norm() - (1.0 + g.coordinate(k))).abs() < 1e-14);
        }
    }
}
