//! Time-splitting propagators for complex grid states.

use num_complex::Complex64;

use crate::error::{check_len, invalid, Error, Result};
use crate::field::FlowField;
use crate::generator::{asym_line_factors, kvn_line_exponentials, AsymLine, LineExp, PositiveSplit};
use crate::grid::{AxisRole, GridSpec};
use crate::spectral::{for_each_line, DftPlan, GridTransform};

/// Lie (first order) or Strang (symmetric, second order) composition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SplitOrder {
    #[default]
    Lie,
    Strang,
}

/// Post-selection bookkeeping for non-unitary steps.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CopyLedger {
    per_step: Vec<f64>,
    cumulative: f64,
}

impl CopyLedger {
    pub fn new() -> Self {
        Self {
            per_step: Vec::new(),
            cumulative: 1.0,
        }
    }

    /// Record one step's success probability.
    pub fn record(&mut self, probability: f64) -> Result<()> {
        if !(probability > 0.0 && probability <= 1.0 + 1e-12) {
            return Err(invalid("probability", format!("{probability} outside (0, 1]")));
        }
        let p = probability.min(1.0);
        self.per_step.push(p);
        self.cumulative /= p;
        Ok(())
    }

    pub fn per_step(&self) -> &[f64] {
        &self.per_step
    }

    pub fn steps(&self) -> usize {
        self.per_step.len()
    }

    /// Product of reciprocal success probabilities.
    pub fn cumulative(&self) -> f64 {
        if self.per_step.is_empty() {
            1.0
        } else {
            self.cumulative
        }
    }

    /// Geometric mean of the per-step reciprocals.
    pub fn geometric_factor(&self) -> Option<f64> {
        if self.per_step.is_empty() {
            return None;
        }
        let mean_log = self.per_step.iter().map(|p| -p.ln()).sum::<f64>() / self.steps() as f64;
        Some(mean_log.exp())
    }
}

/// A one-step map on complex grid states.
pub trait Propagator {
    fn len(&self) -> usize;
    fn dt(&self) -> f64;
    /// Cell volume used for trace masses.
    fn cell_volume(&self) -> f64;
    fn step(&self, state: &mut [Complex64], ledger: &mut CopyLedger) -> Result<()>;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

fn phases(angles: impl Iterator<Item = f64>) -> Vec<Complex64> {
    angles.map(|a| Complex64::from_polar(1.0, a)).collect()
}

fn multiply(state: &mut [Complex64], table: &[Complex64]) {
    state.iter_mut().zip(table).for_each(|(s, t)| *s *= t);
}

/// Kinetic/potential splitting for `i hbar u_t = -(hbar^2/2) Laplace u + V u`.
#[derive(Debug, Clone)]
pub struct SchrodingerSplit {
    transform: GridTransform,
    dt: f64,
    hbar: f64,
    order: SplitOrder,
    kinetic: Vec<Complex64>,
    potential: Vec<Complex64>,
    potential_half: Vec<Complex64>,
}

impl SchrodingerSplit {
    pub fn new<V>(grid: &GridSpec, potential: V, hbar: f64, dt: f64, order: SplitOrder) -> Result<Self>
    where
        V: Fn(&[f64]) -> f64,
    {
        if !(hbar > 0.0) {
            return Err(invalid("hbar", format!("{hbar} must be positive")));
        }
        if !(dt > 0.0) {
            return Err(invalid("dt", format!("{dt} must be positive")));
        }
        let transform = GridTransform::new(grid)?;
        let mu = transform.plan().frequencies().to_vec();
        let kinetic = phases((0..grid.len()).map(|k| {
            let mu2: f64 = (0..grid.dim()).map(|a| mu[grid.component(k, a)].powi(2)).sum();
            -hbar * mu2 * dt / 2.0
        }));
        let v: Vec<f64> = (0..grid.len()).map(|k| potential(&grid.point(k))).collect();
        Ok(Self {
            potential: phases(v.iter().map(|v| -v * dt / hbar)),
            potential_half: phases(v.iter().map(|v| -v * dt / (2.0 * hbar))),
            transform,
            dt,
            hbar,
            order,
            kinetic,
        })
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    /// Replace the kinetic phase table by ones.
    pub fn without_kinetic(mut self) -> Self {
        self.kinetic.iter_mut().for_each(|c| *c = Complex64::new(1.0, 0.0));
        self
    }

    fn kinetic_step(&self, state: &mut [Complex64]) -> Result<()> {
        self.transform.to_coefficients(state)?;
        multiply(state, &self.kinetic);
        self.transform.from_coefficients(state)
    }
}

impl Propagator for SchrodingerSplit {
    fn len(&self) -> usize {
        self.transform.grid().len()
    }

    fn dt(&self) -> f64 {
        self.dt
    }

    fn cell_volume(&self) -> f64 {
        self.transform.grid().dx().powi(self.transform.grid().dim() as i32)
    }

    fn step(&self, state: &mut [Complex64], _ledger: &mut CopyLedger) -> Result<()> {
        check_len(self.len(), state.len())?;
        match self.order {
            SplitOrder::Lie => {
                self.kinetic_step(state)?;
                multiply(state, &self.potential);
            }
            SplitOrder::Strang => {
                multiply(state, &self.potential_half);
                self.kinetic_step(state)?;
                multiply(state, &self.potential_half);
            }
        }
        Ok(())
    }
}

/// Two-stage splitting of the phase-space Liouville equation for
/// `H = |p|^2/2 + V(x)`: free transport in `x`, then the force kick in `p`.
#[derive(Debug, Clone)]
pub struct LiouvillePhaseSplit {
    transform: GridTransform,
    x_axes: Vec<usize>,
    p_axes: Vec<usize>,
    dt: f64,
    transport: Vec<Complex64>,
    kick: Vec<Complex64>,
}

impl LiouvillePhaseSplit {
    pub fn new<G>(phase: &GridSpec, grad_v: G, dt: f64) -> Result<Self>
    where
        G: Fn(&[f64], &mut [f64]),
    {
        let x_axes = phase.axes_with_role(AxisRole::Position);
        let p_axes = phase.axes_with_role(AxisRole::Momentum);
        let d = x_axes.len();
        if d == 0 || p_axes.len() != d {
            return Err(invalid("grid", "phase grid needs matching x and p axes"));
        }
        if !(dt > 0.0) {
            return Err(invalid("dt", format!("{dt} must be positive")));
        }
        let transform = GridTransform::new(phase)?;
        let mu = transform.plan().frequencies().to_vec();
        let mut y = vec![0.0; phase.dim()];
        let mut x = vec![0.0; d];
        let mut g = vec![0.0; d];
        let mut transport = Vec::with_capacity(phase.len());
        let mut kick = Vec::with_capacity(phase.len());
        for k in 0..phase.len() {
            phase.point_into(k, &mut y);
            for i in 0..d {
                x[i] = y[x_axes[i]];
            }
            grad_v(&x, &mut g);
            let mut a_t = 0.0;
            let mut a_k = 0.0;
            for i in 0..d {
                a_t -= mu[phase.component(k, x_axes[i])] * y[p_axes[i]] * dt;
                a_k += g[i] * mu[phase.component(k, p_axes[i])] * dt;
            }
            transport.push(Complex64::from_polar(1.0, a_t));
            kick.push(Complex64::from_polar(1.0, a_k));
        }
        Ok(Self {
            transform,
            x_axes,
            p_axes,
            dt,
            transport,
            kick,
        })
    }
}

impl Propagator for LiouvillePhaseSplit {
    fn len(&self) -> usize {
        self.transform.grid().len()
    }

    fn dt(&self) -> f64 {
        self.dt
    }

    fn cell_volume(&self) -> f64 {
        self.transform.grid().dx().powi(self.transform.grid().dim() as i32)
    }

    fn step(&self, state: &mut [Complex64], _ledger: &mut CopyLedger) -> Result<()> {
        check_len(self.len(), state.len())?;
        for &a in &self.x_axes {
            self.transform.to_coefficients_axis(a, state);
        }
        multiply(state, &self.transport);
        for &a in &self.x_axes {
            self.transform.from_coefficients_axis(a, state);
        }
        for &a in &self.p_axes {
            self.transform.to_coefficients_axis(a, state);
        }
        multiply(state, &self.kick);
        for &a in &self.p_axes {
            self.transform.from_coefficients_axis(a, state);
        }
        Ok(())
    }
}

/// Product formula over the KvN axis Hamiltonians, axis 0 applied first.
#[derive(Debug, Clone)]
pub struct KvnTrotter {
    grid: GridSpec,
    dt: f64,
    order: SplitOrder,
    plan: DftPlan,
    factors: Vec<Vec<LineExp>>,
}

impl KvnTrotter {
    pub fn new(grid: &GridSpec, field: &FlowField, dt: f64, order: SplitOrder) -> Result<Self> {
        if !(dt > 0.0) {
            return Err(invalid("dt", format!("{dt} must be positive")));
        }
        let factors = (0..grid.dim())
            .map(|a| kvn_line_exponentials(grid, field, a))
            .collect::<Result<_>>()?;
        Ok(Self {
            grid: grid.clone(),
            dt,
            order,
            plan: DftPlan::new(grid.points())?,
            factors,
        })
    }

    fn apply_axis(&self, axis: usize, t: f64, state: &mut [Complex64]) {
        let lines = &self.factors[axis];
        let mut i = 0;
        for_each_line(&self.grid, axis, state, |_, line| {
            lines[i].apply_exp(&self.plan, t, line);
            i += 1;
        });
    }
}

impl Propagator for KvnTrotter {
    fn len(&self) -> usize {
        self.grid.len()
    }

    fn dt(&self) -> f64 {
        self.dt
    }

    fn cell_volume(&self) -> f64 {
        self.grid.dx().powi(self.grid.dim() as i32)
    }

    fn step(&self, state: &mut [Complex64], _ledger: &mut CopyLedger) -> Result<()> {
        check_len(self.len(), state.len())?;
        let d = self.grid.dim();
        match self.order {
            SplitOrder::Lie => (0..d).for_each(|a| self.apply_axis(a, self.dt, state)),
            SplitOrder::Strang => {
                (0..d - 1).for_each(|a| self.apply_axis(a, self.dt / 2.0, state));
                self.apply_axis(d - 1, self.dt, state);
                (0..d - 1).rev().for_each(|a| self.apply_axis(a, self.dt / 2.0, state));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
struct AsymAxis {
    lines: Vec<AsymLine>,
    sqrt_plus: Vec<f64>,
    sqrt_plus_max: f64,
    inv_sqrt_plus_max: f64,
}

/// Non-unitary splitting of `w_t = -i A w` with `A = sum_i P_i Lambda_{F_i}`.
/// Each axis factor uses the positive splitting `A_i = A_i^+ - A_i^-`, whose
/// pieces are similar to Hermitian matrices through diagonal substitutions.
#[derive(Debug, Clone)]
pub struct NonunitarySplit {
    grid: GridSpec,
    dt: f64,
    order: SplitOrder,
    axes: Vec<AsymAxis>,
}

impl NonunitarySplit {
    pub fn new(grid: &GridSpec, field: &FlowField, floor: f64, dt: f64, order: SplitOrder) -> Result<Self> {
        if !(dt > 0.0) {
            return Err(invalid("dt", format!("{dt} must be positive")));
        }
        let samples = field.sample(grid);
        let axes = (0..grid.dim())
            .map(|a| {
                let split = PositiveSplit::new(&samples[a], floor)?;
                let sqrt_plus: Vec<f64> = split.plus.iter().map(|v| v.sqrt()).collect();
                let max = sqrt_plus.iter().copied().fold(0.0, f64::max);
                let min = sqrt_plus.iter().copied().fold(f64::INFINITY, f64::min);
                Ok(AsymAxis {
                    lines: asym_line_factors(grid, field, a, floor)?,
                    sqrt_plus,
                    sqrt_plus_max: max,
                    inv_sqrt_plus_max: 1.0 / min,
                })
            })
            .collect::<Result<_>>()?;
        Ok(Self {
            grid: grid.clone(),
            dt,
            order,
            axes,
        })
    }

    /// Diagonal substitution `v <- D v` with `D = Lambda^{+/- 1/2}`,
    /// returning the success probability of the normalized `D / max|D|`.
    fn substitute(&self, axis: &AsymAxis, inverse: bool, state: &mut [Complex64]) -> f64 {
        let before: f64 = state.iter().map(|c| c.norm_sqr()).sum();
        let scale = if inverse { axis.inv_sqrt_plus_max } else { axis.sqrt_plus_max };
        for (s, r) in state.iter_mut().zip(&axis.sqrt_plus) {
            *s *= if inverse { 1.0 / r } else { *r };
        }
        if before == 0.0 {
            return 1.0;
        }
        let after: f64 = state.iter().map(|c| c.norm_sqr()).sum();
        (after / (scale * scale * before)).min(1.0)
    }

    fn evolve_lines(&self, axis: usize, plus: bool, t: f64, state: &mut [Complex64]) {
        let lines = &self.axes[axis].lines;
        let mut i = 0;
        for_each_line(&self.grid, axis, state, |_, line| {
            let f = if plus { &lines[i].plus } else { &lines[i].minus };
            f.apply_exp(t, line);
            i += 1;
        });
    }

    /// `exp(-i A^+ t)` through the Hermitian similarity transform.
    fn plus_factor(&self, axis: usize, t: f64, state: &mut [Complex64]) -> f64 {
        let a = &self.axes[axis];
        let p1 = self.substitute(a, false, state);
        self.evolve_lines(axis, true, t, state);
        let p2 = self.substitute(a, true, state);
        p1 * p2
    }

    /// Axis factor approximating `exp(-i A_axis dt)`.
    fn axis_factor(&self, axis: usize, state: &mut [Complex64]) -> f64 {
        match self.order {
            SplitOrder::Lie => {
                let p = self.plus_factor(axis, self.dt, state);
                self.evolve_lines(axis, false, -self.dt, state);
                p
            }
            SplitOrder::Strang => {
                let p1 = self.plus_factor(axis, self.dt / 2.0, state);
                self.evolve_lines(axis, false, -self.dt, state);
                let p2 = self.plus_factor(axis, self.dt / 2.0, state);
                p1 * p2
            }
        }
    }
}

impl Propagator for NonunitarySplit {
    fn len(&self) -> usize {
        self.grid.len()
    }

    fn dt(&self) -> f64 {
        self.dt
    }

    fn cell_volume(&self) -> f64 {
        self.grid.dx().powi(self.grid.dim() as i32)
    }

    fn step(&self, state: &mut [Complex64], ledger: &mut CopyLedger) -> Result<()> {
        check_len(self.len(), state.len())?;
        let mut prob = 1.0;
        for axis in 0..self.grid.dim() {
            prob *= self.axis_factor(axis, state);
        }
        ledger.record(prob)
    }
}

/// Per-step diagnostics row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub step: usize,
    pub time: f64,
    pub l2_norm: f64,
    pub l1_norm: f64,
    /// `sum |u|^2` times the cell volume.
    pub mass: f64,
    pub ledger_cumulative: f64,
}

impl TraceRow {
    fn measure(step: usize, time: f64, state: &[Complex64], cell: f64, ledger: &CopyLedger) -> Self {
        let sq: f64 = state.iter().map(|c| c.norm_sqr()).sum();
        Self {
            step,
            time,
            l2_norm: sq.sqrt(),
            l1_norm: state.iter().map(|c| c.norm()).sum(),
            mass: sq * cell,
            ledger_cumulative: ledger.cumulative(),
        }
    }

    pub const CSV_HEADER: &'static str = "step,time,l2_norm,l1_norm,mass,ledger_cumulative";
}

/// Result of [`evolve`].
#[derive(Debug, Clone)]
pub struct Evolution {
    pub state: Vec<Complex64>,
    pub trace: Vec<TraceRow>,
    pub ledger: CopyLedger,
    /// All intermediate states, when requested.
    pub history: Option<Vec<Vec<Complex64>>>,
}

/// Callback receiving `(step, time, state)` after every step.
pub type Observer<'a> = &'a mut dyn FnMut(usize, f64, &[Complex64]);

/// Apply `steps` steps of `prop` to `state0`.
pub fn evolve<P: Propagator + ?Sized>(
    prop: &P,
    state0: &[Complex64],
    steps: usize,
    keep_history: bool,
    mut observer: Option<Observer<'_>>,
) -> Result<Evolution> {
    check_len(prop.len(), state0.len())?;
    let mut state = state0.to_vec();
    let mut ledger = CopyLedger::new();
    let cell = prop.cell_volume();
    let mut trace = Vec::with_capacity(steps + 1);
    trace.push(TraceRow::measure(0, 0.0, &state, cell, &ledger));
    let mut history = keep_history.then(|| vec![state.clone()]);
    for n in 1..=steps {
        prop.step(&mut state, &mut ledger)?;
        if state.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::Divergence(format!("non-finite state at step {n}")));
        }
        let t = n as f64 * prop.dt();
        trace.push(TraceRow::measure(n, t, &state, cell, &ledger));
        if let Some(h) = history.as_mut() {
            h.push(state.clone());
        }
        if let Some(obs) = observer.as_mut() {
            obs(n, t, &state);
        }
    }
    Ok(Evolution {
        state,
        trace,
        ledger,
        history,
    })
}

/// Promote a real state to complex amplitudes.
pub fn complexify(values: &[f64]) -> Vec<Complex64> {
    values.iter().map(|v| Complex64::new(*v, 0.0)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn l2(v: &[Complex64]) -> f64 {
        v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    #[test]
    fn free_plane_wave_gets_exact_phase() {
        let g = GridSpec::new(1, 16).unwrap();
        let hbar = 0.3;
        let dt = 0.01;
        let split = SchrodingerSplit::new(&g, |_| 0.0, hbar, dt, SplitOrder::Lie).unwrap();
        let u0: Vec<Complex64> = (0..16)
            .map(|j| Complex64::from_polar(1.0, 2.0 * PI * g.coordinate(j)))
            .collect();
        let out = evolve(&split, &u0, 7, false, None).unwrap();
        let phase = Complex64::from_polar(1.0, -hbar * (2.0 * PI).powi(2) * 7.0 * dt / 2.0);
        for (a, b) in out.state.iter().zip(&u0) {
            assert!((a - b * phase).norm() < 1e-12);
        }
    }

    #[test]
    fn kinetic_free_step_is_potential_phase() {
        let g = GridSpec::new(1, 8).unwrap();
        let split = SchrodingerSplit::new(&g, |x| x[0], 0.5, 0.1, SplitOrder::Lie)
            .unwrap()
            .without_kinetic();
        let mut u = vec![Complex64::new(1.0, 0.0); 8];
        split.step(&mut u, &mut CopyLedger::new()).unwrap();
        for (j, c) in u.iter().enumerate() {
            let expect = Complex64::from_polar(1.0, -g.coordinate(j) * 0.1 / 0.5);
            assert!((c - expect).norm() < 1e-12);
        }
    }

    #[test]
    fn zero_steps_leave_state_unchanged() {
        let g = GridSpec::new(1, 8).unwrap();
        let split = SchrodingerSplit::new(&g, |_| 1.0, 0.5, 0.1, SplitOrder::Lie).unwrap();
        let u0: Vec<Complex64> = (0..8).map(|j| Complex64::new(j as f64, 1.0)).collect();
        let out = evolve(&split, &u0, 0, true, None).unwrap();
        assert_eq!(out.state, u0);
        assert_eq!(out.trace.len(), 1);
    }

    #[test]
    fn phase_split_constant_potential_is_pure_transport() {
        let g = GridSpec::phase_space(1, 8).unwrap();
        let dt = 0.125;
        let split = LiouvillePhaseSplit::new(&g, |_, o| o[0] = 0.0, dt).unwrap();
        let w0: Vec<Complex64> = (0..g.len())
            .map(|k| {
                let y = g.point(k);
                Complex64::new((2.0 * PI * y[0]).cos() + 2.0, 0.0) * (1.0 + y[1])
            })
            .collect();
        let mut w = w0.clone();
        split.step(&mut w, &mut CopyLedger::new()).unwrap();
        assert!((l2(&w) - l2(&w0)).abs() < 1e-12);
        for k in 0..g.len() {
            let y = g.point(k);
            let exact = ((2.0 * PI * (y[0] - y[1] * dt)).cos() + 2.0) * (1.0 + y[1]);
            assert!((w[k].re - exact).abs() < 1e-10, "{k}");
        }
    }

    #[test]
    fn ledger_product_rule() {
        let mut l = CopyLedger::new();
        assert_eq!(l.cumulative(), 1.0);
        for _ in 0..10 {
            l.record(0.5).unwrap();
        }
        assert!((l.cumulative() - 1024.0).abs() < 1e-9);
        assert!((l.geometric_factor().unwrap() - 2.0).abs() < 1e-12);
        assert!(l.record(0.0).is_err());
    }

    #[test]
    fn zero_field_sandwich_is_identity() {
        let g = GridSpec::new(1, 8).unwrap();
        let f = FlowField::new(1, |_, o| o[0] = 0.0, vec![0.0], 0.0).unwrap();
        let split = NonunitarySplit::new(&g, &f, 1.0, 0.05, SplitOrder::Strang).unwrap();
        let w0: Vec<Complex64> = (0..8).map(|j| Complex64::new(1.0 + (j as f64).sin(), 0.0)).collect();
        let mut w = w0.clone();
        let mut ledger = CopyLedger::new();
        split.step(&mut w, &mut ledger).unwrap();
        for (a, b) in w.iter().zip(&w0) {
            assert!((a - b).norm() < 1e-12);
        }
        assert!((ledger.cumulative() - 1.0).abs() < 1e-12);
    }
}
