//! Built-in problem data shared by tests, the acceptance suite and the CLI.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::Result;
use crate::field::{FlowField, HamiltonianField};
use crate::grid::GridSpec;
use crate::mollifier::{init_wkb, InitialState};

/// `dq/dt = -(q - 1/2)` with `q(t) = 1/2 + (q0 - 1/2) e^{-t}`.
pub fn linear_decay() -> FlowField {
    FlowField::new(1, |q, o| o[0] = -(q[0] - 0.5), vec![0.5], 1.0)
        .expect("static bounds")
        .with_divergence(|_| -1.0)
}

pub fn linear_decay_solution(q0: f64, t: f64) -> f64 {
    0.5 + (q0 - 0.5) * (-t).exp()
}

/// `dq/dt = q (1 - q)`.
pub fn logistic() -> FlowField {
    FlowField::new(1, |q, o| o[0] = q[0] * (1.0 - q[0]), vec![0.25], 1.0)
        .expect("static bounds")
        .with_divergence(|q| 1.0 - 2.0 * q[0])
}

pub fn logistic_solution(q0: f64, t: f64) -> f64 {
    q0 * t.exp() / (1.0 - q0 + q0 * t.exp())
}

/// Rigid rotation about `(1/2, 1/2)` with unit period; divergence free.
pub fn rotation() -> FlowField {
    FlowField::new(
        2,
        |q, o| {
            o[0] = -2.0 * PI * (q[1] - 0.5);
            o[1] = 2.0 * PI * (q[0] - 0.5);
        },
        vec![PI, PI],
        0.0,
    )
    .expect("static bounds")
    .with_divergence(|_| 0.0)
}

/// Burgers initial velocity `1/4 + sin(2 pi x)/10`.
pub fn burgers_initial(x: f64) -> f64 {
    0.25 + 0.1 * (2.0 * PI * x).sin()
}

/// Free Hamiltonian `|p|^2 / 2` in `d` dimensions.
pub fn free_hamiltonian(d: usize) -> Result<HamiltonianField> {
    HamiltonianField::kinetic_plus_potential(d, |_, o: &mut [f64]| o.fill(0.0), vec![0.0; d])
}

/// `|p|^2/2 + g . x` with constant gradient `g`.
pub fn constant_gradient_hamiltonian(gradient: Vec<f64>) -> Result<HamiltonianField> {
    let d = gradient.len();
    let sups = gradient.iter().map(|g| g.abs()).collect();
    HamiltonianField::kinetic_plus_potential(d, move |_, o: &mut [f64]| o.copy_from_slice(&gradient), sups)
}

/// WKB amplitude `exp(-25 (x - 1/2)^2)`.
pub fn wkb_amplitude(x: f64) -> f64 {
    (-25.0 * (x - 0.5).powi(2)).exp()
}

/// WKB phase `-(1/5) ln(e^{5(x-1/2)} + e^{-5(x-1/2)})`.
pub fn wkb_phase(x: f64) -> f64 {
    let y = 5.0 * (x - 0.5);
    -0.2 * (y.abs() + (1.0 + (-2.0 * y.abs()).exp()).ln())
}

/// Constant potential of the WKB benchmark.
pub const WKB_POTENTIAL: f64 = 10.0;
/// Output time of the WKB benchmark.
pub const WKB_HORIZON: f64 = 0.54;
/// `(hbar, M)` pairs of the semiclassical ladder.
pub const WKB_LADDER: [(f64, usize); 6] = [
    (0.0256, 16),
    (0.0064, 64),
    (0.0008, 512),
    (0.0001, 4096),
    (0.000025, 16384),
    (0.0000125, 32768),
];

/// WKB initial state on a one-dimensional grid.
pub fn wkb_initial(grid: &GridSpec, hbar: f64) -> Result<InitialState<Complex64>> {
    init_wkb(grid, |x| wkb_amplitude(x[0]), |x| wkb_phase(x[0]), hbar)
}

/// Strict periodic local maxima of a sampled profile.
pub fn count_local_maxima(values: &[f64]) -> usize {
    let n = values.len();
    if n < 3 {
        return 0;
    }
    (0..n)
        .filter(|&j| {
            let v = values[j];
            v > values[(j + n - 1) % n] && v > values[(j + 1) % n]
        })
        .count()
}
