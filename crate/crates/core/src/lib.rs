//! Linear representations of nonlinear dynamics on periodic grids: upwind and
//! spectral discretizations of Liouville, Koopman-von Neumann, level-set and
//! Schrodinger equations, with observables, sampling emulation, resource
//! formulas and reference oracles.

pub mod benchmarks;
pub mod block;
pub mod error;
pub mod field;
pub mod generator;
pub mod grid;
pub mod mollifier;
pub mod observables;
pub mod oracle;
pub mod resources;
pub mod sampling;
pub mod sparse;
pub mod spectral;
pub mod splitting;
pub mod upwind;

pub use error::{Error, Result};
pub use field::{FlowField, HamiltonianField};
pub use grid::{GridSpec, MultiIndex, SobolevOrder, TimeGrid};
