//! Named built-in problems.

use std::collections::BTreeMap;

use linrep::benchmarks;
use linrep::{FlowField, HamiltonianField};

use crate::config::{MeshSpec, ObservableRequest};
use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProblemFamily {
    Ode,
    HamiltonJacobi,
    Schrodinger,
}

impl ProblemFamily {
    pub fn label(self) -> &'static str {
        match self {
            ProblemFamily::Ode => "ODE",
            ProblemFamily::HamiltonJacobi => "Hamilton-Jacobi",
            ProblemFamily::Schrodinger => "Schrodinger",
        }
    }
}

#[derive(Debug, Clone)]
pub struct ProblemInfo {
    pub name: &'static str,
    pub family: ProblemFamily,
    pub dim: usize,
    pub description: &'static str,
    /// Reference formula or benchmark the problem reproduces.
    pub anchor: Option<&'static str>,
    pub params: &'static [(&'static str, f64)],
    pub default_mesh: MeshSpec,
    pub default_observables: &'static [ObservableRequest],
}

const ODE_OBSERVABLES: &[ObservableRequest] = &[ObservableRequest::Mass, ObservableRequest::Moment { axis: 0 }];
const PLANE_OBSERVABLES: &[ObservableRequest] = &[
    ObservableRequest::Mass,
    ObservableRequest::Moment { axis: 0 },
    ObservableRequest::Moment { axis: 1 },
];
const HJE_OBSERVABLES: &[ObservableRequest] = &[ObservableRequest::Mass, ObservableRequest::Momentum];
const WAVE_OBSERVABLES: &[ObservableRequest] = &[
    ObservableRequest::Mass,
    ObservableRequest::Density,
    ObservableRequest::Current,
    ObservableRequest::Energy,
];

static REGISTRY: [ProblemInfo; 6] = [
    ProblemInfo {
        name: "linear-decay",
        family: ProblemFamily::Ode,
        dim: 1,
        description: "dq/dt = -(q - 1/2)",
        anchor: Some("closed form q(t) = 1/2 + (q0 - 1/2) exp(-t)"),
        params: &[("q0", 0.7)],
        default_mesh: MeshSpec::Explicit {
            points: 256,
            horizon: 0.5,
            dt: None,
            omega_cells: Some(8),
        },
        default_observables: ODE_OBSERVABLES,
    },
    ProblemInfo {
        name: "logistic",
        family: ProblemFamily::Ode,
        dim: 1,
        description: "dq/dt = q (1 - q)",
        anchor: Some("closed form q(t) = q0 e^t / (1 - q0 + q0 e^t)"),
        params: &[("q0", 0.2)],
        default_mesh: MeshSpec::Explicit {
            points: 256,
            horizon: 1.0,
            dt: None,
            omega_cells: Some(8),
        },
        default_observables: ODE_OBSERVABLES,
    },
    ProblemInfo {
        name: "rotation",
        family: ProblemFamily::Ode,
        dim: 2,
        description: "divergence-free rigid rotation about (1/2, 1/2) with unit period",
        anchor: Some("divergence-free field where Liouville and KvN densities coincide"),
        params: &[("q0x", 0.7), ("q0y", 0.5)],
        default_mesh: MeshSpec::Explicit {
            points: 64,
            horizon: 0.25,
            dt: None,
            omega_cells: Some(6),
        },
        default_observables: PLANE_OBSERVABLES,
    },
    ProblemInfo {
        name: "wkb-gaussian",
        family: ProblemFamily::Schrodinger,
        dim: 1,
        description: "semiclassical WKB data exp(-25 (x-1/2)^2) exp(i S0 / hbar) in a constant potential",
        anchor: Some("semiclassical WKB benchmark, hbar = 0.0256, h = 1/16, V = 10, t = 0.54"),
        params: &[("hbar", 0.0256), ("potential", benchmarks::WKB_POTENTIAL)],
        default_mesh: MeshSpec::Explicit {
            points: 16,
            horizon: benchmarks::WKB_HORIZON,
            dt: Some(0.01),
            omega_cells: None,
        },
        default_observables: WAVE_OBSERVABLES,
    },
    ProblemInfo {
        name: "burgers-hje",
        family: ProblemFamily::HamiltonJacobi,
        dim: 1,
        description: "inviscid Burgers, H = p^2/2, u0 = mean + amplitude sin(2 pi x)",
        anchor: Some("pre-caustic Burgers benchmark against characteristics"),
        params: &[("mean", 0.25), ("amplitude", 0.1)],
        default_mesh: MeshSpec::Explicit {
            points: 64,
            horizon: 0.2,
            dt: None,
            omega_cells: Some(4),
        },
        default_observables: HJE_OBSERVABLES,
    },
    ProblemInfo {
        name: "constant-gradient-hje",
        family: ProblemFamily::HamiltonJacobi,
        dim: 1,
        description: "H = p^2/2 + g x with Burgers initial velocity",
        anchor: None,
        params: &[("gradient", 0.25), ("mean", 0.25), ("amplitude", 0.1)],
        default_mesh: MeshSpec::Explicit {
            points: 64,
            horizon: 0.2,
            dt: None,
            omega_cells: Some(4),
        },
        default_observables: HJE_OBSERVABLES,
    },
];

pub fn registry() -> &'static [ProblemInfo] {
    &REGISTRY
}

pub fn default_for(family: ProblemFamily) -> &'static ProblemInfo {
    REGISTRY
        .iter()
        .find(|p| p.family == family)
        .expect("every family has a problem")
}

/// Look up a problem, suggesting the nearest name on a miss.
pub fn lookup(name: &str) -> CliResult<&'static ProblemInfo> {
    if let Some(p) = REGISTRY.iter().find(|p| p.name == name) {
        return Ok(p);
    }
    let nearest = REGISTRY
        .iter()
        .min_by_key(|p| strsim::levenshtein(name, p.name))
        .map(|p| p.name)
        .expect("registry is non-empty");
    Err(CliError::validation(
        "problem.name",
        format!("unknown problem `{name}`; did you mean `{nearest}`?"),
    ))
}

/// Problem defaults merged with user overrides.
#[derive(Debug, Clone, PartialEq)]
pub struct Params(BTreeMap<String, f64>);

impl Params {
    pub fn resolve(info: &ProblemInfo, overrides: &BTreeMap<String, f64>) -> Self {
        let mut map: BTreeMap<String, f64> = info.params.iter().map(|(k, v)| (k.to_string(), *v)).collect();
        map.extend(overrides.iter().map(|(k, v)| (k.clone(), *v)));
        Params(map)
    }

    pub fn get(&self, key: &str) -> f64 {
        self.0[key]
    }

    pub fn map(&self) -> &BTreeMap<String, f64> {
        &self.0
    }
}

/// Initial point of an ODE problem.
pub fn ode_initial(info: &ProblemInfo, params: &Params) -> Vec<f64> {
    match info.name {
        "rotation" => vec![params.get("q0x"), params.get("q0y")],
        _ => vec![params.get("q0")],
    }
}

pub fn ode_field(info: &ProblemInfo) -> FlowField {
    match info.name {
        "linear-decay" => benchmarks::linear_decay(),
        "logistic" => benchmarks::logistic(),
        "rotation" => benchmarks::rotation(),
        other => unreachable!("{other} is not an ODE problem"),
    }
}

/// Closed-form ODE solution at `t`, where one is known.
pub fn ode_exact(info: &ProblemInfo, q0: &[f64], t: f64) -> Option<Vec<f64>> {
    match info.name {
        "linear-decay" => Some(vec![benchmarks::linear_decay_solution(q0[0], t)]),
        "logistic" => Some(vec![benchmarks::logistic_solution(q0[0], t)]),
        "rotation" => {
            let (s, c) = (2.0 * std::f64::consts::PI * t).sin_cos();
            let (x, y) = (q0[0] - 0.5, q0[1] - 0.5);
            Some(vec![0.5 + c * x - s * y, 0.5 + s * x + c * y])
        }
        _ => None,
    }
}

/// Hamilton-Jacobi data: potential gradient and initial velocity.
pub struct HjeData {
    pub gradient: f64,
    pub mean: f64,
    pub amplitude: f64,
}

impl HjeData {
    pub fn new(info: &ProblemInfo, params: &Params) -> Self {
        let gradient = if info.name == "constant-gradient-hje" {
            params.get("gradient")
        } else {
            0.0
        };
        Self {
            gradient,
            mean: params.get("mean"),
            amplitude: params.get("amplitude"),
        }
    }

    pub fn initial_velocity(&self) -> impl Fn(f64) -> f64 + Copy {
        let (m, a) = (self.mean, self.amplitude);
        move |x| m + a * (2.0 * std::f64::consts::PI * x).sin()
    }

    pub fn hamiltonian(&self) -> linrep::Result<HamiltonianField> {
        benchmarks::constant_gradient_hamiltonian(vec![self.gradient])
    }
}
