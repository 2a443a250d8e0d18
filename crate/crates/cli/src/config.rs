//! Run configuration, read from TOML.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};
use crate::problems::{self, ProblemFamily};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Subcommand {
    OdeLiouville,
    OdeKvn,
    Hje,
    Schrodinger,
    Resources,
}

impl Subcommand {
    pub const ALL: [Subcommand; 5] = [
        Subcommand::OdeLiouville,
        Subcommand::OdeKvn,
        Subcommand::Hje,
        Subcommand::Schrodinger,
        Subcommand::Resources,
    ];

    pub fn slug(self) -> &'static str {
        match self {
            Subcommand::OdeLiouville => "ode-liouville",
            Subcommand::OdeKvn => "ode-kvn",
            Subcommand::Hje => "hje",
            Subcommand::Schrodinger => "schrodinger",
            Subcommand::Resources => "resources",
        }
    }

    pub fn family(self) -> Option<ProblemFamily> {
        match self {
            Subcommand::OdeLiouville | Subcommand::OdeKvn => Some(ProblemFamily::Ode),
            Subcommand::Hje => Some(ProblemFamily::HamiltonJacobi),
            Subcommand::Schrodinger => Some(ProblemFamily::Schrodinger),
            Subcommand::Resources => None,
        }
    }

    fn methods(self) -> &'static [Method] {
        match self {
            Subcommand::OdeLiouville => &[Method::Fd, Method::NonunitarySplit],
            Subcommand::OdeKvn => &[Method::Fd, Method::SpectralSim, Method::SpectralQlsaEmulated],
            Subcommand::Hje => &[Method::Fd, Method::Splitting],
            Subcommand::Schrodinger => &[Method::Splitting],
            Subcommand::Resources => &[],
        }
    }

    pub fn default_method(self) -> Option<Method> {
        self.methods().first().copied()
    }
}

impl fmt::Display for Subcommand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.slug())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Fd,
    SpectralQlsaEmulated,
    SpectralSim,
    Splitting,
    NonunitarySplit,
}

impl Method {
    pub fn slug(self) -> &'static str {
        match self {
            Method::Fd => "fd",
            Method::SpectralQlsaEmulated => "spectral-qlsa-emulated",
            Method::SpectralSim => "spectral-sim",
            Method::Splitting => "splitting",
            Method::NonunitarySplit => "nonunitary-split",
        }
    }

    /// Whether target-precision meshes use the spectral scalings.
    pub fn is_spectral(self) -> bool {
        self != Method::Fd
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Order {
    #[default]
    Lie,
    Strang,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kernel {
    #[default]
    Hat,
    Cosine,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSpec {
    pub name: String,
    /// Overrides of the problem's numeric parameters.
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case", deny_unknown_fields)]
pub enum MeshSpec {
    /// Grid given directly.
    Explicit {
        points: usize,
        horizon: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        dt: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        omega_cells: Option<usize>,
    },
    /// Grid derived from a target precision.
    Target {
        eps: f64,
        horizon: f64,
        /// Sobolev order; omitted means smooth data.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        ell: Option<f64>,
    },
}

impl MeshSpec {
    pub fn horizon(&self) -> f64 {
        match self {
            MeshSpec::Explicit { horizon, .. } | MeshSpec::Target { horizon, .. } => *horizon,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ObservableRequest {
    /// Total mass of the state.
    Mass,
    /// First moment along one axis.
    Moment { axis: usize },
    /// Mean momentum field of a level-set state.
    Momentum,
    /// Integrated Schrodinger density, current or kinetic energy.
    Density,
    Current,
    Energy,
}

impl ObservableRequest {
    pub fn label(&self) -> String {
        match self {
            ObservableRequest::Mass => "mass".into(),
            ObservableRequest::Moment { axis } => format!("moment_{axis}"),
            ObservableRequest::Momentum => "momentum".into(),
            ObservableRequest::Density => "density".into(),
            ObservableRequest::Current => "current".into(),
            ObservableRequest::Energy => "energy".into(),
        }
    }

    fn allowed(&self, sub: Subcommand) -> bool {
        use ObservableRequest as O;
        match sub {
            Subcommand::OdeLiouville | Subcommand::OdeKvn => matches!(self, O::Mass | O::Moment { .. }),
            Subcommand::Hje => matches!(self, O::Mass | O::Momentum),
            Subcommand::Schrodinger => matches!(self, O::Mass | O::Density | O::Current | O::Energy),
            Subcommand::Resources => false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplingSpec {
    pub eps: f64,
    pub confidence: f64,
    /// Axis whose coordinate is the sampled diagonal observable.
    #[serde(default)]
    pub axis: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResourceSpec {
    #[serde(default = "default_dims")]
    pub dims: Vec<usize>,
    #[serde(default = "default_eps_values")]
    pub eps: Vec<f64>,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ell: Option<f64>,
}

fn default_dims() -> Vec<usize> {
    vec![1, 2, 4, 8]
}

fn default_eps_values() -> Vec<f64> {
    vec![1e-1, 1e-2, 1e-3, 1e-4]
}

fn default_alpha() -> f64 {
    linrep::resources::DEFAULT_ALPHA
}

impl Default for ResourceSpec {
    fn default() -> Self {
        Self {
            dims: default_dims(),
            eps: default_eps_values(),
            alpha: default_alpha(),
            ell: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub subcommand: Subcommand,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub problem: Option<ProblemSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mesh: Option<MeshSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub method: Option<Method>,
    #[serde(default)]
    pub order: Order,
    #[serde(default)]
    pub kernel: Kernel,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub observables: Vec<ObservableRequest>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sampling: Option<SamplingSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resources: Option<ResourceSpec>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> CliResult<Self> {
        toml::from_str(text).map_err(|e| CliError::Parse(e.to_string()))
    }

    pub fn to_toml(&self) -> CliResult<String> {
        toml::to_string(self).map_err(|e| CliError::Serialize(e.to_string()))
    }

    /// Built-in defaults for a subcommand, runnable as-is.
    pub fn template(sub: Subcommand) -> Self {
        let mut cfg = RunConfig {
            subcommand: sub,
            problem: None,
            mesh: None,
            method: sub.default_method(),
            order: Order::default(),
            kernel: Kernel::default(),
            observables: Vec::new(),
            sampling: None,
            resources: None,
            seed: 0,
            output: None,
        };
        match sub.family() {
            Some(family) => {
                let info = problems::default_for(family);
                cfg.problem = Some(ProblemSpec {
                    name: info.name.into(),
                    params: BTreeMap::new(),
                });
                cfg.mesh = Some(info.default_mesh.clone());
                cfg.observables = info.default_observables.to_vec();
            }
            None => cfg.resources = Some(ResourceSpec::default()),
        }
        cfg
    }

    pub fn method(&self) -> CliResult<Method> {
        self.method
            .or_else(|| self.subcommand.default_method())
            .ok_or_else(|| CliError::validation("method", format!("{} takes no method", self.subcommand)))
    }

    /// Field-level checks beyond what deserialization enforces.
    pub fn validate(&self) -> CliResult<()> {
        let sub = self.subcommand;
        if sub == Subcommand::Resources {
            let r = self.resources.clone().unwrap_or_default();
            if r.dims.is_empty() || r.dims.contains(&0) {
                return Err(CliError::validation("resources.dims", "need at least one positive dimension"));
            }
            if r.eps.is_empty() || r.eps.iter().any(|e| !(*e > 0.0 && *e < 1.0)) {
                return Err(CliError::validation("resources.eps", "values must lie in (0, 1)"));
            }
            if !(r.alpha > 0.0 && r.alpha.is_finite()) {
                return Err(CliError::validation("resources.alpha", "must be positive"));
            }
            check_ell("resources.ell", r.ell)?;
            return Ok(());
        }
        let problem = self
            .problem
            .as_ref()
            .ok_or_else(|| CliError::validation("problem", "missing [problem] table"))?;
        let info = problems::lookup(&problem.name)?;
        let family = sub.family().expect("non-resource subcommand");
        if info.family != family {
            return Err(CliError::validation(
                "problem.name",
                format!("`{}` is a {} problem, not usable with {sub}", info.name, info.family.label()),
            ));
        }
        for key in problem.params.keys() {
            if !info.params.iter().any(|(k, _)| k == key) {
                let known: Vec<&str> = info.params.iter().map(|(k, _)| *k).collect();
                return Err(CliError::validation(
                    format!("problem.params.{key}"),
                    format!("unknown parameter; `{}` accepts {known:?}", info.name),
                ));
            }
        }
        let method = self.method()?;
        if !sub.methods().contains(&method) {
            let allowed: Vec<&str> = sub.methods().iter().map(|m| m.slug()).collect();
            return Err(CliError::validation(
                "method",
                format!("`{}` is not available for {sub}; choose one of {allowed:?}", method.slug()),
            ));
        }
        let mesh = self
            .mesh
            .as_ref()
            .ok_or_else(|| CliError::validation("mesh", "missing [mesh] table"))?;
        match mesh {
            MeshSpec::Explicit {
                points,
                horizon,
                dt,
                omega_cells,
            } => {
                if *points < 4 || !points.is_power_of_two() {
                    return Err(CliError::validation("mesh.points", "must be a power of two >= 4"));
                }
                check_horizon(*horizon)?;
                if let Some(dt) = dt {
                    if !(*dt > 0.0 && dt.is_finite()) {
                        return Err(CliError::validation("mesh.dt", "must be positive"));
                    }
                }
                if let Some(c) = omega_cells {
                    if *c < 2 || *c >= *points / 2 {
                        return Err(CliError::validation("mesh.omega_cells", "must lie in [2, points/2)"));
                    }
                }
            }
            MeshSpec::Target { eps, horizon, ell } => {
                if !(*eps > 0.0 && *eps < 1.0) {
                    return Err(CliError::validation("mesh.eps", "must lie in (0, 1)"));
                }
                check_horizon(*horizon)?;
                check_ell("mesh.ell", *ell)?;
            }
        }
        for (i, obs) in self.observables.iter().enumerate() {
            if !obs.allowed(sub) {
                return Err(CliError::validation(
                    format!("observables[{i}].kind"),
                    format!("`{}` is not defined for {sub}", obs.label()),
                ));
            }
            if let ObservableRequest::Moment { axis } = obs {
                if *axis >= info.dim {
                    return Err(CliError::validation(
                        format!("observables[{i}].axis"),
                        format!("axis {axis} out of range for dimension {}", info.dim),
                    ));
                }
            }
        }
        if let Some(s) = &self.sampling {
            if !(s.eps > 0.0 && s.eps.is_finite()) {
                return Err(CliError::validation("sampling.eps", "must be positive"));
            }
            if !(s.confidence > 0.0 && s.confidence < 1.0) {
                return Err(CliError::validation("sampling.confidence", "must lie in (0, 1)"));
            }
            if s.axis >= info.dim {
                return Err(CliError::validation("sampling.axis", "out of range for the problem dimension"));
            }
        }
        Ok(())
    }
}

fn check_horizon(horizon: f64) -> CliResult<()> {
    if horizon > 0.0 && horizon.is_finite() {
        Ok(())
    } else {
        Err(CliError::validation("mesh.horizon", "must be positive"))
    }
}

fn check_ell(field: &str, ell: Option<f64>) -> CliResult<()> {
    match ell {
        Some(l) if !(l > 0.0) => Err(CliError::validation(field, "must be positive")),
        _ => Ok(()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn templates_validate_and_round_trip() {
        for sub in Subcommand::ALL {
            let cfg = RunConfig::template(sub);
            cfg.validate().unwrap();
            let text = cfg.to_toml().unwrap();
            assert_eq!(RunConfig::from_toml(&text).unwrap(), cfg, "{text}");
        }
    }

    #[test]
    fn field_level_messages() {
        let mut cfg = RunConfig::template(Subcommand::OdeLiouville);
        cfg.method = Some(Method::Splitting);
        let err = cfg.validate().unwrap_err().to_string();
        assert!(err.contains("method"), "{err}");
        let mut cfg = RunConfig::template(Subcommand::Hje);
        cfg.observables.push(ObservableRequest::Energy);
        let err = cfg.validate().unwrap_err().to_string();
        assert!(err.contains("observables[2].kind"), "{err}");
    }

    #[test]
    fn rejects_unknown_keys() {
        let text = "subcommand = \"hje\"\nbogus = 1\n";
        assert!(matches!(RunConfig::from_toml(text), Err(CliError::Parse(_))));
    }
}
