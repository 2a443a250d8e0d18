//! Symbolic gate-complexity registry with numeric evaluation, comparison
//! tables and copy-cost reports.
//!
//! Suppressed constants are set to one. Logarithms are base 2 and clamped
//! below at one so that degenerate parameters give O(1) values.

use std::fmt::Write as _;

use crate::error::{invalid, Error, Result};
use crate::grid::SobolevOrder;
use crate::observables::SchrodingerQuantity;
use crate::splitting::CopyLedger;

/// Default matrix-order exponent for finite-difference QLSA entries.
pub const DEFAULT_ALPHA: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Problem {
    LiouvilleRepresentation,
    KvnRepresentation,
    LiouvilleEquation,
    SchrodingerEquation,
}

impl Problem {
    pub const ALL: [Problem; 4] = [
        Problem::LiouvilleRepresentation,
        Problem::KvnRepresentation,
        Problem::LiouvilleEquation,
        Problem::SchrodingerEquation,
    ];

    pub fn slug(self) -> &'static str {
        match self {
            Problem::LiouvilleRepresentation => "liouville_rep",
            Problem::KvnRepresentation => "kvn_rep",
            Problem::LiouvilleEquation => "liouville_eq",
            Problem::SchrodingerEquation => "schrodinger",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Problem::LiouvilleRepresentation => "Liouville representation",
            Problem::KvnRepresentation => "KvN representation",
            Problem::LiouvilleEquation => "Liouville equation",
            Problem::SchrodingerEquation => "Schrodinger equation",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    QuantumSimulation,
    SpectralQlsa,
    FdQlsa,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::QuantumSimulation, Method::SpectralQlsa, Method::FdQlsa];

    pub fn slug(self) -> &'static str {
        match self {
            Method::QuantumSimulation => "sim",
            Method::SpectralQlsa => "spectral_qlsa",
            Method::FdQlsa => "fd_qlsa",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Method::QuantumSimulation => "quantum simulation",
            Method::SpectralQlsa => "spectral QLSA",
            Method::FdQlsa => "FD QLSA",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Kind {
    Subroutine,
    Observable,
}

impl Kind {
    pub fn slug(self) -> &'static str {
        match self {
            Kind::Subroutine => "subroutine",
            Kind::Observable => "observable",
        }
    }
}

/// `d^{a + b/l + c alpha}`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DimensionExponent {
    pub base: f64,
    pub per_inv_ell: f64,
    pub per_alpha: f64,
}

impl DimensionExponent {
    pub fn value(&self, inv_ell: f64, alpha: f64) -> f64 {
        self.base + self.per_inv_ell * inv_ell + self.per_alpha * alpha
    }
}

/// `(1/eps)^{a + b/l}`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PrecisionExponent {
    pub base: f64,
    pub per_inv_ell: f64,
}

impl PrecisionExponent {
    pub fn value(&self, inv_ell: f64) -> f64 {
        self.base + self.per_inv_ell * inv_ell
    }
}

/// `max(1, log2(d^{a/l} / eps^{b + c/l}))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogFactor {
    pub d_per_inv_ell: f64,
    pub eps: PrecisionExponent,
}

impl LogFactor {
    pub fn value(&self, d: f64, eps: f64, inv_ell: f64) -> f64 {
        let arg = self.d_per_inv_ell * inv_ell * d.log2() - self.eps.value(inv_ell) * eps.log2();
        arg.max(1.0)
    }
}

/// Sampling factor multiplying observable entries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FactorSymbol {
    None,
    LiouvilleFourth,
    LiouvilleSquared,
    LevelSetFourth,
    SchrodingerFourth,
}

impl FactorSymbol {
    pub fn render(self) -> &'static str {
        match self {
            FactorSymbol::None => "1",
            FactorSymbol::LiouvilleFourth => "n_L^4",
            FactorSymbol::LiouvilleSquared => "n_L^2",
            FactorSymbol::LevelSetFourth => "n_H^4",
            FactorSymbol::SchrodingerFourth => "c_O N_u0^4",
        }
    }
}

/// Values substituted for the factor symbols.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FactorValues {
    pub n_liouville: f64,
    pub n_levelset: f64,
    pub n_u0: f64,
    pub schrodinger_quantity: SchrodingerQuantity,
}

impl Default for FactorValues {
    fn default() -> Self {
        Self {
            n_liouville: 1.0,
            n_levelset: 1.0,
            n_u0: 1.0,
            schrodinger_quantity: SchrodingerQuantity::Density,
        }
    }
}

/// Observable-dependent constant of Schrodinger sampling.
pub fn schrodinger_observable_constant(which: SchrodingerQuantity, d: f64, eps: f64, inv_ell: f64) -> f64 {
    let k = match which {
        SchrodingerQuantity::Density => 0.0,
        SchrodingerQuantity::Current => 1.0,
        SchrodingerQuantity::Energy => 2.0,
    };
    d.powf(2.0 * k * inv_ell) / eps.powf(4.0 * k * inv_ell)
}

/// Evaluation point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalParams {
    pub d: usize,
    pub eps: f64,
    pub ell: SobolevOrder,
    pub alpha: f64,
    pub factors: FactorValues,
}

impl EvalParams {
    pub fn new(d: usize, eps: f64) -> Self {
        Self {
            d,
            eps,
            ell: SobolevOrder::SMOOTH,
            alpha: DEFAULT_ALPHA,
            factors: FactorValues::default(),
        }
    }

    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.alpha = alpha;
        self
    }

    pub fn with_ell(mut self, ell: SobolevOrder) -> Self {
        self.ell = ell;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.d == 0 {
            return Err(invalid("d", "dimension must be >= 1"));
        }
        if !(self.eps > 0.0 && self.eps < 1.0) {
            return Err(invalid("eps", format!("{} outside (0, 1)", self.eps)));
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(invalid("alpha", format!("{} must be positive", self.alpha)));
        }
        Ok(())
    }
}

/// One registry formula.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexityEntry {
    pub id: String,
    pub problem: Problem,
    pub method: Method,
    pub kind: Kind,
    pub d_exponent: DimensionExponent,
    pub eps_exponent: PrecisionExponent,
    pub log: Option<LogFactor>,
    pub factor: FactorSymbol,
    /// Whether the entry is a cell of the summary table.
    pub in_table: bool,
    pub anchor: String,
}

impl ComplexityEntry {
    pub fn render(&self) -> String {
        let mut s = String::new();
        if self.factor != FactorSymbol::None {
            let _ = write!(s, "{} * ", self.factor.render());
        }
        let _ = write!(
            s,
            "d^({}) / eps^({})",
            render_exponent(self.d_exponent.base, self.d_exponent.per_inv_ell, self.d_exponent.per_alpha),
            render_exponent(self.eps_exponent.base, self.eps_exponent.per_inv_ell, 0.0)
        );
        if let Some(l) = &self.log {
            let _ = write!(
                s,
                " * log2(d^({}) / eps^({}))",
                render_exponent(0.0, l.d_per_inv_ell, 0.0),
                render_exponent(l.eps.base, l.eps.per_inv_ell, 0.0)
            );
        }
        s
    }
}

fn render_exponent(base: f64, per_inv_ell: f64, per_alpha: f64) -> String {
    let mut parts = Vec::new();
    if base != 0.0 {
        parts.push(format!("{base}"));
    }
    if per_inv_ell != 0.0 {
        parts.push(format!("{per_inv_ell}/l"));
    }
    if per_alpha != 0.0 {
        parts.push(if per_alpha == 1.0 { "alpha".into() } else { format!("{per_alpha}*alpha") });
    }
    if parts.is_empty() {
        "0".into()
    } else {
        parts.join("+")
    }
}

fn d_exp(base: f64, per_inv_ell: f64) -> DimensionExponent {
    DimensionExponent {
        base,
        per_inv_ell,
        per_alpha: 0.0,
    }
}

fn eps_exp(base: f64, per_inv_ell: f64) -> PrecisionExponent {
    PrecisionExponent { base, per_inv_ell }
}

fn sim_log(eps_base: f64) -> Option<LogFactor> {
    Some(LogFactor {
        d_per_inv_ell: 1.0,
        eps: eps_exp(eps_base, 2.0),
    })
}

fn fd_log() -> Option<LogFactor> {
    Some(LogFactor {
        d_per_inv_ell: 0.0,
        eps: eps_exp(1.0, 0.0),
    })
}

fn entry_id(problem: Problem, method: Method, kind: Kind) -> String {
    format!("{}_{}_{}", problem.slug(), method.slug(), kind.slug())
}

/// Every summary-table cell plus the wavefunction-resolution Schrodinger
/// simulation entry.
pub fn registry() -> Vec<ComplexityEntry> {
    let fd = (
        DimensionExponent {
            base: 0.0,
            per_inv_ell: 0.0,
            per_alpha: 1.0,
        },
        eps_exp(3.0, 0.0),
        fd_log(),
    );
    let cells: Vec<(Problem, Method, DimensionExponent, PrecisionExponent, Option<LogFactor>)> = vec![
        (Problem::LiouvilleRepresentation, Method::QuantumSimulation, d_exp(2.0, 2.0), eps_exp(2.0, 4.0), sim_log(1.0)),
        (Problem::LiouvilleRepresentation, Method::SpectralQlsa, d_exp(3.0, 2.0), eps_exp(4.0, 4.0), None),
        (Problem::LiouvilleRepresentation, Method::FdQlsa, fd.0, fd.1, fd.2),
        (Problem::KvnRepresentation, Method::QuantumSimulation, d_exp(2.0, 2.0), eps_exp(2.0, 4.0), sim_log(1.0)),
        (Problem::KvnRepresentation, Method::SpectralQlsa, d_exp(3.0, 2.0), eps_exp(2.0, 4.0), None),
        (Problem::KvnRepresentation, Method::FdQlsa, fd.0, fd.1, fd.2),
        (Problem::LiouvilleEquation, Method::QuantumSimulation, d_exp(1.0, 0.0), eps_exp(2.0, 0.0), sim_log(1.0)),
        (Problem::LiouvilleEquation, Method::SpectralQlsa, d_exp(2.0, 2.0), eps_exp(2.0, 4.0), None),
        (Problem::LiouvilleEquation, Method::FdQlsa, fd.0, fd.1, fd.2),
        (Problem::SchrodingerEquation, Method::QuantumSimulation, d_exp(1.0, 0.0), eps_exp(1.0, 0.0), sim_log(0.5)),
        (Problem::SchrodingerEquation, Method::SpectralQlsa, d_exp(2.0, 2.0), eps_exp(1.0, 4.0), None),
    ];
    let mut out = Vec::with_capacity(2 * cells.len() + 1);
    for (problem, method, d, e, log) in cells {
        let factor = match problem {
            Problem::LiouvilleRepresentation => FactorSymbol::LiouvilleFourth,
            Problem::KvnRepresentation => FactorSymbol::LiouvilleSquared,
            Problem::LiouvilleEquation => FactorSymbol::LevelSetFourth,
            Problem::SchrodingerEquation => FactorSymbol::SchrodingerFourth,
        };
        for kind in [Kind::Subroutine, Kind::Observable] {
            let (eps_exponent, factor) = match kind {
                Kind::Subroutine => (e, FactorSymbol::None),
                Kind::Observable => (eps_exp(e.base + 2.0, e.per_inv_ell), factor),
            };
            out.push(ComplexityEntry {
                id: entry_id(problem, method, kind),
                problem,
                method,
                kind,
                d_exponent: d,
                eps_exponent,
                log,
                factor,
                in_table: true,
                anchor: format!(
                    "complexity summary table: {} / {} / {}",
                    problem.label(),
                    method.label(),
                    kind.slug()
                ),
            });
        }
    }
    out.push(ComplexityEntry {
        id: "schrodinger_sim_wavefunction".into(),
        problem: Problem::SchrodingerEquation,
        method: Method::QuantumSimulation,
        kind: Kind::Subroutine,
        d_exponent: d_exp(1.0, 0.0),
        eps_exponent: eps_exp(1.5, 0.0),
        log: Some(LogFactor {
            d_per_inv_ell: 1.0,
            eps: eps_exp(0.5, 2.5),
        }),
        factor: FactorSymbol::None,
        in_table: false,
        anchor: "Schrodinger time splitting resolving the wave function".into(),
    });
    out
}

/// Registry entry by id.
pub fn find(id: &str) -> Result<ComplexityEntry> {
    registry()
        .into_iter()
        .find(|e| e.id == id)
        .ok_or_else(|| invalid("entry", format!("no complexity entry `{id}`")))
}

/// Numeric value with constants set to one.
pub fn evaluate(entry: &ComplexityEntry, params: &EvalParams) -> Result<f64> {
    params.validate()?;
    let d = params.d as f64;
    let eps = params.eps;
    let inv_ell = params.ell.inverse();
    let mut value = d.powf(entry.d_exponent.value(inv_ell, params.alpha))
        / eps.powf(entry.eps_exponent.value(inv_ell));
    if let Some(l) = &entry.log {
        value *= l.value(d, eps, inv_ell);
    }
    let f = &params.factors;
    value *= match entry.factor {
        FactorSymbol::None => 1.0,
        FactorSymbol::LiouvilleFourth => f.n_liouville.powi(4),
        FactorSymbol::LiouvilleSquared => f.n_liouville.powi(2),
        FactorSymbol::LevelSetFourth => f.n_levelset.powi(4),
        FactorSymbol::SchrodingerFourth => {
            schrodinger_observable_constant(f.schrodinger_quantity, d, eps, inv_ell) * f.n_u0.powi(4)
        }
    };
    Ok(value)
}

/// One `(d, eps)` row of a comparison table.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub d: usize,
    pub eps: f64,
    pub values: Vec<f64>,
    /// Index into the table's entries of the cheapest method.
    pub best: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonTable {
    pub entries: Vec<ComplexityEntry>,
    pub rows: Vec<ComparisonRow>,
}

/// Evaluate `entries` over all `(d, eps)` points, using `template` for the
/// remaining parameters.
pub fn compare_table(
    entries: &[ComplexityEntry],
    points: &[(usize, f64)],
    template: &EvalParams,
) -> Result<ComparisonTable> {
    if entries.is_empty() {
        return Err(invalid("entries", "comparison needs at least one entry"));
    }
    let rows = points
        .iter()
        .map(|&(d, eps)| {
            let params = EvalParams { d, eps, ..*template };
            let values = entries
                .iter()
                .map(|e| evaluate(e, &params))
                .collect::<Result<Vec<_>>>()?;
            let best = values
                .iter()
                .enumerate()
                .min_by(|a, b| a.1.total_cmp(b.1))
                .map(|(i, _)| i)
                .unwrap_or(0);
            Ok(ComparisonRow { d, eps, values, best })
        })
        .collect::<Result<_>>()?;
    Ok(ComparisonTable {
        entries: entries.to_vec(),
        rows,
    })
}

impl ComparisonTable {
    pub fn to_markdown(&self) -> String {
        let mut s = String::from("| d | eps |");
        for e in &self.entries {
            let _ = write!(s, " {} |", e.id);
        }
        s.push_str(" cheapest |\n|---|---|");
        for _ in &self.entries {
            s.push_str("---|");
        }
        s.push_str("---|\n");
        for r in &self.rows {
            let _ = write!(s, "| {} | {:e} |", r.d, r.eps);
            for v in &r.values {
                let _ = write!(s, " {v:.4e} |");
            }
            let _ = writeln!(s, " {} |", self.entries[r.best].id);
        }
        s.push_str("\nFormulas:\n\n");
        for e in &self.entries {
            let _ = writeln!(s, "- `{}`: {} ({})", e.id, e.render(), e.anchor);
        }
        s
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("d,eps");
        for e in &self.entries {
            let _ = write!(s, ",{}", e.id);
        }
        s.push_str(",cheapest\n");
        for r in &self.rows {
            let _ = write!(s, "{},{:.16e}", r.d, r.eps);
            for v in &r.values {
                let _ = write!(s, ",{v:.16e}");
            }
            let _ = writeln!(s, ",{}", self.entries[r.best].id);
        }
        s
    }
}

/// Problems whose simulation entry has a precision exponent no larger than
/// its spectral-QLSA entry.
pub fn simulation_dominates_qlsa(entries: &[ComplexityEntry], ell: SobolevOrder) -> Vec<(Problem, bool)> {
    let inv = ell.inverse();
    Problem::ALL
        .iter()
        .filter_map(|&p| {
            let pick = |m: Method| {
                entries
                    .iter()
                    .find(|e| e.problem == p && e.method == m && e.kind == Kind::Subroutine && e.in_table)
            };
            let sim = pick(Method::QuantumSimulation)?;
            let qlsa = pick(Method::SpectralQlsa)?;
            Some((p, sim.eps_exponent.value(inv) <= qlsa.eps_exponent.value(inv)))
        })
        .collect()
}

/// Quantum copy cost of a non-unitary run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CopyCostReport {
    pub steps: usize,
    pub cumulative: f64,
    pub per_step_factor: f64,
}

pub fn copy_cost(ledger: &CopyLedger) -> Result<CopyCostReport> {
    let factor = ledger
        .geometric_factor()
        .ok_or_else(|| Error::InvalidParameter {
            name: "ledger",
            reason: "copy ledger is empty".into(),
        })?;
    Ok(CopyCostReport {
        steps: ledger.steps(),
        cumulative: ledger.cumulative(),
        per_step_factor: factor,
    })
}

/// Markdown listing of the whole registry at one evaluation point.
pub fn registry_markdown(params: &EvalParams) -> Result<String> {
    let mut s = format!(
        "| id | formula | value at d={}, eps={:e}, alpha={} | anchor |\n|---|---|---|---|\n",
        params.d, params.eps, params.alpha
    );
    for e in registry() {
        let _ = writeln!(
            s,
            "| {} | {} | {:.4e} | {} |",
            e.id,
            e.render(),
            evaluate(&e, params)?,
            e.anchor
        );
    }
    Ok(s)
}
