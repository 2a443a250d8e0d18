//! Pipelines behind each subcommand.

use num_complex::Complex64;
use serde_json::{json, Map, Value};

use linrep::benchmarks::{count_local_maxima, wkb_initial};
use linrep::block::{condition_diagnostics, BlockSystem, DIAGNOSTIC_BUDGET};
use linrep::generator::{build_kvn_hamiltonian, HermitianGenerator, DEFAULT_FLOOR};
use linrep::grid::{
    mesh_for_schrodinger, mesh_for_spectral, mesh_for_upwind, MeshStrategy, SchrodingerPurpose,
};
use linrep::mollifier::{init_levelset, init_liouville, KernelKind, Mollifier};
use linrep::observables::{
    expect_hje, expect_kvn, expect_liouville, factors, l1_norm, l2_norm, mass, schrodinger_profile,
    ObservableSpec, SchrodingerQuantity,
};
use linrep::oracle::{burgers_characteristics, free_schrodinger_exact, rk4};
use linrep::resources::{
    compare_table, evaluate, registry, simulation_dominates_qlsa, EvalParams, FactorValues, Problem,
};
use linrep::sampling::{born_sample, Observable, SamplingPlan};
use linrep::splitting::{
    complexify, CopyLedger, KvnTrotter, LiouvillePhaseSplit, NonunitarySplit, Propagator, SchrodingerSplit,
    SplitOrder,
};
use linrep::upwind::{assemble_hje, assemble_kvn, assemble_liouville, check_cfl, UpwindScheme};
use linrep::{Error, FlowField, GridSpec, SobolevOrder, TimeGrid};

use crate::config::{Kernel, MeshSpec, Method, ObservableRequest, Order, RunConfig, Subcommand};
use crate::error::{CliError, CliResult};
use crate::output::{num, nums, Artifacts, Table};
use crate::problems::{self, HjeData, Params, ProblemFamily, ProblemInfo};

/// Cap on `nodes * steps` for a single run.
pub const WORK_BUDGET: usize = 2_000_000_000;
/// Mollifier width in cells when an explicit mesh leaves it open.
pub const DEFAULT_OMEGA_CELLS: usize = 4;

pub fn run(config: &RunConfig) -> CliResult<Artifacts> {
    config.validate()?;
    match config.subcommand {
        Subcommand::Resources => resources_run(config),
        Subcommand::OdeLiouville | Subcommand::OdeKvn => ode_run(config),
        Subcommand::Hje => hje_run(config),
        Subcommand::Schrodinger => schrodinger_run(config),
    }
}

fn split_order(order: Order) -> SplitOrder {
    match order {
        Order::Lie => SplitOrder::Lie,
        Order::Strang => SplitOrder::Strang,
    }
}

fn kernel_kind(kernel: Kernel) -> KernelKind {
    match kernel {
        Kernel::Hat => KernelKind::Hat,
        Kernel::Cosine => KernelKind::Cosine,
    }
}

fn sobolev(ell: Option<f64>) -> CliResult<SobolevOrder> {
    Ok(ell.map(SobolevOrder::new).transpose()?.unwrap_or(SobolevOrder::SMOOTH))
}

/// Resolved discretisation of one run.
struct MeshPlan {
    points: usize,
    dt: f64,
    horizon: f64,
    omega_cells: Option<usize>,
    strategy: Option<MeshStrategy>,
    /// Precision used for resource estimates.
    eps: f64,
    eps_basis: &'static str,
}

impl MeshPlan {
    fn resolve(
        config: &RunConfig,
        family: ProblemFamily,
        method: Method,
        state_dim: usize,
        speed_sum: f64,
    ) -> CliResult<Self> {
        let mesh = config.mesh.as_ref().expect("validated");
        let wants_width = family != ProblemFamily::Schrodinger;
        let plan = match mesh {
            MeshSpec::Explicit {
                points,
                horizon,
                dt,
                omega_cells,
            } => {
                let dx = 1.0 / *points as f64;
                let default_dt = if speed_sum > 0.0 { dx / speed_sum } else { dx };
                let omega_cells = wants_width.then(|| omega_cells.unwrap_or(DEFAULT_OMEGA_CELLS));
                let (eps, eps_basis) = match omega_cells {
                    Some(c) => (c as f64 * dx, "mollifier width"),
                    None => (dx, "grid spacing"),
                };
                MeshPlan {
                    points: *points,
                    dt: dt.unwrap_or(default_dt),
                    horizon: *horizon,
                    omega_cells,
                    strategy: None,
                    eps,
                    eps_basis,
                }
            }
            MeshSpec::Target { eps, horizon, ell } => {
                let ell = sobolev(*ell)?;
                let strategy = match family {
                    ProblemFamily::Schrodinger => {
                        mesh_for_schrodinger(*eps, state_dim, ell, SchrodingerPurpose::Observable)?
                    }
                    _ if method == Method::Fd => mesh_for_upwind(*eps, state_dim, speed_sum)?,
                    _ => mesh_for_spectral(*eps, state_dim, ell)?,
                };
                MeshPlan {
                    points: strategy.points(),
                    dt: strategy.dt,
                    horizon: *horizon,
                    omega_cells: if wants_width { strategy.omega_cells() } else { None },
                    strategy: Some(strategy),
                    eps: *eps,
                    eps_basis: "target precision",
                }
            }
        };
        if plan.points < 4 {
            return Err(CliError::validation(
                "mesh",
                format!("resolved grid has {} points per axis; need at least 4", plan.points),
            ));
        }
        Ok(plan)
    }

    fn time_grid(&self, nodes: usize) -> CliResult<TimeGrid> {
        let tg = TimeGrid::from_target(self.dt, self.horizon)?;
        let work = nodes.saturating_mul(tg.steps());
        if work > WORK_BUDGET {
            return Err(Error::Budget {
                what: "node updates (nodes x steps)",
                required: work,
                limit: WORK_BUDGET,
            }
            .into());
        }
        Ok(tg)
    }

    fn mollifier(&self, kernel: Kernel, grid: &GridSpec) -> CliResult<Option<Mollifier>> {
        self.omega_cells
            .map(|c| Mollifier::on_grid(kernel_kind(kernel), c, grid))
            .transpose()
            .map_err(Into::into)
    }

    fn to_json(&self, grid: &GridSpec, tg: &TimeGrid, moll: Option<&Mollifier>) -> Value {
        let mut m = Map::new();
        m.insert("points_per_axis".into(), json!(self.points));
        m.insert("axes".into(), json!(grid.dim()));
        m.insert("nodes".into(), json!(grid.len()));
        m.insert("dx".into(), num(grid.dx()));
        m.insert("dt".into(), num(tg.dt()));
        m.insert("steps".into(), json!(tg.steps()));
        m.insert("horizon".into(), num(tg.horizon()));
        m.insert("cfl_lambda".into(), num(tg.dt() / grid.dx()));
        if let Some(moll) = moll {
            m.insert("omega".into(), num(moll.width()));
            m.insert("omega_cells".into(), json!(self.omega_cells));
        }
        if let Some(s) = &self.strategy {
            m.insert(
                "strategy".into(),
                json!({
                    "kind": format!("{:?}", s.kind),
                    "target_eps": num(s.target_eps),
                    "sobolev_order": num(s.sobolev_order.value()),
                    "dx_target": num(s.dx_target),
                    "dt_target": num(s.dt_target),
                    "omega_target": s.omega_target.map_or(Value::Null, num),
                    "hbar": s.hbar.map_or(Value::Null, num),
                }),
            );
        }
        m.insert("resource_eps".into(), num(self.eps));
        m.insert("resource_eps_basis".into(), json!(self.eps_basis));
        Value::Object(m)
    }
}

/// Spectral KvN generator exponentiated densely, emulating an exact linear
/// solve of each time step.
struct DenseKvn {
    generator: HermitianGenerator,
    dt: f64,
    cell: f64,
}

impl DenseKvn {
    fn new(grid: &GridSpec, field: &FlowField, dt: f64) -> linrep::Result<Self> {
        let mut total = build_kvn_hamiltonian(grid, field, 0)?.matrix().clone();
        for axis in 1..grid.dim() {
            total += build_kvn_hamiltonian(grid, field, axis)?.matrix();
        }
        Ok(Self {
            generator: HermitianGenerator::new(total)?,
            dt,
            cell: grid.dx().powi(grid.dim() as i32),
        })
    }
}

impl Propagator for DenseKvn {
    fn len(&self) -> usize {
        self.generator.dim()
    }

    fn dt(&self) -> f64 {
        self.dt
    }

    fn cell_volume(&self) -> f64 {
        self.cell
    }

    fn step(&self, state: &mut [Complex64], _ledger: &mut CopyLedger) -> linrep::Result<()> {
        let next = self.generator.expm_apply(self.dt, state)?;
        state.copy_from_slice(&next);
        Ok(())
    }
}

enum Stepper {
    Upwind(UpwindScheme),
    Split(Box<dyn Propagator>),
}

impl Stepper {
    fn advance(&self, state: &mut Vec<Complex64>, ledger: &mut CopyLedger) -> linrep::Result<()> {
        match self {
            Stepper::Upwind(s) => {
                let real: Vec<f64> = state.iter().map(|c| c.re).collect();
                *state = complexify(&s.step(&real)?);
                Ok(())
            }
            Stepper::Split(p) => p.step(state, ledger),
        }
    }
}

struct Marched {
    state: Vec<Complex64>,
    trace: Table,
    ledger: CopyLedger,
}

/// Step to the horizon, tracing norms and scalar observables.
fn march<F>(stepper: &Stepper, state0: Vec<Complex64>, tg: &TimeGrid, labels: &[String], observe: F) -> CliResult<Marched>
where
    F: Fn(&[Complex64]) -> CliResult<Vec<f64>>,
{
    let mut header: Vec<String> = ["step", "time", "l2_norm", "l1_norm", "ledger_cumulative"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    header.extend(labels.iter().cloned());
    let mut trace = Table::new(header);
    let mut ledger = CopyLedger::new();
    let mut state = state0;
    let row = |n: usize, state: &[Complex64], ledger: &CopyLedger| -> CliResult<Vec<f64>> {
        let mut r = vec![n as f64, tg.time(n), l2_norm(state), l1_norm(state), ledger.cumulative()];
        r.extend(observe(state)?);
        Ok(r)
    };
    trace.push(row(0, &state, &ledger)?);
    for n in 1..=tg.steps() {
        stepper.advance(&mut state, &mut ledger)?;
        if state.iter().any(|c| !(c.re.is_finite() && c.im.is_finite())) {
            return Err(Error::Divergence(format!("non-finite state at step {n}")).into());
        }
        trace.push(row(n, &state, &ledger)?);
    }
    Ok(Marched { state, trace, ledger })
}

fn labels(requests: &[ObservableRequest]) -> Vec<String> {
    requests.iter().map(|r| r.label()).collect()
}

fn observable_map(requests: &[ObservableRequest], values: &[f64]) -> Value {
    Value::Object(
        requests
            .iter()
            .zip(values)
            .map(|(r, v)| (r.label(), num(*v)))
            .collect(),
    )
}

fn problem_json(info: &ProblemInfo, params: &Params) -> Value {
    json!({
        "name": info.name,
        "description": info.description,
        "anchor": info.anchor,
        "dimension": info.dim,
        "params": Value::Object(params.map().iter().map(|(k, v)| (k.clone(), num(*v))).collect()),
    })
}

fn norm_drift(trace: &Table) -> f64 {
    let first = trace.rows[0][2];
    trace.rows.iter().map(|r| (r[2] - first).abs()).fold(0.0, f64::max)
}

fn ledger_json(ledger: &CopyLedger) -> Value {
    json!({
        "recorded_steps": ledger.steps(),
        "cumulative_copies": num(ledger.cumulative()),
        "geometric_factor": ledger.geometric_factor().map_or(Value::Null, num),
    })
}

fn resource_estimates(problem: Problem, d: usize, plan: &MeshPlan, factors: FactorValues) -> CliResult<Value> {
    let ell = match &plan.strategy {
        Some(s) => s.sobolev_order,
        None => SobolevOrder::SMOOTH,
    };
    let params = EvalParams {
        factors,
        ..EvalParams::new(d, plan.eps.min(0.999)).with_ell(ell)
    };
    let entries = registry()
        .into_iter()
        .filter(|e| e.problem == problem)
        .map(|e| {
            Ok(json!({
                "id": e.id,
                "formula": e.render(),
                "value": num(evaluate(&e, &params)?),
                "anchor": e.anchor,
            }))
        })
        .collect::<CliResult<Vec<_>>>()?;
    Ok(json!({
        "d": d,
        "eps": num(params.eps),
        "alpha": num(params.alpha),
        "entries": entries,
    }))
}

fn sampling_json<T>(config: &RunConfig, grid: &GridSpec, state: &[T]) -> CliResult<Option<Value>>
where
    T: linrep::observables::Amplitude + Into<Complex64>,
{
    let Some(spec) = &config.sampling else {
        return Ok(None);
    };
    let observable = Observable::Diagonal((0..grid.len()).map(|k| grid.point(k)[spec.axis]).collect());
    let (_, variance) = observable.moments(state)?;
    let plan = SamplingPlan::new(spec.eps, spec.confidence, variance, config.seed)?;
    let out = born_sample(state, &observable, &plan)?;
    Ok(Some(json!({
        "observable": format!("coordinate of axis {}", spec.axis),
        "eps": num(plan.eps),
        "confidence": num(plan.confidence),
        "seed": config.seed,
        "n_samples": plan.n_samples,
        "variance": num(out.variance),
        "exact_mean": num(out.exact_mean),
        "empirical_mean": num(out.empirical_mean),
        "abs_error": num((out.empirical_mean - out.exact_mean).abs()),
    })))
}

fn ode_run(config: &RunConfig) -> CliResult<Artifacts> {
    let sub = config.subcommand;
    let spec = config.problem.as_ref().expect("validated");
    let info = problems::lookup(&spec.name)?;
    let params = Params::resolve(info, &spec.params);
    let method = config.method()?;
    let q0 = problems::ode_initial(info, &params);
    let field = problems::ode_field(info);
    let d = info.dim;
    let plan = MeshPlan::resolve(config, ProblemFamily::Ode, method, d, field.speed_sum())?;
    let grid = GridSpec::new(d, plan.points)?;
    let moll = plan.mollifier(config.kernel, &grid)?.expect("ODE runs use a mollifier");
    let tg = plan.time_grid(grid.len())?;
    let rho0 = init_liouville(&grid, &moll, &q0)?;
    let amplitude = sub == Subcommand::OdeKvn;
    let state0: Vec<f64> = if amplitude {
        rho0.values.iter().map(|v| v.sqrt()).collect()
    } else {
        rho0.values.clone()
    };
    let order = split_order(config.order);
    let stepper = match (sub, method) {
        (Subcommand::OdeLiouville, Method::Fd) => Stepper::Upwind(assemble_liouville(&grid, &tg, &field)?),
        (Subcommand::OdeLiouville, Method::NonunitarySplit) => Stepper::Split(Box::new(NonunitarySplit::new(
            &grid,
            &field,
            DEFAULT_FLOOR,
            tg.dt(),
            order,
        )?)),
        (Subcommand::OdeKvn, Method::Fd) => Stepper::Upwind(assemble_kvn(&grid, &tg, &field)?),
        (Subcommand::OdeKvn, Method::SpectralSim) => {
            Stepper::Split(Box::new(KvnTrotter::new(&grid, &field, tg.dt(), order)?))
        }
        (Subcommand::OdeKvn, Method::SpectralQlsaEmulated) => {
            Stepper::Split(Box::new(DenseKvn::new(&grid, &field, tg.dt())?))
        }
        _ => unreachable!("method checked by validation"),
    };
    let obs_spec = ObservableSpec::default();
    let expect = |state: &[Complex64], g: &dyn Fn(&[f64]) -> f64| -> CliResult<f64> {
        Ok(if amplitude {
            expect_kvn(&grid, &obs_spec, state, g)?
        } else {
            let re: Vec<f64> = state.iter().map(|c| c.re).collect();
            expect_liouville(&grid, &obs_spec, &re, g)?
        })
    };
    let requests = &config.observables;
    let observe = |state: &[Complex64]| -> CliResult<Vec<f64>> {
        requests
            .iter()
            .map(|r| match r {
                ObservableRequest::Moment { axis } => expect(state, &|x: &[f64]| x[*axis]),
                _ => expect(state, &|_: &[f64]| 1.0),
            })
            .collect()
    };
    let marched = march(&stepper, complexify(&state0), &tg, &labels(requests), &observe)?;
    let final_values = observe(&marched.state)?;

    let mass_final = expect(&marched.state, &|_: &[f64]| 1.0)?;
    let recovered = (0..d)
        .map(|i| Ok(expect(&marched.state, &|x: &[f64]| x[i])? / mass_final))
        .collect::<CliResult<Vec<f64>>>()?;
    let mut reference = Map::new();
    reference.insert("recovered_solution".into(), nums(&recovered));
    if let Some(exact) = problems::ode_exact(info, &q0, tg.horizon()) {
        let err = exact.iter().zip(&recovered).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        reference.insert("exact_solution".into(), nums(&exact));
        reference.insert("max_abs_error".into(), num(err));
    }
    let traj = rk4(&field, &q0, tg.horizon(), tg.dt().min(1e-3))?;
    reference.insert("rk4_solution".into(), nums(&traj.result.values));

    let mut diagnostics = Map::new();
    diagnostics.insert("l2_norm_drift".into(), num(norm_drift(&marched.trace)));
    diagnostics.insert("div_sup".into(), num(field.div_sup()));
    match &stepper {
        Stepper::Upwind(scheme) => {
            let cfl = check_cfl(field.sup_per_axis(), tg.dt() / grid.dx());
            diagnostics.insert("cfl_satisfied".into(), json!(cfl.satisfied));
            diagnostics.insert("cfl_margin".into(), num(cfl.margin));
            diagnostics.insert("step_norm_bound".into(), num(scheme.norm_bound()));
            diagnostics.insert("block_system".into(), block_json(scheme, &state0, tg.steps())?);
        }
        Stepper::Split(_) => {
            diagnostics.insert("copy_ledger".into(), ledger_json(&marched.ledger));
        }
    }

    let psi0: Vec<f64> = rho0.values.iter().map(|v| v.sqrt()).collect();
    let n_l = factors::liouville(&grid, &rho0.values);
    let n_l1 = factors::liouville_l1(&grid, &rho0.values);
    let n_k = factors::kvn(&grid, &psi0);
    let problem = if amplitude {
        Problem::KvnRepresentation
    } else {
        Problem::LiouvilleRepresentation
    };
    let factor_values = FactorValues {
        n_liouville: n_l,
        ..FactorValues::default()
    };

    let mut density = Table::new((0..d).map(|i| format!("x{i}")).chain(std::iter::once("density".to_string())));
    for (k, c) in marched.state.iter().enumerate() {
        let mut row = grid.point(k);
        row.push(if amplitude { c.norm_sqr() } else { c.re });
        density.push(row);
    }

    let mut result = Map::new();
    result.insert("subcommand".into(), json!(sub.slug()));
    result.insert("method".into(), json!(method.slug()));
    result.insert("order".into(), json!(format!("{:?}", config.order).to_lowercase()));
    result.insert("problem".into(), problem_json(info, &params));
    result.insert("mesh".into(), plan.to_json(&grid, &tg, Some(&moll)));
    result.insert("initial_mass".into(), num(rho0.mass));
    result.insert("observables".into(), observable_map(requests, &final_values));
    result.insert("reference".into(), Value::Object(reference));
    result.insert("diagnostics".into(), Value::Object(diagnostics));
    result.insert(
        "factors".into(),
        json!({ "n_liouville": num(n_l), "n_liouville_l1": num(n_l1), "n_kvn": num(n_k) }),
    );
    result.insert("resources".into(), resource_estimates(problem, d, &plan, factor_values)?);
    if let Some(s) = sampling_json(config, &grid, &marched.state)? {
        result.insert("sampling".into(), s);
    }
    Ok(Artifacts {
        result,
        trace: Some(marched.trace),
        density: Some(density),
        files: Vec::new(),
    })
}

fn block_json(scheme: &UpwindScheme, w0: &[f64], steps: usize) -> CliResult<Value> {
    let size = w0.len() * (steps + 1);
    if size > DIAGNOSTIC_BUDGET {
        return Ok(json!({
            "skipped": format!("{size} unknowns exceed the diagnostic budget of {DIAGNOSTIC_BUDGET}"),
        }));
    }
    let sys = BlockSystem::new(scheme, w0, steps, 0)?;
    let r = condition_diagnostics(&sys, DIAGNOSTIC_BUDGET)?;
    Ok(json!({
        "unknowns": size,
        "kappa_estimate": num(r.kappa_est),
        "kappa_bound": num(r.kappa_bound),
        "norm_b": num(r.norm_b),
        "norm_b_bound": num(r.norm_b_bound),
        "sigma_max": num(r.sigma_max),
        "sigma_min": num(r.sigma_min),
        "max_row_nnz": r.max_row_nnz,
        "within_bounds": r.within_bounds,
    }))
}

fn hje_run(config: &RunConfig) -> CliResult<Artifacts> {
    let spec = config.problem.as_ref().expect("validated");
    let info = problems::lookup(&spec.name)?;
    let params = Params::resolve(info, &spec.params);
    let method = config.method()?;
    let data = HjeData::new(info, &params);
    let ham = data.hamiltonian()?;
    let u0 = data.initial_velocity();
    let d = info.dim;
    let plan = MeshPlan::resolve(config, ProblemFamily::HamiltonJacobi, method, 2 * d, ham.speed_sum())?;
    let phase = GridSpec::phase_space(d, plan.points)?;
    let moll = plan.mollifier(config.kernel, &phase)?.expect("level-set runs use a mollifier");
    let tg = plan.time_grid(phase.len())?;
    let w0 = init_levelset(&phase, &moll, |x| vec![u0(x[0])], None::<fn(&[f64]) -> f64>)?;
    let gradient = data.gradient;
    let stepper = match method {
        Method::Fd => Stepper::Upwind(assemble_hje(&phase, &tg, &ham)?),
        Method::Splitting => Stepper::Split(Box::new(LiouvillePhaseSplit::new(
            &phase,
            move |_, o: &mut [f64]| o.fill(gradient),
            tg.dt(),
        )?)),
        _ => unreachable!("method checked by validation"),
    };
    let whole = ObservableSpec::default();
    let requests = &config.observables;
    let observe = |state: &[Complex64]| -> CliResult<Vec<f64>> {
        let re: Vec<f64> = state.iter().map(|c| c.re).collect();
        requests
            .iter()
            .map(|r| {
                Ok(match r {
                    ObservableRequest::Momentum => expect_liouville(&phase, &whole, &re, |y| y[d])?,
                    _ => expect_liouville(&phase, &whole, &re, |_| 1.0)?,
                })
            })
            .collect()
    };
    let marched = march(&stepper, complexify(&w0.values), &tg, &labels(requests), &observe)?;
    let final_values = observe(&marched.state)?;

    let w: Vec<f64> = marched.state.iter().map(|c| c.re).collect();
    let moments = ObservableSpec::momentum_moments();
    let rho = expect_hje(&phase, &moments, &w, |_, _| 1.0)?;
    let mom = expect_hje(&phase, &moments, &w, |_, p| p[0])?;
    let x_grid = phase.sub_grid(linrep::grid::AxisRole::Position)?;
    let xs: Vec<f64> = (0..x_grid.len()).map(|k| x_grid.point(k)[0]).collect();
    let velocity: Vec<f64> = rho.iter().zip(&mom).map(|(r, m)| if *r > 0.0 { m / r } else { 0.0 }).collect();

    let t = tg.horizon();
    let shift = 0.5 * gradient * t;
    let exact = burgers_characteristics(move |x| u0(x) - shift, t, &xs);
    let mut reference = Map::new();
    let mut density = Table::new(["x", "density", "momentum", "velocity", "reference_velocity"]);
    match &exact {
        Ok(points) => {
            let reference_velocity: Vec<f64> = points.iter().map(|p| p.velocity - shift).collect();
            let momentum_err = mom
                .iter()
                .zip(rho.iter().zip(&reference_velocity))
                .map(|(m, (r, u))| (m - r * u).abs())
                .fold(0.0, f64::max);
            let velocity_err = velocity
                .iter()
                .zip(&reference_velocity)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            reference.insert("max_momentum_error".into(), num(momentum_err));
            reference.insert("max_velocity_error".into(), num(velocity_err));
            for (k, x) in xs.iter().enumerate() {
                density.push(vec![*x, rho[k], mom[k], velocity[k], reference_velocity[k]]);
            }
        }
        Err(e) => {
            reference.insert("unavailable".into(), json!(e.to_string()));
            for (k, x) in xs.iter().enumerate() {
                density.push(vec![*x, rho[k], mom[k], velocity[k], f64::NAN]);
            }
        }
    }
    let width = moll.width();
    reference.insert(
        "error_budget".into(),
        num(width + d as f64 * phase.dx() / (width * width)),
    );

    let mut diagnostics = Map::new();
    diagnostics.insert("l2_norm_drift".into(), num(norm_drift(&marched.trace)));
    match &stepper {
        Stepper::Upwind(scheme) => {
            let sups: Vec<f64> = ham.sup_dh_dx().iter().chain(ham.sup_dh_dp()).copied().collect();
            let cfl = check_cfl(&sups, tg.dt() / phase.dx());
            diagnostics.insert("cfl_satisfied".into(), json!(cfl.satisfied));
            diagnostics.insert("cfl_margin".into(), num(cfl.margin));
            diagnostics.insert("step_norm_bound".into(), num(scheme.norm_bound()));
        }
        Stepper::Split(_) => {
            diagnostics.insert("copy_ledger".into(), ledger_json(&marched.ledger));
        }
    }
    let n_h = factors::levelset(&phase, &w0.values);

    let mut result = Map::new();
    result.insert("subcommand".into(), json!(config.subcommand.slug()));
    result.insert("method".into(), json!(method.slug()));
    result.insert("problem".into(), problem_json(info, &params));
    result.insert("mesh".into(), plan.to_json(&phase, &tg, Some(&moll)));
    result.insert("initial_mass".into(), num(w0.mass));
    result.insert("observables".into(), observable_map(requests, &final_values));
    result.insert("reference".into(), Value::Object(reference));
    result.insert("diagnostics".into(), Value::Object(diagnostics));
    result.insert("factors".into(), json!({ "n_levelset": num(n_h) }));
    let factor_values = FactorValues {
        n_levelset: n_h,
        ..FactorValues::default()
    };
    result.insert(
        "resources".into(),
        resource_estimates(Problem::LiouvilleEquation, d, &plan, factor_values)?,
    );
    if let Some(s) = sampling_json(config, &phase, &w)? {
        result.insert("sampling".into(), s);
    }
    Ok(Artifacts {
        result,
        trace: Some(marched.trace),
        density: Some(density),
        files: Vec::new(),
    })
}

fn schrodinger_run(config: &RunConfig) -> CliResult<Artifacts> {
    let spec = config.problem.as_ref().expect("validated");
    let info = problems::lookup(&spec.name)?;
    let params = Params::resolve(info, &spec.params);
    let method = config.method()?;
    let d = info.dim;
    let plan = MeshPlan::resolve(config, ProblemFamily::Schrodinger, method, d, 0.0)?;
    let hbar = plan
        .strategy
        .as_ref()
        .and_then(|s| s.hbar)
        .unwrap_or_else(|| params.get("hbar"));
    let potential = params.get("potential");
    let grid = GridSpec::new(d, plan.points)?;
    let tg = plan.time_grid(grid.len())?;
    let u0 = wkb_initial(&grid, hbar)?.values;
    let split = SchrodingerSplit::new(&grid, move |_| potential, hbar, tg.dt(), split_order(config.order))?;
    let stepper = Stepper::Split(Box::new(split));
    let requests = &config.observables;
    let cell = grid.dx();
    let observe = |state: &[Complex64]| -> CliResult<Vec<f64>> {
        requests
            .iter()
            .map(|r| {
                let which = match r {
                    ObservableRequest::Current => SchrodingerQuantity::Current,
                    ObservableRequest::Energy => SchrodingerQuantity::Energy,
                    _ => return Ok(mass(&grid, state)),
                };
                Ok(schrodinger_profile(&grid, state, hbar, which)?.iter().sum::<f64>() * cell)
            })
            .collect()
    };
    let marched = march(&stepper, u0.clone(), &tg, &labels(requests), &observe)?;
    let final_values = observe(&marched.state)?;

    let rho = schrodinger_profile(&grid, &marched.state, hbar, SchrodingerQuantity::Density)?;
    let current = schrodinger_profile(&grid, &marched.state, hbar, SchrodingerQuantity::Current)?;
    let energy = schrodinger_profile(&grid, &marched.state, hbar, SchrodingerQuantity::Energy)?;
    let mut density = Table::new(["x", "density", "current", "energy"]);
    for k in 0..grid.len() {
        density.push(vec![grid.coordinate(k), rho[k], current[k], energy[k]]);
    }

    let t = tg.horizon();
    let phase = Complex64::from_polar(1.0, -potential * t / hbar);
    let exact: Vec<Complex64> = free_schrodinger_exact(&grid, &u0, hbar, t)?
        .into_iter()
        .map(|c| c * phase)
        .collect();
    let err = exact
        .iter()
        .zip(&marched.state)
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);
    let mass0 = mass(&grid, &u0);
    let mass_drift = marched
        .trace
        .rows
        .iter()
        .map(|r| (r[2] * r[2] * cell - mass0).abs())
        .fold(0.0, f64::max);

    let n_u0 = factors::schrodinger(&u0);
    let mut result = Map::new();
    result.insert("subcommand".into(), json!(config.subcommand.slug()));
    result.insert("method".into(), json!(method.slug()));
    result.insert("order".into(), json!(format!("{:?}", config.order).to_lowercase()));
    result.insert("problem".into(), problem_json(info, &params));
    result.insert("hbar".into(), num(hbar));
    result.insert("mesh".into(), plan.to_json(&grid, &tg, None));
    result.insert("initial_mass".into(), num(mass0));
    result.insert("observables".into(), observable_map(requests, &final_values));
    result.insert(
        "reference".into(),
        json!({
            "max_abs_error_vs_exact": num(err),
            "local_maxima_of_density": count_local_maxima(&rho),
        }),
    );
    result.insert(
        "diagnostics".into(),
        json!({ "mass_drift": num(mass_drift), "l2_norm_drift": num(norm_drift(&marched.trace)) }),
    );
    result.insert("factors".into(), json!({ "n_u0": num(n_u0) }));
    let factor_values = FactorValues {
        n_u0,
        ..FactorValues::default()
    };
    let resource_plan = MeshPlan {
        eps: hbar * hbar,
        eps_basis: "hbar squared",
        ..plan
    };
    result.insert(
        "resources".into(),
        resource_estimates(Problem::SchrodingerEquation, d, &resource_plan, factor_values)?,
    );
    if let Some(s) = sampling_json(config, &grid, &marched.state)? {
        result.insert("sampling".into(), s);
    }
    Ok(Artifacts {
        result,
        trace: Some(marched.trace),
        density: Some(density),
        files: Vec::new(),
    })
}

fn resources_run(config: &RunConfig) -> CliResult<Artifacts> {
    let spec = config.resources.clone().unwrap_or_default();
    let ell = sobolev(spec.ell)?;
    let entries: Vec<_> = registry().into_iter().filter(|e| e.in_table).collect();
    let template = EvalParams::new(1, 0.5).with_alpha(spec.alpha).with_ell(ell);
    let points: Vec<(usize, f64)> = spec
        .dims
        .iter()
        .flat_map(|&d| spec.eps.iter().map(move |&e| (d, e)))
        .collect();
    let table = compare_table(&entries, &points, &template)?;
    let entry_json: Vec<Value> = registry()
        .iter()
        .map(|e| {
            json!({
                "id": e.id,
                "problem": e.problem.slug(),
                "method": e.method.slug(),
                "kind": e.kind.slug(),
                "formula": e.render(),
                "in_table": e.in_table,
                "anchor": e.anchor,
            })
        })
        .collect();
    let rows: Vec<Value> = table
        .rows
        .iter()
        .map(|r| {
            json!({
                "d": r.d,
                "eps": num(r.eps),
                "values": Value::Object(
                    table.entries.iter().zip(&r.values).map(|(e, v)| (e.id.clone(), num(*v))).collect()
                ),
                "cheapest": table.entries[r.best].id,
            })
        })
        .collect();
    let dominance: Map<String, Value> = simulation_dominates_qlsa(&entries, ell)
        .into_iter()
        .map(|(p, b)| (p.slug().to_string(), json!(b)))
        .collect();
    let mut result = Map::new();
    result.insert("subcommand".into(), json!("resources"));
    result.insert("alpha".into(), num(spec.alpha));
    result.insert("sobolev_order".into(), num(ell.value()));
    result.insert("entries".into(), Value::Array(entry_json));
    result.insert("table".into(), Value::Array(rows));
    result.insert("simulation_not_worse_than_qlsa".into(), Value::Object(dominance));
    Ok(Artifacts {
        result,
        trace: None,
        density: None,
        files: vec![
            ("table.md".into(), table.to_markdown()),
            ("table.csv".into(), table.to_csv()),
        ],
    })
}
