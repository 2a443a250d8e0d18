use std::f64::consts::PI;

use linrep::generator::{build_kvn_hamiltonian, PositiveSplit};
use linrep::grid::{GridSpec, MultiIndex, TimeGrid};
use linrep::mollifier::{init_kvn, init_liouville, KernelKind, Mollifier};
use linrep::observables::{expect_kvn, expect_liouville, l1_norm, l2_norm, ObservableSpec};
use linrep::resources::{evaluate, registry, EvalParams};
use linrep::sampling::{dilate_history, emulate_norm_estimate, norm_error_bound, SamplingPlan};
use linrep::spectral::DftPlan;
use linrep::splitting::{evolve, CopyLedger, Propagator, SchrodingerSplit, SplitOrder};
use linrep::upwind::{assemble_kvn, assemble_liouville};
use linrep::FlowField;
use num_complex::Complex64;
use proptest::prelude::*;

/// Smooth periodic field `a_i + b_i sin(2 pi (x_i + c_i))` plus a cross term.
fn smooth_field(dim: usize, coeffs: &[f64]) -> FlowField {
    let c = coeffs.to_vec();
    FlowField::sampled(
        dim,
        move |x, o| {
            for i in 0..x.len() {
                let other = x[(i + 1) % x.len()];
                o[i] = c[3 * i] + c[3 * i + 1] * (2.0 * PI * (x[i] + c[3 * i + 2])).sin()
                    + 0.2 * c[3 * i + 1] * (2.0 * PI * other).cos();
            }
        },
        256,
    )
    .unwrap()
}

fn cfl_time_grid(grid: &GridSpec, field: &FlowField, fraction: f64) -> TimeGrid {
    let dt = fraction * grid.dx() / field.speed_sum().max(1e-12);
    TimeGrid::new(dt, 1).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn flatten_round_trip(dim in 1usize..4, m_exp in 1u32..5, seed in any::<u64>()) {
        let m = 1usize << m_exp;
        let g = GridSpec::new(dim, m).unwrap();
        let k = (seed as usize) % g.len();
        let idx = g.unflatten(k);
        prop_assert_eq!(g.flatten(&idx).unwrap(), k);
        let bad = MultiIndex(vec![m; dim]);
        prop_assert!(g.flatten(&bad).is_err());
    }

    #[test]
    fn liouville_upwind_conserves_and_contracts(
        dim in 1usize..3,
        coeffs in prop::collection::vec(-1.0f64..1.0, 6),
        state in prop::collection::vec(-1.0f64..1.0, 256),
        frac in 0.2f64..1.0,
    ) {
        let g = GridSpec::new(dim, if dim == 1 { 64 } else { 16 }).unwrap();
        let f = smooth_field(dim, &coeffs);
        let tg = cfl_time_grid(&g, &f, frac);
        let s = assemble_liouville(&g, &tg, &f).unwrap();
        for c in s.matrix.column_sums() {
            prop_assert!((c - 1.0).abs() < 1e-12);
        }
        let w: Vec<f64> = state.iter().cycle().take(g.len()).copied().collect();
        let bw = s.step(&w).unwrap();
        prop_assert!(l1_norm(&bw) <= l1_norm(&w) + 1e-12);
    }

    #[test]
    fn kvn_upwind_growth_is_bounded(
        coeffs in prop::collection::vec(-1.0f64..1.0, 6),
        frac in 0.2f64..1.0,
    ) {
        let g = GridSpec::new(1, 64).unwrap();
        let f = smooth_field(1, &coeffs);
        let tg = cfl_time_grid(&g, &f, frac);
        let s = assemble_kvn(&g, &tg, &f).unwrap();
        let w0: Vec<f64> = (0..64).map(|j| 1.0 + 0.5 * (2.0 * PI * g.coordinate(j)).cos()).collect();
        let mut w = w0.clone();
        let n0 = l1_norm(&w0);
        for n in 1..=50 {
            w = s.step(&w).unwrap();
            let bound = (n as f64 * tg.dt() * s.div_sup).exp() * n0;
            prop_assert!(l1_norm(&w) <= bound * (1.0 + 1e-10));
        }
    }

    #[test]
    fn dft_is_unitary_and_invertible(re in prop::collection::vec(-1.0f64..1.0, 32), im in prop::collection::vec(-1.0f64..1.0, 32)) {
        let plan = DftPlan::new(32).unwrap();
        let v: Vec<Complex64> = re.iter().zip(&im).map(|(a, b)| Complex64::new(*a, *b)).collect();
        let mut w = v.clone();
        plan.forward(&mut w);
        prop_assert!((l2_norm(&w) - l2_norm(&v)).abs() < 1e-12);
        plan.inverse(&mut w);
        for (a, b) in w.iter().zip(&v) {
            prop_assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn hermitian_exponential_is_unitary(coeffs in prop::collection::vec(-1.0f64..1.0, 3), t in -2.0f64..2.0) {
        let g = GridSpec::new(1, 8).unwrap();
        let h = build_kvn_hamiltonian(&g, &smooth_field(1, &coeffs), 0).unwrap();
        prop_assert!(h.certificate() <= 1e-10);
        let v: Vec<Complex64> = (0..8).map(|j| Complex64::new(j as f64 - 3.0, (j as f64).sin())).collect();
        let w = h.expm_apply(t, &v).unwrap();
        prop_assert!((l2_norm(&w) - l2_norm(&v)).abs() < 1e-10);
    }

    #[test]
    fn positive_split_identity(values in prop::collection::vec(-5.0f64..5.0, 1..40), floor in 0.1f64..2.0) {
        let s = PositiveSplit::new(&values, floor).unwrap();
        for ((p, m), f) in s.plus.iter().zip(s.minus()).zip(&values) {
            prop_assert_eq!(p - m, p - s.shift);
            prop_assert!(((p - m) - f).abs() <= 1e-12 * (1.0 + f.abs()));
            prop_assert!(*p >= floor - 1e-12 && m >= floor - 1e-12);
        }
    }

    #[test]
    fn schrodinger_split_preserves_mass(hbar in 0.01f64..1.0, dt in 0.001f64..0.1, v0 in -5.0f64..5.0) {
        let g = GridSpec::new(1, 32).unwrap();
        let split = SchrodingerSplit::new(&g, move |x| v0 * (2.0 * PI * x[0]).cos(), hbar, dt, SplitOrder::Lie).unwrap();
        let u0: Vec<Complex64> = (0..32)
            .map(|j| Complex64::from_polar((-(g.coordinate(j) - 0.5f64).powi(2) * 20.0).exp(), 3.0 * g.coordinate(j)))
            .collect();
        let out = evolve(&split, &u0, 50, false, None).unwrap();
        let m0 = out.trace[0].mass;
        for row in &out.trace {
            prop_assert!((row.mass - m0).abs() < 1e-10);
        }
        prop_assert_eq!(split.len(), 32);
    }

    #[test]
    fn kvn_expectation_matches_liouville(q0 in 0.3f64..0.7, q1 in 0.3f64..0.7) {
        let g = GridSpec::new(2, 16).unwrap();
        let m = Mollifier::on_grid(KernelKind::Cosine, 3, &g).unwrap();
        let rho = init_liouville(&g, &m, &[q0, q1]).unwrap();
        let psi = init_kvn(&g, &m, &[q0, q1]).unwrap();
        let spec = ObservableSpec::default();
        let a = expect_liouville(&g, &spec, &rho.values, |x| x[0] + x[1] * x[1]).unwrap();
        let b = expect_kvn(&g, &spec, &psi.values, |x| x[0] + x[1] * x[1]).unwrap();
        prop_assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn sample_count_is_positive(eps in 0.01f64..1.0, p in 0.01f64..0.99, var in 0.0f64..10.0) {
        let plan = SamplingPlan::new(eps, p, var, 0).unwrap();
        prop_assert!(plan.n_samples >= 1);
        prop_assert!(plan.n_samples as f64 >= var / ((1.0 - p) * eps * eps) - 1e-6);
    }

    #[test]
    fn dilation_rescaling_is_exact(
        steps in 1usize..6,
        entries in prop::collection::vec(0.1f64..2.0, 24),
        g in prop::collection::vec(-1.0f64..1.0, 4),
    ) {
        let history: Vec<Vec<f64>> = (0..=steps).map(|n| entries[4 * (n % 6)..4 * (n % 6) + 4].to_vec()).collect();
        let dil = dilate_history(&history).unwrap();
        prop_assert_eq!(dil.padded.len(), 2 * steps + 1);
        let last = history.last().unwrap();
        let direct: f64 = last.iter().zip(&g).map(|(v, w)| w * v * v).sum();
        let recovered = dil.rescale(dil.padded_expectation(&g).unwrap());
        prop_assert!((recovered - direct).abs() < 1e-12 * (1.0 + direct.abs()));
    }

    #[test]
    fn norm_estimate_within_eta(x in prop::collection::vec(-1.0f64..1.0, 1..16), eta in 0.0f64..0.9, seed in any::<u64>()) {
        let est = emulate_norm_estimate(&x, eta, seed).unwrap();
        prop_assert!((est.estimate - est.true_norm).abs() <= eta * est.true_norm + 1e-15);
        prop_assert!((est.perturb_observable(1.3) - 1.3).abs() <= norm_error_bound(eta, 1.3) + 1e-12);
        prop_assert_eq!(est, emulate_norm_estimate(&x, eta, seed).unwrap());
    }

    #[test]
    fn complexity_monotone(d in 1usize..8, eps_exp in -4.0f64..-0.5, ell in prop::sample::select(vec![1.0, 2.0, 4.0, f64::INFINITY])) {
        let eps = 10f64.powf(eps_exp);
        let ell = linrep::SobolevOrder::new(ell).unwrap();
        for e in registry() {
            let base = evaluate(&e, &EvalParams::new(d, eps).with_ell(ell)).unwrap();
            let more_d = evaluate(&e, &EvalParams::new(d + 1, eps).with_ell(ell)).unwrap();
            let finer = evaluate(&e, &EvalParams::new(d, eps / 2.0).with_ell(ell)).unwrap();
            prop_assert!(more_d >= base * (1.0 - 1e-12), "{} not nondecreasing in d", e.id);
            prop_assert!(finer >= base * (1.0 - 1e-12), "{} not nonincreasing in eps", e.id);
        }
    }

    #[test]
    fn ledger_is_monotone(probs in prop::collection::vec(0.01f64..1.0, 1..30)) {
        let mut l = CopyLedger::new();
        let mut prev = l.cumulative();
        for p in &probs {
            l.record(*p).unwrap();
            prop_assert!(l.cumulative() >= prev);
            prev = l.cumulative();
        }
        let product: f64 = probs.iter().map(|p| 1.0 / p).product();
        prop_assert!((l.cumulative() - product).abs() <= 1e-12 * product);
    }
}
