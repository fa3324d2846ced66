use ohlab::config::{SolveConfig, SweepConfig};
use ohlab::diagnostics::{lp_distance, mean_p, mean_u, series_from_csv, Window};
use ohlab::io::{parse_trajectory, write_trajectory, Table};
use ohlab::nonlocal::{antiderivative, derivative, relax_rhs, Gauge};
use ohlab::reference::godunov_solve;
use ohlab::{
    make_entropy_pair, regime_sequence, run_sweep, solve, EntropyFamily, Field, FluxModel, Grid1D,
    ParamSet, Profile, Regime, RegimeKind, SolverOptions, SweepPlan,
};
use proptest::prelude::*;

fn grid(n: usize) -> Grid1D {
    Grid1D::new(1.0, n).unwrap()
}

/// Zero-mean trigonometric data without Nyquist content.
fn modes_strategy() -> impl Strategy<Value = Vec<(u32, f64)>> {
    prop::collection::vec((1u32..10, -1.0f64..1.0), 1..4)
}

fn flux_strategy() -> impl Strategy<Value = FluxModel> {
    prop_oneof![Just(FluxModel::quadratic()), Just(FluxModel::cubic())]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn derivative_inverts_antiderivative(modes in modes_strategy()) {
        let g = grid(64);
        let u = Profile::SineModes { modes }.realize(&g).unwrap().field;
        let p = antiderivative(&u, &g, Gauge::ZeroMean).unwrap();
        prop_assert!(mean_p(&p, &g).abs() < 1e-13);
        let back = derivative(&p, &g).unwrap();
        for (a, b) in back.values().iter().zip(u.values()) {
            prop_assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
    }

    #[test]
    fn relaxation_rhs_keeps_zero_mean(modes in modes_strategy(), shift in -1.0f64..1.0, delta in 0.01f64..0.9) {
        let g = grid(64);
        let u = Profile::SineModes { modes: modes.clone() }.realize(&g).unwrap().field;
        let q = Profile::SineModes { modes: modes.iter().map(|&(m, a)| (m, a * shift)).collect() }
            .realize(&g).unwrap().field;
        let p = antiderivative(&q, &g, Gauge::ZeroMean).unwrap();
        let r = relax_rhs(&u, &p, delta, &g).unwrap();
        prop_assert!(mean_u(&r, &g).abs() < 1e-12 / delta);
    }

    #[test]
    fn lp_distance_is_a_metric(
        a in prop::collection::vec(-2.0f64..2.0, 16),
        b in prop::collection::vec(-2.0f64..2.0, 16),
        c in prop::collection::vec(-2.0f64..2.0, 16),
        p in prop_oneof![Just(1.0), Just(2.0), Just(3.5), Just(f64::INFINITY)],
    ) {
        let g = grid(16);
        let w = Window::full(&g);
        let (a, b, c) = (Field::new(a, 0.0).unwrap(), Field::new(b, 0.0).unwrap(), Field::new(c, 0.0).unwrap());
        let d = |x: &Field, y: &Field| lp_distance(x, y, p, w, &g).unwrap();
        prop_assert_eq!(d(&a, &a), 0.0);
        prop_assert!(d(&a, &b) >= 0.0);
        prop_assert!((d(&a, &b) - d(&b, &a)).abs() <= 1e-14 * (1.0 + d(&a, &b)));
        prop_assert!(d(&a, &c) <= d(&a, &b) + d(&b, &c) + 1e-12);
    }

    #[test]
    fn flux_derivative_matches_difference_quotient(model in flux_strategy(), u in -3.0f64..3.0) {
        let h = 1e-4;
        let fd = (model.eval(u + h) - model.eval(u - h)) / (2.0 * h);
        // Central difference error is h^2 f'''/6 with |f'''| <= 2.
        prop_assert!((fd - model.deriv(u)).abs() <= h * h + 1e-10);
    }

    #[test]
    fn entropy_flux_satisfies_compatibility(
        model in flux_strategy(),
        u in -3.0f64..3.0,
        k in -1.0f64..1.0,
        kruzkov in any::<bool>(),
    ) {
        let family = if kruzkov {
            EntropyFamily::SmoothedKruzkov { k, kappa: 0.3 }
        } else {
            EntropyFamily::Square
        };
        let pair = make_entropy_pair(&model, family).unwrap();
        let h = 1e-4;
        let dq = (pair.q(u + h) - pair.q(u - h)) / (2.0 * h);
        let expected = model.deriv(u) * pair.deta(u);
        prop_assert!((dq - expected).abs() < 1e-5 * (1.0 + expected.abs()), "{dq} vs {expected}");
        prop_assert!(pair.d2eta(u) >= 0.0);
        // Convexity along a chord.
        let (a, b) = (u - 0.7, u + 0.4);
        let mid = 0.5 * (a + b);
        prop_assert!(pair.eta(mid) <= 0.5 * (pair.eta(a) + pair.eta(b)) + 1e-12);
    }

    #[test]
    fn godunov_keeps_bounds_and_mass(modes in modes_strategy(), model in flux_strategy()) {
        let g = grid(64);
        let u0 = Profile::SineModes { modes }.realize(&g).unwrap().field;
        let u = godunov_solve(&u0, &model, &g, 0.3, 2).unwrap();
        let (lo, hi) = u0.values().iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
        // Restriction averages refined cells whose prolonged values obey the same bounds.
        for &v in u.values() {
            prop_assert!(v >= lo - 1e-12 && v <= hi + 1e-12);
        }
        prop_assert!(mean_u(&u, &g).abs() < 1e-12);
    }

    #[test]
    fn regime_relations_hold_bitwise(
        kind in prop_oneof![Just(RegimeKind::Oh), Just(RegimeKind::KdvDist), Just(RegimeKind::KdvEnt)],
        eps0 in 0.001f64..0.5,
        delta0 in 0.001f64..0.5,
        theta in 0.1f64..1.0,
    ) {
        let r = Regime { kind, eps0, delta0, c_gamma: 0.5, c_beta: 0.5, theta, k_max: 5 };
        if let Ok(seq) = regime_sequence(&r) {
            for (k, p) in seq.iter().enumerate() {
                let scale = 0.5f64.powi(k as i32);
                prop_assert_eq!(p.eps, eps0 * scale);
                prop_assert_eq!(p.delta, delta0 * scale);
                let (beta, gamma) = match kind {
                    RegimeKind::Oh => (0.0, 0.5 * p.eps.cbrt() * p.delta),
                    RegimeKind::KdvDist => (0.5 * p.eps * p.eps, 0.5 * p.eps * p.delta),
                    RegimeKind::KdvEnt => (0.5 * p.eps.powf(2.0 + theta), 0.5 * p.eps * p.delta),
                };
                prop_assert_eq!(p.beta, beta);
                prop_assert_eq!(p.gamma, gamma);
            }
        }
    }

    #[test]
    fn parsers_never_panic(text in ".{0,400}") {
        let _ = parse_trajectory(&text);
        let _ = series_from_csv(&text);
        let _ = Table::parse(&text);
        if let Ok(c) = SolveConfig::parse(&text) {
            let _ = c.validate();
        }
        if let Ok(c) = SweepConfig::parse(&text) {
            let _ = c.validate();
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn trajectory_files_round_trip(
        modes in modes_strategy(),
        eps in 0.0f64..0.05,
        delta in prop_oneof![Just(0.0), 0.02f64..0.2],
        gamma in 0.0f64..0.3,
    ) {
        let g = grid(16);
        let u0 = Profile::SineModes { modes: modes.into_iter().map(|(m, a)| (m % 7 + 1, a)).collect() }
            .realize(&g).unwrap().field;
        let params = ParamSet::new(eps, 0.0, delta, gamma).unwrap();
        let traj = solve(&u0, &params, &FluxModel::quadratic(), &g, &SolverOptions::new(0.05)).unwrap();
        let text = write_trajectory(&traj);
        let back = parse_trajectory(&text).unwrap();
        prop_assert_eq!(&back.snapshots, &traj.snapshots);
        prop_assert_eq!(back.diagnostics, traj.diagnostics);
    }
}

#[test]
fn relaxation_equilibrium_is_invariant() {
    // Frozen u, P0 = primitive of u: integrating P_t = (D1 P - u) / delta over
    // ten relaxation times stays on the equilibrium.
    let g = grid(128);
    let u = Profile::SineModes {
        modes: vec![(1, 0.8), (3, -0.4), (7, 0.2)],
    }
    .realize(&g)
    .unwrap()
    .field;
    let target = antiderivative(&u, &g, Gauge::ZeroMean).unwrap();
    let delta = 0.05;
    let dt = 0.4 * delta * g.dx();
    let steps = (10.0 * delta / dt).ceil() as usize;
    let mut p = target.values().to_vec();
    let add = |a: &[f64], b: &[f64], s: f64| -> Vec<f64> {
        a.iter().zip(b).map(|(x, y)| x + s * y).collect()
    };
    let rhs = |p: &[f64]| {
        relax_rhs(&u, &Field::new(p.to_vec(), 0.0).unwrap(), delta, &g)
            .unwrap()
            .into_values()
    };
    for _ in 0..steps {
        let p1 = add(&p, &rhs(&p), dt);
        let s1 = add(&p1, &rhs(&p1), dt);
        let p2: Vec<f64> = p
            .iter()
            .zip(&s1)
            .map(|(a, b)| 0.75 * a + 0.25 * b)
            .collect();
        let s2 = add(&p2, &rhs(&p2), dt);
        p = p
            .iter()
            .zip(&s2)
            .map(|(a, b)| a / 3.0 + 2.0 / 3.0 * b)
            .collect();
    }
    let err = p
        .iter()
        .zip(target.values())
        .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    assert!(err <= 1e-8, "{err:e}");
}

#[test]
fn zero_data_sweep_has_zero_distances_and_no_rate() {
    let g = grid(32);
    let regime = Regime {
        kind: RegimeKind::Oh,
        eps0: 0.1,
        delta0: 0.1,
        c_gamma: 1.0,
        c_beta: 0.0,
        theta: 0.0,
        k_max: 3,
    };
    let plan = SweepPlan::new(
        regime,
        Profile::sine(1, 0.0),
        FluxModel::quadratic(),
        g,
        SolverOptions::new(0.1),
        4,
    );
    let r = run_sweep(&plan, 2).unwrap();
    for d in r.distance_column(1.0) {
        assert_eq!(d, Some(0.0));
    }
    assert!(r.rates.iter().all(|(_, fit)| fit.is_err()));
}

#[test]
fn reference_is_converged_enough() {
    // Doubling the reference refinement moves every distance by < 20%.
    let g = grid(128);
    let regime = Regime {
        kind: RegimeKind::Oh,
        eps0: 0.05,
        delta0: 0.05,
        c_gamma: 1.0,
        c_beta: 0.0,
        theta: 0.0,
        k_max: 2,
    };
    let mut opts = SolverOptions::new(0.5);
    opts.snapshot_interval = Some(0.05);
    let plan = |refine| {
        SweepPlan::new(
            regime,
            Profile::sine(2, 1.0),
            FluxModel::quadratic(),
            g,
            opts,
            refine,
        )
    };
    let coarse = run_sweep(&plan(4), 2).unwrap();
    let fine = run_sweep(&plan(8), 2).unwrap();
    for (a, b) in coarse
        .distance_column(1.0)
        .iter()
        .zip(fine.distance_column(1.0))
    {
        let (a, b) = (a.unwrap(), b.unwrap());
        assert!((a - b).abs() < 0.2 * b, "{a} vs {b}");
    }
}
