use approx::assert_relative_eq;
use resetwalk_core::analytics::{mean_exit_time, met_limit, propagator_closed_form, stationary_density, stationary_moments};
use resetwalk_core::montecarlo::*;
use resetwalk_core::paths::{first_exit_with_budget, simulate_events, state_at};
use resetwalk_core::{Domain, Error, MetLimit, ModelParams, ValidatedParams};

fn exp(g: f64, lam: f64, lr: f64, gam: f64) -> ValidatedParams {
    ModelParams::exponential(g, lam, lr, gam).validate().unwrap()
}

#[test]
fn mean_exit_time_reference_point() {
    let p = exp(1.0, 1.0, 1.0, 1.0);
    let e = met_estimate(&p, 1.0, 0.0, 100_000, 11).unwrap();
    assert!(e.agrees_with(0.945386534897984, 4.0), "{} +- {}", e.value, e.std_error);
    assert!(e.std_error < 0.01);
}

#[test]
fn fast_resets_need_a_single_long_jump() {
    let p = exp(1.0, 1.0, 1e4, 1.0);
    let t = mean_exit_time(&p, 1.0, 0.0).unwrap();
    assert_relative_eq!(t, std::f64::consts::E, max_relative = 0.02);
    assert_relative_eq!(met_limit(&p, 1.0, 0.0, MetLimit::InfiniteReset).unwrap(), std::f64::consts::E, max_relative = 1e-12);
    let e = met_estimate(&p, 1.0, 0.0, 4_000, 12).unwrap();
    assert!(e.agrees_with(t, 4.0), "{} +- {} vs {t}", e.value, e.std_error);
}

#[test]
fn strong_drift_weak_reset() {
    let p = exp(10.0, 1.0, 0.1, 1.0);
    let t = mean_exit_time(&p, 1.0, 0.9).unwrap();
    let no_reset = met_limit(&p, 1.0, 0.9, MetLimit::NoReset).unwrap();
    let drift_only = 0.1 / 10.0;
    assert!(no_reset < drift_only && drift_only < t, "{t} {no_reset} {drift_only}");
    let e = met_estimate(&p, 1.0, 0.9, 50_000, 13).unwrap();
    assert!(e.agrees_with(t, 4.0));
}

#[test]
fn survival_curve_shape() {
    let p = exp(1.0, 1.0, 1.0, 1.0);
    let grid: Vec<f64> = (1..=200).map(|i| 0.03 * i as f64).collect();
    let est = survival_estimate(&p, 1.0, 0.0, &grid, 50_000, 14).unwrap();
    let values: Vec<f64> = est.iter().map(|e| e.value).collect();
    assert!(values.windows(2).all(|w| w[1] <= w[0]));
    let near_zero = survival_estimate(&p, 1.0, 0.0, &[1e-6], 50_000, 14).unwrap();
    assert!(near_zero[0].value > 0.9999);
    let area = survival_area(&grid, &values);
    assert_relative_eq!(area, 0.945386534897984, max_relative = 0.02);
}

#[test]
fn survival_grid_must_increase() {
    let p = exp(1.0, 1.0, 1.0, 1.0);
    assert!(matches!(survival_estimate(&p, 1.0, 0.0, &[1.0, 0.5], 10, 1), Err(Error::DomainError(_))));
}

#[test]
fn tail_fit_recovers_pareto_index() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(15);
    let samples: Vec<f64> = (0..400_000).map(|_| rng.random::<f64>().powf(-1.0 / 1.5)).collect();
    let summary = EmpiricalSummary::from_samples(BinSpec::log_y(1.0, 1e3, 10), &samples, 15);
    let fit = tail_fit(&summary, (1.0, 1e3)).unwrap();
    assert!((fit.value - 1.5).abs() < 0.05, "{} +- {}", fit.value, fit.std_error);
}

#[test]
fn driftless_tail_exponent() {
    let p = exp(0.0, 1.0, 2.0, 1.0);
    let summary = empirical_density(&p, 20.0, 200_000, BinSpec::log_y(1.0, 1e4, 5), 16).unwrap();
    let fit = tail_fit(&summary, (3.0, 1e3)).unwrap();
    assert!((fit.value - 2.0 / 3.0).abs() < 0.05, "{} +- {}", fit.value, fit.std_error);
}

#[test]
fn sparse_tail_is_reported() {
    let samples = vec![1.5; 50];
    let summary = EmpiricalSummary::from_samples(BinSpec::log_y(1.0, 1e3, 10), &samples, 0);
    assert!(matches!(tail_fit(&summary, (1.0, 1e3)), Err(Error::InsufficientTail { .. })));
}

#[test]
fn histogram_matches_propagator() {
    let p = exp(0.0, 1.0, 1.0, 1.0).with_x0(0.5).unwrap();
    let tau = 1.5;
    let summary = empirical_density(&p, tau, 200_000, BinSpec::linear_x(0.0, 6.0, 60), 17).unwrap();
    let exact = propagator_closed_form(&p, tau, 0.5).unwrap();
    let agree = bin_agreement(&summary, &exact, 50.0, 4.0).unwrap();
    assert!(agree.outliers.is_empty(), "{agree:?}");
    for atom in &exact.atoms {
        let e = summary.atom_at(atom.location).unwrap();
        assert!((e.mass - atom.mass).abs() <= 4.0 * e.std_error, "{e:?} vs {atom:?}");
    }
}

#[test]
fn semigroup_holds_as_second_step_vanishes() {
    let p = exp(0.0, 1.0, 1.5, 0.8).with_x0(0.4).unwrap();
    let grid = [0.1, 0.7, 1.3, 2.9];
    for tau2 in [1.0, 1e-3, 1e-8] {
        let r = ck_check(&p, 0.9, tau2, &grid).unwrap();
        assert!(r < 1e-9, "tau2 = {tau2}: {r}");
    }
}

#[test]
fn stationary_law_is_invariant() {
    let p = exp(0.0, 1.0, 2.0, 1.0);
    assert!(stationary_invariance_check(&p, 0.7, &[0.2, 1.0, 3.0]).unwrap() < 1e-9);
}

#[test]
fn every_interval_is_reachable() {
    let p = exp(1.0, 1.0, 1.0, 1.0);
    for (x, x0) in [(2.0, 0.0), (0.3, 2.0)] {
        let r = irreducibility_check(&p, x, 0.1, x0, 1.0, 50_000, 18, 3.0).unwrap();
        assert!(r.pass && r.bound > 0.0, "{r:?}");
    }
    let whole = irreducibility_check(&p, 0.0, 1e9, 0.5, 1.0, 1_000, 18, 3.0).unwrap();
    assert_eq!(whole.estimate.value, 1.0);
    assert_eq!(whole.bound, 1.0);
}

#[test]
fn reproducible_across_thread_counts() {
    let p = exp(1.0, 1.0, 1.0, 1.0);
    let run = |threads| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| {
            let s = empirical_density(&p, 2.0, 20_000, BinSpec::linear_x(0.0, 8.0, 40), 19).unwrap();
            let m = met_estimate(&p, 1.0, 0.0, 20_000, 19).unwrap();
            (s.counts, s.atoms, s.mean_x, m)
        })
    };
    assert_eq!(run(1), run(4));
}

#[test]
fn long_run_mean_matches_stationary_moment() {
    let p = exp(2.0, 1.0, 2.0, 1.0);
    let s = empirical_density(&p, 100.0, 100_000, BinSpec::linear_x(0.0, 10.0, 10), 20).unwrap();
    let m1 = stationary_moments(&p, 1).unwrap();
    assert!(s.mean_x.agrees_with(m1, 4.0), "{:?} vs {m1}", s.mean_x);
    let total = s.counts.iter().sum::<u64>() + s.underflow + s.overflow + s.atoms.iter().map(|a| a.count).sum::<u64>();
    assert_eq!(total, s.n_paths);
    assert!(stationary_density(&p, Domain::X).is_ok());
}

#[test]
fn mixture_matches_direct_simulation() {
    for p in [exp(1.0, 1.0, 1.0, 1.0).with_x0(0.3).unwrap(), exp(0.0, 2.0, 0.5, 1.0)] {
        let r = mixture_check(&p, 1.7, 100_000, 21, 0.001).unwrap();
        assert!(r.pass, "{r:?}");
    }
}

#[test]
fn ks_detects_a_shift() {
    let a: Vec<f64> = (0..2000).map(|i| i as f64 / 2000.0).collect();
    let b: Vec<f64> = a.iter().map(|v| v + 0.1).collect();
    assert!(!ks_two_sample(&a, &b, 0.01).pass);
    assert!(ks_two_sample(&a, &a, 0.01).pass);
}

#[test]
fn exhausted_event_budget_is_reported() {
    let p = exp(0.0, 1.0, 5.0, 1.0);
    match met_estimate_with_budget(&p, 10.0, 0.0, 100, 22, 50) {
        Err(Error::NoExitBudget { budget, censored }) => {
            assert_eq!(budget, 50);
            assert!(censored > 0 && censored <= 100);
        }
        other => panic!("{other:?}"),
    }
    let frozen = ModelParams::exponential(0.0, 0.0, 1.0, 1.0).validate().unwrap();
    assert!(matches!(first_exit_with_budget(&frozen, 1.0, 1, 0, 1000), Err(Error::NoExitBudget { .. })));
}

#[test]
fn logged_paths_replay() {
    let p = exp(1.0, 2.0, 0.5, 1.0).with_x0(0.2).unwrap();
    let log = simulate_events(&p, 5.0, 23).unwrap();
    assert_eq!(log, simulate_events(&p, 5.0, 23).unwrap());
    assert_eq!(state_at(&log, &p, 0.0).unwrap(), 0.2);
    assert!(matches!(state_at(&log, &p, 6.0), Err(Error::OutOfHorizon { .. })));
}
