use approx::assert_relative_eq;
use proptest::prelude::*;
use resetwalk_core::analytics::*;
use resetwalk_core::quadrature::integrate_to_infinity;
use resetwalk_core::transform::{propagator_numeric, InversionConfig};
use resetwalk_core::{Error, ModelParams, ValidatedParams};

fn exp(g: f64, lam: f64, lr: f64, gam: f64) -> ValidatedParams {
    ModelParams::exponential(g, lam, lr, gam).validate().unwrap()
}

#[test]
fn fig2_exponents() {
    let t = tail_exponents(&exp(2.0, 1.0, 2.0, 1.0)).unwrap();
    assert_eq!(t.alpha_plus, Some(2.0));
    assert_eq!(t.alpha_minus, Some(0.5));
    assert_eq!(t.discriminant, Some(3.0));
}

#[test]
fn unit_rates_golden_ratio_roots() {
    let (ap, am) = drift_exponents(&exp(1.0, 1.0, 1.0, 1.0)).unwrap();
    assert_relative_eq!(ap, 2.618033988749895, max_relative = 1e-15);
    assert_relative_eq!(am, 0.381966011250105, max_relative = 1e-14);
    assert_relative_eq!(ap * am, 1.0, max_relative = 1e-15);
}

#[test]
fn driftless_exponent_only() {
    let t = tail_exponents(&exp(0.0, 1.0, 2.0, 1.0)).unwrap();
    assert_relative_eq!(t.alpha_nodrift.unwrap(), 2.0 / 3.0, max_relative = 1e-15);
    assert_relative_eq!(t.beta_asymptotic.unwrap(), 2.0, max_relative = 1e-15);
    assert!(t.alpha_plus.is_none() && t.y_critical.is_none());
    assert!(matches!(drift_exponents(&exp(0.0, 1.0, 2.0, 1.0)), Err(Error::DriftRequired)));
}

#[test]
fn custom_law_has_no_drift_exponents() {
    use resetwalk_core::{CustomLaw, JumpLaw};
    let law = CustomLaw::new(|u| (-u).exp()).with_moments(Some(1.0), Some(2.0));
    let p = ModelParams::exponential(1.0, 1.0, 1.0, 1.0).with_jump_law(JumpLaw::Custom(law)).validate().unwrap();
    assert!(matches!(drift_exponents(&p), Err(Error::ExponentialLawRequired)));
    assert_relative_eq!(tail_exponents(&p).unwrap().beta_asymptotic.unwrap(), 0.5);
}

#[test]
fn crossover_follows_the_formula() {
    let y = tail_exponents(&exp(2.0, 1.0, 2.0, 1.0)).unwrap().y_critical.unwrap();
    assert_relative_eq!(y, 2f64.powf(2.0 / 3.0), max_relative = 1e-14);
}

#[test]
fn driftless_stationary_x() {
    let d = stationary_density(&exp(0.0, 1.0, 1.0, 1.0), Domain::X).unwrap();
    assert_eq!(d.atoms, vec![Atom { location: 0.0, mass: 0.5 }]);
    for x in [0.0, 0.3, 2.0, 7.0] {
        assert_relative_eq!(d.density(x), 0.25 * (-x / 2.0).exp(), max_relative = 1e-15);
    }
    assert_relative_eq!(d.total_mass(&[]).unwrap(), 1.0, epsilon = 1e-12);
}

#[test]
fn fig2_stationary_y() {
    let d = stationary_density(&exp(2.0, 1.0, 2.0, 1.0), Domain::Y).unwrap();
    assert!(d.atoms.is_empty());
    for y in [1.0f64, 1.5, 10.0, 300.0] {
        let want = 2.0 / 3.0 * (y.powf(-3.0) + 0.5 * y.powf(-1.5));
        assert_relative_eq!(d.density(y), want, max_relative = 1e-13);
    }
    assert_eq!(d.density(0.5), 0.0);
    assert_relative_eq!(d.total_mass(&[]).unwrap(), 1.0, epsilon = 1e-7);
    let x = stationary_density(&exp(2.0, 1.0, 2.0, 1.0), Domain::X).unwrap();
    assert_relative_eq!(x.total_mass(&[]).unwrap(), 1.0, epsilon = 1e-12);
}

#[test]
fn driftless_stationary_y_atom_and_power_law() {
    let d = stationary_density(&exp(0.0, 1.0, 2.0, 1.0), Domain::Y).unwrap();
    assert_eq!(d.atoms[0].location, 1.0);
    assert_relative_eq!(d.atoms[0].mass, 2.0 / 3.0);
    let y: f64 = 20.0;
    assert_relative_eq!(d.density(y), 2.0 / 9.0 * y.powf(-1.0 - 2.0 / 3.0), max_relative = 1e-13);
}

#[test]
fn strong_resetting_concentrates_at_origin() {
    let d = stationary_density(&exp(0.0, 1.0, 1e6, 1.0), Domain::X).unwrap();
    assert!(d.atoms[0].mass > 1.0 - 1e-5);
}

#[test]
fn shot_noise_stationary_law() {
    let d = stationary_density(&exp(2.0, 0.0, 1.0, 1.0), Domain::X).unwrap();
    assert_relative_eq!(d.density(1.0), 0.5 * (-0.5f64).exp(), max_relative = 1e-14);
}

#[test]
fn no_stationary_law_without_resets() {
    assert!(matches!(stationary_density(&exp(1.0, 1.0, 0.0, 1.0), Domain::X), Err(Error::NoStationaryLaw)));
    assert!(matches!(stationary_moments(&exp(1.0, 1.0, 0.0, 1.0), 1), Err(Error::NoStationaryLaw)));
}

#[test]
fn atom_examples() {
    let p = exp(0.0, 1.0, 1.0, 1.0);
    assert_eq!(atom_masses(&p, 0.0, 2.0), vec![Atom { location: 2.0, mass: 1.0 }]);
    let a = atom_masses(&p, 1.0, 2.0);
    assert_relative_eq!(a[0].mass, 0.5 * (1.0 - (-2.0f64).exp()), max_relative = 1e-15);
    assert_eq!(a[0].location, 0.0);
    assert_relative_eq!(a[1].mass, (-2.0f64).exp(), max_relative = 1e-15);
    assert_eq!(a[1].location, 2.0);

    let merged = atom_masses(&p, 1.0, 0.0);
    assert_eq!(merged.len(), 1);
    assert_relative_eq!(merged[0].mass, (1.0 + (-2.0f64).exp()) / 2.0, max_relative = 1e-15);

    let late = atom_masses(&p, 200.0, 1.0);
    assert_relative_eq!(late[0].mass, 0.5, max_relative = 1e-15);

    let drift = atom_masses(&exp(2.0, 1.0, 1.0, 1.0), 1.5, 0.5);
    assert_eq!(drift, vec![Atom { location: 3.5, mass: (-3.0f64).exp() }]);
}

#[test]
fn closed_propagator_refuses_drift() {
    assert!(matches!(propagator_continuous(&exp(1.0, 1.0, 1.0, 1.0), 1.0, 1.0, 0.0), Err(Error::UnsupportedRegime(_))));
}

#[test]
fn propagator_tends_to_stationary() {
    let p = exp(0.0, 1.0, 1.0, 1.0);
    let st = stationary_density(&p, Domain::X).unwrap();
    for x in [0.2, 1.0, 3.0] {
        let v = propagator_continuous(&p, x, 60.0, 1.5).unwrap();
        assert_relative_eq!(v, st.density(x), max_relative = 1e-10);
    }
}

#[test]
fn propagator_matches_transform_inversion() {
    let p = exp(0.0, 1.0, 1.0, 1.0);
    let closed = propagator_continuous(&p, 1.0, 1.0, 0.0).unwrap();
    let numeric = propagator_numeric(&p, 1.0, 1.0, 0.0, &InversionConfig::default()).unwrap();
    assert!((closed - numeric).abs() < 1e-6);
}

#[test]
fn propagator_normalized() {
    for (lam, lr, gam, tau, x0) in [(0.5, 2.0, 1.0, 0.1, 0.0), (2.0, 0.5, 0.5, 10.0, 1.0), (1.0, 1.0, 2.0, 1.0, 1.0)] {
        let m = propagator_total_mass(&exp(0.0, lam, lr, gam), tau, x0).unwrap();
        assert!((m - 1.0).abs() < 1e-8, "{m}");
    }
}

#[test]
fn moment_examples() {
    let p = exp(0.0, 1.0, 1.0, 1.0);
    assert_relative_eq!(stationary_moments(&p, 1).unwrap(), 1.0);
    assert_relative_eq!(stationary_moments(&p, 2).unwrap(), 4.0);
    assert_relative_eq!(stationary_moments(&exp(1.0, 0.0, 2.0, 1.0), 1).unwrap(), 0.5);
    let f2 = exp(2.0, 1.0, 2.0, 1.0);
    let m1 = stationary_moments(&f2, 1).unwrap();
    assert!(stationary_moments(&f2, 2).unwrap() - m1 * m1 >= 0.0);
    assert!(matches!(stationary_moments(&p, 3), Err(Error::UnsupportedMoment(3))));
}

#[test]
fn mean_moment_matches_density() {
    for p in [exp(0.0, 1.0, 1.0, 1.0), exp(0.0, 2.0, 0.5, 1.5), exp(2.0, 1.0, 2.0, 1.0)] {
        let direct = stationary_mean_by_quadrature(&p).unwrap();
        assert_relative_eq!(direct, stationary_moments(&p, 1).unwrap(), max_relative = 1e-9);
        let d = stationary_density(&p, Domain::X).unwrap();
        let second = integrate_to_infinity(|x| x * x * d.density(x), 0.0, 1e-13, 1e-12).unwrap().value;
        assert_relative_eq!(second, stationary_moments(&p, 2).unwrap(), max_relative = 1e-9);
    }
}

#[test]
fn unit_mean_exit_time() {
    let p = exp(1.0, 1.0, 1.0, 1.0);
    assert_relative_eq!(mean_exit_time(&p, 1.0, 0.0).unwrap(), 0.945386534897984, max_relative = 1e-13);
    assert_eq!(mean_exit_time(&p, 1.0, 1.0).unwrap(), 0.0);
    assert!(matches!(mean_exit_time(&p, 1.0, 1.5), Err(Error::DomainError(_))));
    assert!(matches!(mean_exit_time(&exp(0.0, 1.0, 1.0, 1.0), 1.0, 0.0), Err(Error::UnsupportedRegime(_))));
}

#[test]
fn fig3_curves_are_finite() {
    for g in [1.0, 2.5, 5.0, 10.0] {
        for i in 0..=60 {
            let lr = 10f64.powf(-2.0 + i as f64 / 10.0);
            let t = mean_exit_time(&exp(g, 1.0, lr, 1.0), 1.0, 0.0).unwrap();
            assert!(t.is_finite() && t > 0.0 && t < std::f64::consts::E);
        }
    }
}

#[test]
fn limit_examples() {
    let p = exp(1.0, 1.0, 1.0, 1.0);
    assert_relative_eq!(met_limit(&p, 1.0, 0.3, MetLimit::InfiniteReset).unwrap(), std::f64::consts::E);
    // geometric series over the number of post-reset jumps needed
    let q = 1.0 - (-1.0f64).exp();
    let series: f64 = (1..400).map(|n| n as f64 * q.powi(n - 1) * (-1.0f64).exp()).sum();
    assert_relative_eq!(series, std::f64::consts::E, max_relative = 1e-12);
    assert_relative_eq!(met_limit(&p, 1.0, 0.0, MetLimit::NoReset).unwrap(), 0.716166179190847, max_relative = 1e-13);
    assert_relative_eq!(met_limit(&p, 1.0, 0.0, MetLimit::NoDrift).unwrap(), 2.297442541400256, max_relative = 1e-13);
    assert_eq!(met_limit(&p, 1.0, 0.0, MetLimit::InfiniteDrift).unwrap(), 0.0);
}

#[test]
fn regimes_are_consistent() {
    let rel = |a: f64, b: f64| ((a - b) / b).abs();
    let nr = met_limit(&exp(1.0, 1.0, 0.0, 1.0), 1.0, 0.0, MetLimit::NoReset).unwrap();
    assert!(rel(mean_exit_time(&exp(1.0, 1.0, 1e-6, 1.0), 1.0, 0.0).unwrap(), nr) < 1e-4);
    assert_relative_eq!(mean_exit_time(&exp(1.0, 1.0, 0.0, 1.0), 1.0, 0.0).unwrap(), nr);
    let inf = std::f64::consts::E;
    assert!(rel(mean_exit_time(&exp(1.0, 1.0, 1e6, 1.0), 1.0, 0.0).unwrap(), inf) < 1e-2);
    let nd = met_limit(&exp(0.0, 1.0, 1.0, 1.0), 1.0, 0.0, MetLimit::NoDrift).unwrap();
    assert!(rel(mean_exit_time(&exp(1e-6, 1.0, 1.0, 1.0), 1.0, 0.0).unwrap(), nd) < 1e-3);
    let fast = mean_exit_time(&exp(1e6, 1.0, 1.0, 1.0), 1.0, 0.0).unwrap();
    assert!(fast < 2e-6);
}

#[test]
fn fig4_shape() {
    let xs: Vec<f64> = (0..=20).map(|i| i as f64 / 20.0).collect();
    let curve = |lr: f64| -> Vec<f64> {
        let p = exp(1.0, 1.0, lr, 1.0);
        xs.iter().map(|&x| mean_exit_time(&p, 1.0, x).unwrap()).collect()
    };
    let low = curve(0.1);
    assert!(low.windows(2).all(|w| w[1] < w[0]));
    let high = curve(100.0);
    let (mx, mn) = high[..20].iter().fold((f64::MIN, f64::MAX), |(a, b), &v| (a.max(v), b.min(v)));
    assert!((mx - mn) / high[0] < 0.02, "spread {}", (mx - mn) / high[0]);
}

#[test]
fn integral_equation_residuals() {
    for (g, lam, lr, gam, b, x) in [(1.0, 1.0, 1.0, 1.0, 1.0, 0.0), (2.5, 0.7, 3.0, 1.3, 1.7, 0.9), (0.6, 2.0, 0.2, 0.5, 0.8, 0.7)] {
        let r = met_integral_residual(&exp(g, lam, lr, gam), b, x).unwrap();
        assert!(r < 1e-7, "{r}");
    }
    for (lam, lr, gam, x, tau, x0) in [(1.0, 1.0, 1.0, 0.7, 1.3, 0.2), (2.0, 0.5, 1.5, 0.3, 0.4, 1.0), (0.5, 2.0, 0.7, 3.0, 2.5, 0.0)] {
        let r = renewal_residual(&exp(0.0, lam, lr, gam), x, tau, x0).unwrap();
        assert!(r < 1e-6, "{r}");
    }
}

#[test]
fn csv_export() {
    let d = stationary_density(&exp(0.0, 1.0, 1.0, 1.0), Domain::X).unwrap();
    let mut buf = Vec::new();
    d.write_csv(&mut buf, &[0.0, 1.0]).unwrap();
    d.write_atoms_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert!(text.starts_with("x,density\n0,0.25\n"));
    assert!(text.contains("location,mass\n0,0.5\n"));
}

fn drifted() -> impl Strategy<Value = (f64, f64, f64, f64)> {
    (1e-3..50.0f64, 1e-3..50.0f64, 1e-3..50.0f64, 1e-3..50.0f64)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn exponent_sandwich((g, lam, lr, gam) in drifted()) {
        let (ap, am) = drift_exponents(&exp(g, lam, lr, gam)).unwrap();
        prop_assert!(ap > gam && gam > am && am > 0.0);
        prop_assert!(ap > lr / g && lr / g > am);
    }

    #[test]
    fn vieta((g, lam, lr, gam) in drifted()) {
        let (ap, am) = drift_exponents(&exp(g, lam, lr, gam)).unwrap();
        let prod = gam * lr;
        let sum = lam + lr + g * gam;
        prop_assert!(((ap * am * g - prod) / prod).abs() < 1e-10);
        prop_assert!((((ap + am) * g - sum) / sum).abs() < 1e-10);
    }
}
