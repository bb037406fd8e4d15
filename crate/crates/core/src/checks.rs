//! The validation suite: each check compares an implementation against an
//! independent evaluation (closed form, quadrature or Monte Carlo) and
//! reports PASS/FAIL with a one-line detail. Shared by the CLI's `check`
//! command and the acceptance tests.

use std::fmt;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::analytics::{self, Domain, MetLimit};
use crate::error::Result;
use crate::model::{ModelParams, ValidatedParams};
use crate::montecarlo::{self, BinSpec};
use crate::transform::{self, InversionConfig, LaplaceFn, Variable};

pub const DEFAULT_SEED: u64 = 20_240_601;

/// Path counts below this switch Monte Carlo tolerances to 5 SE and skip
/// checks that cannot be meaningful at that size.
pub const QUICK_THRESHOLD: u64 = 10_000;

/// The numbered acceptance criteria, in order.
pub const ACCEPTANCE: [&str; 11] = [
    "exponents",
    "fig2",
    "normalization",
    "atoms",
    "met",
    "met-limits",
    "cke",
    "decomposition",
    "laplace",
    "residuals",
    "moments",
];

/// Further invariants run by `check` after the acceptance criteria.
pub const EXTRA: [&str; 4] = ["invariance", "irreducibility", "mixture", "survival"];

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CheckConfig {
    pub seed: u64,
    /// Overrides every Monte Carlo path count when set.
    pub n_paths: Option<u64>,
}

impl Default for CheckConfig {
    fn default() -> Self {
        CheckConfig { seed: DEFAULT_SEED, n_paths: None }
    }
}

impl CheckConfig {
    pub fn new(seed: u64, n_paths: Option<u64>) -> Self {
        CheckConfig { seed, n_paths }
    }

    fn n(&self, default: u64) -> u64 {
        self.n_paths.unwrap_or(default)
    }

    fn quick(&self) -> bool {
        self.n_paths.is_some_and(|n| n < QUICK_THRESHOLD)
    }

    /// Acceptance width in standard errors.
    pub fn sigmas(&self) -> f64 {
        if self.quick() {
            5.0
        } else {
            3.0
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CheckOutcome {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl fmt::Display for CheckOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&montecarlo::report_line(&self.name, self.pass, &self.detail))
    }
}

fn outcome(name: &str, pass: bool, detail: String) -> CheckOutcome {
    CheckOutcome { name: name.to_string(), pass, detail }
}

fn exp_params(g: f64, lam: f64, lr: f64, gam: f64) -> Result<ValidatedParams> {
    ModelParams::exponential(g, lam, lr, gam).validate()
}

pub fn is_known(name: &str) -> bool {
    ACCEPTANCE.contains(&name) || EXTRA.contains(&name)
}

/// Runs one named check. Errors inside a check are reported as FAIL.
pub fn run_check(name: &str, cfg: &CheckConfig) -> CheckOutcome {
    let r = match name {
        "exponents" => exponents(),
        "fig2" => fig2(cfg),
        "normalization" => normalization(),
        "atoms" => atoms(cfg),
        "met" => met(cfg),
        "met-limits" => met_limits(),
        "cke" => cke(),
        "decomposition" => decomposition(cfg),
        "laplace" => laplace(),
        "residuals" => residuals(cfg),
        "moments" => moments(cfg),
        "invariance" => invariance(),
        "irreducibility" => irreducibility(cfg),
        "mixture" => mixture(cfg),
        "survival" => survival(cfg),
        other => return outcome(other, false, "unknown check".into()),
    };
    r.unwrap_or_else(|e| outcome(name, false, format!("error: {e}")))
}

/// Runs `names`, or every check when `names` is empty.
pub fn run_checks(names: &[String], cfg: &CheckConfig) -> Vec<CheckOutcome> {
    if names.is_empty() {
        ACCEPTANCE.iter().chain(EXTRA.iter()).map(|n| run_check(n, cfg)).collect()
    } else {
        names.iter().map(|n| run_check(n, cfg)).collect()
    }
}

fn exponents() -> Result<CheckOutcome> {
    let (ap, am) = analytics::drift_exponents(&exp_params(2.0, 1.0, 2.0, 1.0)?)?;
    let pass = (ap - 2.0).abs() < 1e-12 && (am - 0.5).abs() < 1e-12;
    Ok(outcome("exponents", pass, format!("alpha_plus={ap} alpha_minus={am}")))
}

fn fig2(cfg: &CheckConfig) -> Result<CheckOutcome> {
    let p = exp_params(2.0, 1.0, 2.0, 1.0)?;
    let n = cfg.n(1_000_000);
    let k = cfg.sigmas();
    let summary = montecarlo::empirical_density(&p, 100.0, n, BinSpec::log_y(1.0, 1e4, 20), cfg.seed)?;
    let law = analytics::stationary_density(&p, Domain::Y)?;
    let bins = montecarlo::bin_agreement(&summary, &law, 1000.0, k)?;
    let (tail_ok, tail) = match montecarlo::tail_fit(&summary, (10.0, 1e3)) {
        Ok(fit) => ((fit.value - 0.5).abs() <= 0.05, format!("tail_exponent={:.4}+-{:.4}", fit.value, fit.std_error)),
        Err(e) if cfg.quick() => (true, format!("tail fit skipped ({e})")),
        Err(e) => (false, format!("tail fit: {e}")),
    };
    let pass = bins.outliers.is_empty() && tail_ok;
    let detail = format!(
        "n={n} bins_checked={} max|z|={:.2} outliers={} {tail}",
        bins.bins_checked,
        bins.max_abs_z,
        bins.outliers.len()
    );
    Ok(outcome("fig2", pass, detail))
}

fn normalization() -> Result<CheckOutcome> {
    let rates = [0.5, 1.0, 2.0];
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for &lam in &rates {
        for &lr in &rates {
            for &gam in &rates {
                let p = exp_params(0.0, lam, lr, gam)?;
                for tau in [0.1, 1.0, 10.0] {
                    for x0 in [0.0, 1.0] {
                        worst = worst.max((analytics::propagator_total_mass(&p, tau, x0)? - 1.0).abs());
                        count += 1;
                    }
                }
            }
        }
    }
    Ok(outcome("normalization", worst < 1e-8, format!("cases={count} max|mass-1|={worst:.2e}")))
}

fn atoms(cfg: &CheckConfig) -> Result<CheckOutcome> {
    let p = exp_params(0.0, 1.0, 1.0, 1.0)?.with_x0(1.0)?;
    let n = cfg.n(1_000_000);
    let k = cfg.sigmas();
    let s = montecarlo::empirical_density(&p, 1.0, n, BinSpec::linear_x(0.0, 10.0, 50), cfg.seed)?;
    let want = analytics::atom_masses(&p, 1.0, 1.0);
    let mut pass = true;
    let mut parts = Vec::new();
    for a in &want {
        match s.atom_at(a.location) {
            Some(e) => {
                let z = (e.mass - a.mass) / e.std_error;
                pass &= z.abs() <= k;
                parts.push(format!("x={}: {:.5} vs {:.5} (z={z:.2})", a.location, e.mass, a.mass));
            }
            None => {
                pass = false;
                parts.push(format!("x={}: not estimated", a.location));
            }
        }
    }
    Ok(outcome("atoms", pass, format!("n={n} {}", parts.join("; "))))
}

/// Drift sweep and start sweep points: `(Gamma, Lambda, x)` with `b = lambda = gamma = 1`.
pub fn met_points() -> Vec<(f64, f64, f64)> {
    let mut pts = Vec::new();
    for g in [1.0, 2.5, 5.0, 10.0] {
        for i in 0..6 {
            pts.push((g, 10f64.powf(-1.0 + 3.0 * i as f64 / 5.0), 0.0));
        }
    }
    for lr in [0.1, 1.0, 10.0, 100.0] {
        for x in [0.0, 0.2, 0.4, 0.6, 0.8] {
            pts.push((1.0, lr, x));
        }
    }
    pts
}

fn met(cfg: &CheckConfig) -> Result<CheckOutcome> {
    let n = cfg.n(100_000);
    let k = cfg.sigmas();
    let mut worst: f64 = 0.0;
    let mut failures = Vec::new();
    for (i, &(g, lr, x)) in met_points().iter().enumerate() {
        let p = exp_params(g, 1.0, lr, 1.0)?;
        let exact = analytics::mean_exit_time(&p, 1.0, x)?;
        let est = montecarlo::met_estimate(&p, 1.0, x, n, cfg.seed.wrapping_add(i as u64))?;
        let z = est.z_score(exact);
        worst = worst.max(z.abs());
        if z.abs() > k {
            failures.push(format!("(Gamma={g},Lambda={lr:.3},x={x}) z={z:.2}"));
        }
    }
    let detail = format!("points={} n={n} max|z|={worst:.2} {}", met_points().len(), failures.join(" "));
    Ok(outcome("met", failures.is_empty(), detail.trim_end().to_string()))
}

fn met_limits() -> Result<CheckOutcome> {
    let base = |g: f64, lr: f64| exp_params(g, 1.0, lr, 1.0);
    let rel = |a: f64, b: f64| ((a - b) / b).abs();
    let small = rel(
        analytics::mean_exit_time(&base(1.0, 1e-6)?, 1.0, 0.0)?,
        analytics::met_limit(&base(1.0, 0.0)?, 1.0, 0.0, MetLimit::NoReset)?,
    );
    let large = rel(
        analytics::mean_exit_time(&base(1.0, 1e6)?, 1.0, 0.0)?,
        analytics::met_limit(&base(1.0, 1e6)?, 1.0, 0.0, MetLimit::InfiniteReset)?,
    );
    let slow = rel(
        analytics::mean_exit_time(&base(1e-6, 1.0)?, 1.0, 0.0)?,
        analytics::met_limit(&base(0.0, 1.0)?, 1.0, 0.0, MetLimit::NoDrift)?,
    );
    let pass = small < 1e-4 && large < 1e-2 && slow < 1e-3;
    Ok(outcome(
        "met-limits",
        pass,
        format!("no_reset={small:.2e} infinite_reset={large:.2e} no_drift={slow:.2e}"),
    ))
}

fn cke() -> Result<CheckOutcome> {
    let p = exp_params(0.0, 1.0, 1.0, 1.0)?;
    let grid = [0.1, 0.5, 1.0, 2.0, 4.0];
    let mut worst: f64 = 0.0;
    for t1 in [0.25, 0.5, 1.0] {
        for t2 in [0.25, 0.5, 1.0] {
            worst = worst.max(montecarlo::ck_check(&p, t1, t2, &grid)?);
        }
    }
    Ok(outcome("cke", worst < 1e-6, format!("pairs=9 max_residual={worst:.2e}")))
}

fn decomposition(cfg: &CheckConfig) -> Result<CheckOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let p = exp_params(
            rng.random_range(0.0..3.0),
            rng.random_range(0.0..3.0),
            rng.random_range(0.0..3.0),
            rng.random_range(0.2..3.0),
        )?;
        let omega = Complex64::new(rng.random_range(0.0..5.0), rng.random_range(-5.0..5.0));
        let s = Complex64::new(rng.random_range(0.05..5.0), rng.random_range(-5.0..5.0));
        let x0 = rng.random_range(0.0..3.0);
        worst = worst.max(transform::decomposition_check(&p, omega, s, x0)?);
    }
    Ok(outcome("decomposition", worst < 1e-12, format!("points=100 max_residual={worst:.2e}")))
}

fn laplace() -> Result<CheckOutcome> {
    // time inversion of the s-domain propagator against the closed form
    let mut roundtrip: f64 = 0.0;
    let cfg = InversionConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..20 {
        let p = exp_params(0.0, rng.random_range(0.5..2.0), rng.random_range(0.5..2.0), rng.random_range(0.5..2.0))?;
        let x0 = rng.random_range(0.0..1.5);
        let x = rng.random_range(0.05..4.0);
        let tau = rng.random_range(0.2..5.0);
        let f = transform::propagator_s_transform(&p, x, x0)?;
        let inv = transform::invert_laplace(&f, tau, &cfg)?;
        roundtrip = roundtrip.max((inv - analytics::propagator_continuous(&p, x, tau, x0)?).abs());
    }
    // s^-2 e^{c/s} <-> sqrt(t/c) I1(2 sqrt(c t))
    let mut pair: f64 = 0.0;
    for (c, t) in [(1.0, 1.0), (0.5, 2.0), (2.0, 0.7)] {
        let f = LaplaceFn::new(Variable::Time, 0.0, move |s| (c / s).exp() / (s * s));
        let want = (t / c).sqrt() * transform::bessel_i1(2.0 * (c * t).sqrt());
        pair = pair.max((transform::invert_laplace(&f, t, &cfg)? - want).abs());
    }
    // survival transform at s = 0 against the mean exit time
    let mut at_zero: f64 = 0.0;
    for (g, lr, x) in [(1.0, 1.0, 0.0), (2.5, 0.3, 0.4), (10.0, 100.0, 0.8), (0.7, 5.0, 0.2)] {
        let p = exp_params(g, 1.0, lr, 1.0)?;
        let t = analytics::mean_exit_time(&p, 1.0, x)?;
        let closed = transform::survival_hat_closed(&p, 1.0, x, Complex64::new(0.0, 0.0))?.re;
        let routed = transform::survival_hat_real(&p, 1.0, x, 0.0)?;
        at_zero = at_zero.max(((closed - t) / t).abs()).max((routed - t).abs());
    }
    let pass = roundtrip < 1e-6 && pair < 1e-8 && at_zero < 1e-9;
    Ok(outcome(
        "laplace",
        pass,
        format!("roundtrip={roundtrip:.2e} bessel_pair={pair:.2e} survival_at_zero={at_zero:.2e}"),
    ))
}

fn residuals(cfg: &CheckConfig) -> Result<CheckOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5eed);
    let mut met_worst: f64 = 0.0;
    for _ in 0..10 {
        let p = exp_params(
            rng.random_range(0.5..3.0),
            rng.random_range(0.5..2.0),
            rng.random_range(0.1..3.0),
            rng.random_range(0.5..2.0),
        )?;
        let b = rng.random_range(0.5..2.0);
        let x = rng.random_range(0.0..b);
        met_worst = met_worst.max(analytics::met_integral_residual(&p, b, x)?);
    }
    let mut renewal_worst: f64 = 0.0;
    for _ in 0..10 {
        let p = exp_params(0.0, rng.random_range(0.5..2.0), rng.random_range(0.5..2.0), rng.random_range(0.5..2.0))?;
        let x0 = rng.random_range(0.0..1.5);
        let x = rng.random_range(0.05..4.0);
        let tau = rng.random_range(0.2..3.0);
        renewal_worst = renewal_worst.max(analytics::renewal_residual(&p, x, tau, x0)?);
    }
    let pass = met_worst < 1e-6 && renewal_worst < 1e-6;
    Ok(outcome("residuals", pass, format!("exit_time={met_worst:.2e} renewal={renewal_worst:.2e}")))
}

fn moments(cfg: &CheckConfig) -> Result<CheckOutcome> {
    let p = exp_params(0.0, 1.0, 1.0, 1.0)?;
    let n = cfg.n(1_000_000);
    let k = cfg.sigmas();
    let s = montecarlo::empirical_density(&p, 100.0, n, BinSpec::linear_x(0.0, 40.0, 40), cfg.seed)?;
    let (m1, m2) = (analytics::stationary_moments(&p, 1)?, analytics::stationary_moments(&p, 2)?);
    let pass = s.mean_x.agrees_with(m1, k) && s.mean_x2.agrees_with(m2, k);
    Ok(outcome(
        "moments",
        pass,
        format!(
            "n={n} E[X]={:.4}+-{:.4} (exact {m1}) E[X^2]={:.4}+-{:.4} (exact {m2})",
            s.mean_x.value, s.mean_x.std_error, s.mean_x2.value, s.mean_x2.std_error
        ),
    ))
}

fn invariance() -> Result<CheckOutcome> {
    let p = exp_params(0.0, 1.0, 1.0, 1.0)?;
    let r = montecarlo::stationary_invariance_check(&p, 0.7, &[0.1, 0.5, 1.0, 2.0, 5.0])?;
    Ok(outcome("invariance", r < 1e-6, format!("max_residual={r:.2e}")))
}

fn irreducibility(cfg: &CheckConfig) -> Result<CheckOutcome> {
    let p = exp_params(0.0, 1.0, 1.0, 1.0)?;
    let n = cfg.n(100_000);
    let k = cfg.sigmas();
    let a = montecarlo::irreducibility_check(&p, 1.0, 0.1, 0.0, 2.0, n, cfg.seed, k)?;
    let b = montecarlo::irreducibility_check(&p, 1.0, 0.1, 5.0, 2.0, n, cfg.seed.wrapping_add(1), k)?;
    Ok(outcome(
        "irreducibility",
        a.pass && b.pass,
        format!(
            "above: {:.4} >= {:.4}; below: {:.4} >= {:.4}",
            a.estimate.value, a.bound, b.estimate.value, b.bound
        ),
    ))
}

fn mixture(cfg: &CheckConfig) -> Result<CheckOutcome> {
    let p = exp_params(1.0, 1.0, 0.5, 1.0)?.with_x0(0.5)?;
    let n = cfg.n(100_000);
    let r = montecarlo::mixture_check(&p, 2.0, n, cfg.seed, 0.01)?;
    Ok(outcome("mixture", r.pass, format!("n={n} D={:.5} critical={:.5}", r.statistic, r.critical)))
}

fn survival(cfg: &CheckConfig) -> Result<CheckOutcome> {
    let p = exp_params(1.0, 1.0, 1.0, 1.0)?;
    let n = cfg.n(100_000);
    let k = cfg.sigmas();
    let grid: Vec<f64> = (1..=40).map(|i| 0.1 * i as f64).collect();
    let mc = montecarlo::survival_estimate(&p, 1.0, 0.0, &grid, n, cfg.seed)?;
    let inv = transform::survival_inversion_default();
    let mut worst: f64 = 0.0;
    for (t, e) in grid.iter().zip(&mc) {
        if (t - 1.0).abs() < 1e-9 {
            // the curve jumps here
            continue;
        }
        let exact = transform::survival_probability(&p, 1.0, 0.0, *t, &inv)?;
        worst = worst.max(e.z_score(exact).abs());
    }
    Ok(outcome("survival", worst <= k, format!("n={n} max|z|={worst:.2}")))
}
