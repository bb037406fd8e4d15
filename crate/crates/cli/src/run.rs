use std::error::Error;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use resetwalk_core::analytics::{mean_exit_time, met_limit, stationary_density, stationary_terms};
use resetwalk_core::checks::{self, CheckConfig, QUICK_THRESHOLD};
use resetwalk_core::montecarlo::{
    bin_agreement, empirical_density, met_estimate, report_line, survival_area, survival_estimate, tail_fit, BinSpec,
    EstimateWithError,
};
use resetwalk_core::paths::{simulate_events_stream, write_path_csv};
use resetwalk_core::transform::{survival_inversion_default, survival_probability};
use resetwalk_core::{Domain, MetLimit, ModelParams, ObservableSign, ValidatedParams};

use crate::{Cli, Command, Common, Format, MetMode};

type Res<T> = std::result::Result<T, Box<dyn Error>>;

pub const CSV_VERSION: u32 = 1;
const FIGURE_PATHS: u64 = 1_000_000;

pub fn dispatch(cli: &Cli) -> Res<bool> {
    let c = &cli.common;
    match &cli.command {
        Command::Stationary { per_decade, decades } => stationary(c, *per_decade, *decades),
        Command::Met { mode, points } => met(c, *mode, *points),
        Command::Survival { points } => survival(c, *points),
        Command::Check { only, all } => check(c, only, *all),
        Command::Path { stream } => path(c, *stream),
    }
}

/// Defaults (Gamma=2, lambda=1, Lambda=2, gamma=1), overlaid by the config file, then by flags.
pub fn load_params(c: &Common) -> Res<ModelParams> {
    let mut p = ModelParams::exponential(2.0, 1.0, 2.0, 1.0);
    if let Some(file) = &c.config {
        let text = std::fs::read_to_string(file).map_err(|e| format!("cannot read {}: {e}", file.display()))?;
        p.apply_config_str(&text)?;
    }
    let flags = [
        ("gamma_drift", c.gamma_drift),
        ("lambda_jump", c.lambda_jump),
        ("lambda_reset", c.lambda_reset),
        ("jump_gamma", c.jump_gamma),
        ("x0", c.x0),
        ("y0", c.y0),
    ];
    for (key, v) in flags {
        if let Some(v) = v {
            p.set(key, &v.to_string())?;
        }
    }
    if let Some(s) = &c.sign {
        p.set("sign", s)?;
    }
    Ok(p)
}

fn validated(c: &Common) -> Res<ValidatedParams> {
    let p = load_params(c)?.validate()?;
    for w in p.warnings() {
        eprintln!("warning: {w:?}");
    }
    Ok(p)
}

fn sink(out: Option<&Path>) -> Res<Box<dyn Write>> {
    Ok(match out {
        Some(path) => {
            let f = File::create(path).map_err(|e| format!("cannot write {}: {e}", path.display()))?;
            Box::new(BufWriter::new(f))
        }
        None => Box::new(io::stdout().lock()),
    })
}

/// CSV destination: `--out`, else stdout in csv format, else nowhere.
fn csv_sink(c: &Common) -> Res<Option<Box<dyn Write>>> {
    match (&c.out, c.format) {
        (Some(p), _) => Ok(Some(sink(Some(p))?)),
        (None, Format::Csv) => Ok(Some(sink(None)?)),
        (None, Format::Report) => Ok(None),
    }
}

fn header(w: &mut dyn Write, command: &str, p: &ValidatedParams, extra: &str) -> io::Result<()> {
    writeln!(
        w,
        "# resetwalk-csv v{CSV_VERSION} command={command} gamma_drift={} lambda_jump={} lambda_reset={} jump_gamma={} x0={} y0={} sign={}{extra}",
        p.gamma_drift,
        p.lambda_jump,
        p.lambda_reset,
        p.jump_law.exponential_rate().map_or("custom".to_string(), |g| g.to_string()),
        p.x0,
        p.y0,
        sign_str(p.observable_sign),
    )
}

fn sign_str(s: ObservableSign) -> &'static str {
    match s {
        ObservableSign::Plus => "plus",
        ObservableSign::Minus => "minus",
    }
}

fn sigmas(n: u64) -> f64 {
    if n < QUICK_THRESHOLD {
        5.0
    } else {
        3.0
    }
}

fn opt(v: Option<f64>) -> String {
    v.map_or(String::new(), |v| v.to_string())
}

fn report(lines: &[(String, bool, String)]) -> bool {
    for (name, pass, detail) in lines {
        println!("{}", report_line(name, *pass, detail));
    }
    lines.iter().all(|l| l.1)
}

fn stationary(c: &Common, per_decade: usize, decades: f64) -> Res<bool> {
    let p = validated(c)?;
    let tau = c.tau.unwrap_or(100.0);
    let n = c.n.unwrap_or(FIGURE_PATHS);
    let exact = stationary_density(&p, Domain::Y)?;
    let terms = stationary_terms(&p)?;
    let sign = p.observable_sign.as_f64();
    let span = 10f64.powf(decades);
    let spec = match p.observable_sign {
        ObservableSign::Plus => BinSpec::log_y(p.y0, p.y0 * span, per_decade),
        ObservableSign::Minus => BinSpec::log_y(p.y0 / span, p.y0, per_decade),
    };
    let summary = empirical_density(&p, tau, n, spec, c.seed)?;
    // one exponential term of p_X seen through y = y0 e^{sign x}
    let term = |i: usize, y: f64| {
        terms.get(i).map(|(w, r)| {
            let x = sign * (y / p.y0).ln();
            if x < 0.0 {
                0.0
            } else {
                w * (-r * x).exp() / y
            }
        })
    };
    if let Some(mut w) = csv_sink(c)? {
        header(&mut *w, "stationary", &p, &format!(" tau={tau} n={n} seed={}", c.seed))?;
        writeln!(w, "y_lo,y_hi,y,analytic,alpha_plus_only,alpha_minus_only,mc_density,mc_std_error")?;
        for i in 0..summary.counts.len() {
            let y = summary.bin_center(i);
            let d = summary.density(i);
            writeln!(
                w,
                "{},{},{y},{},{},{},{},{}",
                summary.edges[i],
                summary.edges[i + 1],
                exact.density(y),
                opt(term(0, y)),
                opt(term(1, y)),
                d.value,
                d.std_error
            )?;
        }
        if !exact.atoms.is_empty() {
            let mut aw: Box<dyn Write> = match &c.out {
                Some(out) => sink(Some(&out.with_extension("atoms.csv")))?,
                None => {
                    writeln!(w)?;
                    w
                }
            };
            header(&mut *aw, "stationary-atoms", &p, &format!(" tau={tau} n={n} seed={}", c.seed))?;
            writeln!(aw, "y,analytic_mass,mc_mass,mc_std_error")?;
            for a in &exact.atoms {
                let mc = summary.atom_at(a.location);
                writeln!(
                    aw,
                    "{},{},{},{}",
                    a.location,
                    a.mass,
                    opt(mc.map(|m| m.mass)),
                    opt(mc.map(|m| m.std_error))
                )?;
            }
            aw.flush()?;
        } else {
            w.flush()?;
        }
    }
    if c.format != Format::Report {
        return Ok(true);
    }
    let k = sigmas(n);
    let agree = bin_agreement(&summary, &exact, if n < QUICK_THRESHOLD { 20.0 } else { 1000.0 }, k)?;
    let mut lines = vec![(
        "stationary-bins".to_string(),
        agree.outliers.is_empty() && agree.bins_checked > 0,
        format!("bins_checked={} max_abs_z={:.3} k={k}", agree.bins_checked, agree.max_abs_z),
    )];
    let slowest = terms.iter().map(|t| t.1).fold(f64::INFINITY, f64::min);
    if n >= QUICK_THRESHOLD && p.observable_sign == ObservableSign::Plus {
        let line = match tail_fit(&summary, (10.0 * p.y0, 1e3 * p.y0)) {
            Ok(fit) => (
                "stationary-tail".to_string(),
                (fit.value - slowest).abs() <= 0.05,
                format!("fitted={:.4}+-{:.4} exponent={slowest:.4}", fit.value, fit.std_error),
            ),
            Err(e) => ("stationary-tail".to_string(), false, e.to_string()),
        };
        lines.push(line);
    }
    Ok(report(&lines))
}

struct MetRow {
    gamma_drift: f64,
    lambda_reset: f64,
    x: f64,
    params: ValidatedParams,
}

fn log_space(lo: f64, hi: f64, k: usize) -> Vec<f64> {
    if k == 1 {
        return vec![lo];
    }
    (0..k).map(|i| lo * (hi / lo).powf(i as f64 / (k - 1) as f64)).collect()
}

fn met(c: &Common, mode: MetMode, points: usize) -> Res<bool> {
    if points == 0 {
        return Err("--points must be >= 1".into());
    }
    let exp = |g: f64, lr: f64| ModelParams::exponential(g, 1.0, lr, 1.0).validate();
    let mut rows = Vec::new();
    let b;
    let n;
    match mode {
        MetMode::Fig3 => {
            b = 1.0;
            n = c.n.unwrap_or(FIGURE_PATHS);
            for g in [1.0, 2.5, 5.0, 10.0] {
                for lr in log_space(1e-2, 1e2, points) {
                    rows.push(MetRow { gamma_drift: g, lambda_reset: lr, x: 0.0, params: exp(g, lr)? });
                }
            }
        }
        MetMode::Fig4 => {
            b = 1.0;
            n = c.n.unwrap_or(FIGURE_PATHS);
            for lr in [0.1, 1.0, 10.0, 100.0] {
                for i in 0..points {
                    let x = i as f64 / points as f64;
                    rows.push(MetRow { gamma_drift: 1.0, lambda_reset: lr, x, params: exp(1.0, lr)? });
                }
            }
        }
        MetMode::Point => {
            let p = validated(c)?;
            b = c.b.unwrap_or(1.0);
            n = c.n.unwrap_or(100_000);
            rows.push(MetRow { gamma_drift: p.gamma_drift, lambda_reset: p.lambda_reset, x: p.x0, params: p });
        }
    }
    let mode_name = format!("{mode:?}").to_lowercase();
    let mut results = Vec::with_capacity(rows.len());
    for (i, r) in rows.iter().enumerate() {
        let t = mean_exit_time(&r.params, b, r.x)?;
        let limit = met_limit(&r.params, b, r.x, MetLimit::InfiniteReset).ok();
        let mc = if n > 0 { Some(met_estimate(&r.params, b, r.x, n, c.seed.wrapping_add(i as u64))?) } else { None };
        results.push((t, limit, mc));
    }
    if let Some(mut w) = csv_sink(c)? {
        let p = &rows[0].params;
        header(&mut *w, &format!("met-{mode_name}"), p, &format!(" b={b} n={n} seed={}", c.seed))?;
        writeln!(w, "gamma_drift,lambda_reset,x,analytic,mc,mc_std_error,infinite_reset_limit")?;
        for (r, (t, limit, mc)) in rows.iter().zip(&results) {
            writeln!(
                w,
                "{},{},{},{t},{},{},{}",
                r.gamma_drift,
                r.lambda_reset,
                r.x,
                opt(mc.map(|m| m.value)),
                opt(mc.map(|m| m.std_error)),
                opt(*limit)
            )?;
        }
        w.flush()?;
    }
    if c.format != Format::Report {
        return Ok(true);
    }
    if n == 0 {
        return Ok(report(&[(format!("met-{mode_name}"), true, "mc skipped (n=0)".into())]));
    }
    let k = sigmas(n);
    let worst = results.iter().filter_map(|(t, _, mc)| mc.map(|m| m.z_score(*t).abs())).fold(0.0, f64::max);
    let finite = results.iter().all(|r| r.0.is_finite());
    Ok(report(&[(
        format!("met-{mode_name}"),
        finite && worst <= k,
        format!("points={} max_abs_z={worst:.3} k={k}", rows.len()),
    )]))
}

fn survival(c: &Common, points: usize) -> Res<bool> {
    if points == 0 {
        return Err("--points must be >= 1".into());
    }
    let p = validated(c)?;
    let b = c.b.unwrap_or(1.0);
    let horizon = c.tau.unwrap_or(5.0);
    let n = c.n.unwrap_or(100_000);
    if !(horizon > 0.0) {
        return Err("--tau must be > 0".into());
    }
    let grid: Vec<f64> = (1..=points).map(|i| horizon * i as f64 / points as f64).collect();
    let cfg = survival_inversion_default();
    let analytic = grid.iter().map(|&t| survival_probability(&p, b, p.x0, t, &cfg)).collect::<Result<Vec<_>, _>>()?;
    let mc: Vec<EstimateWithError> = if n > 0 { survival_estimate(&p, b, p.x0, &grid, n, c.seed)? } else { vec![] };
    if let Some(mut w) = csv_sink(c)? {
        header(&mut *w, "survival", &p, &format!(" b={b} n={n} seed={}", c.seed))?;
        writeln!(w, "tau,analytic,mc,mc_std_error")?;
        writeln!(w, "0,1,{},{}", if n > 0 { "1" } else { "" }, if n > 0 { "0" } else { "" })?;
        for (i, t) in grid.iter().enumerate() {
            let m = mc.get(i);
            writeln!(w, "{t},{},{},{}", analytic[i], opt(m.map(|m| m.value)), opt(m.map(|m| m.std_error)))?;
        }
        w.flush()?;
    }
    if c.format != Format::Report {
        return Ok(true);
    }
    if n == 0 {
        return Ok(report(&[("survival".into(), true, "mc skipped (n=0)".into())]));
    }
    let k = sigmas(n);
    // binomial spread under the analytic value; the sample SE is zero once every path has left
    let z = |m: &EstimateWithError, a: f64| {
        let sd = (a * (1.0 - a) / n as f64).max(0.0).sqrt().max(m.std_error);
        EstimateWithError { std_error: sd, ..*m }.z_score(a).abs()
    };
    let worst = mc.iter().zip(&analytic).map(|(m, a)| z(m, *a)).fold(0.0, f64::max);
    let mut lines = vec![("survival".to_string(), worst <= k, format!("points={points} max_abs_z={worst:.3} k={k}"))];
    let t = mean_exit_time(&p, b, p.x0)?;
    if analytic.last().is_some_and(|&s| s < 1e-3) {
        let values: Vec<f64> = mc.iter().map(|m| m.value).collect();
        let area = survival_area(&grid, &values);
        let rel = (area - t).abs() / t;
        lines.push(("survival-area".into(), rel <= 0.02, format!("area={area:.5} met={t:.5} rel={rel:.2e}")));
    } else {
        lines.push(("survival-area".into(), true, "skipped: horizon too short for the area to converge".into()));
    }
    Ok(report(&lines))
}

fn check(c: &Common, only: &[String], all: bool) -> Res<bool> {
    let names: Vec<String> = if !only.is_empty() {
        only.to_vec()
    } else if all {
        checks::ACCEPTANCE.iter().chain(checks::EXTRA.iter()).map(|s| s.to_string()).collect()
    } else {
        checks::ACCEPTANCE.iter().map(|s| s.to_string()).collect()
    };
    if let Some(bad) = names.iter().find(|n| !checks::is_known(n)) {
        let known: Vec<&str> = checks::ACCEPTANCE.iter().chain(checks::EXTRA.iter()).copied().collect();
        return Err(format!("unknown check '{bad}'; known: {}", known.join(", ")).into());
    }
    let cfg = CheckConfig::new(c.seed, c.n);
    let outcomes = checks::run_checks(&names, &cfg);
    let mut file = match &c.out {
        Some(p) => Some(sink(Some(p))?),
        None => None,
    };
    for o in &outcomes {
        println!("{o}");
        if let Some(f) = file.as_mut() {
            writeln!(f, "{o}")?;
        }
    }
    if let Some(f) = file.as_mut() {
        f.flush()?;
    }
    Ok(outcomes.iter().all(|o| o.pass))
}

fn path(c: &Common, stream: u64) -> Res<bool> {
    let p = validated(c)?;
    let horizon = c.tau.unwrap_or(10.0);
    let log = simulate_events_stream(&p, horizon, c.seed, stream)?;
    let mut w = sink(c.out.as_deref())?;
    header(&mut *w, "path", &p, &format!(" tau={horizon} seed={} stream={stream}", c.seed))?;
    write_path_csv(&log, &p, &mut w)?;
    w.flush()?;
    Ok(true)
}
