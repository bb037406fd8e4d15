use std::fs;
use std::process::{Command, Output};

fn resetwalk(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_resetwalk")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn data_rows(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .filter(|l| !l.starts_with('#') && !l.is_empty())
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn stationary_writes_three_curves_and_histogram() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("fig2.csv");
    let o = resetwalk(&["stationary", "--n", "20000", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(&out).unwrap();
    assert!(text.starts_with("# resetwalk-csv v1 command=stationary"));
    assert!(text.contains("y_lo,y_hi,y,analytic,alpha_plus_only,alpha_minus_only,mc_density,mc_std_error"));
    let rows = data_rows(&text);
    assert_eq!(rows.len(), 40);
    for r in &rows {
        let v: Vec<f64> = r[..6].iter().map(|s| s.parse().unwrap()).collect();
        // the two single-exponent curves add up to the full density
        assert!((v[3] - v[4] - v[5]).abs() <= 1e-12 * v[3].abs().max(1e-300));
    }
    assert!(!dir.path().join("fig2.atoms.csv").exists());
}

#[test]
fn driftless_stationary_emits_atoms() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s.csv");
    let o = resetwalk(&["stationary", "--gamma-drift", "0", "--n", "5000", "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    let atoms = fs::read_to_string(dir.path().join("s.atoms.csv")).unwrap();
    let rows = data_rows(&atoms);
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0][0], "1");
    let mass: f64 = rows[0][1].parse().unwrap();
    assert!((mass - 2.0 / 3.0).abs() < 1e-15);
}

#[test]
fn stationary_without_resets_is_an_error() {
    let o = resetwalk(&["stationary", "--lambda-reset", "0", "--n", "10"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("lambda_reset must be > 0"));
}

#[test]
fn same_seed_same_files() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str, seed: &str| {
        let out = dir.path().join(name);
        let o = resetwalk(&["met", "--mode", "fig4", "--points", "2", "--n", "500", "--seed", seed, "--out", out.to_str().unwrap()]);
        assert!(o.status.success());
        fs::read(out).unwrap()
    };
    assert_eq!(run("a.csv", "5"), run("b.csv", "5"));
    assert_ne!(run("a.csv", "5"), run("c.csv", "6"));
}

#[test]
fn met_figure_modes() {
    let o = resetwalk(&["met", "--mode", "fig3", "--points", "5", "--n", "0"]);
    assert!(o.status.success());
    let rows = data_rows(&stdout(&o));
    assert_eq!(rows.len(), 20);
    for r in &rows {
        let t: f64 = r[3].parse().unwrap();
        assert!(t.is_finite() && t > 0.0);
        assert_eq!(r[6].parse::<f64>().unwrap(), std::f64::consts::E);
        assert!(r[4].is_empty());
    }
    let o = resetwalk(&["met", "--mode", "fig4", "--points", "4", "--n", "0"]);
    let rows = data_rows(&stdout(&o));
    let flat: Vec<f64> = rows.iter().filter(|r| r[1] == "100").map(|r| r[3].parse().unwrap()).collect();
    assert_eq!(flat.len(), 4);
    let spread = flat.iter().cloned().fold(f64::MIN, f64::max) - flat.iter().cloned().fold(f64::MAX, f64::min);
    assert!(spread / flat[0] < 0.01);
}

#[test]
fn met_report_passes() {
    let o = resetwalk(&["met", "--mode", "point", "--x0", "0.3", "--gamma-drift", "1", "--lambda-reset", "1", "--n", "20000", "--format", "report"]);
    assert!(o.status.success(), "{}", stdout(&o));
    assert!(stdout(&o).starts_with("PASS met-point"));
}

#[test]
fn survival_curve_starts_at_one() {
    let o = resetwalk(&["survival", "--gamma-drift", "1", "--lambda-reset", "1", "--n", "5000", "--points", "10"]);
    assert!(o.status.success());
    let rows = data_rows(&stdout(&o));
    assert_eq!(rows.len(), 11);
    assert_eq!(rows[0][..3], ["0", "1", "1"]);
    let analytic: Vec<f64> = rows.iter().map(|r| r[1].parse().unwrap()).collect();
    assert!(analytic.windows(2).all(|w| w[1] <= w[0] + 1e-9));
}

#[test]
fn config_file_and_flag_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("p.cfg");
    fs::write(&cfg, "# test\ngamma_drift = 3\nlambda_reset = 0.5\n").unwrap();
    let o = resetwalk(&["path", "--config", cfg.to_str().unwrap(), "--lambda-reset", "4", "--tau", "1"]);
    assert!(o.status.success());
    let head = stdout(&o).lines().next().unwrap().to_string();
    assert!(head.contains("gamma_drift=3 ") && head.contains("lambda_reset=4 "), "{head}");
    fs::write(&cfg, "nonsense = 1\n").unwrap();
    let o = resetwalk(&["path", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn path_dump_columns() {
    let o = resetwalk(&["path", "--tau", "3", "--seed", "9"]);
    let text = stdout(&o);
    let mut lines = text.lines().skip(1);
    assert_eq!(lines.next(), Some("time,kind,size,x_after"));
    assert_eq!(lines.next(), Some("0,start,0,0"));
}

#[test]
fn check_only_and_quick_mode() {
    let o = resetwalk(&["check", "--only", "cke"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert_eq!(text.lines().count(), 1);
    assert!(text.starts_with("PASS cke"));

    let start = std::time::Instant::now();
    let o = resetwalk(&["check", "--seed", "7", "--n", "1000"]);
    assert!(start.elapsed().as_secs() < 10);
    assert!(o.status.success(), "{}", stdout(&o));
    assert_eq!(stdout(&o).lines().filter(|l| l.starts_with("PASS ")).count(), 11);
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(resetwalk(&["check", "--only", "nope"]).status.code(), Some(2));
    assert_eq!(resetwalk(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(resetwalk(&["met", "--format", "xml"]).status.code(), Some(2));
    assert_eq!(resetwalk(&["--help"]).status.code(), Some(0));
}

#[test]
fn failing_check_exits_one() {
    // one grid point: the trapezoid area is far from the mean exit time
    let o = resetwalk(&["survival", "--gamma-drift", "1", "--n", "2000", "--points", "1", "--tau", "50", "--format", "report"]);
    assert_eq!(o.status.code(), Some(1), "{}", stdout(&o));
    assert!(stdout(&o).contains("FAIL survival-area"));
}
