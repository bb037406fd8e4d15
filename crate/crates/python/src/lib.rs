//! Python module `resetwalk`.

use std::collections::BTreeMap;

use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyValueError};
use pyo3::prelude::*;

use resetwalk_core::analytics::{self, MixedDensity};
use resetwalk_core::{checks, montecarlo, paths, transform};
use resetwalk_core::{Domain, EventKind, MetLimit, ModelParams, ObservableSign, ValidatedParams};

create_exception!(resetwalk, ResetwalkError, PyException);

fn err(e: resetwalk_core::Error) -> PyErr {
    ResetwalkError::new_err(e.to_string())
}

/// Validated model parameters with exponential jump sizes.
#[pyclass(name = "Params", frozen)]
pub struct PyParams {
    inner: ValidatedParams,
}

#[pymethods]
impl PyParams {
    #[new]
    #[pyo3(signature = (gamma_drift, lambda_jump, lambda_reset, jump_gamma, x0=0.0, y0=1.0, sign="plus"))]
    fn new(
        gamma_drift: f64,
        lambda_jump: f64,
        lambda_reset: f64,
        jump_gamma: f64,
        x0: f64,
        y0: f64,
        sign: &str,
    ) -> PyResult<Self> {
        let mut p = ModelParams::exponential(gamma_drift, lambda_jump, lambda_reset, jump_gamma).with_x0(x0).with_y0(y0);
        p.set("sign", sign).map_err(err)?;
        Ok(PyParams { inner: p.validate().map_err(err)? })
    }

    /// Parse a flat `key = value` text.
    #[staticmethod]
    fn from_config(text: &str) -> PyResult<Self> {
        let p = ModelParams::from_config_str(text).map_err(err)?;
        Ok(PyParams { inner: p.validate().map_err(err)? })
    }

    #[getter]
    fn gamma_drift(&self) -> f64 {
        self.inner.gamma_drift
    }

    #[getter]
    fn lambda_jump(&self) -> f64 {
        self.inner.lambda_jump
    }

    #[getter]
    fn lambda_reset(&self) -> f64 {
        self.inner.lambda_reset
    }

    #[getter]
    fn jump_gamma(&self) -> Option<f64> {
        self.inner.jump_law.exponential_rate()
    }

    #[getter]
    fn x0(&self) -> f64 {
        self.inner.x0
    }

    #[getter]
    fn y0(&self) -> f64 {
        self.inner.y0
    }

    fn with_x0(&self, x0: f64) -> PyResult<Self> {
        Ok(PyParams { inner: self.inner.with_x0(x0).map_err(err)? })
    }

    fn __repr__(&self) -> String {
        let p = &self.inner;
        format!(
            "Params(gamma_drift={}, lambda_jump={}, lambda_reset={}, jump_gamma={:?}, x0={}, y0={}, sign='{}')",
            p.gamma_drift,
            p.lambda_jump,
            p.lambda_reset,
            p.jump_law.exponential_rate(),
            p.x0,
            p.y0,
            if p.observable_sign == ObservableSign::Plus { "plus" } else { "minus" }
        )
    }
}

fn domain(name: &str) -> PyResult<Domain> {
    match name {
        "x" | "X" => Ok(Domain::X),
        "y" | "Y" => Ok(Domain::Y),
        other => Err(PyValueError::new_err(format!("domain must be 'x' or 'y', got '{other}'"))),
    }
}

fn atoms(d: &MixedDensity) -> Vec<(f64, f64)> {
    d.atoms.iter().map(|a| (a.location, a.mass)).collect()
}

/// Dict of the tail exponents defined for `p`.
#[pyfunction]
fn tail_exponents(p: &PyParams) -> PyResult<BTreeMap<&'static str, f64>> {
    let t = analytics::tail_exponents(&p.inner).map_err(err)?;
    let all = [
        ("alpha_plus", t.alpha_plus),
        ("alpha_minus", t.alpha_minus),
        ("alpha_nodrift", t.alpha_nodrift),
        ("beta_asymptotic", t.beta_asymptotic),
        ("y_critical", t.y_critical),
        ("discriminant", t.discriminant),
    ];
    Ok(all.into_iter().filter_map(|(k, v)| v.map(|v| (k, v))).collect())
}

/// Continuous stationary density at `points` and the atoms `(location, mass)`.
#[pyfunction]
#[pyo3(signature = (p, points, domain="x"))]
fn stationary_density(p: &PyParams, points: Vec<f64>, domain: &str) -> PyResult<(Vec<f64>, Vec<(f64, f64)>)> {
    let d = analytics::stationary_density(&p.inner, self::domain(domain)?).map_err(err)?;
    Ok((points.iter().map(|&x| (d.continuous)(x)).collect(), atoms(&d)))
}

/// Continuous part of the drift-free propagator at `points` and its atoms.
#[pyfunction]
fn propagator(p: &PyParams, points: Vec<f64>, tau: f64, x0: f64) -> PyResult<(Vec<f64>, Vec<(f64, f64)>)> {
    let d = analytics::propagator_closed_form(&p.inner, tau, x0).map_err(err)?;
    Ok((points.iter().map(|&x| (d.continuous)(x)).collect(), atoms(&d)))
}

/// Propagator by numerical Laplace inversion (any drift).
#[pyfunction]
fn propagator_numeric(p: &PyParams, x: f64, tau: f64, x0: f64) -> PyResult<f64> {
    transform::propagator_numeric(&p.inner, x, tau, x0, &transform::InversionConfig::default()).map_err(err)
}

#[pyfunction]
fn stationary_moments(p: &PyParams, n: u32) -> PyResult<f64> {
    analytics::stationary_moments(&p.inner, n).map_err(err)
}

#[pyfunction]
fn mean_exit_time(p: &PyParams, b: f64, x: f64) -> PyResult<f64> {
    analytics::mean_exit_time(&p.inner, b, x).map_err(err)
}

/// `kind`: one of no_reset, infinite_reset, no_drift, infinite_drift.
#[pyfunction]
fn met_limit(p: &PyParams, b: f64, x: f64, kind: &str) -> PyResult<f64> {
    let kind = match kind {
        "no_reset" => MetLimit::NoReset,
        "infinite_reset" => MetLimit::InfiniteReset,
        "no_drift" => MetLimit::NoDrift,
        "infinite_drift" => MetLimit::InfiniteDrift,
        other => return Err(PyValueError::new_err(format!("unknown limit '{other}'"))),
    };
    analytics::met_limit(&p.inner, b, x, kind).map_err(err)
}

/// Laplace transform of the survival probability at real `s >= 0`.
#[pyfunction]
fn survival_hat(p: &PyParams, b: f64, x: f64, s: f64) -> PyResult<f64> {
    transform::survival_hat_real(&p.inner, b, x, s).map_err(err)
}

#[pyfunction]
fn survival_probability(p: &PyParams, b: f64, x: f64, tau: f64) -> PyResult<f64> {
    transform::survival_probability(&p.inner, b, x, tau, &transform::survival_inversion_default()).map_err(err)
}

/// Monte Carlo mean exit time: `(value, std_error)`.
#[pyfunction]
fn met_estimate(py: Python<'_>, p: &PyParams, b: f64, x0: f64, n: u64, seed: u64) -> PyResult<(f64, f64)> {
    let e = py.detach(|| montecarlo::met_estimate(&p.inner, b, x0, n, seed)).map_err(err)?;
    Ok((e.value, e.std_error))
}

/// Monte Carlo survival curve: list of `(value, std_error)` per grid time.
#[pyfunction]
fn survival_estimate(py: Python<'_>, p: &PyParams, b: f64, x0: f64, grid: Vec<f64>, n: u64, seed: u64) -> PyResult<Vec<(f64, f64)>> {
    let e = py.detach(|| montecarlo::survival_estimate(&p.inner, b, x0, &grid, n, seed)).map_err(err)?;
    Ok(e.iter().map(|e| (e.value, e.std_error)).collect())
}

/// Samples of `X(tau)` from `p.x0`.
#[pyfunction]
fn sample_state(py: Python<'_>, p: &PyParams, tau: f64, n: u64, seed: u64) -> PyResult<Vec<f64>> {
    py.detach(|| montecarlo::direct_samples(&p.inner, tau, n, seed)).map_err(err)
}

/// Events of one path on `(0, horizon]`: `(time, kind, size)` with kind
/// "jump" or "reset".
#[pyfunction]
#[pyo3(signature = (p, horizon, seed, stream=0))]
fn simulate_events(p: &PyParams, horizon: f64, seed: u64, stream: u64) -> PyResult<Vec<(f64, &'static str, f64)>> {
    let log = paths::simulate_events_stream(&p.inner, horizon, seed, stream).map_err(err)?;
    Ok(log
        .events
        .iter()
        .map(|e| match e.kind {
            EventKind::Jump(u) => (e.time, "jump", u),
            EventKind::Reset => (e.time, "reset", 0.0),
        })
        .collect())
}

/// Run named checks (all acceptance checks when `names` is None):
/// list of `(name, passed, detail)`.
#[pyfunction]
#[pyo3(signature = (names=None, seed=checks::DEFAULT_SEED, n=None))]
fn run_checks(py: Python<'_>, names: Option<Vec<String>>, seed: u64, n: Option<u64>) -> PyResult<Vec<(String, bool, String)>> {
    let names = names.unwrap_or_else(|| checks::ACCEPTANCE.iter().map(|s| s.to_string()).collect());
    if let Some(bad) = names.iter().find(|n| !checks::is_known(n)) {
        return Err(PyValueError::new_err(format!("unknown check '{bad}'")));
    }
    let cfg = checks::CheckConfig::new(seed, n);
    let out = py.detach(|| checks::run_checks(&names, &cfg));
    Ok(out.into_iter().map(|o| (o.name, o.pass, o.detail)).collect())
}

#[pymodule]
fn resetwalk(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("ResetwalkError", m.py().get_type::<ResetwalkError>())?;
    m.add_class::<PyParams>()?;
    m.add_function(wrap_pyfunction!(tail_exponents, m)?)?;
    m.add_function(wrap_pyfunction!(stationary_density, m)?)?;
    m.add_function(wrap_pyfunction!(propagator, m)?)?;
    m.add_function(wrap_pyfunction!(propagator_numeric, m)?)?;
    m.add_function(wrap_pyfunction!(stationary_moments, m)?)?;
    m.add_function(wrap_pyfunction!(mean_exit_time, m)?)?;
    m.add_function(wrap_pyfunction!(met_limit, m)?)?;
    m.add_function(wrap_pyfunction!(survival_hat, m)?)?;
    m.add_function(wrap_pyfunction!(survival_probability, m)?)?;
    m.add_function(wrap_pyfunction!(met_estimate, m)?)?;
    m.add_function(wrap_pyfunction!(survival_estimate, m)?)?;
    m.add_function(wrap_pyfunction!(sample_state, m)?)?;
    m.add_function(wrap_pyfunction!(simulate_events, m)?)?;
    m.add_function(wrap_pyfunction!(run_checks, m)?)?;
    Ok(())
}
