//! Numerical inverse Laplace transform: fixed Talbot contour and
//! Gaver-Stehfest.

use std::f64::consts::{LN_2, PI};
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Which variable a transform was taken over.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Variable {
    /// Time, conjugate variable `s`.
    Time,
    /// Position, conjugate variable `omega`.
    Space,
}

/// An evaluable Laplace transform.
#[derive(Clone)]
pub struct LaplaceFn {
    evaluator: Arc<dyn Fn(Complex64) -> Complex64 + Send + Sync>,
    pub variable: Variable,
    /// Every singularity has real part <= `abscissa`.
    pub abscissa: f64,
    /// Whether the evaluator is valid away from the real axis.
    pub complex_capable: bool,
}

impl fmt::Debug for LaplaceFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LaplaceFn")
            .field("variable", &self.variable)
            .field("abscissa", &self.abscissa)
            .field("complex_capable", &self.complex_capable)
            .finish()
    }
}

impl LaplaceFn {
    pub fn new(variable: Variable, abscissa: f64, f: impl Fn(Complex64) -> Complex64 + Send + Sync + 'static) -> Self {
        LaplaceFn { evaluator: Arc::new(f), variable, abscissa, complex_capable: true }
    }

    /// A transform that can only be trusted on the real axis.
    pub fn real_only(variable: Variable, abscissa: f64, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        LaplaceFn {
            evaluator: Arc::new(move |z: Complex64| Complex64::new(f(z.re), 0.0)),
            variable,
            abscissa,
            complex_capable: false,
        }
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        (self.evaluator)(z)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    Talbot,
    GaverStehfest,
    /// Fourier series on a vertical Bromwich line with Euler summation.
    /// Slower than Talbot, but tolerates transforms carrying delay factors
    /// `e^{-c s}`, which blow up on the left half of a Talbot contour.
    Euler,
}

#[derive(Clone, Copy, Debug)]
pub struct InversionConfig {
    pub method: Method,
    /// Talbot contour nodes `M`, or the even Stehfest order `N`.
    pub terms: usize,
    /// Talbot only: re-run with `3M/4` nodes and flag disagreement above
    /// `convergence_tol * (1 + |f|)`.
    pub check_convergence: bool,
    pub convergence_tol: f64,
    /// Stehfest orders 17-18 lose most digits to cancellation in `f64`; they
    /// are refused unless this is set.
    pub accept_precision_loss: bool,
}

impl Default for InversionConfig {
    fn default() -> Self {
        InversionConfig::talbot(32)
    }
}

impl InversionConfig {
    pub fn talbot(nodes: usize) -> Self {
        InversionConfig {
            method: Method::Talbot,
            terms: nodes,
            check_convergence: false,
            convergence_tol: 1e-6,
            accept_precision_loss: false,
        }
    }

    pub fn stehfest(order: usize) -> Self {
        InversionConfig {
            method: Method::GaverStehfest,
            terms: order,
            check_convergence: false,
            convergence_tol: 1e-6,
            accept_precision_loss: false,
        }
    }

    pub fn euler(terms: usize) -> Self {
        InversionConfig {
            method: Method::Euler,
            terms,
            check_convergence: false,
            convergence_tol: 1e-6,
            accept_precision_loss: false,
        }
    }

    pub fn checked(mut self, tol: f64) -> Self {
        self.check_convergence = true;
        self.convergence_tol = tol;
        self
    }

    pub fn validate(&self) -> Result<()> {
        match self.method {
            Method::Talbot => {
                if self.terms < 4 {
                    return Err(Error::InvalidConfig(format!("Talbot needs >= 4 nodes, got {}", self.terms)));
                }
            }
            Method::Euler => {
                if self.terms < 5 {
                    return Err(Error::InvalidConfig(format!("Euler needs >= 5 terms, got {}", self.terms)));
                }
            }
            Method::GaverStehfest => {
                let n = self.terms;
                if n % 2 != 0 || !(8..=18).contains(&n) {
                    return Err(Error::InvalidConfig(format!("Stehfest order must be even in 8..=18, got {n}")));
                }
                if n > 16 && !self.accept_precision_loss {
                    return Err(Error::PrecisionLoss(n));
                }
            }
        }
        Ok(())
    }
}

/// Invert `f` at `t > 0`.
pub fn invert_laplace(f: &LaplaceFn, t: f64, cfg: &InversionConfig) -> Result<f64> {
    cfg.validate()?;
    if !(t > 0.0) {
        return Err(Error::DomainError(format!("inversion point must be > 0, got {t}")));
    }
    match cfg.method {
        Method::Talbot => {
            if !f.complex_capable {
                return Err(Error::InvalidConfig("Talbot needs a complex-capable transform".into()));
            }
            let shift = f.abscissa.max(0.0);
            let g = |z: Complex64| f.eval(z + shift);
            let v = talbot(&g, t, cfg.terms).re * (shift * t).exp();
            if !v.is_finite() {
                return Err(Error::NonConvergence(format!("non-finite Talbot sum at t = {t}")));
            }
            if cfg.check_convergence {
                let coarse = talbot(&g, t, (3 * cfg.terms) / 4).re * (shift * t).exp();
                let gap = (v - coarse).abs();
                if gap > cfg.convergence_tol * (1.0 + v.abs()) {
                    return Err(Error::NonConvergence(format!(
                        "Talbot estimates with {} and {} nodes differ by {gap:e} at t = {t}",
                        cfg.terms,
                        (3 * cfg.terms) / 4
                    )));
                }
            }
            Ok(v)
        }
        Method::Euler => {
            if !f.complex_capable {
                return Err(Error::InvalidConfig("Euler inversion needs a complex-capable transform".into()));
            }
            let shift = f.abscissa.max(0.0);
            let g = |z: Complex64| f.eval(z + shift);
            let v = euler(&g, t, cfg.terms) * (shift * t).exp();
            if !v.is_finite() {
                return Err(Error::NonConvergence(format!("non-finite Euler sum at t = {t}")));
            }
            if cfg.check_convergence {
                let coarse = euler(&g, t, cfg.terms.saturating_sub(cfg.terms / 4).max(5)) * (shift * t).exp();
                let gap = (v - coarse).abs();
                if gap > cfg.convergence_tol * (1.0 + v.abs()) {
                    return Err(Error::NonConvergence(format!("Euler partial sums differ by {gap:e} at t = {t}")));
                }
            }
            Ok(v)
        }
        Method::GaverStehfest => {
            let v = stehfest(|s| f.eval(Complex64::new(s, 0.0)).re, t, cfg.terms);
            if v.is_finite() {
                Ok(v)
            } else {
                Err(Error::NonConvergence(format!("non-finite Stehfest sum at t = {t}")))
            }
        }
    }
}

/// Fixed-Talbot inversion (Abate-Valko contour), valid for complex-valued
/// originals. `f` must be analytic off a region around the negative real axis.
pub fn talbot<F: Fn(Complex64) -> Complex64>(f: &F, t: f64, nodes: usize) -> Complex64 {
    let m = nodes as f64;
    let r = 2.0 * m / (5.0 * t);
    let mut sum = 0.5 * f(Complex64::new(r, 0.0)) * (r * t).exp();
    let mut sum_neg = sum;
    for k in 1..nodes {
        let theta = k as f64 * PI / m;
        let cot = 1.0 / theta.tan();
        let s = Complex64::new(r * theta * cot, r * theta);
        let sigma = theta + (theta * cot - 1.0) * cot;
        let w = Complex64::new(1.0, sigma);
        sum += (t * s).exp() * f(s) * w;
        // mirror node at -theta: s -> conj(s), sigma -> -sigma
        let sc = s.conj();
        sum_neg += (t * sc).exp() * f(sc) * w.conj();
    }
    (sum + sum_neg) * (r / (2.0 * m))
}

/// Real-valued fast path: when `f(conj z) = conj f(z)` only the upper half
/// of the contour is needed.
pub fn talbot_real<F: Fn(Complex64) -> Complex64>(f: &F, t: f64, nodes: usize) -> f64 {
    let m = nodes as f64;
    let r = 2.0 * m / (5.0 * t);
    let mut sum = 0.5 * f(Complex64::new(r, 0.0)).re * (r * t).exp();
    for k in 1..nodes {
        let theta = k as f64 * PI / m;
        let cot = 1.0 / theta.tan();
        let s = Complex64::new(r * theta * cot, r * theta);
        let sigma = theta + (theta * cot - 1.0) * cot;
        sum += ((t * s).exp() * f(s) * Complex64::new(1.0, sigma)).re;
    }
    sum * r / m
}

const EULER_A: f64 = 18.4;
const EULER_M: usize = 11;

/// Abate-Whitt Euler algorithm for a real-valued original: a trapezoid
/// discretization of the Bromwich integral on `Re(s) = A / 2t` (aliasing
/// error about `e^{-A}` times the original's bound) with binomial averaging
/// of the last `11` partial sums.
pub fn euler<F: Fn(Complex64) -> Complex64>(f: &F, t: f64, terms: usize) -> f64 {
    let a = EULER_A;
    let scale = (a / 2.0).exp() / t;
    let x = a / (2.0 * t);
    let h = PI / t;
    let mut partial = Vec::with_capacity(terms + EULER_M + 1);
    let mut acc = 0.5 * f(Complex64::new(x, 0.0)).re;
    partial.push(acc);
    for k in 1..=(terms + EULER_M) {
        let v = f(Complex64::new(x, k as f64 * h)).re;
        if k % 2 == 1 {
            acc -= v;
        } else {
            acc += v;
        }
        partial.push(acc);
    }
    let mut binom = 1.0;
    let mut avg = 0.0;
    for k in 0..=EULER_M {
        avg += binom * partial[terms + k];
        binom *= (EULER_M - k) as f64 / (k + 1) as f64;
    }
    scale * avg / (1u64 << EULER_M) as f64
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// Stehfest weights `V_k`, `k = 1..=n`.
pub fn stehfest_weights(n: usize) -> Vec<f64> {
    let half = n / 2;
    (1..=n)
        .map(|k| {
            let lo = (k + 1) / 2;
            let hi = k.min(half);
            let mut acc = 0.0;
            for j in lo..=hi {
                acc += (j as f64).powi(half as i32) * factorial(2 * j)
                    / (factorial(half - j) * factorial(j) * factorial(j - 1) * factorial(k - j) * factorial(2 * j - k));
            }
            if (k + half) % 2 == 0 {
                acc
            } else {
                -acc
            }
        })
        .collect()
}

pub fn stehfest<F: Fn(f64) -> f64>(f: F, t: f64, order: usize) -> f64 {
    let a = LN_2 / t;
    stehfest_weights(order)
        .iter()
        .enumerate()
        .map(|(i, v)| v * f((i + 1) as f64 * a))
        .sum::<f64>()
        * a
}
