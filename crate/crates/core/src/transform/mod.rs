//! Laplace-domain engine.
//!
//! Transforms over time carry the variable `s`, transforms over position the
//! variable `omega`. Everything here is built on the rate function
//! `K(omega) = lambda (1 - h~(omega)) + Lambda + Gamma omega`:
//!
//! * double transform of the propagator, `[Lambda/s + e^{-omega x0}] / (K + s)`;
//! * its time-domain form, `Lambda (1 - e^{-K tau}) / K + e^{-omega x0 - K tau}`;
//! * the stationary transform `Lambda / K`.

pub mod bessel;
pub mod inversion;
pub(crate) mod roots;

use num_complex::Complex64;

pub use bessel::{bessel_i1, bessel_i1_scaled, bessel_kernel};
pub use inversion::{invert_laplace, talbot, InversionConfig, LaplaceFn, Method, Variable};

use crate::analytics;
use crate::error::{Error, Result};
use crate::model::{JumpLaw, ValidatedParams};
use roots::exit_roots;

fn re(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// `K(omega)`, refusing arguments outside the transform's convergence region.
pub fn rate_function(params: &ValidatedParams, omega: Complex64) -> Result<Complex64> {
    let h = params.jump_law.laplace(omega)?;
    Ok(params.lambda_jump * (1.0 - h) + params.lambda_reset + params.gamma_drift * omega)
}

/// `K(omega)` on an inversion contour (no convergence-region check).
fn rate_on_contour(params: &ValidatedParams, omega: Complex64) -> Result<Complex64> {
    let h = params.jump_law.laplace_on_contour(omega)?;
    Ok(params.lambda_jump * (1.0 - h) + params.lambda_reset + params.gamma_drift * omega)
}

fn require_positive_s(s: Complex64) -> Result<()> {
    if s.re > 0.0 {
        Ok(())
    } else {
        Err(Error::PoleEvaluation(format!("Re(s) = {} must be > 0", s.re)))
    }
}

/// Double Laplace transform (position `omega`, time `s`) of the propagator
/// started at `x0`. With `with_resets = false` the reset mechanism is switched
/// off and the reset-free propagator is returned.
pub fn propagator_double_laplace(
    params: &ValidatedParams,
    omega: Complex64,
    s: Complex64,
    x0: f64,
    with_resets: bool,
) -> Result<Complex64> {
    require_positive_s(s)?;
    let h = params.jump_law.laplace(omega)?;
    let base = params.lambda_jump * (1.0 - h) + params.gamma_drift * omega + s;
    let start = (-omega * x0).exp();
    let v = if with_resets {
        let lr = params.lambda_reset;
        (lr / s + start) / (base + lr)
    } else {
        start / base
    };
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::PoleEvaluation(format!("denominator vanishes at omega = {omega}, s = {s}")))
    }
}

/// Position transform of the propagator at time `tau`.
pub fn propagator_omega_time(params: &ValidatedParams, omega: Complex64, tau: f64, x0: f64) -> Result<Complex64> {
    if tau < 0.0 {
        return Err(Error::DomainError(format!("tau = {tau} < 0")));
    }
    let k = rate_function(params, omega)?;
    let decay = (-k * tau).exp();
    let front = (-omega * x0).exp() * decay;
    let lr = params.lambda_reset;
    if lr == 0.0 {
        return Ok(front);
    }
    // Lambda (1 - e^{-K tau}) / K, with the K -> 0 limit Lambda tau
    let reset_part = if k.norm() < 1e-8 {
        lr * tau * (1.0 - 0.5 * k * tau)
    } else {
        lr * (1.0 - decay) / k
    };
    let v = reset_part + front;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::PoleEvaluation(format!("K(omega) = 0 at omega = {omega}")))
    }
}

/// Stationary position transform `Lambda / K(omega)`.
pub fn stationary_transform(params: &ValidatedParams, omega: Complex64) -> Result<Complex64> {
    if params.lambda_reset <= 0.0 {
        return Err(Error::NoStationaryLaw);
    }
    Ok(params.lambda_reset / rate_function(params, omega)?)
}

/// Absolute gap between the propagator's double transform and its expression
/// through the reset-free propagator,
/// `(Lambda/s) p0(omega, s + Lambda; 0) + p0(omega, s + Lambda; x0)`.
pub fn decomposition_check(params: &ValidatedParams, omega: Complex64, s: Complex64, x0: f64) -> Result<f64> {
    let full = propagator_double_laplace(params, omega, s, x0, true)?;
    let shifted = s + params.lambda_reset;
    let from_origin = propagator_double_laplace(params, omega, shifted, 0.0, false)?;
    let from_start = propagator_double_laplace(params, omega, shifted, x0, false)?;
    let rebuilt = params.lambda_reset / s * from_origin + from_start;
    Ok((full - rebuilt).norm())
}

/// Time transform of the continuous part of the propagator for exponential
/// jumps and no drift, at position `x`.
pub fn propagator_s_domain(params: &ValidatedParams, x: f64, s: Complex64, x0: f64) -> Result<Complex64> {
    require_positive_s(s)?;
    Ok(propagator_s_transform(params, x, x0)?.eval(s))
}

/// [`propagator_s_domain`] as an invertible transform in `s`.
pub fn propagator_s_transform(params: &ValidatedParams, x: f64, x0: f64) -> Result<LaplaceFn> {
    let gam = params.gamma_jump()?;
    if params.gamma_drift != 0.0 {
        return Err(Error::UnsupportedRegime("closed s-domain propagator needs gamma_drift = 0".into()));
    }
    let lam = params.lambda_jump;
    let lr = params.lambda_reset;
    Ok(LaplaceFn::new(Variable::Time, 0.0, move |s| {
        if x < 0.0 {
            return re(0.0);
        }
        let a = lam + lr + s;
        let amp = gam * lam / (a * a);
        let rate = (lr + s) * gam / a;
        let mut v = lr / s * amp * (-rate * x).exp();
        if x > x0 {
            v += amp * (-rate * (x - x0)).exp();
        }
        v
    }))
}

fn one_minus_exp_over(a: Complex64, z: f64) -> Complex64 {
    let az = a * z;
    if az.norm() < 1e-5 {
        z * (1.0 - az / 2.0 + az * az / 6.0)
    } else {
        (1.0 - (-az).exp()) / a
    }
}

fn check_interval(params: &ValidatedParams, b: f64, x: f64) -> Result<()> {
    if !(b > 0.0) {
        return Err(Error::DomainError(format!("upper level b = {b} must be > 0")));
    }
    if !(0.0..=b).contains(&x) {
        return Err(Error::DomainError(format!("start x = {x} outside [0, {b}]")));
    }
    if params.gamma_drift <= 0.0 {
        return Err(Error::UnsupportedRegime("survival transform needs gamma_drift > 0".into()));
    }
    Ok(())
}

/// Laplace transform (over time) of the probability of staying inside
/// `[0, b]`, starting from `x`.
///
/// Exponential jumps use the closed form, with the unknown value at the
/// origin eliminated through the `x = 0` self-consistency condition. Custom
/// laws invert the position transform numerically and solve the same scalar
/// condition. At `s = 0` this is the mean exit time.
pub fn survival_hat(params: &ValidatedParams, b: f64, x: f64, s: Complex64) -> Result<Complex64> {
    check_interval(params, b, x)?;
    if s.re < 0.0 {
        return Err(Error::DomainError(format!("Re(s) = {} < 0", s.re)));
    }
    if x == b {
        return Ok(re(0.0));
    }
    if s == re(0.0) {
        return analytics::mean_exit_time(params, b, x).map(re);
    }
    match &params.jump_law {
        JumpLaw::Exponential { rate } => Ok(survival_hat_exponential(params, *rate, b, x, s)?),
        JumpLaw::Custom(_) => survival_hat_numeric(params, b, x, s, &InversionConfig::default()),
    }
}

/// The exponential-jump closed form for any `Re(s) >= 0`, including `s = 0`
/// (no delegation to the mean exit time).
pub fn survival_hat_closed(params: &ValidatedParams, b: f64, x: f64, s: Complex64) -> Result<Complex64> {
    check_interval(params, b, x)?;
    let gam = params.gamma_jump()?;
    if x == b {
        return Ok(re(0.0));
    }
    survival_hat_exponential(params, gam, b, x, s)
}

pub fn survival_hat_real(params: &ValidatedParams, b: f64, x: f64, s: f64) -> Result<f64> {
    survival_hat(params, b, x, re(s)).map(|v| v.re)
}

fn survival_hat_exponential(params: &ValidatedParams, gam: f64, b: f64, x: f64, s: Complex64) -> Result<Complex64> {
    let lr = params.lambda_reset;
    let r = lr + s;
    let rt = exit_roots(params.gamma_drift, params.lambda_jump, r, gam);
    let z = b - x;
    let survive = rt.ap_minus_gamma * one_minus_exp_over(rt.alpha_plus, z)
        + rt.gamma_minus_am * one_minus_exp_over(rt.alpha_minus, z);
    // Denominator of the self-consistent solution. Its s-independent pieces
    // cancel exactly, leaving Delta s / R plus the boundary terms.
    let s_over_r = if lr == 0.0 { re(1.0) } else { s / r };
    let mut denom = rt.delta * s_over_r;
    if lr > 0.0 {
        denom += lr
            * (rt.ap_minus_gamma / rt.alpha_plus * (-rt.alpha_plus * b).exp()
                + rt.gamma_minus_am / rt.alpha_minus * (-rt.alpha_minus * b).exp());
    }
    let v = survive / denom;
    if !v.is_finite() || denom.norm() < 1e-300 {
        return Err(Error::SelfConsistencySingular(s.to_string()));
    }
    Ok(v)
}

/// General-law route: `P(s; x) = Phi(s; b - x) / (1 - Lambda Phi(s; b))`, where
/// `Phi(s; z)` inverts `1 / (omega (K(omega) + s))` over position.
pub fn survival_hat_numeric(
    params: &ValidatedParams,
    b: f64,
    x: f64,
    s: Complex64,
    cfg: &InversionConfig,
) -> Result<Complex64> {
    check_interval(params, b, x)?;
    if !params.jump_law.contour_safe() {
        return Err(Error::UnsupportedRegime(
            "numeric survival transform needs a jump transform valid on the Talbot contour".into(),
        ));
    }
    if x == b {
        return Ok(re(0.0));
    }
    params.jump_law.laplace_on_contour(re(0.0))?;
    let phi = |z: f64| -> Result<Complex64> {
        let f = |w: Complex64| match rate_on_contour(params, w) {
            Ok(k) => 1.0 / (w * (k + s)),
            Err(_) => Complex64::new(f64::NAN, 0.0),
        };
        let v = talbot(&f, z, cfg.terms);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::NonConvergence(format!("position inversion at z = {z}")))
        }
    };
    let at_origin = phi(b)?;
    let denom = 1.0 - params.lambda_reset * at_origin;
    if denom.norm() < 1e-12 {
        return Err(Error::SelfConsistencySingular(s.to_string()));
    }
    Ok(phi(b - x)? / denom)
}

/// Configuration used for time-domain survival curves.
pub fn survival_inversion_default() -> InversionConfig {
    InversionConfig::euler(60)
}

/// Probability of not having left `[0, b]` by time `tau`, starting from `x`,
/// by numerical inversion of [`survival_hat`].
///
/// Paths with no event before the drift reaches `b` all exit at the same
/// instant `(b - x) / Gamma`, so the survival curve jumps there. That step is
/// removed from the transform and added back exactly; what is inverted is
/// continuous.
pub fn survival_probability(params: &ValidatedParams, b: f64, x: f64, tau: f64, cfg: &InversionConfig) -> Result<f64> {
    check_interval(params, b, x)?;
    if tau < 0.0 {
        return Err(Error::DomainError(format!("tau = {tau} < 0")));
    }
    if x == b {
        return Ok(0.0);
    }
    if tau == 0.0 {
        return Ok(1.0);
    }
    let hit = (b - x) / params.gamma_drift;
    let step = (-(params.lambda_jump + params.lambda_reset) * hit).exp();
    let p = params.clone();
    let f = LaplaceFn::new(Variable::Time, 0.0, move |s| match survival_hat(&p, b, x, s) {
        Ok(v) => v - step * (1.0 - (-s * hit).exp()) / s,
        Err(_) => Complex64::new(f64::NAN, 0.0),
    });
    let smooth = invert_laplace(&f, tau, cfg)?;
    Ok(smooth + if tau < hit { step } else { 0.0 })
}

struct Piece {
    shift: f64,
    parts: Vec<Box<dyn Fn(Complex64) -> Complex64 + Send + Sync>>,
}

/// Continuous part of the propagator density at `x`, by numerical inversion
/// over position of the time-domain transform, after removing the atoms
/// analytically. Works for any jump law with a transform.
///
/// The transform is split into pieces whose originals start at `0`, at the
/// drift-only reset front `Gamma tau` and at the no-event front
/// `x0 + Gamma tau`; each is inverted at the distance from its start.
/// Exactly at a start point the left limit is returned.
pub fn propagator_numeric(params: &ValidatedParams, x: f64, tau: f64, x0: f64, cfg: &InversionConfig) -> Result<f64> {
    if !(tau > 0.0) {
        return Err(Error::DomainError(format!("tau = {tau} must be > 0")));
    }
    if x0 < 0.0 {
        return Err(Error::DomainError(format!("x0 = {x0} < 0")));
    }
    if params.jump_law.laplace_on_contour(re(0.0)).is_err() {
        return Err(Error::MissingLaplace);
    }
    if x <= 0.0 {
        return Ok(0.0);
    }
    let lam = params.lambda_jump;
    let lr = params.lambda_reset;
    let g = params.gamma_drift;
    let total = lam + lr;
    let decay = (-total * tau).exp();
    let no_drift = g == 0.0;

    let law = params.jump_law.clone();
    let kf = {
        let law = law.clone();
        move |w: Complex64| -> Complex64 {
            let h = law.laplace_on_contour(w).unwrap_or(Complex64::new(f64::NAN, 0.0));
            lam * (1.0 - h) + lr + g * w
        }
    };
    let jump_growth = {
        let law = law.clone();
        move |w: Complex64| -> Complex64 {
            let h = law.laplace_on_contour(w).unwrap_or(Complex64::new(f64::NAN, 0.0));
            (lam * tau * h).exp()
        }
    };

    let mut pieces: Vec<Piece> = Vec::new();
    let mut add = |shift: f64, f: Box<dyn Fn(Complex64) -> Complex64 + Send + Sync>| {
        match pieces.iter_mut().find(|p| p.shift == shift) {
            Some(p) => p.parts.push(f),
            None => pieces.push(Piece { shift, parts: vec![f] }),
        }
    };
    if lr > 0.0 {
        let origin_atom = if no_drift { lr / total } else { 0.0 };
        let k1 = kf.clone();
        add(0.0, Box::new(move |w| lr / k1(w) - origin_atom));
        let front_atom = if no_drift { lr / total } else { 0.0 };
        let k2 = kf.clone();
        let jg = jump_growth.clone();
        add(g * tau, Box::new(move |w| -lr * decay * (jg(w) / k2(w) - front_atom)));
    }
    if lam > 0.0 {
        let jg = jump_growth.clone();
        add(x0 + g * tau, Box::new(move |w| decay * (jg(w) - 1.0)));
    }

    let mut value = 0.0;
    for piece in &pieces {
        let dist = x - piece.shift;
        if dist <= 0.0 {
            continue;
        }
        let sum = |w: Complex64| piece.parts.iter().map(|f| f(w)).sum::<Complex64>();
        let v = match cfg.method {
            Method::GaverStehfest => inversion::stehfest(|w| sum(re(w)).re, dist, cfg.terms),
            _ => {
                if !params.jump_law.contour_safe() {
                    return Err(Error::UnsupportedRegime(
                        "jump transform not certified on the Talbot contour; use Gaver-Stehfest".into(),
                    ));
                }
                let v = inversion::talbot_real(&sum, dist, cfg.terms);
                if cfg.check_convergence {
                    let coarse = inversion::talbot_real(&sum, dist, (3 * cfg.terms) / 4);
                    if (v - coarse).abs() > cfg.convergence_tol * (1.0 + v.abs()) {
                        return Err(Error::NonConvergence(format!(
                            "position inversion unstable at distance {dist:e} from a propagator front"
                        )));
                    }
                }
                v
            }
        };
        if !v.is_finite() {
            return Err(Error::NonConvergence(format!("non-finite inversion at x = {x}")));
        }
        value += v;
    }
    Ok(value)
}

/// Continuous part of the stationary position density at `x > 0` by
/// numerical inversion of `Lambda / K(omega)` (minus the origin atom when
/// there is no drift).
pub fn stationary_density_numeric(params: &ValidatedParams, x: f64, cfg: &InversionConfig) -> Result<f64> {
    let lr = params.lambda_reset;
    if lr <= 0.0 {
        return Err(Error::NoStationaryLaw);
    }
    if params.jump_law.laplace_on_contour(re(0.0)).is_err() {
        return Err(Error::MissingLaplace);
    }
    if x <= 0.0 {
        return Ok(0.0);
    }
    let atom = if params.gamma_drift == 0.0 { lr / (params.lambda_jump + lr) } else { 0.0 };
    let p = params.clone();
    let f = move |w: Complex64| match rate_on_contour(&p, w) {
        Ok(k) => lr / k - atom,
        Err(_) => Complex64::new(f64::NAN, 0.0),
    };
    let v = match cfg.method {
        Method::GaverStehfest => inversion::stehfest(|w| f(re(w)).re, x, cfg.terms),
        _ => {
            if !params.jump_law.contour_safe() {
                return Err(Error::UnsupportedRegime("jump transform not certified on the Talbot contour".into()));
            }
            inversion::talbot_real(&f, x, cfg.terms)
        }
    };
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonConvergence(format!("stationary inversion at x = {x}")))
    }
}
