//! Closed-form results: tail exponents, stationary laws, the drift-free
//! propagator, stationary moments and the mean-exit-time family.

use std::io::Write;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::{JumpLaw, ObservableSign, ValidatedParams};
use crate::quadrature::{integrate, integrate_to_infinity, integrate_with_breaks};
use crate::transform::roots::exit_roots;
use crate::transform::{bessel_kernel, stationary_density_numeric, InversionConfig};

const ABS_TOL: f64 = 1e-12;
const REL_TOL: f64 = 1e-11;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TailExponents {
    /// Larger root of `Gamma a^2 - (lambda + Lambda + Gamma gamma) a + gamma Lambda`.
    pub alpha_plus: Option<f64>,
    /// Smaller root; sets the asymptotic decay of `p_Y` when `Gamma > 0`.
    pub alpha_minus: Option<f64>,
    /// `gamma Lambda / (lambda + Lambda)`, the exponent without drift.
    pub alpha_nodrift: Option<f64>,
    /// `Lambda / (lambda mu1 + Gamma)`, small-exponent asymptotics for any law.
    pub beta_asymptotic: Option<f64>,
    /// `((alpha_plus - gamma) / (gamma - alpha_minus))^(1 / (alpha_plus - alpha_minus))`
    pub y_critical: Option<f64>,
    /// `sqrt((lambda + Lambda - Gamma gamma)^2 + 4 lambda Gamma gamma)`
    pub discriminant: Option<f64>,
}

/// `(alpha_plus, alpha_minus)` for exponential jumps with drift.
pub fn drift_exponents(params: &ValidatedParams) -> Result<(f64, f64)> {
    let gam = params.jump_law.exponential_rate().ok_or(Error::ExponentialLawRequired)?;
    if params.gamma_drift <= 0.0 {
        return Err(Error::DriftRequired);
    }
    let rt = exit_roots(params.gamma_drift, params.lambda_jump, re(params.lambda_reset), gam);
    Ok((rt.alpha_plus.re, rt.alpha_minus.re))
}

/// Every exponent defined for the given parameters; the others are `None`.
pub fn tail_exponents(params: &ValidatedParams) -> Result<TailExponents> {
    let lam = params.lambda_jump;
    let lr = params.lambda_reset;
    let g = params.gamma_drift;
    let gam = params.jump_law.exponential_rate();
    let mut out = TailExponents {
        alpha_plus: None,
        alpha_minus: None,
        alpha_nodrift: None,
        beta_asymptotic: None,
        y_critical: None,
        discriminant: None,
    };
    if let Some(gam) = gam {
        if lam + lr > 0.0 {
            out.alpha_nodrift = Some(gam * lr / (lam + lr));
        }
        if g > 0.0 {
            let rt = exit_roots(g, lam, re(lr), gam);
            let (ap, am) = (rt.alpha_plus.re, rt.alpha_minus.re);
            out.alpha_plus = Some(ap);
            out.alpha_minus = Some(am);
            out.discriminant = Some(rt.delta.re.abs());
            if ap > am {
                let ratio = rt.ap_minus_gamma.re / rt.gamma_minus_am.re;
                out.y_critical = Some(ratio.powf(1.0 / (ap - am)));
            }
        }
    }
    if let Ok(mu1) = params.jump_law.moment(1) {
        let denom = lam * mu1 + g;
        if denom > 0.0 {
            out.beta_asymptotic = Some(lr / denom);
        }
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Atom {
    pub location: f64,
    pub mass: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Domain {
    #[default]
    X,
    Y,
}

pub type DensityFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Discrete atoms plus a continuous density on `[support.0, support.1]`.
#[derive(Clone)]
pub struct MixedDensity {
    pub atoms: Vec<Atom>,
    pub continuous: DensityFn,
    pub support: (f64, f64),
}

impl std::fmt::Debug for MixedDensity {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("MixedDensity").field("atoms", &self.atoms).field("support", &self.support).finish()
    }
}

impl MixedDensity {
    pub fn density(&self, x: f64) -> f64 {
        if x < self.support.0 || x > self.support.1 {
            0.0
        } else {
            (self.continuous)(x)
        }
    }

    pub fn atom_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.mass).sum()
    }

    /// Mass of the continuous part, by adaptive quadrature. `breaks` marks
    /// interior discontinuities.
    pub fn continuous_mass(&self, breaks: &[f64]) -> Result<f64> {
        let f = |x: f64| self.density(x);
        Ok(integrate_with_breaks(f, self.support.0, self.support.1, breaks, ABS_TOL, REL_TOL)?.value)
    }

    pub fn total_mass(&self, breaks: &[f64]) -> Result<f64> {
        Ok(self.atom_mass() + self.continuous_mass(breaks)?)
    }

    /// Pushes the law of `X` forward to `Y = y0 e^{+-X}`.
    pub fn to_observable(&self, y0: f64, sign: ObservableSign) -> MixedDensity {
        let sg = sign.as_f64();
        let atoms = self.atoms.iter().map(|a| Atom { location: y0 * (sg * a.location).exp(), mass: a.mass }).collect();
        let fx = self.continuous.clone();
        let continuous: DensityFn = Arc::new(move |y: f64| {
            if y <= 0.0 {
                return 0.0;
            }
            let x = sg * (y / y0).ln();
            if x < 0.0 {
                0.0
            } else {
                fx(x) / y
            }
        });
        let ends = [y0 * (sg * self.support.0).exp(), y0 * (sg * self.support.1).exp()];
        let support = (ends[0].min(ends[1]), ends[0].max(ends[1]));
        MixedDensity { atoms, continuous, support }
    }

    /// `x,f(x)` rows.
    pub fn write_csv<W: Write>(&self, out: &mut W, xs: &[f64]) -> std::io::Result<()> {
        writeln!(out, "x,density")?;
        for &x in xs {
            writeln!(out, "{x},{}", self.density(x))?;
        }
        Ok(())
    }

    /// `location,mass` rows.
    pub fn write_atoms_csv<W: Write>(&self, out: &mut W) -> std::io::Result<()> {
        writeln!(out, "location,mass")?;
        for a in &self.atoms {
            writeln!(out, "{},{}", a.location, a.mass)?;
        }
        Ok(())
    }
}

fn re(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// Stationary law of `X`, or of the observable `Y` when `domain` is `Y`.
pub fn stationary_density(params: &ValidatedParams, domain: Domain) -> Result<MixedDensity> {
    let x_law = stationary_density_x(params)?;
    Ok(match domain {
        Domain::X => x_law,
        Domain::Y => x_law.to_observable(params.y0, params.observable_sign),
    })
}

/// Terms `(weight, rate)` of the continuous stationary density of `X`,
/// which is `sum weight * e^{-rate x}` on `x >= 0` for exponential jumps.
/// With drift and jumps the first term carries `alpha_plus`, the second
/// `alpha_minus`.
pub fn stationary_terms(params: &ValidatedParams) -> Result<Vec<(f64, f64)>> {
    let (lam, lr, g) = (params.lambda_jump, params.lambda_reset, params.gamma_drift);
    if lr <= 0.0 {
        return Err(Error::NoStationaryLaw);
    }
    let gam = params.jump_law.exponential_rate().ok_or(Error::ExponentialLawRequired)?;
    let total = lam + lr;
    Ok(if g == 0.0 {
        vec![(lr / total * gam * lam / total, gam * lr / total)]
    } else if lam == 0.0 {
        vec![(lr / g, lr / g)]
    } else {
        let rt = exit_roots(g, lam, re(lr), gam);
        let amp = lr / rt.delta.re;
        vec![(amp * rt.ap_minus_gamma.re, rt.alpha_plus.re), (amp * rt.gamma_minus_am.re, rt.alpha_minus.re)]
    })
}

fn stationary_density_x(params: &ValidatedParams) -> Result<MixedDensity> {
    let lam = params.lambda_jump;
    let lr = params.lambda_reset;
    let g = params.gamma_drift;
    if lr <= 0.0 {
        return Err(Error::NoStationaryLaw);
    }
    let total = lam + lr;
    let mut atoms = Vec::new();
    if g == 0.0 {
        atoms.push(Atom { location: 0.0, mass: lr / total });
    }
    let support = (0.0, f64::INFINITY);
    let continuous: DensityFn = match &params.jump_law {
        JumpLaw::Exponential { .. } => {
            let terms = stationary_terms(params)?;
            Arc::new(move |x: f64| if x < 0.0 { 0.0 } else { terms.iter().map(|(w, r)| w * (-r * x).exp()).sum() })
        }
        JumpLaw::Custom(_) => {
            let p = params.clone();
            let cfg = if params.jump_law.contour_safe() {
                InversionConfig::default()
            } else {
                InversionConfig::stehfest(14)
            };
            stationary_density_numeric(&p, 1.0, &cfg)?;
            Arc::new(move |x: f64| stationary_density_numeric(&p, x, &cfg).unwrap_or(f64::NAN))
        }
    };
    Ok(MixedDensity { atoms, continuous, support })
}

/// Atoms of the propagator at time `tau`: the no-event mass at `x0 + Gamma tau`
/// and, without drift, the mass at the origin left by resets. The two merge
/// when `x0 = Gamma = 0`.
pub fn atom_masses(params: &ValidatedParams, tau: f64, x0: f64) -> Vec<Atom> {
    let total = params.lambda_jump + params.lambda_reset;
    let survive = (-total * tau).exp();
    let front = Atom { location: x0 + params.gamma_drift * tau, mass: survive };
    if params.gamma_drift != 0.0 || params.lambda_reset == 0.0 || tau == 0.0 {
        return vec![front];
    }
    let origin = params.lambda_reset / total * -(-total * tau).exp_m1();
    if x0 == 0.0 {
        vec![Atom { location: 0.0, mass: origin + survive }]
    } else {
        vec![Atom { location: 0.0, mass: origin }, front]
    }
}

fn closed_form_inputs(params: &ValidatedParams) -> Result<f64> {
    let gam = params.jump_law.exponential_rate().ok_or(Error::UnsupportedRegime(
        "closed-form propagator needs exponential jumps; use transform::propagator_numeric".into(),
    ))?;
    if params.gamma_drift != 0.0 {
        return Err(Error::UnsupportedRegime(
            "closed-form propagator needs gamma_drift = 0; use transform::propagator_numeric".into(),
        ));
    }
    Ok(gam)
}

/// Reset-weighted part of the continuous propagator: walks restarted at the
/// origin at some earlier instant. Independent of `x0`.
fn reset_part(lam: f64, lr: f64, gam: f64, x: f64, tau: f64) -> Result<f64> {
    if lr == 0.0 || lam == 0.0 {
        return Ok(0.0);
    }
    let total = lam + lr;
    let f = |t: f64| bessel_kernel(gam * lam * t, x, total * t + gam * x);
    Ok(lr * integrate(f, 0.0, tau, ABS_TOL, REL_TOL)?.value)
}

/// Part of the continuous propagator from paths without any reset.
fn no_reset_part(lam: f64, lr: f64, gam: f64, x: f64, tau: f64, x0: f64) -> f64 {
    if x <= x0 || lam == 0.0 {
        return 0.0;
    }
    let z = x - x0;
    bessel_kernel(gam * lam * tau, z, (lam + lr) * tau + gam * z)
}

/// Continuous part of the drift-free propagator with exponential jumps.
pub fn propagator_continuous(params: &ValidatedParams, x: f64, tau: f64, x0: f64) -> Result<f64> {
    let gam = closed_form_inputs(params)?;
    if !(tau > 0.0) {
        return Err(Error::DomainError(format!("tau = {tau} must be > 0")));
    }
    if x < 0.0 {
        return Ok(0.0);
    }
    let (lam, lr) = (params.lambda_jump, params.lambda_reset);
    Ok(reset_part(lam, lr, gam, x, tau)? + no_reset_part(lam, lr, gam, x, tau, x0))
}

/// Full propagator at time `tau` from `x0` (drift-free, exponential jumps).
pub fn propagator_closed_form(params: &ValidatedParams, tau: f64, x0: f64) -> Result<MixedDensity> {
    closed_form_inputs(params)?;
    if !(tau > 0.0) {
        return Err(Error::DomainError(format!("tau = {tau} must be > 0")));
    }
    let p = params.clone();
    Ok(MixedDensity {
        atoms: atom_masses(params, tau, x0),
        continuous: Arc::new(move |x| propagator_continuous(&p, x, tau, x0).unwrap_or(f64::NAN)),
        support: (0.0, f64::INFINITY),
    })
}

/// Atoms plus the integral of the continuous part over `[0, inf)`.
pub fn propagator_total_mass(params: &ValidatedParams, tau: f64, x0: f64) -> Result<f64> {
    propagator_closed_form(params, tau, x0)?.total_mass(&[x0])
}

/// `E[X^n]` under the stationary law, `n` in {1, 2}.
pub fn stationary_moments(params: &ValidatedParams, n: u32) -> Result<f64> {
    if n != 1 && n != 2 {
        return Err(Error::UnsupportedMoment(n));
    }
    let lr = params.lambda_reset;
    if lr <= 0.0 {
        return Err(Error::NoStationaryLaw);
    }
    let lam = params.lambda_jump;
    let speed = params.gamma_drift + if lam > 0.0 { lam * params.jump_law.moment(1)? } else { 0.0 };
    if n == 1 {
        return Ok(speed / lr);
    }
    let jumps = if lam > 0.0 { lam / lr * params.jump_law.moment(2)? } else { 0.0 };
    Ok(jumps + 2.0 * speed * speed / (lr * lr))
}

fn check_exit_args(b: f64, x: f64) -> Result<()> {
    if !(b > 0.0) {
        return Err(Error::DomainError(format!("upper level b = {b} must be > 0")));
    }
    if !(0.0..=b).contains(&x) {
        return Err(Error::DomainError(format!("start x = {x} outside [0, {b}]")));
    }
    Ok(())
}

/// `(1 - e^{-a z}) / a`, continuous at `a = 0`.
fn one_minus_exp_over(a: f64, z: f64) -> f64 {
    if a == 0.0 {
        z
    } else {
        -(-a * z).exp_m1() / a
    }
}

/// Mean time to leave `[0, b]` starting from `x`, for exponential jumps and
/// positive drift. `lambda_reset = 0` falls back to the reset-free formula.
pub fn mean_exit_time(params: &ValidatedParams, b: f64, x: f64) -> Result<f64> {
    check_exit_args(b, x)?;
    let gam = params.jump_law.exponential_rate().ok_or(Error::ExponentialLawRequired)?;
    let g = params.gamma_drift;
    if g <= 0.0 {
        return Err(Error::UnsupportedRegime(
            "mean exit time needs gamma_drift > 0; see met_limit(NoDrift)".into(),
        ));
    }
    let lr = params.lambda_reset;
    if lr == 0.0 {
        return met_limit(params, b, x, MetLimit::NoReset);
    }
    if x == b {
        return Ok(0.0);
    }
    let rt = exit_roots(g, params.lambda_jump, re(lr), gam);
    let (ap, am) = (rt.alpha_plus.re, rt.alpha_minus.re);
    let z = b - x;
    let numer = rt.ap_minus_gamma.re * one_minus_exp_over(ap, z) + rt.gamma_minus_am.re * one_minus_exp_over(am, z);
    let denom = rt.r_minus_drift_am.re * (-ap * b).exp() + rt.drift_ap_minus_r.re * (-am * b).exp();
    Ok(numer / denom)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MetLimit {
    NoReset,
    InfiniteReset,
    NoDrift,
    InfiniteDrift,
}

/// Mean exit time in a limiting regime, taking the parameters that the
/// limit keeps from `params`.
pub fn met_limit(params: &ValidatedParams, b: f64, x: f64, kind: MetLimit) -> Result<f64> {
    check_exit_args(b, x)?;
    let gam = params.jump_law.exponential_rate().ok_or(Error::ExponentialLawRequired)?;
    let lam = params.lambda_jump;
    let lr = params.lambda_reset;
    let g = params.gamma_drift;
    let z = b - x;
    let need = |ok: bool, what: &str| {
        if ok {
            Ok(())
        } else {
            Err(Error::UnsupportedRegime(format!("{kind:?} limit needs {what}")))
        }
    };
    match kind {
        MetLimit::NoReset => {
            if g == 0.0 {
                need(lam > 0.0, "lambda_jump > 0 when gamma_drift = 0")?;
                return Ok((1.0 + gam * z) / lam);
            }
            let c = lam + g * gam;
            Ok(gam * z / c - lam / (c * c) * (-c * z / g).exp_m1())
        }
        MetLimit::InfiniteReset => {
            need(lam > 0.0, "lambda_jump > 0")?;
            Ok((gam * b).exp() / lam)
        }
        MetLimit::NoDrift => {
            need(lam > 0.0 && lr > 0.0, "lambda_jump > 0 and lambda_reset > 0")?;
            let alpha = gam * lr / (lam + lr);
            Ok((alpha * b).exp() * (1.0 / lam - (-alpha * z).exp_m1() / lr))
        }
        MetLimit::InfiniteDrift => Ok(0.0),
    }
}

/// Residual of the mean-exit-time integral equation at `x`: the closed form
/// is substituted on both sides and the double integral done numerically.
pub fn met_integral_residual(params: &ValidatedParams, b: f64, x: f64) -> Result<f64> {
    let t = |y: f64| mean_exit_time(params, b, y).unwrap_or(f64::NAN);
    let gam = params.jump_law.exponential_rate().ok_or(Error::ExponentialLawRequired)?;
    let lam = params.lambda_jump;
    let lr = params.lambda_reset;
    let g = params.gamma_drift;
    let c = (lam + lr) / g;
    let zmax = b - x;
    let lhs = mean_exit_time(params, b, x)?;
    let first = (1.0 + lr * t(0.0)) / (lam + lr) * -(-c * zmax).exp_m1();
    let inner = |z: f64| -> f64 {
        let h = |u: f64| gam * (-gam * u).exp() * t(b - z + u);
        match integrate(h, 0.0, z, 1e-13, 1e-12) {
            Ok(q) => (-c * (zmax - z)).exp() * q.value,
            Err(_) => f64::NAN,
        }
    };
    let second = lam / g * integrate(inner, 0.0, zmax, 1e-12, 1e-11)?.value;
    let r = lhs - first - second;
    if r.is_finite() {
        Ok(r.abs())
    } else {
        Err(Error::QuadratureFailure("mean exit time residual".into()))
    }
}

/// Residual of the renewal equation for the drift-free propagator, evaluated
/// on the continuous part at `x > 0`, `x != x0`. The atom contributions on
/// the right-hand side are integrated analytically.
pub fn renewal_residual(params: &ValidatedParams, x: f64, tau: f64, x0: f64) -> Result<f64> {
    let gam = closed_form_inputs(params)?;
    if !(x > 0.0) || x == x0 {
        return Err(Error::DomainError(format!("renewal residual needs x > 0 and x != x0, got x = {x}")));
    }
    let lam = params.lambda_jump;
    let lr = params.lambda_reset;
    let total = lam + lr;
    let lhs = propagator_continuous(params, x, tau, x0)?;
    let reset = |t: f64| reset_part(lam, lr, gam, x, t).unwrap_or(f64::NAN);
    let cont_from_origin = |t: f64| reset(t) + no_reset_part(lam, lr, gam, x, t, 0.0);

    // restart at the origin after a first reset at tau'
    let via_reset = integrate(|tp| lr * (-total * tp).exp() * cont_from_origin(tau - tp), 0.0, tau, 1e-12, 1e-10)?.value;

    // first event is a jump of size u at tau''
    let reach = (x - x0).max(0.0);
    let after_jump = |t: f64| -> f64 {
        let tail = integrate(
            |u| gam * (-gam * u).exp() * no_reset_part(lam, lr, gam, x, t, x0 + u),
            0.0,
            reach,
            1e-13,
            1e-11,
        )
        .map(|q| q.value)
        .unwrap_or(f64::NAN);
        reset(t) + tail
    };
    let via_jump = integrate(|tpp| lam * (-total * tpp).exp() * after_jump(tau - tpp), 0.0, tau, 1e-12, 1e-10)?.value;
    let front = if x > x0 { lam * tau * (-total * tau).exp() * gam * (-gam * (x - x0)).exp() } else { 0.0 };

    let r = lhs - via_reset - via_jump - front;
    if r.is_finite() {
        Ok(r.abs())
    } else {
        Err(Error::QuadratureFailure("renewal residual".into()))
    }
}

/// Integral of `x f(x)` for the stationary continuous part plus atoms.
pub fn stationary_mean_by_quadrature(params: &ValidatedParams) -> Result<f64> {
    let d = stationary_density(params, Domain::X)?;
    let atoms: f64 = d.atoms.iter().map(|a| a.location * a.mass).sum();
    let q = integrate_to_infinity(|x| x * d.density(x), 0.0, 1e-13, 1e-12)?;
    Ok(atoms + q.value)
}
