//! Model parameters and jump-size laws.
//!
//! The process grows at constant velocity `gamma_drift` between events, jumps
//! upward by i.i.d. amounts at Poisson rate `lambda_jump`, and is sent back to
//! the origin at Poisson rate `lambda_reset`. Rates are plain `f64` in units of
//! 1/time; positions are dimensionless.

use std::fmt;
use std::ops::Deref;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result, Violation};

pub type DensityFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
pub type TransformFn = Arc<dyn Fn(Complex64) -> Complex64 + Send + Sync>;

/// A user-supplied jump-size law on `u >= 0`.
///
/// The Laplace transform must be given explicitly; nothing here integrates
/// the density symbolically.
#[derive(Clone)]
pub struct CustomLaw {
    pub pdf: DensityFn,
    pub laplace: Option<TransformFn>,
    pub mean: Option<f64>,
    pub second_moment: Option<f64>,
    /// Inverse CDF, used for sampling from a uniform variate in (0, 1).
    pub quantile: Option<DensityFn>,
    /// The transform converges for `Re(omega) > abscissa`.
    pub abscissa: f64,
    /// Set when `laplace` is analytic off the negative real axis, so contour
    /// (Talbot) inversion may evaluate it at complex arguments.
    pub contour_safe: bool,
}

impl CustomLaw {
    pub fn new(pdf: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        CustomLaw {
            pdf: Arc::new(pdf),
            laplace: None,
            mean: None,
            second_moment: None,
            quantile: None,
            abscissa: 0.0,
            contour_safe: false,
        }
    }

    pub fn with_laplace(
        mut self,
        f: impl Fn(Complex64) -> Complex64 + Send + Sync + 'static,
        abscissa: f64,
        contour_safe: bool,
    ) -> Self {
        self.laplace = Some(Arc::new(f));
        self.abscissa = abscissa;
        self.contour_safe = contour_safe;
        self
    }

    pub fn with_moments(mut self, mean: Option<f64>, second_moment: Option<f64>) -> Self {
        self.mean = mean;
        self.second_moment = second_moment;
        self
    }

    pub fn with_quantile(mut self, q: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        self.quantile = Some(Arc::new(q));
        self
    }
}

impl fmt::Debug for CustomLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomLaw")
            .field("has_laplace", &self.laplace.is_some())
            .field("mean", &self.mean)
            .field("second_moment", &self.second_moment)
            .field("has_quantile", &self.quantile.is_some())
            .field("abscissa", &self.abscissa)
            .field("contour_safe", &self.contour_safe)
            .finish()
    }
}

/// Jump-size density `h(u)`, zero for `u < 0`.
#[derive(Clone, Debug)]
pub enum JumpLaw {
    /// `h(u) = gamma e^{-gamma u}`.
    Exponential { rate: f64 },
    Custom(CustomLaw),
}

impl JumpLaw {
    pub fn exponential(rate: f64) -> Self {
        JumpLaw::Exponential { rate }
    }

    pub fn exponential_rate(&self) -> Option<f64> {
        match self {
            JumpLaw::Exponential { rate } => Some(*rate),
            JumpLaw::Custom(_) => None,
        }
    }

    pub fn pdf(&self, u: f64) -> f64 {
        if u < 0.0 {
            return 0.0;
        }
        match self {
            JumpLaw::Exponential { rate } => rate * (-rate * u).exp(),
            JumpLaw::Custom(c) => (c.pdf)(u),
        }
    }

    /// `P(u_lo < J <= u_hi)` for the exponential law; custom laws fall back on
    /// quadrature of the density.
    pub fn interval_probability(&self, lo: f64, hi: f64) -> f64 {
        let lo = lo.max(0.0);
        if hi <= lo {
            return 0.0;
        }
        match self {
            JumpLaw::Exponential { rate } => {
                let a = (-rate * lo).exp();
                if hi.is_infinite() {
                    a
                } else {
                    a * -(-rate * (hi - lo)).exp_m1()
                }
            }
            JumpLaw::Custom(c) => {
                let f = |u: f64| (c.pdf)(u);
                let r = if hi.is_infinite() {
                    crate::quadrature::integrate_to_infinity(f, lo, 1e-12, 1e-10)
                } else {
                    crate::quadrature::integrate(f, lo, hi, 1e-12, 1e-10)
                };
                r.map(|q| q.value).unwrap_or(f64::NAN)
            }
        }
    }

    /// Abscissa of convergence of the transform.
    pub fn abscissa(&self) -> f64 {
        match self {
            JumpLaw::Exponential { rate } => -rate,
            JumpLaw::Custom(c) => c.abscissa,
        }
    }

    /// True when the transform may be evaluated on a Talbot contour.
    pub fn contour_safe(&self) -> bool {
        match self {
            JumpLaw::Exponential { .. } => true,
            JumpLaw::Custom(c) => c.contour_safe && c.laplace.is_some(),
        }
    }

    /// `h~(omega) = int_0^inf h(u) e^{-omega u} du`.
    pub fn laplace(&self, omega: Complex64) -> Result<Complex64> {
        match self {
            JumpLaw::Exponential { rate } => {
                if omega.re <= -rate {
                    return Err(Error::PoleEvaluation(format!(
                        "Re(omega) = {} <= -gamma = {}",
                        omega.re, -rate
                    )));
                }
                Ok(*rate / (*rate + omega))
            }
            JumpLaw::Custom(c) => {
                let f = c.laplace.as_ref().ok_or(Error::MissingLaplace)?;
                if omega.re <= c.abscissa {
                    return Err(Error::PoleEvaluation(format!(
                        "Re(omega) = {} <= abscissa {}",
                        omega.re, c.abscissa
                    )));
                }
                Ok(f(omega))
            }
        }
    }

    /// Transform at a complex point, skipping the abscissa check. Used on
    /// inversion contours, which wrap around the singularities by design of
    /// the contour rather than staying to their right.
    pub(crate) fn laplace_on_contour(&self, omega: Complex64) -> Result<Complex64> {
        match self {
            JumpLaw::Exponential { rate } => Ok(*rate / (*rate + omega)),
            JumpLaw::Custom(c) => c.laplace.as_ref().map(|f| f(omega)).ok_or(Error::MissingLaplace),
        }
    }

    pub fn laplace_real(&self, omega: f64) -> Result<f64> {
        self.laplace(Complex64::new(omega, 0.0)).map(|z| z.re)
    }

    /// Raw moment `mu_n` of the jump size, `n` in {1, 2}.
    pub fn moment(&self, n: u32) -> Result<f64> {
        if n != 1 && n != 2 {
            return Err(Error::UnsupportedMoment(n));
        }
        match self {
            JumpLaw::Exponential { rate } => Ok(if n == 1 { 1.0 / rate } else { 2.0 / (rate * rate) }),
            JumpLaw::Custom(c) => {
                let m = if n == 1 { c.mean } else { c.second_moment };
                m.filter(|v| v.is_finite()).ok_or(Error::InfiniteMoment(n))
            }
        }
    }
}

/// `h~(omega)` for a jump law.
pub fn jump_laplace(law: &JumpLaw, omega: Complex64) -> Result<Complex64> {
    law.laplace(omega)
}

/// `mu_n` for a jump law.
pub fn jump_moment(law: &JumpLaw, n: u32) -> Result<f64> {
    law.moment(n)
}

/// Which exponential maps the position onto the observable.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum ObservableSign {
    /// `Y = Y0 e^{X}`
    #[default]
    Plus,
    /// `Y = Y0 e^{-X}`
    Minus,
}

impl ObservableSign {
    pub fn as_f64(self) -> f64 {
        match self {
            ObservableSign::Plus => 1.0,
            ObservableSign::Minus => -1.0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct ModelParams {
    /// Drift velocity (x-units per unit time).
    pub gamma_drift: f64,
    /// Jump intensity (1/time).
    pub lambda_jump: f64,
    /// Reset intensity (1/time).
    pub lambda_reset: f64,
    pub jump_law: JumpLaw,
    pub x0: f64,
    pub y0: f64,
    pub observable_sign: ObservableSign,
}

impl ModelParams {
    /// Exponential jump sizes with rate `jump_gamma`, started at the origin.
    pub fn exponential(gamma_drift: f64, lambda_jump: f64, lambda_reset: f64, jump_gamma: f64) -> Self {
        ModelParams {
            gamma_drift,
            lambda_jump,
            lambda_reset,
            jump_law: JumpLaw::exponential(jump_gamma),
            x0: 0.0,
            y0: 1.0,
            observable_sign: ObservableSign::Plus,
        }
    }

    pub fn with_x0(mut self, x0: f64) -> Self {
        self.x0 = x0;
        self
    }

    pub fn with_y0(mut self, y0: f64) -> Self {
        self.y0 = y0;
        self
    }

    pub fn with_sign(mut self, sign: ObservableSign) -> Self {
        self.observable_sign = sign;
        self
    }

    pub fn with_jump_law(mut self, law: JumpLaw) -> Self {
        self.jump_law = law;
        self
    }

    pub fn validate(self) -> Result<ValidatedParams> {
        validate(self)
    }

    /// Parse a flat `key = value` file. Blank lines and `#` comments are
    /// ignored; unknown keys are an error. Unset keys keep their defaults
    /// (`Exponential` law with rate 1, everything else zero, `y0 = 1`).
    pub fn from_config_str(text: &str) -> Result<Self> {
        let mut p = ModelParams::exponential(0.0, 0.0, 0.0, 1.0);
        p.apply_config_str(text)?;
        Ok(p)
    }

    /// Overlay the keys set in a config text onto `self`.
    pub fn apply_config_str(&mut self, text: &str) -> Result<()> {
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key=value", lineno + 1)))?;
            self.set(k.trim(), v.trim())
                .map_err(|e| Error::Config(format!("line {}: {e}", lineno + 1)))?;
        }
        Ok(())
    }

    /// Set one parameter by its config key.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        if key == "sign" {
            self.observable_sign = match value {
                "+1" | "1" | "plus" | "+" => ObservableSign::Plus,
                "-1" | "minus" | "-" => ObservableSign::Minus,
                other => return Err(Error::Config(format!("bad sign '{other}'"))),
            };
            return Ok(());
        }
        let v: f64 = value
            .parse()
            .map_err(|_| Error::Config(format!("'{value}' is not a number for key '{key}'")))?;
        match key {
            "gamma_drift" => self.gamma_drift = v,
            "lambda_jump" => self.lambda_jump = v,
            "lambda_reset" => self.lambda_reset = v,
            "jump_gamma" => self.jump_law = JumpLaw::exponential(v),
            "x0" => self.x0 = v,
            "y0" => self.y0 = v,
            other => return Err(Error::Config(format!("unknown key '{other}'"))),
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Warning {
    /// Neither drift nor jumps: the process never moves away from its resets.
    ZeroMotion,
}

/// Parameters that passed [`validate`]. Immutable; cheap to clone and share.
#[derive(Clone, Debug)]
pub struct ValidatedParams {
    inner: ModelParams,
    warnings: Vec<Warning>,
}

impl Deref for ValidatedParams {
    type Target = ModelParams;
    fn deref(&self) -> &ModelParams {
        &self.inner
    }
}

impl ValidatedParams {
    pub fn warnings(&self) -> &[Warning] {
        &self.warnings
    }

    pub fn params(&self) -> &ModelParams {
        &self.inner
    }

    /// Same parameters started from a different point.
    pub fn with_x0(&self, x0: f64) -> Result<ValidatedParams> {
        self.inner.clone().with_x0(x0).validate()
    }

    pub fn with_reset_rate(&self, lambda_reset: f64) -> Result<ValidatedParams> {
        let mut p = self.inner.clone();
        p.lambda_reset = lambda_reset;
        p.validate()
    }

    /// Exponential jump rate, or `ExponentialLawRequired`.
    pub fn gamma_jump(&self) -> Result<f64> {
        self.jump_law.exponential_rate().ok_or(Error::ExponentialLawRequired)
    }

    /// Total event rate `lambda_jump + lambda_reset`.
    pub fn event_rate(&self) -> f64 {
        self.lambda_jump + self.lambda_reset
    }
}

/// Check every parameter invariant and collect all violations at once.
pub fn validate(params: ModelParams) -> Result<ValidatedParams> {
    let mut bad = Vec::new();
    let fields = [
        ("gamma_drift", params.gamma_drift),
        ("lambda_jump", params.lambda_jump),
        ("lambda_reset", params.lambda_reset),
    ];
    for (name, value) in fields {
        if !value.is_finite() {
            bad.push(Violation::NonFinite(name));
        } else if value < 0.0 {
            bad.push(Violation::NegativeRate { name, value });
        }
    }
    if !params.x0.is_finite() {
        bad.push(Violation::NonFinite("x0"));
    } else if params.x0 < 0.0 {
        bad.push(Violation::NegativeStart(params.x0));
    }
    if !(params.y0 > 0.0 && params.y0.is_finite()) {
        bad.push(Violation::NonPositiveScale(params.y0));
    }
    if let JumpLaw::Exponential { rate } = params.jump_law {
        if !(rate > 0.0 && rate.is_finite()) {
            bad.push(Violation::NonPositiveJumpRate(rate));
        }
    }
    if !bad.is_empty() {
        return Err(Error::InvalidParams(bad));
    }
    let mut warnings = Vec::new();
    if params.gamma_drift == 0.0 && params.lambda_jump == 0.0 {
        log::warn!("gamma_drift = lambda_jump = 0: the process is frozen at its reset point");
        warnings.push(Warning::ZeroMotion);
    }
    Ok(ValidatedParams { inner: params, warnings })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature;
    use approx::assert_relative_eq;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn fig2_params_are_valid() {
        let p = ModelParams::exponential(2.0, 1.0, 2.0, 1.0).validate().unwrap();
        assert!(p.warnings().is_empty());
    }

    #[test]
    fn frozen_process_warns_but_validates() {
        let p = ModelParams::exponential(0.0, 0.0, 1.0, 1.0).validate().unwrap();
        assert_eq!(p.warnings(), &[Warning::ZeroMotion]);
    }

    #[test]
    fn negative_rate_rejected_with_all_violations() {
        let mut p = ModelParams::exponential(-1.0, 1.0, -2.0, 1.0);
        p.x0 = -0.5;
        match p.validate() {
            Err(Error::InvalidParams(v)) => {
                assert_eq!(v.len(), 3);
                assert!(matches!(v[0], Violation::NegativeRate { name: "gamma_drift", .. }));
            }
            other => panic!("expected InvalidParams, got {other:?}"),
        }
    }

    #[test]
    fn exponential_laplace_values() {
        assert_eq!(JumpLaw::exponential(1.0).laplace(c(0.0)).unwrap().re, 1.0);
        assert_eq!(JumpLaw::exponential(1.0).laplace(c(1.0)).unwrap().re, 0.5);
        assert_eq!(JumpLaw::exponential(2.0).laplace(c(2.0)).unwrap().re, 0.5);
        assert!(matches!(
            JumpLaw::exponential(1.0).laplace(c(-1.0)),
            Err(Error::PoleEvaluation(_))
        ));
    }

    #[test]
    fn exponential_moments() {
        assert_eq!(jump_moment(&JumpLaw::exponential(1.0), 1).unwrap(), 1.0);
        assert_eq!(jump_moment(&JumpLaw::exponential(2.0), 2).unwrap(), 0.5);
        assert_eq!(jump_moment(&JumpLaw::exponential(1.0), 2).unwrap(), 2.0);
        assert!(matches!(JumpLaw::exponential(1.0).moment(3), Err(Error::UnsupportedMoment(3))));
    }

    #[test]
    fn custom_law_without_moments_or_transform() {
        let law = JumpLaw::Custom(CustomLaw::new(|u| (-u).exp()));
        assert!(matches!(law.moment(1), Err(Error::InfiniteMoment(1))));
        assert!(matches!(law.laplace(c(1.0)), Err(Error::MissingLaplace)));
    }

    #[test]
    fn exponential_laplace_matches_quadrature() {
        for &g in &[0.5, 1.0, 3.0] {
            let law = JumpLaw::exponential(g);
            for &w in &[0.0, 0.3, 1.0, 4.0] {
                let q = quadrature::integrate(|u| law.pdf(u) * (-w * u).exp(), 0.0, 40.0 / g, 1e-14, 1e-13)
                    .unwrap()
                    .value;
                // truncation at 40/gamma leaves e^{-40} of mass behind
                assert!((q - law.laplace_real(w).unwrap()).abs() < 1e-9, "g={g} w={w}");
            }
        }
    }

    #[test]
    fn custom_law_normalization_and_mean_by_finite_difference() {
        // Gamma(2, 1) jump sizes: h(u) = u e^{-u}, h~ = 1/(1+w)^2, mu1 = 2.
        let law = JumpLaw::Custom(
            CustomLaw::new(|u| u * (-u).exp())
                .with_laplace(|w| (Complex64::new(1.0, 0.0) + w).powi(-2), -1.0, true)
                .with_moments(Some(2.0), Some(6.0)),
        );
        let norm = quadrature::integrate_to_infinity(|u| law.pdf(u), 0.0, 1e-14, 1e-13).unwrap().value;
        assert!((norm - 1.0).abs() < 1e-10);
        assert!((law.laplace_real(0.0).unwrap() - 1.0).abs() < 1e-10);
        let h = 1e-5;
        let d = (law.laplace_real(h).unwrap() - law.laplace_real(-h).unwrap()) / (2.0 * h);
        assert!((-d - law.moment(1).unwrap()).abs() < 1e-6);
    }

    #[test]
    fn config_round_trip() {
        let text = "# fig 2\ngamma_drift = 2\nlambda_jump=1\nlambda_reset = 2 # resets\njump_gamma=1\nx0=0.5\ny0=1\nsign=-1\n";
        let p = ModelParams::from_config_str(text).unwrap();
        assert_eq!(p.gamma_drift, 2.0);
        assert_eq!(p.lambda_reset, 2.0);
        assert_eq!(p.x0, 0.5);
        assert_eq!(p.observable_sign, ObservableSign::Minus);
        assert_relative_eq!(p.jump_law.exponential_rate().unwrap(), 1.0);
        assert!(matches!(ModelParams::from_config_str("bogus=1"), Err(Error::Config(_))));
        assert!(matches!(ModelParams::from_config_str("x0"), Err(Error::Config(_))));
    }
}
