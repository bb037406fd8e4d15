//! Roots of `Gamma a^2 - (lambda + R + Gamma gamma) a + gamma R = 0`, where
//! `R = lambda_reset + s`, and the differences the exit-time formulas need,
//! each computed without cancellation.

use num_complex::Complex64;

#[derive(Clone, Copy, Debug)]
pub(crate) struct ExitRoots {
    pub alpha_plus: Complex64,
    pub alpha_minus: Complex64,
    /// `Gamma (alpha_plus - alpha_minus)`
    pub delta: Complex64,
    /// `alpha_plus - gamma`
    pub ap_minus_gamma: Complex64,
    /// `gamma - alpha_minus`
    pub gamma_minus_am: Complex64,
    /// `Gamma alpha_plus - R`
    pub drift_ap_minus_r: Complex64,
    /// `R - Gamma alpha_minus`
    pub r_minus_drift_am: Complex64,
}

/// `x + delta`, or `product / (delta - x)` when the direct sum cancels;
/// `product` must equal `delta^2 - x^2`.
fn stable_sum(x: Complex64, delta: Complex64, product: Complex64) -> Complex64 {
    let direct = x + delta;
    let other = delta - x;
    if direct.norm() >= other.norm() {
        direct
    } else {
        product / other
    }
}

/// Roots for drift `g > 0`, jump rate `lam`, effective reset rate `r`, jump
/// rate `gam`. The sign of the square root is chosen so that `alpha_plus` is
/// the root of larger modulus.
pub(crate) fn exit_roots(g: f64, lam: f64, r: Complex64, gam: f64) -> ExitRoots {
    let gg = g * gam;
    let b = r + lam + gg;
    let d = r + lam - gg;
    let e = lam + gg - r;
    let mut delta = (d * d + 4.0 * lam * gg).sqrt();
    if (b - delta).norm() > (b + delta).norm() {
        delta = -delta;
    }
    let bd = b + delta;
    let alpha_plus = bd / (2.0 * g);
    let alpha_minus = 2.0 * gam * r / bd;
    let d_sum = stable_sum(d, delta, Complex64::new(4.0 * lam * gg, 0.0));
    let e_sum = stable_sum(e, delta, 4.0 * lam * r);
    ExitRoots {
        alpha_plus,
        alpha_minus,
        delta,
        ap_minus_gamma: d_sum / (2.0 * g),
        gamma_minus_am: gam * e_sum / bd,
        drift_ap_minus_r: e_sum / 2.0,
        r_minus_drift_am: r * d_sum / bd,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn real(r: f64) -> Complex64 {
        Complex64::new(r, 0.0)
    }

    #[test]
    fn fig2_roots() {
        let x = exit_roots(2.0, 1.0, real(2.0), 1.0);
        assert_eq!(x.alpha_plus.re, 2.0);
        assert_eq!(x.alpha_minus.re, 0.5);
        assert_eq!(x.delta.re, 3.0);
    }

    #[test]
    fn differences_consistent_with_roots() {
        for &(g, lam, r, gam) in &[(1.0, 1.0, 1.0, 1.0), (0.3, 2.0, 5.0, 0.7), (10.0, 1.0, 0.1, 1.0), (1.0, 1.0, 1e6, 1.0)] {
            let x = exit_roots(g, lam, real(r), gam);
            let ap = x.alpha_plus.re;
            let am = x.alpha_minus.re;
            let tol = 1e-9 * (1.0 + ap);
            assert!((x.ap_minus_gamma.re - (ap - gam)).abs() < tol);
            assert!((x.gamma_minus_am.re - (gam - am)).abs() < tol);
            assert!((x.drift_ap_minus_r.re - (g * ap - r)).abs() < 1e-9 * (1.0 + g * ap));
            assert!((x.r_minus_drift_am.re - (r - g * am)).abs() < 1e-9 * (1.0 + r));
            // both are roots
            for a in [ap, am] {
                let q = g * a * a - (lam + r + g * gam) * a + gam * r;
                assert!(q.abs() < 1e-9 * (1.0 + g * ap * ap));
            }
        }
    }

    #[test]
    fn large_reset_rate_keeps_jump_rate_visible() {
        // Gamma alpha_plus - R -> lambda as R -> inf; the naive difference is all cancellation
        let x = exit_roots(1.0, 1.0, real(1e12), 1.0);
        assert!((x.drift_ap_minus_r.re - 1.0).abs() < 1e-6);
    }
}
