//! Modified Bessel function of the first kind, order one.

use std::f64::consts::PI;

/// Power series is used below this argument, the large-argument expansion above.
/// The asymptotic series' smallest term is about `e^{-2z}`, which clears double
/// precision from here on.
const ASYMPTOTIC_FROM: f64 = 20.0;

/// `sum_k (z/2)^{2k+1} / (k! (k+1)!)`, all terms positive.
fn series(z: f64) -> f64 {
    let q = 0.25 * z * z;
    let mut term = 0.5 * z;
    let mut sum = term;
    let mut k = 0.0;
    loop {
        k += 1.0;
        term *= q / (k * (k + 1.0));
        sum += term;
        if term <= f64::EPSILON * 0.25 * sum {
            return sum;
        }
    }
}

/// `e^{-z} I1(z) sqrt(2 pi z)` from the Hankel expansion.
fn asymptotic_core(z: f64) -> f64 {
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut k = 0.0;
    loop {
        k += 1.0;
        let odd = 2.0 * k - 1.0;
        let next = -term * (4.0 - odd * odd) / (k * 8.0 * z);
        if next.abs() >= term.abs() {
            return sum;
        }
        term = next;
        sum += term;
        if term.abs() <= f64::EPSILON * 0.25 * sum.abs() {
            return sum;
        }
    }
}

/// `I1(z)` for `z >= 0`. Overflows to `inf` past `z ~ 713`; use
/// [`bessel_i1_scaled`] there.
pub fn bessel_i1(z: f64) -> f64 {
    let a = z.abs();
    let v = if a < ASYMPTOTIC_FROM {
        series(a)
    } else {
        let e = a.exp();
        if e.is_infinite() {
            return f64::INFINITY.copysign(z);
        }
        e * asymptotic_core(a) / (2.0 * PI * a).sqrt()
    };
    v.copysign(z)
}

/// `e^{-|z|} I1(z)`, finite for every finite `z`.
pub fn bessel_i1_scaled(z: f64) -> f64 {
    let a = z.abs();
    let v = if a < ASYMPTOTIC_FROM {
        series(a) * (-a).exp()
    } else {
        asymptotic_core(a) / (2.0 * PI * a).sqrt()
    };
    v.copysign(z)
}

/// `sqrt(u / v) I1(2 sqrt(u v)) e^{-shift}` for `u, v >= 0`, evaluated without
/// overflow. At `v = 0` this is the limit `u e^{-shift}`.
pub fn bessel_kernel(u: f64, v: f64, shift: f64) -> f64 {
    if u <= 0.0 {
        return 0.0;
    }
    let w = 2.0 * (u * v).sqrt();
    if w < ASYMPTOTIC_FROM {
        // sqrt(u/v) I1(w) = u * sum_k (uv)^k / (k! (k+1)!)
        let q = u * v;
        let mut term = 1.0;
        let mut sum = 1.0;
        let mut k = 0.0;
        while term > f64::EPSILON * 0.25 * sum {
            k += 1.0;
            term *= q / (k * (k + 1.0));
            sum += term;
        }
        u * sum * (-shift).exp()
    } else {
        (u / v).sqrt() * bessel_i1_scaled(w) * (w - shift).exp()
    }
}
