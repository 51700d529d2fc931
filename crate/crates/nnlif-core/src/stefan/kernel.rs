//! Heat kernel and exact panel moments used by the product-integration rules.

use std::f64::consts::PI;

use libm::{erf, erfc};

use crate::error::{invalid, Result};

/// `G(x, tau, xi, eta) = exp(-(x - xi)^2 / (4 (tau - eta))) / sqrt(4 pi (tau - eta))`.
pub fn heat_kernel(x: f64, tau: f64, xi: f64, eta: f64) -> Result<f64> {
    let r = tau - eta;
    if !(r > 0.0) {
        return Err(invalid(format!(
            "heat kernel needs tau > eta, got tau = {tau}, eta = {eta}"
        )));
    }
    let d = x - xi;
    Ok((-d * d / (4.0 * r)).exp() / (4.0 * PI * r).sqrt())
}

/// `dG/dx = -(x - xi) / (2 (tau - eta)) G`.
pub fn heat_kernel_dx(x: f64, tau: f64, xi: f64, eta: f64) -> Result<f64> {
    let g = heat_kernel(x, tau, xi, eta)?;
    Ok(-(x - xi) / (2.0 * (tau - eta)) * g)
}

/// `erf(b) - erf(a)` without cancellation in the tails.
pub(crate) fn erf_diff(a: f64, b: f64) -> f64 {
    if a > 0.5 && b > 0.5 {
        erfc(a) - erfc(b)
    } else if a < -0.5 && b < -0.5 {
        erfc(-b) - erfc(-a)
    } else {
        erf(b) - erf(a)
    }
}

/// Weights of the endpoint values of a linear function on a panel.
///
/// The panel spans `r` in `[ra, rb]`; `w0` and `w1` are the zeroth and first
/// moments of the weight in `r`. Returns the weights of the values at `r = rb`
/// and `r = ra`.
#[inline]
pub(crate) fn hat_weights(ra: f64, rb: f64, w0: f64, w1: f64) -> (f64, f64) {
    let h = rb - ra;
    ((w1 - ra * w0) / h, (rb * w0 - w1) / h)
}

/// Moments of `r^{-1/2}` over `[ra, rb]`.
#[inline]
pub(crate) fn sqrt_moments(ra: f64, rb: f64) -> (f64, f64) {
    let (sa, sb) = (ra.sqrt(), rb.sqrt());
    (2.0 * (sb - sa), 2.0 / 3.0 * (rb * sb - ra * sa))
}

/// Antiderivative of `r^{-1/2} exp(-d^2 / 4r)`, zero at `r = 0`.
fn gauss_f(d: f64, r: f64) -> f64 {
    if r <= 0.0 {
        return 0.0;
    }
    let a = d.abs();
    2.0 * r.sqrt() * (-d * d / (4.0 * r)).exp() - a * PI.sqrt() * erfc(a / (2.0 * r.sqrt()))
}

/// Antiderivative of `r^{1/2} exp(-d^2 / 4r)`, zero at `r = 0`.
fn gauss_h(d: f64, r: f64) -> f64 {
    if r <= 0.0 {
        return 0.0;
    }
    2.0 / 3.0 * r * r.sqrt() * (-d * d / (4.0 * r)).exp() - d * d / 6.0 * gauss_f(d, r)
}

/// Moments of `G = (4 pi r)^{-1/2} exp(-d^2 / 4r)` in `r` over `[ra, rb]`.
pub(crate) fn gauss_moments(d: f64, ra: f64, rb: f64) -> (f64, f64) {
    let c = 1.0 / (4.0 * PI).sqrt();
    (
        c * (gauss_f(d, rb) - gauss_f(d, ra)),
        c * (gauss_h(d, rb) - gauss_h(d, ra)),
    )
}

/// Moments of `-2 dG/dx = d (4 pi)^{-1/2} r^{-3/2} exp(-d^2 / 4r)` over `[ra, rb]`.
pub(crate) fn source_moments(d: f64, ra: f64, rb: f64) -> (f64, f64) {
    let a = d.abs();
    let e = |r: f64| {
        if r <= 0.0 {
            0.0
        } else {
            erfc(a / (2.0 * r.sqrt()))
        }
    };
    let m0 = d.signum() * (e(rb) - e(ra));
    let m1 = d / (4.0 * PI).sqrt() * (gauss_f(d, rb) - gauss_f(d, ra));
    (m0, m1)
}

/// Moments of `erfc` in `z`: antiderivatives of `erfc(z)` and `z erfc(z)` over `[za, zb]`.
pub(crate) fn erfc_moments(za: f64, zb: f64) -> (f64, f64) {
    let f0 = |z: f64| z * erfc(z) - (-z * z).exp() / PI.sqrt();
    let f1 = |z: f64| 0.5 * (z * z - 0.5) * erfc(z) - z * (-z * z).exp() / (2.0 * PI.sqrt());
    (f0(zb) - f0(za), f1(zb) - f1(za))
}
