//! Duhamel reconstruction of `u` from `u0` and the flux.
//!
//! `u(x, tau) = ∫ G(x, tau, xi, 0) u0(xi) dxi - ∫ M G(x, tau, s(eta), eta) deta
//!            + ∫ M G(x, tau, s1(eta), eta) deta`.

use std::cell::Cell;

use libm::erfc;

use crate::error::{invalid, Result};
use crate::quadrature::composite_gauss;

use super::kernel::{erf_diff, erfc_moments, gauss_moments, hat_weights};
use super::profile::PiecewiseLinear;
use super::StefanSolution;

/// Sub-panels per flux panel in the boundary terms.
const SUBDIVISIONS: usize = 4;
/// Panels in `q = sqrt(tau - eta)` for the mass integrals.
const MASS_PANELS: usize = 4000;

/// Flux nodes on `[0, tau]` with `M`, `s` and `s1` at each node.
struct Panels {
    eta: Vec<f64>,
    m: Vec<f64>,
    s: Vec<f64>,
    s1: Vec<f64>,
    /// `s'(tau)` and `s1'(tau)`, the secant limits at `eta = tau`.
    ds: f64,
    ds1: f64,
}

fn panels(solution: &StefanSolution, tau: f64) -> Result<Panels> {
    let boundary = solution.boundary()?;
    let mut nodes: Vec<f64> = solution.tau.iter().copied().filter(|&t| t < tau).collect();
    nodes.push(tau);
    let mut eta = vec![nodes[0]];
    for w in nodes.windows(2) {
        for k in 1..=SUBDIVISIONS {
            eta.push(w[0] + (w[1] - w[0]) * k as f64 / SUBDIVISIONS as f64);
        }
    }
    let m = eta
        .iter()
        .map(|&e| solution.flux_at(e))
        .collect::<Result<Vec<_>>>()?;
    let s = eta
        .iter()
        .map(|&e| boundary.s(e))
        .collect::<Result<Vec<_>>>()?;
    let s1 = eta
        .iter()
        .map(|&e| boundary.s1(e))
        .collect::<Result<Vec<_>>>()?;
    let ds = -boundary.input(tau);
    let ds1 = ds + solution.map.v_r * solution.map.alpha(tau);
    Ok(Panels {
        eta,
        m,
        s,
        s1,
        ds,
        ds1,
    })
}

/// `∫ M(eta) G(x, tau, c(eta), eta) deta` over the panels for a moving source `c`.
///
/// With `d = x - c(tau)` and the secant `S = (c(tau) - c(eta)) / (tau - eta)`,
/// `G = (4 pi r)^{-1/2} exp(-d^2/4r) exp(-d S/2 - S^2 r/4)`; the second factor
/// times `M` is linear per panel and the first is integrated exactly.
fn moving_source(p: &Panels, c: &[f64], dc: f64, x: f64, tau: f64) -> f64 {
    let n = p.eta.len();
    let d = x - c[n - 1];
    let weight = |k: usize| -> f64 {
        let r = tau - p.eta[k];
        let secant = if r > 0.0 { (c[n - 1] - c[k]) / r } else { dc };
        let e = -0.5 * d * secant - 0.25 * secant * secant * r;
        p.m[k] * e.min(700.0).exp()
    };
    let mut total = 0.0;
    let mut right = weight(0);
    for k in 0..n - 1 {
        let left = right;
        right = weight(k + 1);
        let (ra, rb) = (tau - p.eta[k + 1], tau - p.eta[k]);
        let (g0, g1) = gauss_moments(d, ra, rb);
        let (wb, wa) = hat_weights(ra, rb, g0, g1);
        total += wb * left + wa * right;
    }
    total
}

/// `∫ G(x, tau, xi, 0) u0(xi) dxi`, exact for piecewise-linear `u0`.
pub(crate) fn heat_evolution(u0: &PiecewiseLinear, x: f64, tau: f64) -> f64 {
    let (xs, ys) = (u0.xs(), u0.ys());
    let scale = 2.0 * tau.sqrt();
    let reach = 9.0 * scale;
    let lo = xs.partition_point(|&xi| xi < x - reach).saturating_sub(1);
    let hi = (xs.partition_point(|&xi| xi <= x + reach) + 1).min(xs.len());
    let root = (tau / std::f64::consts::PI).sqrt();
    let mut total = 0.0;
    for k in lo..hi.saturating_sub(1) {
        if xs[k + 1] <= xs[k] {
            continue;
        }
        let slope = u0.slope(k);
        let (za, zb) = ((xs[k] - x) / scale, (xs[k + 1] - x) / scale);
        let i0 = 0.5 * erf_diff(za, zb);
        let i1 = -root * ((-zb * zb).exp() - (-za * za).exp());
        total += (ys[k] + slope * (x - xs[k])) * i0 + slope * i1;
    }
    total
}

/// `u(x, tau)` at each `x <= s(tau)`.
pub fn duhamel_u(solution: &StefanSolution, x: &[f64], tau: f64) -> Result<Vec<f64>> {
    solution.check_range(tau)?;
    let s_end = solution.boundary()?.s(tau)?;
    if let Some(&bad) = x.iter().find(|&&xi| xi > s_end + 1e-9) {
        return Err(invalid(format!(
            "x = {bad} lies beyond the boundary s = {s_end}"
        )));
    }
    if tau == 0.0 {
        let u0 = &solution.u0;
        return Ok(x
            .iter()
            .map(|&xi| if xi < u0.start() { 0.0 } else { u0.eval(xi) })
            .collect());
    }
    let p = panels(solution, tau)?;
    Ok(x.iter()
        .map(|&xi| {
            heat_evolution(&solution.u0, xi, tau) - moving_source(&p, &p.s, p.ds, xi, tau)
                + moving_source(&p, &p.s1, p.ds1, xi, tau)
        })
        .collect())
}

/// `∫_{-inf}^{s(tau)} u(x, tau) dx` from the Duhamel terms, integrated in `x` exactly.
pub fn stefan_mass(solution: &StefanSolution, tau: f64) -> Result<f64> {
    solution.check_range(tau)?;
    let u0 = &solution.u0;
    if tau == 0.0 {
        return Ok(u0.integral());
    }
    let boundary = solution.boundary()?;
    let edge = boundary.s(tau)?;
    let root = tau.sqrt();
    let (xs, ys) = (u0.xs(), u0.ys());
    let mut mass = 0.0;
    for k in 0..xs.len() - 1 {
        if xs[k + 1] <= xs[k] {
            continue;
        }
        let slope = u0.slope(k);
        let (za, zb) = (
            (xs[k] - edge) / (2.0 * root),
            (xs[k + 1] - edge) / (2.0 * root),
        );
        let (e0, e1) = erfc_moments(za, zb);
        mass += root * ((ys[k] + slope * (edge - xs[k])) * e0 + 2.0 * root * slope * e1);
    }
    // eta = tau - q^2 removes the square-root behaviour at eta = tau.
    let err = Cell::new(None);
    let boundary_terms = composite_gauss(
        |q| {
            let eta = tau - q * q;
            let r = q * q;
            let m = match solution.flux_at(eta) {
                Ok(m) => m,
                Err(e) => {
                    err.set(Some(e));
                    return 0.0;
                }
            };
            let (s, s1) = match (boundary.s(eta), boundary.s1(eta)) {
                (Ok(s), Ok(s1)) => (s, s1),
                (Err(e), _) | (_, Err(e)) => {
                    err.set(Some(e));
                    return 0.0;
                }
            };
            let inside = |c: f64| 0.5 * erfc((c - edge) / (2.0 * r.sqrt()));
            2.0 * q * m * (inside(s1) - inside(s))
        },
        0.0,
        root,
        MASS_PANELS,
    );
    if let Some(e) = err.into_inner() {
        return Err(e);
    }
    Ok(mass + boundary_terms)
}
