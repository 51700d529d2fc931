//! Picard iteration for the flux `M` on one window.
//!
//! For a window starting at `tau0` with profile `u_start` on `(-inf, s(tau0)]`,
//!
//! `M(tau) = -2 ∫ G(s(tau), tau, xi, tau0) u_start'(xi) dxi`
//! `       + 2 ∫ M(eta) dG/dx(s(tau), tau, s(eta), eta) deta`
//! `       - 2 ∫ M(eta) dG/dx(s(tau), tau, s1(eta), eta) deta`,
//!
//! with both history integrals over `[tau0, tau]`. The first history kernel is
//! `c(eta) (tau - eta)^{-1/2}` with `c` bounded; `M c` is linear per panel and the
//! `(tau - eta)^{-1/2}` factor is integrated exactly. The second kernel is smooth;
//! its distance is frozen at the panel midpoint and the rest is integrated exactly.

use std::f64::consts::PI;

use crate::error::{invalid, numeric, NnlifError, Result};

use super::coords::{Boundary, CoordinateMap};
use super::kernel::{erf_diff, hat_weights, source_moments, sqrt_moments};
use super::profile::PiecewiseLinear;

/// Controls of the Picard iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedPointOptions {
    /// Requested window length in `tau`.
    pub sigma: f64,
    /// Node spacing in `tau` after the graded start; kept when the window is halved.
    pub step: f64,
    /// Sup-norm distance of successive iterates on return.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for FixedPointOptions {
    fn default() -> Self {
        Self {
            sigma: 0.1,
            step: 1.25e-3,
            tol: 1e-10,
            max_iter: 200,
        }
    }
}

impl FixedPointOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma > 0.0 && self.step > 0.0 && self.tol > 0.0 && self.max_iter > 0) {
            return Err(invalid(
                "fixed-point options need sigma, step, tol and max_iter positive",
            ));
        }
        Ok(())
    }
}

/// Flux nodes of one solved window, `tau[0] = tau0`.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct WindowSolve {
    pub tau: Vec<f64>,
    pub m: Vec<f64>,
    pub iterations: usize,
    pub halvings: usize,
}

/// `-2 ∫ G(x, tau0 + lag, xi, tau0) u'(xi) dxi` for a piecewise-linear `u`
/// vanishing outside its samples.
pub(crate) fn initial_flux_term(u: &PiecewiseLinear, x: f64, lag: f64) -> f64 {
    let (xs, ys) = (u.xs(), u.ys());
    let scale = 2.0 * lag.sqrt();
    let reach = 9.0 * scale;
    let lo = xs.partition_point(|&xi| xi < x - reach).saturating_sub(1);
    let hi = (xs.partition_point(|&xi| xi <= x + reach) + 1).min(xs.len());
    let mut total = 0.0;
    for k in lo..hi.saturating_sub(1) {
        let slope = u.slope(k);
        if slope != 0.0 {
            total -= slope * erf_diff((xs[k] - x) / scale, (xs[k + 1] - x) / scale);
        }
    }
    // Jumps to zero at both ends of the support.
    let g = |xi: f64| (-(x - xi) * (x - xi) / (4.0 * lag)).exp() / (4.0 * PI * lag).sqrt();
    total - 2.0 * ys[0] * g(xs[0]) + 2.0 * u.last_value() * g(u.end())
}

/// Solves one window by Jacobi-Picard sweeps, halving the node count until the
/// sweeps contract inside the ball `|M| <= 1 + 2 sup|u_start'|`.
///
/// `past` is `M` on `[-D̄/2, tau0]`; `m0 = M(tau0)`.
pub(crate) fn solve_window(
    map: &CoordinateMap,
    past: &PiecewiseLinear,
    tau0: f64,
    m0: f64,
    u_start: &PiecewiseLinear,
    opts: &FixedPointOptions,
) -> Result<WindowSolve> {
    opts.validate()?;
    let ball = 1.0 + 2.0 * u_start.max_abs_slope().max(m0.abs());
    let mut sigma = opts.sigma;
    let mut halvings = 0;
    let mut iterations = 0;
    loop {
        let tau = window_nodes(tau0, opts.step, sigma);
        match sweep_until_converged(map, past, &tau, m0, u_start, opts, ball, &mut iterations)? {
            Some(m) => {
                return Ok(WindowSolve {
                    tau,
                    m,
                    iterations,
                    halvings,
                })
            }
            None => {
                sigma *= 0.5;
                halvings += 1;
                if sigma < MIN_WINDOW_STEPS * opts.step {
                    return Err(NnlifError::Solver(format!(
                        "fixed-point iteration did not contract for any window down to {sigma:e} at tau = {tau0}"
                    )));
                }
            }
        }
    }
}

/// The flux has a square-root onset when the start profile is not compatible
/// to second order; the first `GRADED_STEPS` steps use nodes `(j / GRADED_NODES)^2`.
const GRADED_STEPS: f64 = 8.0;
const GRADED_NODES: f64 = 24.0;
/// Smallest window, in steps, tried before giving up.
const MIN_WINDOW_STEPS: f64 = 1.0 / 64.0;

/// `tau0`, quadratically graded nodes over the first steps, then uniform steps,
/// the last one ending at `tau0 + sigma`.
pub(crate) fn window_nodes(tau0: f64, step: f64, sigma: f64) -> Vec<f64> {
    let span = (GRADED_STEPS * step).min(sigma);
    let count = (GRADED_NODES * span / (GRADED_STEPS * step))
        .ceil()
        .max(3.0) as usize;
    let mut tau: Vec<f64> = (0..count)
        .map(|j| tau0 + span * (j as f64 / count as f64).powi(2))
        .collect();
    let rest = sigma - span;
    let uniform = (rest / step - 0.25).ceil().max(0.0) as usize;
    tau.push(tau0 + span);
    tau.extend((1..uniform).map(|j| tau0 + span + j as f64 * step));
    if uniform > 0 {
        tau.push(tau0 + sigma);
    }
    tau
}

/// Combined history `past` followed by the window iterate.
pub(crate) fn joined_history(
    past: &PiecewiseLinear,
    tau: &[f64],
    m: &[f64],
) -> Result<PiecewiseLinear> {
    let mut h = past.clone();
    h.extend(tau, m)?;
    Ok(h)
}

#[allow(clippy::too_many_arguments)]
fn sweep_until_converged(
    map: &CoordinateMap,
    past: &PiecewiseLinear,
    tau: &[f64],
    m0: f64,
    u_start: &PiecewiseLinear,
    opts: &FixedPointOptions,
    ball: f64,
    iterations: &mut usize,
) -> Result<Option<Vec<f64>>> {
    let n = tau.len();
    let mut m = vec![m0; n];
    for _ in 0..opts.max_iter {
        *iterations += 1;
        let boundary = Boundary::new(*map, joined_history(past, tau, &m)?)?;
        let next = apply_functional(&boundary, tau, &m, u_start)?;
        if next.iter().any(|v| !v.is_finite()) {
            return Err(numeric("non-finite flux in the fixed-point sweep"));
        }
        let diff = next
            .iter()
            .zip(&m)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        m = next;
        if m.iter().any(|v| v.abs() > ball) {
            return Ok(None);
        }
        if diff <= opts.tol {
            return Ok(Some(m));
        }
    }
    Ok(None)
}

/// One application of the functional `T` at every node after the first.
pub(crate) fn apply_functional(
    boundary: &Boundary,
    tau: &[f64],
    m: &[f64],
    u_start: &PiecewiseLinear,
) -> Result<Vec<f64>> {
    let n = tau.len();
    let s: Vec<f64> = tau.iter().map(|&t| boundary.s(t)).collect::<Result<_>>()?;
    let s1_mid: Vec<f64> = tau
        .windows(2)
        .map(|w| boundary.s1(0.5 * (w[0] + w[1])))
        .collect::<Result<_>>()?;
    let inv_sqrt_4pi = 1.0 / (4.0 * PI).sqrt();
    let mut out = vec![m[0]; n];
    let mut c = vec![0.0; n];
    for i in 1..n {
        let ti = tau[i];
        let mut total = initial_flux_term(u_start, s[i], ti - tau[0]);
        for j in 0..i {
            let r = ti - tau[j];
            let slope = (s[i] - s[j]) / r;
            c[j] = -slope * inv_sqrt_4pi * (-slope * slope * r / 4.0).exp();
        }
        c[i] = boundary.input(ti) * inv_sqrt_4pi;
        for p in 0..i {
            let (ra, rb) = (ti - tau[p + 1], ti - tau[p]);
            let (a0, a1) = sqrt_moments(ra, rb);
            let (wb, wa) = hat_weights(ra, rb, a0, a1);
            total += wb * m[p] * c[p] + wa * m[p + 1] * c[p + 1];
            let d = s[i] - s1_mid[p];
            let (k0, k1) = source_moments(d, ra, rb);
            let (vb, va) = hat_weights(ra, rb, k0, k1);
            total += vb * m[p] + va * m[p + 1];
        }
        out[i] = total;
    }
    Ok(out)
}

/// Panel sums `(phi1, phi2)` of `2 m ∫ |dG/dx|` against the boundary and the
/// reset line at `tau`, over the nodes `tau[0..=i]`.
pub(crate) fn contraction_sums(
    boundary: &Boundary,
    tau: &[f64],
    i: usize,
    m: f64,
) -> Result<(f64, f64)> {
    let ti = tau[i];
    let si = boundary.s(ti)?;
    let inv_sqrt_4pi = 1.0 / (4.0 * PI).sqrt();
    let c = |j: usize| -> Result<f64> {
        if j == i {
            return Ok(boundary.input(ti).abs() * inv_sqrt_4pi);
        }
        let r = ti - tau[j];
        let slope = (si - boundary.s(tau[j])?) / r;
        Ok(slope.abs() * inv_sqrt_4pi * (-slope * slope * r / 4.0).exp())
    };
    let (mut phi1, mut phi2) = (0.0, 0.0);
    for p in 0..i {
        let (ra, rb) = (ti - tau[p + 1], ti - tau[p]);
        let (a0, a1) = sqrt_moments(ra, rb);
        let (wb, wa) = hat_weights(ra, rb, a0, a1);
        phi1 += wb * c(p)? + wa * c(p + 1)?;
        let d = si - boundary.s1(0.5 * (tau[p] + tau[p + 1]))?;
        phi2 += source_moments(d, ra, rb).0.abs();
    }
    Ok((m * phi1, m * phi2))
}

/// Half-space limit `-2 ∫ G(0, lag, xi, 0) u'(xi) dxi -> -u'(0^-)` check helper.
#[cfg(test)]
pub(crate) fn half_space_limit(u: &PiecewiseLinear, lag: f64) -> f64 {
    initial_flux_term(u, u.end(), lag)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn window_nodes_end_at_sigma_and_increase() {
        for &(step, sigma) in &[(0.01, 0.245_9), (0.01, 0.08), (0.01, 0.003), (0.01, 0.1)] {
            let t = window_nodes(1.0, step, sigma);
            assert_eq!(t[0], 1.0);
            assert!((t[t.len() - 1] - 1.0 - sigma).abs() < 1e-12);
            assert!(t
                .windows(2)
                .all(|w| w[1] > w[0] && w[1] - w[0] <= 1.25 * step + 1e-12));
        }
    }
}
