//! Continuation of a Stefan solution window by window.

use crate::error::{invalid, Result};
use crate::model::ModelParams;

use super::duhamel::duhamel_u;
use super::profile::PiecewiseLinear;
use super::volterra::{self, FixedPointOptions};
use super::{CoordinateMap, Field, StefanSolution};

/// Controls of [`piecewise_extend`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtendOptions {
    /// Window length in `tau`.
    pub window: f64,
    /// Spacing of the restart profile in `x`.
    pub field_dx: f64,
    /// `sigma` is replaced by the window length.
    pub fixed_point: FixedPointOptions,
}

impl Default for ExtendOptions {
    fn default() -> Self {
        Self {
            window: 0.1,
            field_dx: 2e-3,
            fixed_point: FixedPointOptions::default(),
        }
    }
}

/// Extends `solution` to `target` by restarting the flux equation from
/// `u(., T1)` with the accumulated `M` as history.
///
/// With `b != 0` and a delay, each window must fit in `D̄ / (2 (1 - D̄))`, where
/// the boundary depends only on earlier windows.
pub fn piecewise_extend(
    solution: &StefanSolution,
    params: &ModelParams,
    target: f64,
    opts: &ExtendOptions,
) -> Result<StefanSolution> {
    let map = CoordinateMap::new(params)?;
    if map != solution.map {
        return Err(invalid("parameters differ from those of the solution"));
    }
    if !(opts.window > 0.0 && opts.field_dx > 0.0) {
        return Err(invalid("window and field spacing must be positive"));
    }
    let bound = map.linear_window();
    if map.b != 0.0 && map.d_bar > 0.0 && opts.window > bound * (1.0 + 1e-12) {
        return Err(invalid(format!(
            "window {} exceeds the decoupling bound {bound}",
            opts.window
        )));
    }
    let mut sol = solution.clone();
    while sol.end() < target - 1e-12 {
        let t1 = sol.end();
        let u_start = restart_profile(&sol, t1, opts.field_dx)?;
        let m0 = sol.m[sol.m.len() - 1];
        sol.seam_mismatch
            .push((m0 + boundary_slope(&u_start)).abs());
        let fp = FixedPointOptions {
            sigma: opts.window.min(target - t1),
            ..opts.fixed_point
        };
        let past = sol.flux_history()?;
        let w = volterra::solve_window(&map, &past, t1, m0, &u_start, &fp)?;
        sol.fields.push(Field {
            tau: t1,
            x: u_start.xs().to_vec(),
            u: u_start.ys().to_vec(),
        });
        sol.seams.push(t1);
        sol.tau.extend_from_slice(&w.tau[1..]);
        sol.m.extend_from_slice(&w.m[1..]);
        sol.iterations += w.iterations;
        sol.halvings += w.halvings;
    }
    sol.refresh_boundary()?;
    Ok(sol)
}

/// Second-order one-sided slope at the right end of a uniform profile.
fn boundary_slope(u: &PiecewiseLinear) -> f64 {
    let (x, y) = (u.xs(), u.ys());
    let n = x.len();
    if n < 3 {
        return u.end_slope();
    }
    (3.0 * y[n - 1] - 4.0 * y[n - 2] + y[n - 3]) / (x[n - 1] - x[n - 3])
}

/// `u(., tau)` by Duhamel on a uniform grid ending at `s(tau)`.
fn restart_profile(sol: &StefanSolution, tau: f64, dx: f64) -> Result<PiecewiseLinear> {
    let b = sol.boundary()?;
    let edge = b.s(tau)?;
    let lowest_reset = sol
        .tau
        .iter()
        .map(|&t| b.s1(t))
        .collect::<Result<Vec<_>>>()?;
    let lowest_reset = lowest_reset.into_iter().fold(f64::INFINITY, f64::min);
    let left = sol.u0.start().min(lowest_reset) - 10.0 * (tau.sqrt() + 0.1);
    let n = ((edge - left) / dx).ceil() as usize;
    let x: Vec<f64> = (0..=n).map(|k| edge - (n - k) as f64 * dx).collect();
    let mut u = duhamel_u(sol, &x, tau)?;
    for v in u.iter_mut() {
        *v = v.max(0.0);
    }
    u[n] = 0.0;
    PiecewiseLinear::new(x, u)
}
