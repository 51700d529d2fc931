//! `L^2` budgets of the firing rate and the smallness functional `S(b1, V_M)`.

use crate::error::{invalid, Result};
use crate::grid::Grid;
use crate::quadrature::{interp_linear, trapezoid};
use crate::steady::SteadyState;

/// `∫_J N^2` and the largest `∫_I N^2 / (1 + |I|)` over sub-windows `I` of `J`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct L2Budget {
    pub window: (f64, f64),
    pub integral: f64,
    pub c_fit: f64,
    pub windows_tested: usize,
}

/// `∫ N^2` over `[t0, t1]` by the trapezoid rule, with interpolated end points.
fn square_integral(t: &[f64], n: &[f64], t0: f64, t1: f64) -> f64 {
    let mut xs = vec![t0];
    let mut ys = vec![interp_linear(t, n, t0).powi(2)];
    for (&ti, &ni) in t.iter().zip(n) {
        if ti > t0 && ti < t1 {
            xs.push(ti);
            ys.push(ni * ni);
        }
    }
    xs.push(t1);
    ys.push(interp_linear(t, n, t1).powi(2));
    trapezoid(&xs, &ys)
}

/// Budget of `samples = (t, N)` over `window`.
///
/// The sub-windows have lengths `|J|, |J|/2, |J|/4, ...` down to one sample
/// spacing, each slid across `J` in steps of half its length.
pub fn firing_rate_l2_budget(samples: &[(f64, f64)], window: (f64, f64)) -> Result<L2Budget> {
    let (t0, t1) = window;
    if !(t1 > t0) {
        return Err(invalid(format!("empty window [{t0}, {t1}]")));
    }
    let (t, n): (Vec<f64>, Vec<f64>) = samples.iter().copied().unzip();
    if t.len() < 2 || t[0] > t0 + 1e-12 || t[t.len() - 1] < t1 - 1e-12 {
        return Err(invalid("samples must cover the window"));
    }
    let spacing = t.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
    let integral = square_integral(&t, &n, t0, t1);
    let mut c_fit: f64 = 0.0;
    let mut windows_tested = 0;
    let mut len = t1 - t0;
    while len >= spacing.max(1e-12) {
        let step = 0.5 * len;
        let mut a = t0;
        while a + len <= t1 + 1e-9 * len {
            let b = (a + len).min(t1);
            c_fit = c_fit.max(square_integral(&t, &n, a, b) / (1.0 + (b - a)));
            windows_tested += 1;
            a += step;
        }
        len *= 0.5;
    }
    Ok(L2Budget {
        window,
        integral,
        c_fit,
        windows_tested,
    })
}

/// `S(b1, V_M) = ∫_{V_M}^{V_F} rho0^2 / rho_inf(b1) dv` on cells above `V_M`.
///
/// The threshold cell uses the ratio `rho0 / rho_inf` of the boundary slopes.
pub fn smallness_functional(
    rho0: &[f64],
    steady_b1: &SteadyState,
    grid: &Grid,
    v_m: f64,
) -> Result<f64> {
    let q = super::entropy::density_ratio(rho0, steady_b1, grid)?;
    if !(v_m < grid.v_max) {
        return Err(invalid(format!("V_M = {v_m} must lie below V_F")));
    }
    Ok((0..grid.n_cells)
        .filter(|&i| grid.center(i) >= v_m)
        .map(|i| q[i] * q[i] * steady_b1.rho_inf[i])
        .sum::<f64>()
        * grid.dv)
}
