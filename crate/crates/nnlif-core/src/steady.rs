//! Stationary states from the implicit profile formula.
//!
//! For a candidate rate `N` with `c = b0 + b N` the unnormalized profile is
//!
//! `rho(v) = (N/a) exp(-(v-c)^2/2a) * int_{max(v,V_R)}^{V_F} exp((w-c)^2/2a) dw`
//!
//! and `N` is stationary when `F(N) = int rho dv = 1`. Swapping the order of
//! integration gives `F(N) = (N/a) int_{V_R}^{V_F} K(w) dw` with
//! `K(w) = int_0^inf exp(-s^2/2a + s (w-c)/a) ds`, which is evaluated without
//! overflow for any sign of `w - c`.

use crate::error::{invalid, numeric, Result};
use crate::grid::Grid;
use crate::model::ModelParams;
use crate::quadrature::romberg;

const INNER_TOL: f64 = 1e-13;
const OUTER_TOL: f64 = 1e-12;
const BISECTION_RTOL: f64 = 1e-10;

/// A stationary solution sampled as cell averages on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SteadyState {
    pub n_inf: f64,
    pub rho_inf: Vec<f64>,
    pub b_used: f64,
    pub params: ModelParams,
}

impl SteadyState {
    /// Pointwise profile value; exactly zero at and above `V_F`.
    pub fn value_at(&self, v: f64) -> Result<f64> {
        profile_value(&self.params, self.n_inf, v)
    }

    /// `int rho_inf dv` over `(-inf, V_F]` from the closed form.
    pub fn total_mass(&self) -> Result<f64> {
        mass_functional(&self.params, self.n_inf)
    }

    /// The same stationary state as cell averages on another grid.
    pub fn on_grid(&self, grid: &Grid) -> Result<SteadyState> {
        build(&self.params, self.n_inf, grid)
    }
}

/// `K(w) exp(-E(w))` with `E(w) = max(w - c, 0)^2 / 2a` the log of the peak integrand.
fn kernel_scaled(a: f64, c: f64, w: f64) -> Result<f64> {
    let shift = w - c;
    let peak = shift.max(0.0);
    let log_peak = peak * peak / (2.0 * a);
    let tail = if shift < 0.0 {
        (12.0 * a.sqrt()).min(40.0 * a / -shift)
    } else {
        12.0 * a.sqrt()
    };
    romberg(
        |s| (-s * s / (2.0 * a) + s * shift / a - log_peak).exp(),
        0.0,
        peak + tail,
        INNER_TOL,
    )
}

/// `log F(N)`; finite even where `F` itself overflows.
pub fn log_mass_functional(params: &ModelParams, n: f64) -> Result<f64> {
    if !(n > 0.0) || !n.is_finite() {
        return Err(invalid(format!("firing rate must be positive, got {n}")));
    }
    let a = params.a;
    let c = params.b0 + params.b * n;
    let log_peak = |w: f64| {
        let p = (w - c).max(0.0);
        p * p / (2.0 * a)
    };
    let e_max = log_peak(params.v_f).max(log_peak(params.v_r));
    let integral = romberg(
        |w| (log_peak(w) - e_max).exp() * kernel_scaled(a, c, w).unwrap_or(f64::NAN),
        params.v_r,
        params.v_f,
        OUTER_TOL,
    )?;
    let log_f = (n / a).ln() + e_max + integral.ln();
    if !log_f.is_finite() {
        return Err(numeric(format!("mass functional is not finite at N = {n}")));
    }
    Ok(log_f)
}

/// `F(N) = int rho[N] dv` before normalization.
pub fn mass_functional(params: &ModelParams, n: f64) -> Result<f64> {
    let f = log_mass_functional(params, n)?.exp();
    if !f.is_finite() {
        return Err(numeric(format!("mass functional overflow at N = {n}")));
    }
    Ok(f)
}

/// Unnormalized profile `rho[N](v)`; normalized when `F(N) = 1`.
pub fn profile_value(params: &ModelParams, n: f64, v: f64) -> Result<f64> {
    if v >= params.v_f {
        return Ok(0.0);
    }
    let a = params.a;
    let c = params.b0 + params.b * n;
    let lo = v.max(params.v_r);
    let integral = romberg(
        |w| ((w - v) * (w + v - 2.0 * c) / (2.0 * a)).exp(),
        lo,
        params.v_f,
        OUTER_TOL,
    )?;
    Ok(n / a * integral)
}

/// All stationary states with `N` in `bracket`, one per sign change of `log F(N)`.
///
/// The scan is geometric in `N` with `n_scan` points; each root is refined by
/// bisection to relative tolerance `1e-10`.
pub fn steady_state_candidates(
    params: &ModelParams,
    bracket: (f64, f64),
    n_scan: usize,
    grid: &Grid,
) -> Result<Vec<SteadyState>> {
    params.validate()?;
    let (lo, hi) = bracket;
    if !(lo > 0.0 && hi > lo && hi.is_finite()) {
        return Err(invalid(format!("invalid bracket [{lo}, {hi}]")));
    }
    if n_scan < 2 {
        return Err(invalid("n_scan must be at least 2"));
    }
    let ratio = (hi / lo).powf(1.0 / (n_scan - 1) as f64);
    let mut nodes = Vec::with_capacity(n_scan);
    for k in 0..n_scan {
        let n = if k == n_scan - 1 {
            hi
        } else {
            lo * ratio.powi(k as i32)
        };
        nodes.push((n, log_mass_functional(params, n)?));
    }
    let mut out = Vec::new();
    for pair in nodes.windows(2) {
        let ((n0, g0), (n1, g1)) = (pair[0], pair[1]);
        if g0 == 0.0 {
            out.push(build(params, n0, grid)?);
            continue;
        }
        if g0.signum() != g1.signum() && g1 != 0.0 {
            let root = bisect(params, n0, g0, n1)?;
            out.push(build(params, root, grid)?);
        }
    }
    if let Some(&(n_last, g_last)) = nodes.last() {
        if g_last == 0.0 {
            out.push(build(params, n_last, grid)?);
        }
    }
    Ok(out)
}

fn bisect(params: &ModelParams, mut lo: f64, g_lo: f64, mut hi: f64) -> Result<f64> {
    let s_lo = g_lo.signum();
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if (hi - lo) <= BISECTION_RTOL * mid {
            return Ok(mid);
        }
        let g = log_mass_functional(params, mid)?;
        if g == 0.0 {
            return Ok(mid);
        }
        if g.signum() == s_lo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

fn build(params: &ModelParams, n_inf: f64, grid: &Grid) -> Result<SteadyState> {
    let rho_inf = grid.cell_averages(|v| profile_value(params, n_inf, v).unwrap_or(f64::NAN));
    if rho_inf.iter().any(|x| !x.is_finite()) {
        return Err(numeric(format!(
            "steady profile is not finite at N = {n_inf}"
        )));
    }
    Ok(SteadyState {
        n_inf,
        rho_inf,
        b_used: params.b,
        params: *params,
    })
}

/// The unique root for `b <= 0`, searched in a wide default bracket.
pub fn unique_steady_state(params: &ModelParams, grid: &Grid) -> Result<SteadyState> {
    let mut roots = steady_state_candidates(params, (1e-6, 1e4), 80, grid)?;
    match roots.len() {
        1 => Ok(roots.remove(0)),
        0 => Err(numeric("no steady state in [1e-6, 1e4]")),
        k => Err(numeric(format!(
            "{k} steady states found; pick one explicitly"
        ))),
    }
}
