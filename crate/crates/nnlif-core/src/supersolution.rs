//! Stationary super-solution profile `f` with `rho_bar = exp(xi t) f(v)`.
//!
//! `f = 1` left of `V_R`; on `(V_R, V_F]`
//! `f = exp(V_R - v) psi + (1 - psi)(1 - exp(delta (v - V_F))) / delta`,
//! where `psi` is a smooth ramp from 1 at `(V_F + V_R)/2` to 0 at `(V_F + V_R)/2 + epsilon`.

use std::sync::OnceLock;

use crate::error::{numeric, Result};
use crate::grid::Grid;
use crate::model::ModelParams;
use crate::quadrature::romberg;

const XI_MARGIN: f64 = 1.1;
const SAMPLES: usize = 20_001;

#[derive(Debug, Clone, PartialEq)]
pub struct SuperSolution {
    pub xi: f64,
    pub delta: f64,
    pub epsilon: f64,
    /// Drift bound `sup |-v + b0 + b N|` over `(V_R, V_F) x [0, N0_max]`.
    pub b_bound: f64,
    pub n0_max: f64,
    /// `f` at cell centres.
    pub f_profile: Vec<f64>,
    pub psi_profile: Vec<f64>,
    /// One-sided slopes `f'(V_R-)`, `f'(V_R+)`, `f'(V_F)`.
    pub slope_vr_minus: f64,
    pub slope_vr_plus: f64,
    pub slope_vf: f64,
    pub v_r: f64,
    pub v_f: f64,
}

/// Minimum residuals of the super-solution inequality.
#[derive(Debug, Clone, PartialEq)]
pub struct SuperSolutionReport {
    pub left_min: f64,
    pub middle_min: f64,
    pub right_min: f64,
    /// `f'(V_F) - (f'(V_R+) - f'(V_R-))`, non-negative when the jump condition holds.
    pub jump_residual: f64,
    pub f_min: f64,
    pub tolerance: f64,
    pub passed: bool,
}

fn bump(s: f64) -> f64 {
    if s.abs() >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - s * s)).exp()
    }
}

fn bump_mass() -> f64 {
    static Z: OnceLock<f64> = OnceLock::new();
    *Z.get_or_init(|| romberg(bump, -1.0, 1.0, 1e-14).expect("bump integral"))
}

/// Smooth ramp with value and first two derivatives.
#[derive(Debug, Clone, Copy)]
struct Ramp {
    start: f64,
    width: f64,
}

impl Ramp {
    fn eval(&self, v: f64) -> (f64, f64, f64) {
        let s = (v - self.start) / self.width;
        if s <= 0.0 {
            return (1.0, 0.0, 0.0);
        }
        if s >= 1.0 {
            return (0.0, 0.0, 0.0);
        }
        let z = bump_mass();
        let sigma = 2.0 * s - 1.0;
        let cumulative = romberg(bump, -1.0, sigma, 1e-14).unwrap_or(f64::NAN);
        let phi = bump(sigma);
        let dphi = phi * (-2.0 * sigma) / (1.0 - sigma * sigma).powi(2);
        let k = 2.0 / self.width;
        (1.0 - cumulative / z, -phi * k / z, -dphi * k * k / z)
    }
}

impl SuperSolution {
    fn ramp(&self) -> Ramp {
        Ramp {
            start: 0.5 * (self.v_f + self.v_r),
            width: self.epsilon,
        }
    }

    /// `(f, f', f'')` at `v`; one-sided from the right at `V_R`.
    pub fn eval(&self, v: f64) -> (f64, f64, f64) {
        shape(self.v_r, self.v_f, self.delta, self.ramp(), v)
    }

    /// Comparison envelope `alpha a exp(xi t)` for the firing rate.
    pub fn envelope(&self, a: f64, alpha: f64, t: f64) -> f64 {
        alpha * a * (self.xi * t).exp()
    }

    /// Smallest `alpha` with `rho0 <= alpha f` at every cell centre.
    pub fn domination_factor(&self, rho0: &[f64]) -> f64 {
        rho0.iter()
            .zip(&self.f_profile)
            .filter(|(_, &f)| f > 0.0)
            .map(|(r, f)| r / f)
            .fold(0.0, f64::max)
    }
}

fn shape(v_r: f64, v_f: f64, delta: f64, ramp: Ramp, v: f64) -> (f64, f64, f64) {
    if v < v_r {
        return (1.0, 0.0, 0.0);
    }
    let (p, dp, ddp) = ramp.eval(v);
    let g = (v_r - v).exp();
    let e = (delta * (v - v_f)).exp();
    let f = g * p + (1.0 - p) * (1.0 - e) / delta;
    let df = g * (dp - p) - dp * (1.0 - e) / delta - (1.0 - p) * e;
    let ddf =
        g * (p - 2.0 * dp + ddp) - ddp * (1.0 - e) / delta + 2.0 * dp * e - (1.0 - p) * delta * e;
    (f, df, ddf)
}

/// Builds the profile for drift histories bounded by `n0_max`.
pub fn build_super_solution(
    params: &ModelParams,
    n0_max: f64,
    grid: &Grid,
) -> Result<SuperSolution> {
    params.validate()?;
    let (v_r, v_f, a) = (params.v_r, params.v_f, params.a);
    let n0_max = n0_max.max(0.0);
    let b_bound = [v_r, v_f]
        .iter()
        .flat_map(|&v| [params.drift(v, 0.0).abs(), params.drift(v, n0_max).abs()])
        .fold(0.0, f64::max);
    let delta = (b_bound / a).max(1.0);
    let epsilon = 0.25 * (v_f - v_r);
    let ramp = Ramp {
        start: 0.5 * (v_f + v_r),
        width: epsilon,
    };
    let mid_end = ramp.start + epsilon;

    let mut inf_f = f64::INFINITY;
    let mut sup_rhs: f64 = 0.0;
    for k in 1..SAMPLES {
        let v = v_r + (mid_end - v_r) * k as f64 / SAMPLES as f64;
        let (f, df, ddf) = shape(v_r, v_f, delta, ramp, v);
        inf_f = inf_f.min(f);
        sup_rhs = sup_rhs.max(b_bound * df.abs() + a * ddf.abs());
    }
    if !(inf_f > 1e-12) || !sup_rhs.is_finite() {
        return Err(numeric(format!(
            "super-solution profile degenerates: inf f = {inf_f}"
        )));
    }
    let xi = XI_MARGIN * (1.0 + sup_rhs / inf_f);

    let centres = grid.centers();
    let f_profile = centres
        .iter()
        .map(|&v| shape(v_r, v_f, delta, ramp, v).0)
        .collect();
    let psi_profile = centres
        .iter()
        .map(|&v| if v < v_r { 1.0 } else { ramp.eval(v).0 })
        .collect();
    let slope_vr_plus = shape(v_r, v_f, delta, ramp, v_r).1;
    let slope_vf = shape(v_r, v_f, delta, ramp, v_f).1;
    Ok(SuperSolution {
        xi,
        delta,
        epsilon,
        b_bound,
        n0_max,
        f_profile,
        psi_profile,
        slope_vr_minus: 0.0,
        slope_vr_plus,
        slope_vf,
        v_r,
        v_f,
    })
}

/// Evaluates `(xi - 1) f + (-v + b0 + b N) f' - a f''` by finite differences of the
/// stored profile at `N = 0` and `N = N0_max`, per region, plus the jump condition at `V_R`.
pub fn verify_super_solution(
    ss: &SuperSolution,
    params: &ModelParams,
    n0_max: f64,
    grid: &Grid,
    tolerance: f64,
) -> Result<SuperSolutionReport> {
    grid.check_len(ss.f_profile.len())?;
    let n = grid.n_cells;
    let h = grid.dv;
    let f = &ss.f_profile;
    let mid_end = 0.5 * (ss.v_f + ss.v_r) + ss.epsilon;
    let mut left_min = f64::INFINITY;
    let mut middle_min = f64::INFINITY;
    let mut right_min = f64::INFINITY;
    for i in 1..n {
        let v = grid.center(i);
        // stencils touching the cell of V_R straddle the kink
        if i + 1 >= grid.r_index && i <= grid.r_index + 1 {
            continue;
        }
        let (df, ddf) = if i == n - 1 {
            // right neighbour is the Dirichlet value f(V_F) = 0 at distance h/2
            let (h1, h2) = (h, 0.5 * h);
            let (fm, f0, fp) = (f[i - 1], f[i], 0.0);
            let d1 =
                (h1 * h1 * fp - h2 * h2 * fm - (h1 * h1 - h2 * h2) * f0) / (h1 * h2 * (h1 + h2));
            let d2 = 2.0 * (h1 * fp + h2 * fm - (h1 + h2) * f0) / (h1 * h2 * (h1 + h2));
            (d1, d2)
        } else {
            (
                (f[i + 1] - f[i - 1]) / (2.0 * h),
                (f[i + 1] - 2.0 * f[i] + f[i - 1]) / (h * h),
            )
        };
        let residual = [0.0, n0_max]
            .iter()
            .map(|&nn| (ss.xi - 1.0) * f[i] + params.drift(v, nn) * df - params.a * ddf)
            .fold(f64::INFINITY, f64::min);
        let slot = if v < ss.v_r {
            &mut left_min
        } else if v < mid_end {
            &mut middle_min
        } else {
            &mut right_min
        };
        *slot = slot.min(residual);
    }
    let jump_residual = ss.slope_vf - (ss.slope_vr_plus - ss.slope_vr_minus);
    let f_min = f.iter().copied().fold(f64::INFINITY, f64::min);
    let passed = left_min >= -tolerance
        && middle_min >= -tolerance
        && right_min >= -tolerance
        && jump_residual >= -tolerance
        && f_min >= 0.0;
    Ok(SuperSolutionReport {
        left_min,
        middle_min,
        right_min,
        jump_residual,
        f_min,
        tolerance,
        passed,
    })
}
