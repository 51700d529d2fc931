//! Weighted spectral gap `min ∫ rho_inf (h')^2 / ∫ rho_inf (h - h̄)^2`.
//!
//! On cells the quotient is `h^T K h / h^T M h` with `M = diag(w_i dv)` and
//! `K` the path Laplacian with edge weights `(w_i + w_{i+1}) / (2 dv)`. The
//! constants span the kernel of `K`; the gap is the second eigenvalue of the
//! pencil `(K, M)`, found by shifted inverse iteration on the `M`-orthogonal
//! complement of the constants.

use crate::error::{invalid, numeric, Result};
use crate::grid::Grid;
use crate::steady::SteadyState;

const MAX_ITER: usize = 2000;
const REL_TOL: f64 = 1e-13;
/// Shift as a fraction of the largest diagonal ratio `K_ii / M_ii`.
const SHIFT: f64 = 1e-9;

/// Gap on the given grid and on the grid with cells split in two.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoincareEstimate {
    pub gamma: f64,
    pub gamma_refined: f64,
    pub iterations: usize,
}

impl PoincareEstimate {
    pub fn relative_change(&self) -> f64 {
        (self.gamma_refined - self.gamma).abs() / self.gamma_refined.abs()
    }
}

/// Smallest nonzero generalized eigenvalue for cell weights `w`, with the
/// iteration count.
pub fn weighted_gap(w: &[f64], dv: f64) -> Result<(f64, usize)> {
    let n = w.len();
    if n < 3 {
        return Err(invalid("need at least three cells"));
    }
    if w.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
        return Err(invalid("weights must be finite and non-negative"));
    }
    let mass: Vec<f64> = w.iter().map(|x| x * dv).collect();
    let total: f64 = mass.iter().sum();
    if !(total > 0.0) || mass[..n - 1].iter().any(|&m| !(m > 0.0)) {
        return Err(numeric("singular weight matrix"));
    }
    let edge: Vec<f64> = w.windows(2).map(|p| 0.5 * (p[0] + p[1]) / dv).collect();
    let diag_k = |i: usize| {
        (if i > 0 { edge[i - 1] } else { 0.0 }) + (if i + 1 < n { edge[i] } else { 0.0 })
    };
    let scale = (0..n)
        .filter(|&i| mass[i] > 0.0)
        .map(|i| diag_k(i) / mass[i])
        .fold(0.0, f64::max);
    let shift = SHIFT * scale;

    // Tridiagonal K + shift M: sub/super diagonal -edge, diagonal diag_k + shift m.
    let diag: Vec<f64> = (0..n).map(|i| diag_k(i) + shift * mass[i]).collect();
    let project = |x: &mut [f64]| {
        let mean = x.iter().zip(&mass).map(|(a, m)| a * m).sum::<f64>() / total;
        x.iter_mut().for_each(|a| *a -= mean);
    };
    let rayleigh = |x: &[f64]| {
        let num: f64 = x
            .windows(2)
            .zip(&edge)
            .map(|(p, e)| e * (p[1] - p[0]).powi(2))
            .sum();
        let den: f64 = x.iter().zip(&mass).map(|(a, m)| m * a * a).sum();
        num / den
    };

    // Start from a linear profile, which has a component on the lowest mode.
    let mut x: Vec<f64> = (0..n).map(|i| i as f64).collect();
    project(&mut x);
    let mut lambda = rayleigh(&x);
    let mut rhs = vec![0.0; n];
    for it in 1..=MAX_ITER {
        for i in 0..n {
            rhs[i] = mass[i] * x[i];
        }
        x = solve_tridiagonal(&edge, &diag, &rhs)?;
        project(&mut x);
        let norm = x
            .iter()
            .zip(&mass)
            .map(|(a, m)| m * a * a)
            .sum::<f64>()
            .sqrt();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(numeric("inverse iteration lost its iterate"));
        }
        x.iter_mut().for_each(|a| *a /= norm);
        let next = rayleigh(&x);
        if (next - lambda).abs() <= REL_TOL * next.abs() {
            return Ok((next, it));
        }
        lambda = next;
    }
    Err(numeric(format!(
        "inverse iteration did not converge in {MAX_ITER} sweeps"
    )))
}

/// Symmetric tridiagonal solve with off-diagonal `-off` and diagonal `diag`.
fn solve_tridiagonal(off: &[f64], diag: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut pivot = diag[0];
    for i in 0..n {
        if i > 0 {
            pivot = diag[i] + off[i - 1] * c[i - 1];
        }
        if !(pivot.abs() > 0.0) {
            return Err(numeric("singular weight matrix"));
        }
        c[i] = if i + 1 < n { -off[i] / pivot } else { 0.0 };
        d[i] = (rhs[i] + if i > 0 { off[i - 1] * d[i - 1] } else { 0.0 }) / pivot;
    }
    for i in (0..n - 1).rev() {
        d[i] -= c[i] * d[i + 1];
    }
    Ok(d)
}

/// Gap for `steady` on `grid` and on its refinement.
pub fn poincare_constant(steady: &SteadyState, grid: &Grid) -> Result<PoincareEstimate> {
    grid.check_len(steady.rho_inf.len())?;
    let (gamma, iterations) = weighted_gap(&steady.rho_inf, grid.dv)?;
    let fine = grid.refined()?;
    let refined = steady.on_grid(&fine)?;
    let (gamma_refined, _) = weighted_gap(&refined.rho_inf, fine.dv)?;
    Ok(PoincareEstimate {
        gamma,
        gamma_refined,
        iterations,
    })
}
