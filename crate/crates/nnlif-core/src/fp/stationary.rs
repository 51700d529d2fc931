//! Stationary state of the discrete scheme.
//!
//! The cell averages of the closed-form profile are stationary for the
//! continuous equation only; the scheme's own fixed point differs by the
//! discretization error, which is largest in the cells around `V_R`. Entropy
//! measured against the closed form therefore stalls at that error instead of
//! decaying, so long-time decay fits use the relaxed state.

use crate::error::{invalid, numeric, Result};
use crate::grid::Grid;
use crate::steady::SteadyState;

use super::{cfl_limit, raw_firing_rate, DensityState, InitialHistory};

/// Runs the scheme from `steady` with step `dt` until
/// `max |rho_{k+1} - rho_k| / dt <= tol * max rho`, or fails after `max_steps`.
///
/// The delay is dropped during relaxation: at a fixed point `N(t - D) = N(t)`,
/// so the fixed point does not depend on it. The returned state keeps the
/// parameters of `steady`; `n_inf` is the stencil rate of the relaxed density.
pub fn relax_to_stationary(
    steady: &SteadyState,
    grid: &Grid,
    dt: f64,
    tol: f64,
    max_steps: usize,
) -> Result<SteadyState> {
    grid.check_len(steady.rho_inf.len())?;
    if !(tol > 0.0) {
        return Err(invalid(format!("tolerance must be positive, got {tol}")));
    }
    let mut params = steady.params;
    params.d = 0.0;
    let initial = InitialHistory::constant(0.0, steady.n_inf)?;
    let mut state = DensityState::new(steady.rho_inf.clone(), initial, &params, grid)?;
    let dt =
        dt.min(super::simulate::CFL_SAFETY * cfl_limit(grid, params.b0 + params.b * steady.n_inf));
    for _ in 0..max_steps {
        let before = state.rho.clone();
        state.advance(&params, grid, dt)?;
        let scale = state.rho.iter().copied().fold(0.0, f64::max);
        let change = state
            .rho
            .iter()
            .zip(&before)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        if change / dt <= tol * scale {
            let n_inf = raw_firing_rate(&state.rho, &params, grid)?;
            return Ok(SteadyState {
                n_inf,
                rho_inf: state.rho,
                ..steady.clone()
            });
        }
    }
    Err(numeric(format!(
        "scheme did not become stationary in {max_steps} steps"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ModelParams;

    #[test]
    fn relaxed_state_is_a_fixed_point_close_to_the_profile() {
        let p = ModelParams::standard(0.1, 0.2);
        let g = Grid::for_params(&p, 400, 1.0).unwrap();
        let ss = crate::steady::unique_steady_state(&p, &g).unwrap();
        let dt = 1e-3;
        let relaxed = relax_to_stationary(&ss, &g, dt, 1e-11, 200_000).unwrap();
        let l1: f64 = relaxed
            .rho_inf
            .iter()
            .zip(&ss.rho_inf)
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>()
            * g.dv;
        assert!(l1 < 1e-2, "L1 distance {l1}");
        assert!((relaxed.n_inf - ss.n_inf).abs() < 1e-2 * ss.n_inf);

        // One more step of the full delayed scheme barely moves it.
        let init = InitialHistory::constant(p.d, relaxed.n_inf).unwrap();
        let mut state = DensityState::new(relaxed.rho_inf.clone(), init, &p, &g).unwrap();
        state.advance(&p, &g, dt).unwrap();
        let change = state
            .rho
            .iter()
            .zip(&relaxed.rho_inf)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(change < 1e-12, "{change}");
    }

    #[test]
    fn nonpositive_tolerance_is_rejected() {
        let p = ModelParams::standard(0.0, 0.0);
        let g = Grid::for_params(&p, 100, 1.0).unwrap();
        let ss = crate::steady::unique_steady_state(&p, &g).unwrap();
        assert!(relax_to_stationary(&ss, &g, 1e-3, 0.0, 10).is_err());
    }
}
