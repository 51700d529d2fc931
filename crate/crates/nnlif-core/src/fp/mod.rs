//! Finite-volume solver for the delayed Fokker-Planck equation.
//!
//! Unknowns are cell averages on a [`Grid`]. One step is an IMEX split: an
//! explicit flux-limited drift update followed by implicit diffusion whose last
//! row carries the threshold outflow. The same flux is reinjected into the two
//! cells whose centres bracket `V_R`, with linear weights.

pub mod history;
pub mod initial;
mod scheme;
pub mod simulate;
mod stationary;

pub use history::{InitialHistory, RateHistory};
pub use initial::{clipped_gaussian, random_admissible};
pub use simulate::{
    simulate, simulate_with_observer, BlowUp, FiringRateSeries, Observer, SeriesRow,
    SimulateOptions, Snapshot, Termination, ThresholdEvent, Trajectory,
};
pub use stationary::relax_to_stationary;

use crate::error::{invalid, NnlifError, Result};
use crate::grid::Grid;
use crate::model::ModelParams;
use scheme::Outflow;

/// Stencil values above `-RATE_TOLERANCE` clamp silently; below are flagged.
pub const RATE_TOLERANCE: f64 = 1e-10;
/// Accepted steps keep every cell above this.
pub const NEGATIVE_FLOOR: f64 = -1e-12;

/// Density, clock and firing-rate history.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityState {
    pub rho: Vec<f64>,
    pub t: f64,
    pub history: RateHistory,
    /// Steps whose raw stencil rate fell below `-RATE_TOLERANCE`.
    pub negative_rate_count: usize,
    /// Cumulative mass lost through the Dirichlet boundary at `v_min`.
    pub leakage: f64,
    /// Steps re-solved with the two-point outflow stencil to stay positive.
    pub outflow_fallbacks: usize,
}

/// Diagnostics of one accepted step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepInfo {
    pub mu: f64,
    pub raw_rate: f64,
    pub rate: f64,
    pub leaked: f64,
}

impl DensityState {
    /// State at `t = 0`; the history starts with the stencil rate of `rho0`.
    pub fn new(
        rho0: Vec<f64>,
        initial: InitialHistory,
        params: &ModelParams,
        grid: &Grid,
    ) -> Result<Self> {
        params.validate()?;
        grid.check_len(rho0.len())?;
        if rho0.iter().any(|r| !r.is_finite() || *r < 0.0) {
            return Err(invalid("initial density must be finite and non-negative"));
        }
        let mut history = RateHistory::new(params.d, initial)?;
        let n0 = raw_firing_rate(&rho0, params, grid)?.max(0.0);
        history.push(0.0, n0);
        Ok(Self {
            rho: rho0,
            t: 0.0,
            history,
            negative_rate_count: 0,
            leakage: 0.0,
            outflow_fallbacks: 0,
        })
    }

    pub fn mass(&self, grid: &Grid) -> f64 {
        grid.mass(&self.rho)
    }

    /// One step with the drift `b0 + b N(t - D)` read from the history.
    pub fn advance(&mut self, params: &ModelParams, grid: &Grid, dt: f64) -> Result<StepInfo> {
        let mu = delayed_drift(self, params)?;
        self.advance_with_drift(params, grid, dt, mu)
    }

    /// One step with a prescribed drift value, ignoring the coupling.
    pub fn advance_with_drift(
        &mut self,
        params: &ModelParams,
        grid: &Grid,
        dt: f64,
        mu: f64,
    ) -> Result<StepInfo> {
        grid.check_len(self.rho.len())?;
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(invalid(format!("time step must be positive, got {dt}")));
        }
        let limit = cfl_limit(grid, mu);
        if dt > limit * (1.0 + 1e-12) {
            return Err(NnlifError::Cfl { dt, limit });
        }
        let drifted = scheme::drift_update(&self.rho, grid.v_min, grid.dv, dt, |v| mu - v);
        let lambda = params.a * dt / (grid.dv * grid.dv);
        let deposit = grid.reset_weights();
        let mut next = drifted.clone();
        scheme::implicit_diffusion(&mut next, lambda, &deposit, Outflow::SecondOrder);

        let t_next = self.t + dt;
        let mut outflow = Outflow::SecondOrder;
        if minimum(&next).1 < NEGATIVE_FLOOR {
            // The second-order outflow is not an M-matrix; on a steep profile
            // at V_F it can reinject negative mass. The two-point one is.
            outflow = Outflow::TwoPoint;
            next = drifted;
            scheme::implicit_diffusion(&mut next, lambda, &deposit, outflow);
            self.outflow_fallbacks += 1;
        }
        let (cell, min) = minimum(&next);
        if min < NEGATIVE_FLOOR {
            return Err(NnlifError::NegativeDensity {
                min,
                cell,
                t: t_next,
            });
        }
        let n = next.len();
        let (w_last, w_prev) = outflow.weights();
        let raw_rate = params.a * (w_last * next[n - 1] + w_prev * next[n - 2]) / grid.dv;
        let leaked = 2.0 * params.a * next[0] / grid.dv * dt;
        for x in next.iter_mut() {
            if *x < 0.0 {
                *x = 0.0;
            }
        }
        if raw_rate < -RATE_TOLERANCE {
            self.negative_rate_count += 1;
        }
        let rate = raw_rate.max(0.0);
        self.rho = next;
        self.t = t_next;
        self.leakage += leaked;
        self.history.push(t_next, rate);
        Ok(StepInfo {
            mu,
            raw_rate,
            rate,
            leaked,
        })
    }
}

fn minimum(x: &[f64]) -> (usize, f64) {
    x.iter().copied().enumerate().fold(
        (0, f64::INFINITY),
        |acc, (i, x)| if x < acc.1 { (i, x) } else { acc },
    )
}

/// Largest stable explicit drift step `dv / max|mu - v|`.
pub fn cfl_limit(grid: &Grid, mu: f64) -> f64 {
    let speed = (mu - grid.v_min).abs().max((mu - grid.v_max).abs());
    if speed == 0.0 {
        f64::INFINITY
    } else {
        grid.dv / speed
    }
}

/// Unclamped `-a d_v rho(V_F)` from the last two cell averages.
///
/// With `rho(V_F) = 0` the weights `(7, -1) / 2dv` are exact for quadratic profiles.
pub fn raw_firing_rate(rho: &[f64], params: &ModelParams, grid: &Grid) -> Result<f64> {
    grid.check_len(rho.len())?;
    let n = rho.len();
    Ok(params.a * (7.0 * rho[n - 1] - rho[n - 2]) / (2.0 * grid.dv))
}

/// Firing rate of the state, clamped at zero.
pub fn firing_rate(state: &DensityState, params: &ModelParams, grid: &Grid) -> Result<f64> {
    Ok(raw_firing_rate(&state.rho, params, grid)?.max(0.0))
}

/// `b0 + b N(t - D)` with `N` interpolated from the history.
pub fn delayed_drift(state: &DensityState, params: &ModelParams) -> Result<f64> {
    if params.b == 0.0 {
        return Ok(params.b0);
    }
    let n = state.history.at(state.t - params.d)?;
    Ok(params.b0 + params.b * n)
}

/// Functional form of [`DensityState::advance`].
pub fn step(
    state: &DensityState,
    params: &ModelParams,
    grid: &Grid,
    dt: f64,
) -> Result<DensityState> {
    let mut next = state.clone();
    next.advance(params, grid, dt)?;
    Ok(next)
}

/// Functional form of [`DensityState::advance_with_drift`].
pub fn step_with_drift(
    state: &DensityState,
    params: &ModelParams,
    grid: &Grid,
    dt: f64,
    mu: f64,
) -> Result<DensityState> {
    let mut next = state.clone();
    next.advance_with_drift(params, grid, dt, mu)?;
    Ok(next)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::steady::unique_steady_state;

    fn setup(b: f64, d: f64, n: usize) -> (ModelParams, Grid) {
        let p = ModelParams::standard(b, d);
        let g = Grid::for_params(&p, n, 1.0).unwrap();
        (p, g)
    }

    #[test]
    fn rate_of_zero_profile_is_zero() {
        let (p, g) = setup(0.0, 0.0, 100);
        assert_eq!(raw_firing_rate(&vec![0.0; 100], &p, &g).unwrap(), 0.0);
    }

    #[test]
    fn rate_is_exact_on_linear_and_quadratic_profiles() {
        let (p, g) = setup(0.0, 0.0, 100);
        let rho = g.cell_averages(|v| -2.5 * v + 0.7 * v * v);
        let n = raw_firing_rate(&rho, &p, &g).unwrap();
        assert!((n - 2.5).abs() < 1e-10);
    }

    #[test]
    fn rate_of_steady_state_is_within_one_percent() {
        let (p, g) = setup(0.0, 0.0, 2000);
        let ss = unique_steady_state(&p, &g).unwrap();
        let n = raw_firing_rate(&ss.rho_inf, &p, &g).unwrap();
        assert!((n - ss.n_inf).abs() / ss.n_inf < 1e-2);
    }

    #[test]
    fn drift_reads_the_right_history() {
        let (p, g) = setup(0.0, 0.0, 100);
        let rho = g.cell_averages(|v| if v > -1.0 { -v } else { 0.0 });
        let s = DensityState::new(
            rho.clone(),
            InitialHistory::constant(0.0, 0.5).unwrap(),
            &p,
            &g,
        )
        .unwrap();
        assert_eq!(delayed_drift(&s, &p).unwrap(), 0.0);

        let q = ModelParams::standard(2.0, 0.3);
        let s =
            DensityState::new(rho, InitialHistory::constant(0.3, 0.75).unwrap(), &q, &g).unwrap();
        assert_eq!(delayed_drift(&s, &q).unwrap(), 1.5);
    }

    #[test]
    fn step_conserves_mass_up_to_leakage() {
        let (p, g) = setup(0.5, 0.2, 400);
        let rho = g.cell_averages(|v| (-(v + 1.5) * (v + 1.5) * 4.0).exp());
        let m = g.mass(&rho);
        let rho: Vec<f64> = rho.iter().map(|r| r / m).collect();
        let mut s =
            DensityState::new(rho, InitialHistory::constant(0.2, 0.0).unwrap(), &p, &g).unwrap();
        for _ in 0..200 {
            s.advance(&p, &g, 1e-3).unwrap();
        }
        assert!((s.mass(&g) + s.leakage - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cfl_violation_is_an_error() {
        let (p, g) = setup(0.0, 0.0, 100);
        let rho = g.cell_averages(|v| if v > -1.0 { -v } else { 0.0 });
        let s =
            DensityState::new(rho, InitialHistory::constant(0.0, 0.0).unwrap(), &p, &g).unwrap();
        let err = step(&s, &p, &g, 10.0).unwrap_err();
        assert!(matches!(err, NnlifError::Cfl { .. }));
    }

    #[test]
    fn grid_mismatch_is_an_error() {
        let (p, g) = setup(0.0, 0.0, 100);
        let err = DensityState::new(
            vec![0.0; 99],
            InitialHistory::constant(0.0, 0.0).unwrap(),
            &p,
            &g,
        )
        .unwrap_err();
        assert!(matches!(err, NnlifError::GridMismatch { .. }));
    }
}
