//! Relative entropy `E = ∫ rho_inf G(rho / rho_inf)` and its dissipation identity
//!
//! `dE/dt = -a ∫ rho_inf (d_v q)^2 G''(q)
//!          - N_inf [G(F) - G(q) - (F - q) G'(q)]_{v = V_R}
//!          + b (N(t - D) - N_inf) ∫ d_v rho_inf [G(q) - q G'(q)]`
//!
//! with `q = rho / rho_inf` and `F = N / N_inf`.

use crate::error::{invalid, numeric, NnlifError, Result};
use crate::fp::{InitialHistory, Trajectory};
use crate::grid::Grid;
use crate::model::ModelParams;
use crate::quadrature::interp_linear;
use crate::steady::SteadyState;

use super::{decay_fit, lagrange_derivative, DecayFit};

/// Smallest `rho_inf` accepted on cells below the threshold cell.
pub const RHO_INF_FLOOR: f64 = 1e-290;
/// Fraction of the resolved part of the run, from its end, used by the decay fit.
pub const FIT_FRACTION: f64 = 0.5;
/// Entropies at or below this (`q - 1` near `1e-9`) are dominated by the error
/// of a relaxed reference state and stay out of the fit.
pub const ENTROPY_NOISE_FLOOR: f64 = 1e-18;
/// Share of cells at the left end where the maximum of `q` may not sit.
const TAIL_SHARE: f64 = 0.1;

/// A convex `C^2` function with its first two derivatives.
#[derive(Debug, Clone, Copy)]
pub struct EntropyFunction {
    pub g: fn(f64) -> f64,
    pub dg: fn(f64) -> f64,
    pub d2g: fn(f64) -> f64,
}

/// `G(x) = (x - 1)^2`.
pub const QUADRATIC: EntropyFunction = EntropyFunction {
    g: |x| (x - 1.0) * (x - 1.0),
    dg: |x| 2.0 * (x - 1.0),
    d2g: |_| 2.0,
};

impl EntropyFunction {
    /// `G(x) - G(y) - (x - y) G'(y)`, non-negative for convex `G`.
    pub fn bregman(&self, x: f64, y: f64) -> f64 {
        (self.g)(x) - (self.g)(y) - (x - y) * (self.dg)(y)
    }
}

/// One snapshot of [`EntropyReport`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntropyRow {
    pub t: f64,
    pub e: f64,
    pub de_dt_measured: f64,
    /// `-a ∫ rho_inf (d_v q)^2 G''(q)`.
    pub dissipation: f64,
    /// `-N_inf [G(F) - G(q) - (F - q) G'(q)]` at `V_R`.
    pub boundary: f64,
    /// `b (N(t - D) - N_inf) ∫ d_v rho_inf [G(q) - q G'(q)]`.
    pub delay: f64,
    pub n: f64,
    pub n_delayed: f64,
}

impl EntropyRow {
    pub fn de_dt_identity(&self) -> f64 {
        self.dissipation + self.boundary + self.delay
    }

    pub fn residual(&self) -> f64 {
        (self.de_dt_measured - self.de_dt_identity()).abs()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EntropyReport {
    pub rows: Vec<EntropyRow>,
    /// `max rho0 / rho_inf` over the cells below the threshold cell.
    pub c0: f64,
    /// False when the largest ratio sits in the left tail, so no `C0` bounds `rho0 / rho_inf`.
    pub hypothesis_ok: bool,
    /// Snapshots where the dissipation or the boundary term came out positive.
    pub sign_violations: usize,
    /// Log-linear fit of `E` over the last half of the span where `E` is above
    /// [`ENTROPY_NOISE_FLOOR`].
    pub fit: Option<DecayFit>,
}

impl EntropyReport {
    pub fn max_abs_rate(&self) -> f64 {
        self.rows
            .iter()
            .map(|r| r.de_dt_measured.abs())
            .fold(0.0, f64::max)
    }

    pub fn max_residual(&self) -> f64 {
        self.rows.iter().map(|r| r.residual()).fold(0.0, f64::max)
    }

    /// `max |measured - identity| / max |dE/dt|`.
    pub fn relative_residual(&self) -> f64 {
        let scale = self.max_abs_rate();
        if scale > 0.0 {
            self.max_residual() / scale
        } else {
            self.max_residual()
        }
    }
}

/// `q = rho / rho_inf` per cell; the threshold cell takes the ratio of the
/// boundary slopes, the limit of `0/0` at `V_F`.
pub fn density_ratio(rho: &[f64], steady: &SteadyState, grid: &Grid) -> Result<Vec<f64>> {
    grid.check_len(rho.len())?;
    grid.check_len(steady.rho_inf.len())?;
    let n = rho.len();
    let rho_inf = &steady.rho_inf;
    if let Some(i) = rho_inf[..n - 1].iter().position(|&r| !(r > RHO_INF_FLOOR)) {
        return Err(numeric(format!(
            "steady density {:e} below the floor at v = {}",
            rho_inf[i],
            grid.center(i)
        )));
    }
    let slope = |r: &[f64]| 7.0 * r[n - 1] - r[n - 2];
    let end = slope(rho_inf);
    if !(end > 0.0) {
        return Err(numeric("steady profile has no boundary slope at V_F"));
    }
    let mut q: Vec<f64> = rho.iter().zip(rho_inf).map(|(r, s)| r / s).collect();
    q[n - 1] = slope(rho) / end;
    Ok(q)
}

/// `∫ rho_inf G(rho / rho_inf) dv` by the midpoint rule on cells.
pub fn relative_entropy(
    rho: &[f64],
    steady: &SteadyState,
    grid: &Grid,
    g: &EntropyFunction,
) -> Result<f64> {
    let q = density_ratio(rho, steady, grid)?;
    Ok(entropy_from_ratio(&q, steady, grid, g))
}

fn entropy_from_ratio(q: &[f64], steady: &SteadyState, grid: &Grid, g: &EntropyFunction) -> f64 {
    q.iter()
        .zip(&steady.rho_inf)
        .map(|(&q, &s)| s * (g.g)(q))
        .sum::<f64>()
        * grid.dv
}

/// `q(V_R)` as the mean of linear extrapolations from each side; `q` has a
/// kink at `V_R`.
fn ratio_at_reset(q: &[f64], grid: &Grid) -> f64 {
    let r = grid.r_index;
    if r < 2 || r + 3 > q.len() {
        return q[r];
    }
    let left = q[r - 1] + (q[r - 1] - q[r - 2]) * (grid.v_r - grid.center(r - 1)) / grid.dv;
    let right = q[r + 1] + (q[r + 1] - q[r + 2]) * (grid.center(r + 1) - grid.v_r) / grid.dv;
    0.5 * (left + right)
}

/// The three right-hand terms of the identity for one density.
fn identity_terms(
    q: &[f64],
    steady: &SteadyState,
    grid: &Grid,
    g: &EntropyFunction,
    n: f64,
    n_delayed: f64,
) -> (f64, f64, f64) {
    let p = &steady.params;
    let rho_inf = &steady.rho_inf;
    let dissipation = -p.a
        * q.windows(2)
            .zip(rho_inf.windows(2))
            .map(|(qs, ss)| {
                let dq = (qs[1] - qs[0]) / grid.dv;
                0.5 * (ss[0] + ss[1]) * dq * dq * (g.d2g)(0.5 * (qs[0] + qs[1]))
            })
            .sum::<f64>()
        * grid.dv;

    let n_inf = steady.n_inf;
    let boundary = -n_inf * g.bregman(n / n_inf, ratio_at_reset(q, grid));

    let delay = if p.b == 0.0 {
        0.0
    } else {
        let c = p.b0 + p.b * n_inf;
        let theta = (grid.v_r - grid.edge(grid.r_index)) / grid.dv;
        let integral: f64 = q
            .iter()
            .zip(rho_inf)
            .enumerate()
            .map(|(i, (&q, &s))| {
                let above = match i.cmp(&grid.r_index) {
                    std::cmp::Ordering::Less => 0.0,
                    std::cmp::Ordering::Equal => 1.0 - theta,
                    std::cmp::Ordering::Greater => 1.0,
                };
                let slope = ((c - grid.center(i)) * s - n_inf * above) / p.a;
                slope * ((g.g)(q) - q * (g.dg)(q))
            })
            .sum::<f64>()
            * grid.dv;
        p.b * (n_delayed - n_inf) * integral
    };
    (dissipation, boundary, delay)
}

fn check_steady(params: &ModelParams, steady: &SteadyState) -> Result<()> {
    let s = &steady.params;
    let same = s.a == params.a
        && s.b == params.b
        && s.b0 == params.b0
        && s.v_r == params.v_r
        && s.v_f == params.v_f;
    if !same {
        return Err(invalid(
            "steady state was computed for different parameters",
        ));
    }
    Ok(())
}

/// Evaluates both sides of the identity at every snapshot of `trajectory`.
///
/// `dE/dt` is differentiated from the snapshot entropies with five-point
/// Lagrange stencils, so snapshots should be dense. `initial` supplies
/// `N(t - D)` for `t < D`.
pub fn entropy_identity_check(
    trajectory: &Trajectory,
    steady: &SteadyState,
    params: &ModelParams,
    initial: &InitialHistory,
    g: &EntropyFunction,
) -> Result<EntropyReport> {
    params.validate()?;
    check_steady(params, steady)?;
    if trajectory.series.blow_up.is_some() {
        return Err(NnlifError::Validation(
            "entropy identity needs a run without a blow-up flag".into(),
        ));
    }
    let snaps = &trajectory.snapshots;
    if snaps.len() < 2 {
        return Err(invalid("entropy identity needs at least two snapshots"));
    }
    let grid = &trajectory.grid;
    let times = trajectory.series.times();
    let rates = trajectory.series.rates();
    let rate_at = |t: f64| -> f64 {
        if t < 0.0 {
            initial.at(t)
        } else {
            interp_linear(&times, &rates, t)
        }
    };

    let q0 = density_ratio(&snaps[0].rho, steady, grid)?;
    let interior = &q0[..q0.len() - 1];
    let (arg, c0) = interior
        .iter()
        .copied()
        .enumerate()
        .fold((0, 0.0), |acc, (i, x)| if x > acc.1 { (i, x) } else { acc });
    let hypothesis_ok = c0.is_finite() && (arg as f64) >= TAIL_SHARE * interior.len() as f64;

    let mut ratios = Vec::with_capacity(snaps.len());
    ratios.push(q0);
    for s in &snaps[1..] {
        ratios.push(density_ratio(&s.rho, steady, grid)?);
    }
    let t: Vec<f64> = snaps.iter().map(|s| s.t).collect();
    let e: Vec<f64> = ratios
        .iter()
        .map(|q| entropy_from_ratio(q, steady, grid, g))
        .collect();

    let mut sign_violations = 0;
    let rows: Vec<EntropyRow> = ratios
        .iter()
        .enumerate()
        .map(|(k, q)| {
            let n = rate_at(t[k]);
            let n_delayed = rate_at(t[k] - params.d);
            let (dissipation, boundary, delay) = identity_terms(q, steady, grid, g, n, n_delayed);
            if dissipation > 0.0 || boundary > 0.0 {
                sign_violations += 1;
            }
            EntropyRow {
                t: t[k],
                e: e[k],
                de_dt_measured: lagrange_derivative(&t, &e, k, 5),
                dissipation,
                boundary,
                delay,
                n,
                n_delayed,
            }
        })
        .collect();

    let resolved_end = rows
        .iter()
        .take_while(|r| r.e > ENTROPY_NOISE_FLOOR)
        .last()
        .map_or(t[0], |r| r.t);
    let start = resolved_end - FIT_FRACTION * (resolved_end - t[0]);
    let (ft, fe): (Vec<f64>, Vec<f64>) = rows
        .iter()
        .filter(|r| r.t >= start && r.t <= resolved_end)
        .map(|r| (r.t, r.e))
        .unzip();
    let fit = decay_fit(&ft, &fe);
    Ok(EntropyReport {
        rows,
        c0,
        hypothesis_ok,
        sign_violations,
        fit,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fp::{clipped_gaussian, simulate, SimulateOptions};
    use crate::steady::unique_steady_state;

    fn setup(n: usize) -> (ModelParams, Grid, SteadyState) {
        let p = ModelParams::standard(0.0, 0.0);
        let g = Grid::for_params(&p, n, 1.0).unwrap();
        let s = unique_steady_state(&p, &g).unwrap();
        (p, g, s)
    }

    #[test]
    fn steady_state_has_zero_entropy() {
        let (_, g, s) = setup(400);
        let e = relative_entropy(&s.rho_inf, &s, &g, &QUADRATIC).unwrap();
        assert_eq!(e, 0.0);
    }

    #[test]
    fn shifted_steady_state_entropy_converges() {
        // Shift by a fixed distance 0.05 realised as a whole number of cells.
        let value = |n: usize| {
            let (_, g, s) = setup(n);
            let k = (0.05 / g.dv).round() as usize;
            let mut rho = vec![0.0; n];
            rho[..n - k].copy_from_slice(&s.rho_inf[k..]);
            let mass = g.mass(&rho);
            rho.iter_mut().for_each(|r| *r /= mass);
            relative_entropy(&rho, &s, &g, &QUADRATIC).unwrap()
        };
        let (e1, e2, e3) = (value(560), value(1120), value(2240));
        assert!(e1 > 0.0 && e2 > 0.0 && e3 > 0.0);
        assert!((e3 - e2).abs() < (e2 - e1).abs());
    }

    #[test]
    fn floor_violation_is_an_error() {
        let (_, g, mut s) = setup(100);
        s.rho_inf[3] = 0.0;
        let rho = s.rho_inf.clone();
        assert!(matches!(
            relative_entropy(&rho, &s, &g, &QUADRATIC),
            Err(NnlifError::Numeric(_))
        ));
    }

    #[test]
    fn bregman_of_quadratic_is_a_square() {
        for &(x, y) in &[(0.3, 1.7), (2.0, 2.0), (-1.0, 0.5)] {
            assert!((QUADRATIC.bregman(x, y) - (x - y) * (x - y)).abs() < 1e-14);
        }
    }

    /// Runs to `warm` from a clipped Gaussian, then restarts; the restart
    /// avoids the initial layer where `rho0` meets neither boundary condition.
    fn smooth_run(
        p: &ModelParams,
        g: &Grid,
        warm: f64,
        opts: &SimulateOptions,
    ) -> (crate::fp::Trajectory, InitialHistory) {
        let rho = clipped_gaussian(g, -1.0, 0.5).unwrap();
        let n0 = crate::fp::raw_firing_rate(&rho, p, g).unwrap();
        let init = InitialHistory::constant(p.d, n0).unwrap();
        let w = SimulateOptions {
            t_end: warm,
            dt: opts.dt,
            ..Default::default()
        };
        let w = simulate(p, g, &rho, &init, &w).unwrap();
        let restart = w.final_state.history.restart(w.final_state.t).unwrap();
        (
            simulate(p, g, &w.final_state.rho, &restart, opts).unwrap(),
            restart,
        )
    }

    #[test]
    fn uncoupled_run_dissipates() {
        let (p, g, s) = setup(400);
        let opts = SimulateOptions {
            t_end: 0.5,
            dt: 1e-3,
            snapshot_every: Some(0.01),
            ..Default::default()
        };
        let (tr, init) = smooth_run(&p, &g, 0.2, &opts);
        let r = entropy_identity_check(&tr, &s, &p, &init, &QUADRATIC).unwrap();
        assert!(r.hypothesis_ok);
        assert_eq!(r.sign_violations, 0);
        assert!(r
            .rows
            .iter()
            .all(|row| row.delay == 0.0 && row.de_dt_identity() <= 0.0));
        assert!(r.rows.windows(2).all(|w| w[1].e <= w[0].e));
        assert!(r.relative_residual() < 0.02, "{}", r.relative_residual());
    }

    #[test]
    fn decay_fit_skips_the_noise_floor() {
        let p = ModelParams::standard(0.1, 0.2);
        let g = Grid::for_params(&p, 300, 1.0).unwrap();
        let s = unique_steady_state(&p, &g).unwrap();
        let dt = 2e-3;
        let s = crate::fp::relax_to_stationary(&s, &g, dt, 1e-11, 1_000_000).unwrap();
        let opts = SimulateOptions {
            t_end: 12.0,
            dt,
            snapshot_every: Some(0.05),
            ..Default::default()
        };
        let (tr, init) = smooth_run(&p, &g, 0.2, &opts);
        let r = entropy_identity_check(&tr, &s, &p, &init, &QUADRATIC).unwrap();
        let fit = r.fit.unwrap();
        assert!(fit.mu > 1.0 && fit.r_squared > 0.999, "{fit:?}");
        let (lo, hi) = fit.confidence();
        assert!(lo > 0.0 && lo < fit.mu && fit.mu < hi);
    }

    #[test]
    fn heavy_tail_fails_the_domination_check() {
        let (p, g, s) = setup(400);
        let mut rho: Vec<f64> = s.rho_inf.iter().map(|r| r.sqrt()).collect();
        let mass = g.mass(&rho);
        rho.iter_mut().for_each(|r| *r /= mass);
        let n0 = crate::fp::raw_firing_rate(&rho, &p, &g).unwrap();
        let init = InitialHistory::constant(0.0, n0).unwrap();
        let opts = SimulateOptions {
            t_end: 0.01,
            dt: 1e-3,
            ..Default::default()
        };
        let tr = simulate(&p, &g, &rho, &init, &opts).unwrap();
        let r = entropy_identity_check(&tr, &s, &p, &init, &QUADRATIC).unwrap();
        assert!(!r.hypothesis_ok);
    }
}
