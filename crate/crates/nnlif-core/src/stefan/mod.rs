//! Stefan-like reformulation of the delayed equation, solved as an integral
//! equation for the flux and used as an independent short-time oracle.
//!
//! With normalized parameters (`a = 1`, `V_F = 0`) the changes of variables
//! `tau = (e^{2t} - 1)/2`, `alpha = (2 tau + 1)^{-1/2}`, `y = v / alpha`,
//! `x = y + s(tau)`, `u(x, tau) = alpha rho(v, t)` and `M = alpha^2 N` turn the
//! equation into `u_tau = u_xx + M delta_{s1}` on `x < s(tau)` with
//! `u(s, tau) = 0`, `M = -u_x(s, tau)`, `s1 = s + V_R / alpha`, and
//! `s(tau) = -b0 (sqrt(2 tau + 1) - 1) - b / sqrt(1 - D̄) ∫_{-D̄/2}^{tau_D} M alpha^{-1}`.

mod coords;
mod duhamel;
mod extend;
mod kernel;
mod profile;
mod volterra;

pub use coords::{Boundary, CoordinateMap};
pub use duhamel::{duhamel_u, stefan_mass};
pub use extend::{piecewise_extend, ExtendOptions};
pub use kernel::{heat_kernel, heat_kernel_dx};
pub use profile::PiecewiseLinear;
pub use volterra::FixedPointOptions;

use crate::error::{invalid, NnlifError, Result};
use crate::fp::{InitialHistory, Snapshot};
use crate::grid::Grid;
use crate::model::ModelParams;

/// Relative mismatch allowed between `M0(0)` and `-u0'(0^-)`.
pub const COMPATIBILITY_RTOL: f64 = 0.05;

/// Samples of `u(., tau)` on a spatial grid ending at `s(tau)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    pub tau: f64,
    pub x: Vec<f64>,
    pub u: Vec<f64>,
}

/// Flux, free boundary and fields of a solved Stefan problem.
#[derive(Debug, Clone, PartialEq)]
pub struct StefanSolution {
    pub map: CoordinateMap,
    /// Solved nodes, starting at `tau = 0`.
    pub tau: Vec<f64>,
    pub m: Vec<f64>,
    pub s: Vec<f64>,
    pub s1: Vec<f64>,
    /// `M0` on `[-D̄/2, 0]`.
    pub prehistory: PiecewiseLinear,
    /// Profile at `tau = 0`, ending at `x = 0`.
    pub u0: PiecewiseLinear,
    /// Restart profiles at window seams.
    pub fields: Vec<Field>,
    /// Window start times, `0` first.
    pub seams: Vec<f64>,
    /// `|M(seam) + u_x(s^-, seam)|` of each restart profile.
    pub seam_mismatch: Vec<f64>,
    pub iterations: usize,
    pub halvings: usize,
}

impl StefanSolution {
    pub fn end(&self) -> f64 {
        self.tau[self.tau.len() - 1]
    }

    /// `M` on `[-D̄/2, end]`, prehistory included.
    pub fn flux_history(&self) -> Result<PiecewiseLinear> {
        volterra::joined_history(&self.prehistory, &self.tau, &self.m)
    }

    pub fn boundary(&self) -> Result<Boundary> {
        Boundary::new(self.map, self.flux_history()?)
    }

    /// `M` interpolated at `tau` in the solved range.
    pub fn flux_at(&self, tau: f64) -> Result<f64> {
        self.check_range(tau)?;
        Ok(crate::quadrature::interp_linear(&self.tau, &self.m, tau))
    }

    pub(crate) fn check_range(&self, tau: f64) -> Result<()> {
        if !(tau >= 0.0 && tau <= self.end() * (1.0 + 1e-12) + 1e-15) {
            return Err(invalid(format!(
                "tau = {tau} outside the solved range [0, {}]",
                self.end()
            )));
        }
        Ok(())
    }

    /// Panel sums `(phi1, phi2)` of `2 m ∫ |dG/dx|` at node `i`, with
    /// `m = 1 + 2 sup|u0'|`.
    pub fn contraction_sums(&self, i: usize) -> Result<(f64, f64)> {
        let ball = 1.0 + 2.0 * self.u0.max_abs_slope();
        volterra::contraction_sums(&self.boundary()?, &self.tau, i, ball)
    }

    /// Recomputes `s` and `s1` at the nodes from the flux.
    fn refresh_boundary(&mut self) -> Result<()> {
        let b = self.boundary()?;
        self.s = self.tau.iter().map(|&t| b.s(t)).collect::<Result<_>>()?;
        self.s1 = self.tau.iter().map(|&t| b.s1(t)).collect::<Result<_>>()?;
        Ok(())
    }
}

fn check_profile(u0: &PiecewiseLinear) -> Result<()> {
    let scale = 1.0 + u0.max_abs();
    if u0.end().abs() > 1e-12 {
        return Err(invalid(format!(
            "initial profile must end at x = 0, ends at {}",
            u0.end()
        )));
    }
    if u0.last_value().abs() > 1e-12 * scale {
        return Err(invalid("initial profile must vanish at x = 0"));
    }
    if u0.ys().iter().any(|&y| y < -1e-12 * scale) {
        return Err(invalid("initial profile must be non-negative"));
    }
    Ok(())
}

/// Solves the flux equation on `[0, sigma]` from `u0` and the prehistory `M0`.
///
/// If the sweeps do not contract, the window is halved; the returned solution
/// ends at the achieved `sigma`.
pub fn fixed_point_m(
    u0: &PiecewiseLinear,
    prehistory: &PiecewiseLinear,
    params: &ModelParams,
    opts: &FixedPointOptions,
) -> Result<StefanSolution> {
    let map = CoordinateMap::new(params)?;
    check_profile(u0)?;
    if (prehistory.start() - map.prehistory_start()).abs() > 1e-12 || prehistory.end().abs() > 1e-12
    {
        return Err(invalid(format!(
            "prehistory must cover [{}, 0], covers [{}, {}]",
            map.prehistory_start(),
            prehistory.start(),
            prehistory.end()
        )));
    }
    let m0 = -u0.end_slope();
    let pre0 = prehistory.last_value();
    if (pre0 - m0).abs() > COMPATIBILITY_RTOL * pre0.abs().max(m0.abs()) + 1e-8 {
        return Err(NnlifError::Validation(format!(
            "prehistory M0(0) = {pre0} is incompatible with -u0'(0) = {m0}"
        )));
    }
    let w = volterra::solve_window(&map, prehistory, 0.0, m0, u0, opts)?;
    let mut sol = StefanSolution {
        map,
        tau: w.tau,
        m: w.m,
        s: Vec::new(),
        s1: Vec::new(),
        prehistory: prehistory.clone(),
        u0: u0.clone(),
        fields: Vec::new(),
        seams: vec![0.0],
        seam_mismatch: Vec::new(),
        iterations: w.iterations,
        halvings: w.halvings,
    };
    sol.refresh_boundary()?;
    Ok(sol)
}

/// Fixed-point flux, boundary and fields from solver output.
#[derive(Debug, Clone, PartialEq)]
pub struct StefanSamples {
    pub tau: Vec<f64>,
    pub m: Vec<f64>,
    pub s: Vec<f64>,
    pub s1: Vec<f64>,
    pub fields: Vec<Field>,
}

/// Maps a solver run to Stefan variables: `M = alpha^2 N`, `s` by quadrature,
/// and `u = alpha rho` at `x = v / alpha + s`.
///
/// `rates` are `(t, N)` samples from `t = 0`; `initial` supplies `N0` for the
/// prehistory.
pub fn to_stefan(
    snapshots: &[Snapshot],
    grid: &Grid,
    rates: &[(f64, f64)],
    initial: &InitialHistory,
    params: &ModelParams,
) -> Result<StefanSamples> {
    let map = CoordinateMap::new(params)?;
    if rates.is_empty() || rates[0].0.abs() > 1e-12 {
        return Err(invalid("rate samples must start at t = 0"));
    }
    let pre = map.prehistory(initial, (4 * initial.times.len()).max(64))?;
    let tau: Vec<f64> = rates.iter().map(|&(t, _)| map.tau(t)).collect();
    let m: Vec<f64> = rates
        .iter()
        .zip(&tau)
        .map(|(&(_, n), &tau)| map.alpha(tau).powi(2) * n)
        .collect();
    let boundary = Boundary::new(map, volterra::joined_history(&pre, &tau, &m)?)?;
    let s: Vec<f64> = tau.iter().map(|&t| boundary.s(t)).collect::<Result<_>>()?;
    let s1: Vec<f64> = tau.iter().map(|&t| boundary.s1(t)).collect::<Result<_>>()?;
    let fields = snapshots
        .iter()
        .map(|snap| {
            grid.check_len(snap.rho.len())?;
            let t = map.tau(snap.t);
            let alpha = map.alpha(t);
            let shift = boundary.s(t)?;
            Ok(Field {
                tau: t,
                x: grid.centers().iter().map(|v| v / alpha + shift).collect(),
                u: snap.rho.iter().map(|r| alpha * r).collect(),
            })
        })
        .collect::<Result<_>>()?;
    Ok(StefanSamples {
        tau,
        m,
        s,
        s1,
        fields,
    })
}

/// Density `rho(v, t)` from `u` values at `x = v / alpha + s`.
pub fn density_from_field(map: &CoordinateMap, tau: f64, u: &[f64]) -> Vec<f64> {
    let alpha = map.alpha(tau);
    u.iter().map(|x| x / alpha).collect()
}

#[cfg(test)]
mod tests;
