//! First-moment balance and the obstruction to periodic solutions.
//!
//! Multiplying the equation by `v` gives
//! `dm1/dt = -m1 + b0 + b N(t - D) - (V_F - V_R) N(t)`. For a `T`-periodic
//! solution with `b0 = 0` the average over a period gives
//! `∫ v Phi dv = (b - (V_F - V_R)) N̄`, where `Phi` is the averaged density.

use crate::error::{invalid, Result};
use crate::fp::{FiringRateSeries, SeriesRow, Snapshot};
use crate::grid::Grid;
use crate::model::ModelParams;

/// Residual of the first-moment balance at each interval between series rows.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentReport {
    /// Interval midpoints.
    pub times: Vec<f64>,
    /// `m1` at the midpoints.
    pub m1: Vec<f64>,
    /// `dm1/dt` minus the right-hand side, both at the midpoint.
    pub residual: Vec<f64>,
}

impl MomentReport {
    pub fn max_abs_residual(&self) -> f64 {
        self.residual.iter().map(|r| r.abs()).fold(0.0, f64::max)
    }

    /// Time average of `|residual|` over `[t0, t1]`.
    pub fn mean_abs_residual(&self, t0: f64, t1: f64) -> f64 {
        let inside: Vec<f64> = self
            .times
            .iter()
            .zip(&self.residual)
            .filter(|(t, _)| **t >= t0 && **t <= t1)
            .map(|(_, r)| r.abs())
            .collect();
        if inside.is_empty() {
            return 0.0;
        }
        inside.iter().sum::<f64>() / inside.len() as f64
    }
}

/// Midpoint residuals of the moment balance between consecutive rows.
///
/// `mu` of a row is the drift of the step ending at that row; the midpoint
/// drift is the mean of the two rows, like `m1` and `N`.
pub fn moment_balance(series: &FiringRateSeries, params: &ModelParams) -> Result<MomentReport> {
    params.validate()?;
    let rows = &series.rows;
    if rows.len() < 2 {
        return Err(invalid("moment balance needs at least two series rows"));
    }
    let gap = params.v_f - params.v_r;
    let mut report = MomentReport {
        times: Vec::new(),
        m1: Vec::new(),
        residual: Vec::new(),
    };
    for w in rows.windows(2) {
        let (a, b): (&SeriesRow, &SeriesRow) = (&w[0], &w[1]);
        let h = b.t - a.t;
        if !(h > 0.0) {
            continue;
        }
        let m1 = 0.5 * (a.first_moment + b.first_moment);
        let n = 0.5 * (a.n + b.n);
        let rhs = -m1 + 0.5 * (a.mu + b.mu) - gap * n;
        report.times.push(0.5 * (a.t + b.t));
        report.m1.push(m1);
        report
            .residual
            .push((b.first_moment - a.first_moment) / h - rhs);
    }
    Ok(report)
}

/// Which side of the identity the data falls on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SignCertificate {
    /// `V_F <= 0` and `b > V_F - V_R`: the left side is negative and the right
    /// side positive, so no period can balance them.
    Contradiction,
    /// The signs of both sides agree or the hypotheses do not hold.
    Compatible,
}

/// The averaged identity over the last `period` of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicityReport {
    pub period: f64,
    pub window: (f64, f64),
    /// Time-averaged density over the window; empty if fewer than two
    /// snapshots fall inside.
    pub phi: Vec<f64>,
    /// `∫ v Phi dv`, from the series first moments.
    pub lhs: f64,
    /// `(b - (V_F - V_R)) N̄`.
    pub rhs: f64,
    pub n_avg: f64,
    /// `(m1(t1) - m1(t0)) / T`, zero for a periodic run.
    pub drift: f64,
    /// Mean `|moment balance residual|` over the window.
    pub discretization: f64,
    pub certificate: SignCertificate,
}

impl PeriodicityReport {
    pub fn residual(&self) -> f64 {
        self.lhs - self.rhs
    }

    /// `|lhs - rhs| <= factor * discretization`.
    pub fn within(&self, factor: f64) -> bool {
        self.residual().abs() <= factor * self.discretization
    }
}

/// Averages of `y` over `[t0, t1]` from samples, by the trapezoid rule on the
/// samples inside plus interpolated end points.
fn window_average(t: &[f64], y: &[f64], t0: f64, t1: f64) -> f64 {
    use crate::quadrature::interp_linear;
    let mut xs = vec![t0];
    let mut ys = vec![interp_linear(t, y, t0)];
    for (&ti, &yi) in t.iter().zip(y) {
        if ti > t0 && ti < t1 {
            xs.push(ti);
            ys.push(yi);
        }
    }
    xs.push(t1);
    ys.push(interp_linear(t, y, t1));
    crate::quadrature::trapezoid(&xs, &ys) / (t1 - t0)
}

/// Tests the identity on the window `[t_end - period, t_end]`.
pub fn periodicity_obstruction(
    series: &FiringRateSeries,
    snapshots: &[Snapshot],
    grid: &Grid,
    params: &ModelParams,
    period: f64,
) -> Result<PeriodicityReport> {
    if params.b0 != 0.0 {
        return Err(invalid("the periodicity identity needs b0 = 0"));
    }
    let moments = moment_balance(series, params)?;
    let rows = &series.rows;
    let (first, last) = (rows[0].t, rows[rows.len() - 1].t);
    if !(period > 0.0) {
        return Err(invalid("period must be positive"));
    }
    if period > last - first + 1e-12 {
        return Err(invalid(format!(
            "period {period} is longer than the trajectory ({})",
            last - first
        )));
    }
    let (t0, t1) = (last - period, last);
    let t: Vec<f64> = rows.iter().map(|r| r.t).collect();
    let m1: Vec<f64> = rows.iter().map(|r| r.first_moment).collect();
    let n: Vec<f64> = rows.iter().map(|r| r.n).collect();
    let lhs = window_average(&t, &m1, t0, t1);
    let n_avg = window_average(&t, &n, t0, t1);
    let gap = params.v_f - params.v_r;
    let rhs = (params.b - gap) * n_avg;
    let interp = |y: &[f64], at: f64| crate::quadrature::interp_linear(&t, y, at);
    let drift = (interp(&m1, t1) - interp(&m1, t0)) / period;

    let inside: Vec<&Snapshot> = snapshots
        .iter()
        .filter(|s| s.t >= t0 - 1e-12 && s.t <= t1 + 1e-12)
        .collect();
    let phi = if inside.len() >= 2 {
        for s in &inside {
            grid.check_len(s.rho.len())?;
        }
        let span = inside[inside.len() - 1].t - inside[0].t;
        let mut phi = vec![0.0; grid.n_cells];
        for w in inside.windows(2) {
            let h = 0.5 * (w[1].t - w[0].t) / span;
            for (p, (a, b)) in phi.iter_mut().zip(w[0].rho.iter().zip(&w[1].rho)) {
                *p += h * (a + b);
            }
        }
        phi
    } else {
        Vec::new()
    };

    let certificate = if params.v_f <= 0.0 && params.b > gap && lhs < 0.0 && rhs > 0.0 {
        SignCertificate::Contradiction
    } else {
        SignCertificate::Compatible
    };
    Ok(PeriodicityReport {
        period,
        window: (t0, t1),
        phi,
        lhs,
        rhs,
        n_avg,
        drift,
        discretization: moments.mean_abs_residual(t0, t1),
        certificate,
    })
}

/// [`periodicity_obstruction`] for every period in `periods` not longer than the run.
pub fn periodicity_scan(
    series: &FiringRateSeries,
    snapshots: &[Snapshot],
    grid: &Grid,
    params: &ModelParams,
    periods: &[f64],
) -> Result<Vec<PeriodicityReport>> {
    let rows = &series.rows;
    let span = rows.last().map_or(0.0, |r| r.t) - rows.first().map_or(0.0, |r| r.t);
    periods
        .iter()
        .filter(|&&p| p <= span + 1e-12)
        .map(|&p| periodicity_obstruction(series, snapshots, grid, params, p))
        .collect()
}
