//! Time integration to a horizon with snapshots and the blow-up flag.
//!
//! Steps are `min(dt, 0.45 * CFL limit)` and land exactly on snapshot times.
//! When `N` first exceeds the threshold the last window is re-run at half `dt`
//! and half `dv`. The flag is raised only if the refined crossing time moves by
//! less than 10% and the doubling time of `N` shrinks by at least
//! `ACCELERATION_MIN` between the `thr/20 -> thr/10` and `thr/2 -> thr` legs,
//! and the refined run then reaches ten times the threshold within four late
//! legs. A finite spike fails the last test.
//! Otherwise the crossing is logged as a [`ThresholdEvent`] and the threshold
//! is raised tenfold.

use super::{raw_firing_rate, DensityState, InitialHistory, StepInfo};
use crate::error::{invalid, NnlifError, Result};
use crate::grid::Grid;
use crate::model::ModelParams;

pub(crate) const CFL_SAFETY: f64 = 0.45;
const ACCELERATION_MIN: f64 = 3.0;
const CONSISTENCY_RTOL: f64 = 0.1;
const LEVEL_FRACTIONS: [f64; 4] = [0.05, 0.1, 0.5, 1.0];
const LADDER_DECADES: i32 = 16;
const CONFIRM_FACTOR: f64 = 10.0;
const CONFIRM_WINDOWS: f64 = 4.0;

#[derive(Debug, Clone, PartialEq)]
pub struct SimulateOptions {
    pub t_end: f64,
    pub dt: f64,
    pub blow_up_threshold: f64,
    /// Snapshot spacing; `None` keeps only the first and last states.
    pub snapshot_every: Option<f64>,
    /// Minimum spacing of series rows; defaults to `dt`.
    pub series_every: Option<f64>,
    /// Relative tolerance between `N0(0)` and the stencil rate of `rho0`.
    pub slope_tolerance: f64,
    pub max_steps: usize,
    /// Spacing of the restart points used by the refinement re-run.
    pub checkpoint_every: f64,
}

impl Default for SimulateOptions {
    fn default() -> Self {
        Self {
            t_end: 1.0,
            dt: 1e-3,
            blow_up_threshold: 1e3,
            snapshot_every: None,
            series_every: None,
            slope_tolerance: 0.05,
            max_steps: 5_000_000,
            checkpoint_every: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub t: f64,
    pub rho: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesRow {
    pub t: f64,
    pub n: f64,
    pub mass: f64,
    pub first_moment: f64,
    /// Drift value `b0 + b N(t - D)` used by the step ending at `t`.
    pub mu: f64,
}

/// Refinement-validated blow-up record.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlowUp {
    /// Extrapolated divergence time, assuming `N ~ C / (T* - t)` on the last leg.
    pub time: f64,
    pub crossing_time: f64,
    pub refined_crossing_time: f64,
    pub threshold: f64,
    pub consistent: bool,
    /// Ratio of doubling times, early leg over late leg.
    pub acceleration: f64,
}

/// A threshold crossing that did not qualify as blow-up.
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdEvent {
    pub t: f64,
    pub threshold: f64,
    pub refined_crossing_time: Option<f64>,
    pub consistent: bool,
    pub acceleration: f64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FiringRateSeries {
    pub rows: Vec<SeriesRow>,
    pub blow_up: Option<BlowUp>,
}

impl FiringRateSeries {
    pub fn samples(&self) -> Vec<(f64, f64)> {
        self.rows.iter().map(|r| (r.t, r.n)).collect()
    }

    pub fn times(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.t).collect()
    }

    pub fn rates(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.n).collect()
    }

    pub fn max_rate(&self) -> f64 {
        self.rows.iter().map(|r| r.n).fold(0.0, f64::max)
    }

    /// Largest `|mass - 1|` over the rows.
    pub fn max_mass_drift(&self) -> f64 {
        self.rows
            .iter()
            .map(|r| (r.mass - 1.0).abs())
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Termination {
    Completed,
    BlowUp,
    /// Step budget exhausted before the horizon.
    Unresolved {
        t: f64,
        reason: String,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub grid: Grid,
    pub snapshots: Vec<Snapshot>,
    pub series: FiringRateSeries,
    pub termination: Termination,
    pub warnings: Vec<ThresholdEvent>,
    pub final_state: DensityState,
    pub steps: usize,
}

impl Trajectory {
    pub fn completed(&self) -> bool {
        self.termination == Termination::Completed
    }
}

/// Last upward crossing time of each level on a fixed ladder.
#[derive(Debug, Clone)]
struct CrossingLadder {
    levels: Vec<f64>,
    last_up: Vec<Option<f64>>,
    prev: Option<(f64, f64)>,
}

impl CrossingLadder {
    fn new(base: f64) -> Self {
        let mut levels = Vec::new();
        for k in 0..LADDER_DECADES {
            for f in LEVEL_FRACTIONS {
                levels.push(base * f * 10f64.powi(k));
            }
        }
        let last_up = vec![None; levels.len()];
        Self {
            levels,
            last_up,
            prev: None,
        }
    }

    fn observe(&mut self, t: f64, n: f64) {
        if let Some((t0, n0)) = self.prev {
            for (level, slot) in self.levels.iter().zip(self.last_up.iter_mut()) {
                if n0 < *level && n >= *level {
                    *slot = Some(t0 + (t - t0) * (level - n0) / (n - n0));
                }
            }
        }
        self.prev = Some((t, n));
    }

    fn crossing(&self, level: f64) -> Option<f64> {
        self.levels
            .iter()
            .position(|l| (l - level).abs() <= 1e-9 * level)
            .and_then(|i| self.last_up[i])
    }

    /// Early doubling time over late doubling time, and the extrapolated `T*`.
    fn signature(&self, threshold: f64) -> Option<(f64, f64)> {
        let t: Vec<f64> = LEVEL_FRACTIONS
            .iter()
            .map(|f| self.crossing(threshold * f))
            .collect::<Option<Vec<_>>>()?;
        let early = t[1] - t[0];
        let late = t[3] - t[2];
        if !(late > 0.0) || !(early > 0.0) {
            return Some((f64::INFINITY, t[3]));
        }
        Some((early / late, t[3] + late))
    }
}

enum SegmentEnd {
    Reached,
    Crossed(f64),
    Budget,
}

/// Callback run after every accepted step.
pub type Observer<'a> = &'a mut dyn FnMut(&DensityState, &StepInfo);

struct Recorder<'a> {
    snapshots: Vec<Snapshot>,
    rows: Vec<SeriesRow>,
    snapshot_every: Option<f64>,
    next_snapshot: f64,
    series_every: f64,
    last_row: f64,
    observer: Option<Observer<'a>>,
}

impl Recorder<'_> {
    fn row(&mut self, state: &DensityState, grid: &Grid, n: f64, mu: f64) {
        self.rows.push(SeriesRow {
            t: state.t,
            n,
            mass: grid.mass(&state.rho),
            first_moment: grid.first_moment(&state.rho),
            mu,
        });
        self.last_row = state.t;
    }
}

struct Stepper<'p> {
    params: &'p ModelParams,
    dt: f64,
    steps: usize,
    max_steps: usize,
}

impl Stepper<'_> {
    /// Advances until `t_stop`, a crossing of `threshold`, or the step budget.
    #[allow(clippy::too_many_arguments)]
    fn run(
        &mut self,
        state: &mut DensityState,
        grid: &Grid,
        t_stop: f64,
        threshold: f64,
        ladder: &mut CrossingLadder,
        mut recorder: Option<&mut Recorder>,
        mut on_checkpoint: impl FnMut(&DensityState),
    ) -> Result<SegmentEnd> {
        loop {
            let remaining = t_stop - state.t;
            if remaining <= 1e-12 * t_stop.abs().max(1.0) {
                return Ok(SegmentEnd::Reached);
            }
            if self.steps >= self.max_steps {
                return Ok(SegmentEnd::Budget);
            }
            let mu = super::delayed_drift(state, self.params)?;
            let mut h = self
                .dt
                .min(remaining)
                .min(CFL_SAFETY * super::cfl_limit(grid, mu));
            if let Some(rec) = recorder.as_deref() {
                if rec.snapshot_every.is_some() && rec.next_snapshot > state.t {
                    h = h.min(rec.next_snapshot - state.t);
                }
            }
            let info = state.advance_with_drift(self.params, grid, h, mu)?;
            self.steps += 1;
            ladder.observe(state.t, info.rate);
            on_checkpoint(state);
            if let Some(rec) = recorder.as_deref_mut() {
                let snap_due = rec.snapshot_every.is_some_and(|_| {
                    state.t >= rec.next_snapshot - 1e-12 * rec.next_snapshot.max(1.0)
                });
                if snap_due {
                    rec.snapshots.push(Snapshot {
                        t: state.t,
                        rho: state.rho.clone(),
                    });
                    rec.next_snapshot += rec.snapshot_every.unwrap_or(f64::INFINITY);
                }
                if state.t - rec.last_row >= rec.series_every * (1.0 - 1e-9)
                    || info.rate > threshold
                    || snap_due
                {
                    rec.row(state, grid, info.rate, info.mu);
                }
                if let Some(obs) = rec.observer.as_mut() {
                    obs(state, &info);
                }
            }
            if info.rate > threshold {
                return Ok(SegmentEnd::Crossed(state.t));
            }
        }
    }
}

/// Splits each cell in two with minmod slopes; preserves cell averages and positivity.
pub fn refine_density(rho: &[f64]) -> Vec<f64> {
    let n = rho.len();
    let at = |i: isize| {
        if i < 0 || i as usize >= n {
            0.0
        } else {
            rho[i as usize]
        }
    };
    let mut out = Vec::with_capacity(2 * n);
    #[allow(clippy::needless_range_loop)]
    for i in 0..n {
        let ii = i as isize;
        let (l, r) = (rho[i] - at(ii - 1), at(ii + 1) - rho[i]);
        let slope = if l * r > 0.0 {
            l.signum() * l.abs().min(r.abs())
        } else {
            0.0
        };
        out.push(rho[i] - 0.25 * slope);
        out.push(rho[i] + 0.25 * slope);
    }
    out
}

/// Checks unit mass and `N0(0)` against the boundary slope of `rho0`.
pub fn validate_initial_data(
    rho0: &[f64],
    initial: &InitialHistory,
    params: &ModelParams,
    grid: &Grid,
    slope_tolerance: f64,
) -> Result<()> {
    grid.check_len(rho0.len())?;
    let mass = grid.mass(rho0);
    if (mass - 1.0).abs() > 1e-8 {
        return Err(NnlifError::Validation(format!(
            "initial mass is {mass}, expected 1"
        )));
    }
    let stencil = raw_firing_rate(rho0, params, grid)?;
    let given = initial.at_zero();
    let scale = stencil.abs().max(given.abs());
    if (stencil - given).abs() > slope_tolerance * scale + 1e-8 {
        return Err(NnlifError::Validation(format!(
            "N0(0) = {given} does not match the boundary slope of rho0 ({stencil})"
        )));
    }
    Ok(())
}

/// Runs from `rho0` with history `initial` to `opts.t_end`.
pub fn simulate(
    params: &ModelParams,
    grid: &Grid,
    rho0: &[f64],
    initial: &InitialHistory,
    opts: &SimulateOptions,
) -> Result<Trajectory> {
    run(params, grid, rho0, initial, opts, None)
}

/// [`simulate`] with a callback after every accepted step of the main run.
pub fn simulate_with_observer(
    params: &ModelParams,
    grid: &Grid,
    rho0: &[f64],
    initial: &InitialHistory,
    opts: &SimulateOptions,
    observer: &mut dyn FnMut(&DensityState, &StepInfo),
) -> Result<Trajectory> {
    run(params, grid, rho0, initial, opts, Some(observer))
}

fn run(
    params: &ModelParams,
    grid: &Grid,
    rho0: &[f64],
    initial: &InitialHistory,
    opts: &SimulateOptions,
    observer: Option<Observer<'_>>,
) -> Result<Trajectory> {
    if !(opts.t_end > 0.0 && opts.dt > 0.0 && opts.blow_up_threshold > 0.0) {
        return Err(invalid("t_end, dt and blow_up_threshold must be positive"));
    }
    if opts.snapshot_every.is_some_and(|s| !(s > 0.0)) {
        return Err(invalid("snapshot_every must be positive"));
    }
    validate_initial_data(rho0, initial, params, grid, opts.slope_tolerance)?;
    let mut state = DensityState::new(rho0.to_vec(), initial.clone(), params, grid)?;

    let mut recorder = Recorder {
        snapshots: vec![Snapshot {
            t: 0.0,
            rho: state.rho.clone(),
        }],
        rows: Vec::new(),
        snapshot_every: opts.snapshot_every,
        next_snapshot: opts.snapshot_every.unwrap_or(f64::INFINITY),
        series_every: opts.series_every.unwrap_or(opts.dt),
        last_row: 0.0,
        observer,
    };
    let n_start = state.history.latest().map_or(0.0, |(_, n)| n);
    recorder.row(&state, grid, n_start, super::delayed_drift(&state, params)?);

    let mut stepper = Stepper {
        params,
        dt: opts.dt,
        steps: 0,
        max_steps: opts.max_steps,
    };
    let mut ladder = CrossingLadder::new(opts.blow_up_threshold);
    ladder.observe(0.0, n_start);
    let mut threshold = opts.blow_up_threshold;
    let mut warnings = Vec::new();
    let mut blow_up = None;
    let mut checkpoints = (state.clone(), state.clone());
    let every = opts.checkpoint_every;

    let termination = loop {
        let end = stepper.run(
            &mut state,
            grid,
            opts.t_end,
            threshold,
            &mut ladder,
            Some(&mut recorder),
            |s| {
                if s.t - checkpoints.1.t >= every {
                    checkpoints.0 = std::mem::replace(&mut checkpoints.1, s.clone());
                }
            },
        )?;
        match end {
            SegmentEnd::Reached => break Termination::Completed,
            SegmentEnd::Budget => {
                break Termination::Unresolved {
                    t: state.t,
                    reason: format!("step budget of {} exhausted", opts.max_steps),
                }
            }
            SegmentEnd::Crossed(t_c) => {
                let start = if t_c - checkpoints.1.t >= 0.5 * every {
                    &checkpoints.1
                } else {
                    &checkpoints.0
                };
                let coarse = ladder.signature(threshold);
                let refined =
                    match rerun_refined(params, grid, start, opts, threshold, t_c, &mut stepper) {
                        Ok(r) => r,
                        Err(e) if e.is_validation() => return Err(e),
                        Err(_) => None,
                    };
                let refined_t = refined.map(|r| r.t);
                let consistent =
                    refined_t.is_some_and(|t_r| (t_r - t_c).abs() < CONSISTENCY_RTOL * t_c);
                let acceleration = coarse
                    .map_or(0.0, |s| s.0)
                    .min(refined.map_or(0.0, |r| r.acceleration));
                let confirmed = refined.is_some_and(|r| r.confirmed);
                if consistent && acceleration >= ACCELERATION_MIN && confirmed {
                    blow_up = Some(BlowUp {
                        time: coarse.map_or(t_c, |s| s.1),
                        crossing_time: t_c,
                        refined_crossing_time: refined_t.unwrap_or(f64::NAN),
                        threshold,
                        consistent,
                        acceleration,
                    });
                    break Termination::BlowUp;
                }
                let reason = if !consistent {
                    "refined crossing time differs by 10% or more".to_string()
                } else if acceleration < ACCELERATION_MIN {
                    format!("doubling-time ratio {acceleration:.3} below {ACCELERATION_MIN}")
                } else {
                    format!("rate did not reach {CONFIRM_FACTOR} times the threshold")
                };
                warnings.push(ThresholdEvent {
                    t: t_c,
                    threshold,
                    refined_crossing_time: refined_t,
                    consistent,
                    acceleration,
                    reason,
                });
                threshold *= 10.0;
                if stepper.steps >= stepper.max_steps {
                    break Termination::Unresolved {
                        t: state.t,
                        reason: format!("step budget of {} exhausted", opts.max_steps),
                    };
                }
            }
        }
    };

    if recorder.rows.last().is_none_or(|r| r.t < state.t) {
        let n = state.history.latest().map_or(0.0, |(_, n)| n);
        let mu = super::delayed_drift(&state, params).unwrap_or(f64::NAN);
        recorder.row(&state, grid, n, mu);
    }
    if recorder.snapshots.last().is_none_or(|s| s.t < state.t) {
        recorder.snapshots.push(Snapshot {
            t: state.t,
            rho: state.rho.clone(),
        });
    }
    Ok(Trajectory {
        grid: grid.clone(),
        snapshots: recorder.snapshots,
        series: FiringRateSeries {
            rows: recorder.rows,
            blow_up,
        },
        termination,
        warnings,
        final_state: state,
        steps: stepper.steps,
    })
}

/// Outcome of the refined re-run.
#[derive(Debug, Clone, Copy)]
struct RefinedCrossing {
    t: f64,
    acceleration: f64,
    /// `N` reached `CONFIRM_FACTOR * threshold` within `CONFIRM_WINDOWS` late legs.
    confirmed: bool,
}

/// Re-runs from `start` at half `dt` and half `dv` until the threshold or `1.1 t_c`,
/// then continues briefly to confirm divergence.
fn rerun_refined(
    params: &ModelParams,
    grid: &Grid,
    start: &DensityState,
    opts: &SimulateOptions,
    threshold: f64,
    t_c: f64,
    parent: &mut Stepper,
) -> Result<Option<RefinedCrossing>> {
    let fine = grid.refined()?;
    if (fine.v_min - grid.v_min).abs() > 1e-12 {
        return Err(NnlifError::Solver(
            "refined grid does not nest in the coarse grid".into(),
        ));
    }
    let mut state = start.clone();
    state.rho = refine_density(&start.rho);
    let mut stepper = Stepper {
        params,
        dt: 0.5 * opts.dt,
        steps: parent.steps,
        max_steps: parent.max_steps,
    };
    let mut ladder = CrossingLadder::new(opts.blow_up_threshold);
    let t_stop = (t_c * (1.0 + CONSISTENCY_RTOL)).min(opts.t_end);
    ladder.observe(state.t, state.history.latest().map_or(0.0, |(_, n)| n));
    let end = stepper.run(
        &mut state,
        &fine,
        t_stop,
        threshold,
        &mut ladder,
        None,
        |_| {},
    )?;
    let result = match end {
        SegmentEnd::Crossed(t) => {
            let (acceleration, t_star) = ladder.signature(threshold).unwrap_or((0.0, t));
            let horizon = t + CONFIRM_WINDOWS * (t_star - t).max(0.0);
            let confirm = stepper.run(
                &mut state,
                &fine,
                horizon.min(opts.t_end),
                CONFIRM_FACTOR * threshold,
                &mut ladder,
                None,
                |_| {},
            )?;
            let confirmed = matches!(confirm, SegmentEnd::Crossed(_));
            Some(RefinedCrossing {
                t,
                acceleration,
                confirmed,
            })
        }
        SegmentEnd::Reached | SegmentEnd::Budget => None,
    };
    parent.steps = stepper.steps;
    Ok(result)
}
