//! Model, grid, initial data and run options read from a config.

use nnlif_core::fp::{
    clipped_gaussian, random_admissible, raw_firing_rate, InitialHistory, SimulateOptions,
};
use nnlif_core::quadrature::interp_linear;
use nnlif_core::steady::steady_state_candidates;
use nnlif_core::{Grid, ModelParams, SteadyState};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::{read_table, Config};
use crate::CliError;

/// Initial density family.
#[derive(Debug, Clone, PartialEq)]
pub enum Family {
    /// `(g(v) - g(V_F))_+` for a Gaussian `g`.
    Gaussian {
        mean: f64,
        sd: f64,
    },
    /// `(V_F - v) g(v)`, which leaves `V_F` with a nonzero slope.
    LinearGaussian {
        mean: f64,
        sd: f64,
    },
    SteadyState,
    Random,
    Table,
}

/// Everything a scenario needs to start a run.
#[derive(Debug, Clone)]
pub struct Setup {
    pub params: ModelParams,
    pub grid: Grid,
    pub family: Family,
    pub rho0: Vec<f64>,
    pub initial: InitialHistory,
    /// Factor that brought `rho0` to unit mass on the grid.
    pub mass_scale: f64,
    pub slope_tolerance: f64,
}

pub fn params(c: &Config) -> Result<ModelParams, CliError> {
    Ok(ModelParams::new(
        c.f64_or("model", "a", 1.0)?,
        c.f64_or("model", "b", 0.0)?,
        c.f64_or("model", "b0", 0.0)?,
        c.f64_or("model", "d", 0.0)?,
        c.f64_or("model", "v_r", -1.0)?,
        c.f64_or("model", "v_f", 0.0)?,
    )?)
}

pub fn grid(c: &Config, p: &ModelParams) -> Result<Grid, CliError> {
    let n = c.usize_or("grid", "n_cells", 1000)?;
    Ok(match c.f64_opt("grid", "v_min")? {
        Some(v_min) => Grid::new(v_min, p.v_f, n, p.v_r)?,
        None => Grid::for_params(p, n, c.f64_or("grid", "n_guess", 1.0)?)?,
    })
}

/// `[steady]` bracket and scan size.
pub fn steady_bracket(c: &Config) -> Result<((f64, f64), usize), CliError> {
    Ok((
        (
            c.f64_or("steady", "n_min", 1e-3)?,
            c.f64_or("steady", "n_max", 1e2)?,
        ),
        c.usize_or("steady", "n_scan", 200)?,
    ))
}

/// The steady state with the smallest rate in the `[steady]` bracket.
pub fn lowest_steady_state(c: &Config, p: &ModelParams, g: &Grid) -> Result<SteadyState, CliError> {
    let (bracket, scan) = steady_bracket(c)?;
    steady_state_candidates(p, bracket, scan, g)?
        .into_iter()
        .next()
        .ok_or_else(|| CliError::Numeric(format!("no steady state with N in {bracket:?}")))
}

fn gauss(v: f64, mean: f64, sd: f64) -> f64 {
    let z = (v - mean) / sd;
    (-0.5 * z * z).exp()
}

impl Setup {
    pub fn from_config(c: &Config, seed: u64) -> Result<Self, CliError> {
        let params = params(c)?;
        let grid = grid(c, &params)?;
        Self::on_grid(c, seed, params, grid)
    }

    /// Same initial data specification on another grid.
    pub fn on_grid(
        c: &Config,
        seed: u64,
        params: ModelParams,
        grid: Grid,
    ) -> Result<Self, CliError> {
        let mean = c.f64_or("initial", "mean", -1.0)?;
        let sd = c.f64_or("initial", "sd", 0.5)?;
        let family = match c.str_or("initial", "family", "gaussian") {
            "gaussian" => Family::Gaussian { mean, sd },
            "linear-gaussian" => Family::LinearGaussian { mean, sd },
            "steady-state" => Family::SteadyState,
            "random" => Family::Random,
            "table" => Family::Table,
            other => {
                return Err(CliError::Validation(format!(
                    "unknown initial family {other:?}"
                )))
            }
        };
        let raw = match &family {
            Family::Gaussian { mean, sd } => clipped_gaussian(&grid, *mean, *sd)?,
            Family::LinearGaussian { mean, sd } => {
                if !(*sd > 0.0) {
                    return Err(CliError::Validation(format!(
                        "sd must be positive, got {sd}"
                    )));
                }
                grid.cell_averages(|v| (params.v_f - v).max(0.0) * gauss(v, *mean, *sd))
            }
            Family::SteadyState => lowest_steady_state(c, &params, &grid)?.rho_inf,
            Family::Random => random_admissible(&grid, &mut ChaCha8Rng::seed_from_u64(seed))?,
            Family::Table => {
                let (v, rho) = read_table(&c.file("initial", "file")?)?;
                if v.windows(2).any(|w| w[1] <= w[0]) || rho.iter().any(|r| *r < 0.0) {
                    return Err(CliError::Validation(
                        "initial table needs increasing v and non-negative rho".into(),
                    ));
                }
                grid.centers()
                    .iter()
                    .map(|&x| {
                        if x < v[0] || x > v[v.len() - 1] {
                            0.0
                        } else {
                            interp_linear(&v, &rho, x)
                        }
                    })
                    .collect()
            }
        };
        let mass = grid.mass(&raw);
        if !(mass > 0.0) || !mass.is_finite() {
            return Err(CliError::Validation(
                "initial density has no mass on the grid".into(),
            ));
        }
        let rho0: Vec<f64> = raw.iter().map(|r| r / mass).collect();

        let stencil = raw_firing_rate(&rho0, &params, &grid)?.max(0.0);
        let initial = match c.str_or("history", "kind", "matching") {
            "matching" => InitialHistory::constant(params.d, stencil)?,
            "constant" => {
                let value = c.f64_opt("history", "value")?.ok_or_else(|| {
                    CliError::Validation("[history] value is required for kind = constant".into())
                })?;
                InitialHistory::constant(params.d, value)?
            }
            "table" => {
                let (t, n) = read_table(&c.file("history", "file")?)?;
                let h = InitialHistory::new(t, n)?;
                h.check_covers(params.d)?;
                h
            }
            other => {
                return Err(CliError::Validation(format!(
                    "unknown history kind {other:?}"
                )))
            }
        };
        Ok(Self {
            params,
            grid,
            family,
            rho0,
            initial,
            mass_scale: 1.0 / mass,
            slope_tolerance: c.f64_or("tolerances", "slope", 0.05)?,
        })
    }

    /// Pointwise initial density, exact for the analytic families and
    /// interpolated between cell centres otherwise, zero at `V_F`.
    pub fn profile_at(&self, v: f64) -> f64 {
        let v_f = self.params.v_f;
        if v >= v_f || v < self.grid.v_min {
            return 0.0;
        }
        match self.family {
            Family::Gaussian { mean, sd } => {
                self.mass_scale * (gauss(v, mean, sd) - gauss(v_f, mean, sd)).max(0.0)
            }
            Family::LinearGaussian { mean, sd } => self.mass_scale * (v_f - v) * gauss(v, mean, sd),
            _ => {
                let mut xs = self.grid.centers();
                let mut ys = self.rho0.clone();
                xs.push(v_f);
                ys.push(0.0);
                interp_linear(&xs, &ys, v)
            }
        }
    }
}

/// `[time]` options; `t_end` may be overridden by the scenario.
pub fn simulate_options(c: &Config) -> Result<SimulateOptions, CliError> {
    let d = SimulateOptions::default();
    let dt = c.f64_or("time", "dt", d.dt)?;
    Ok(SimulateOptions {
        t_end: c.f64_or("time", "t_end", d.t_end)?,
        dt,
        blow_up_threshold: c.f64_or("time", "blow_up_threshold", d.blow_up_threshold)?,
        snapshot_every: c.f64_opt("time", "snapshot_every")?,
        series_every: c.f64_opt("time", "series_every")?,
        slope_tolerance: c.f64_or("tolerances", "slope", d.slope_tolerance)?,
        max_steps: c.usize_or("time", "max_steps", d.max_steps)?,
        checkpoint_every: d.checkpoint_every,
    })
}
