//! Steady-state candidates, their Poincaré gaps and an optional hold run.

use nnlif_core::diagnostics::poincare_constant;
use nnlif_core::fp::{simulate, InitialHistory, SimulateOptions};
use nnlif_core::output::Summary;
use nnlif_core::steady::steady_state_candidates;

use super::profiles_csv;
use crate::setup::{grid, params, simulate_options, steady_bracket};
use crate::{CliError, Config, Outcome};

pub(crate) fn run(c: &Config, _seed: u64) -> Result<Outcome, CliError> {
    let p = params(c)?;
    let g = grid(c, &p)?;
    let (bracket, scan) = steady_bracket(c)?;
    let candidates = steady_state_candidates(&p, bracket, scan, &g)?;

    let mut m = Summary::new();
    m.set("n_candidates", candidates.len())?;
    let mut mass_residual: f64 = 0.0;
    for (k, ss) in candidates.iter().enumerate() {
        let residual = (ss.total_mass()? - 1.0).abs();
        mass_residual = mass_residual.max(residual);
        m.set(&format!("n_inf_{k}"), ss.n_inf)?;
        m.set(&format!("grid_mass_{k}"), g.mass(&ss.rho_inf))?;
    }
    if let Some(first) = candidates.first() {
        m.set("n_inf", first.n_inf)?;
        m.set("mass_residual", mass_residual)?;
        let gap = poincare_constant(first, &g)?;
        m.set("poincare_gamma", gap.gamma)?;
        m.set("poincare_gamma_refined", gap.gamma_refined)?;
        m.set("poincare_relative_change", gap.relative_change())?;
    }

    let hold_time = c.f64_or("steady", "hold_time", 0.0)?;
    if hold_time > 0.0 {
        let ss = candidates
            .first()
            .ok_or_else(|| CliError::Numeric("no steady state to hold in the bracket".into()))?;
        let mass = g.mass(&ss.rho_inf);
        let rho0: Vec<f64> = ss.rho_inf.iter().map(|r| r / mass).collect();
        let init = InitialHistory::constant(p.d, ss.n_inf)?;
        let base = simulate_options(c)?;
        let opts = SimulateOptions {
            t_end: hold_time,
            snapshot_every: Some(c.f64_or("steady", "hold_every", 0.5)?),
            ..base
        };
        let tr = simulate(&p, &g, &rho0, &init, &opts)?;
        let drift = tr
            .snapshots
            .iter()
            .map(|s| g.l1_distance(&s.rho, &rho0))
            .fold(0.0, f64::max);
        m.set("hold_time", hold_time)?;
        m.set("hold_completed", tr.completed())?;
        m.set("hold_l1_max", drift)?;
        m.set(
            "hold_rate_final",
            tr.series.rows.last().map_or(f64::NAN, |r| r.n),
        )?;
        m.set("hold_max_mass_drift", tr.series.max_mass_drift())?;
    }

    let names: Vec<String> = (0..candidates.len())
        .map(|k| format!("rho_inf_{k}"))
        .collect();
    let columns: Vec<&[f64]> = candidates.iter().map(|s| s.rho_inf.as_slice()).collect();
    let files = vec![(
        "steady.csv".to_string(),
        profiles_csv(&g, &names, &columns)?,
    )];
    Ok(Outcome {
        summary: m,
        files,
        blow_up: false,
    })
}
