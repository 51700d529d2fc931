//! Forward run of the delayed equation.

use nnlif_core::fp::{simulate, Termination};
use nnlif_core::output::Summary;

use super::{profiles_csv, series_csv, snapshots_csv};
use crate::setup::{simulate_options, Setup};
use crate::{CliError, Config, Outcome};

pub(crate) fn run(c: &Config, seed: u64) -> Result<Outcome, CliError> {
    let s = Setup::from_config(c, seed)?;
    let opts = simulate_options(c)?;
    let tr = simulate(&s.params, &s.grid, &s.rho0, &s.initial, &opts)?;

    let mut m = Summary::new();
    let termination = match &tr.termination {
        Termination::Completed => "completed",
        Termination::BlowUp => "blow_up",
        Termination::Unresolved { .. } => "unresolved",
    };
    m.set("termination", termination)?;
    m.set("completed", tr.completed())?;
    if let Termination::Unresolved { reason, .. } = &tr.termination {
        m.set("unresolved_reason", reason.as_str())?;
    }
    m.set("t_final", tr.final_state.t)?;
    m.set("steps", tr.steps)?;
    m.set("max_mass_drift", tr.series.max_mass_drift())?;
    m.set("final_mass", s.grid.mass(&tr.final_state.rho))?;
    m.set("leakage", tr.final_state.leakage)?;
    m.set("max_rate", tr.series.max_rate())?;
    m.set(
        "final_rate",
        tr.series.rows.last().map_or(f64::NAN, |r| r.n),
    )?;
    m.set("negative_rate_count", tr.final_state.negative_rate_count)?;
    m.set("outflow_fallbacks", tr.final_state.outflow_fallbacks)?;
    m.set("threshold_events", tr.warnings.len())?;
    m.set("initial_mass_scale", s.mass_scale)?;
    let blow_up = tr.series.blow_up;
    m.set("blow_up", blow_up.is_some())?;
    if let Some(b) = blow_up {
        m.set("blow_up_time", b.time)?;
        m.set("blow_up_crossing_time", b.crossing_time)?;
        m.set("blow_up_refined_crossing_time", b.refined_crossing_time)?;
        m.set("blow_up_acceleration", b.acceleration)?;
        m.set("blow_up_threshold", b.threshold)?;
    }

    let mut files = vec![
        ("series.csv".to_string(), series_csv(&tr.series)?),
        (
            "final_density.csv".to_string(),
            profiles_csv(&tr.grid, &["rho".into()], &[&tr.final_state.rho])?,
        ),
    ];
    if opts.snapshot_every.is_some() {
        files.push((
            "snapshots.csv".into(),
            snapshots_csv(&tr.snapshots, &tr.grid)?,
        ));
    }
    Ok(Outcome {
        summary: m,
        files,
        blow_up: blow_up.is_some(),
    })
}
