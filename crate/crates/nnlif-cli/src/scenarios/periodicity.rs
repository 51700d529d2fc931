//! First-moment obstruction to periodic solutions over a scan of periods.

use nnlif_core::diagnostics::{periodicity_scan, SignCertificate};
use nnlif_core::fp::{simulate, SimulateOptions, Termination};
use nnlif_core::output::{CsvTable, Summary};

use super::series_csv;
use crate::setup::{simulate_options, Setup};
use crate::{CliError, Config, Outcome};

pub(crate) fn run(c: &Config, seed: u64) -> Result<Outcome, CliError> {
    let s = Setup::from_config(c, seed)?;
    let base = simulate_options(c)?;
    let opts = SimulateOptions {
        snapshot_every: Some(c.f64_or("time", "snapshot_every", 0.05)?),
        ..base
    };
    let periods = c.list_or("periodicity", "periods", &[0.5, 1.0, 2.0, 5.0, 10.0])?;
    if periods.iter().any(|&p| !(p > 0.0)) {
        return Err(CliError::Validation(
            "[periodicity] periods must be positive".into(),
        ));
    }
    let factor = c.f64_or("tolerances", "periodicity_factor", 2.0)?;
    let tr = simulate(&s.params, &s.grid, &s.rho0, &s.initial, &opts)?;
    let reports = periodicity_scan(&tr.series, &tr.snapshots, &s.grid, &s.params, &periods)?;

    let mut table = CsvTable::new([
        "period",
        "t0",
        "t1",
        "lhs",
        "rhs",
        "residual",
        "discretization",
        "drift",
        "n_avg",
        "within",
        "contradiction",
    ]);
    let mut within = 0usize;
    let mut contradictions = 0usize;
    let mut min_ratio = f64::INFINITY;
    let mut max_ratio: f64 = 0.0;
    for r in &reports {
        let ratio = r.residual().abs() / r.discretization;
        min_ratio = min_ratio.min(ratio);
        max_ratio = max_ratio.max(ratio);
        let ok = r.within(factor);
        let contra = r.certificate == SignCertificate::Contradiction;
        within += ok as usize;
        contradictions += contra as usize;
        table.push(vec![
            r.period,
            r.window.0,
            r.window.1,
            r.lhs,
            r.rhs,
            r.residual(),
            r.discretization,
            r.drift,
            r.n_avg,
            f64::from(u8::from(ok)),
            f64::from(u8::from(contra)),
        ])?;
    }

    let mut m = Summary::new();
    let t_reached = tr.final_state.t;
    m.set("periods_requested", periods.len())?;
    m.set("periods_evaluated", reports.len())?;
    m.set("periods_within_tolerance", within)?;
    m.set("periodicity_factor", factor)?;
    m.set("certificate_contradictions", contradictions)?;
    m.set(
        "certificate_all_contradiction",
        !reports.is_empty() && contradictions == reports.len(),
    )?;
    if !reports.is_empty() {
        m.set("residual_ratio_min", min_ratio)?;
        m.set("residual_ratio_max", max_ratio)?;
    }
    m.set("t_reached", t_reached)?;
    m.set("horizon_reached", tr.completed())?;
    m.set(
        "termination",
        match tr.termination {
            Termination::Completed => "completed",
            Termination::BlowUp => "blow_up",
            Termination::Unresolved { .. } => "unresolved",
        },
    )?;
    m.set("blow_up", tr.series.blow_up.is_some())?;
    m.set("max_rate", tr.series.max_rate())?;
    m.set("steps", tr.steps)?;
    let files = vec![
        ("periodicity.csv".to_string(), table.render()),
        ("series.csv".to_string(), series_csv(&tr.series)?),
    ];
    Ok(Outcome {
        summary: m,
        files,
        blow_up: false,
    })
}
