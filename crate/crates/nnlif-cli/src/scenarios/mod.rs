//! One module per scenario; each returns its summary and rendered files.

mod entropy;
mod particle;
mod periodicity;
mod simulate;
mod steady;
mod stefan;
mod supersolution;

use nnlif_core::fp::{FiringRateSeries, Snapshot};
use nnlif_core::output::CsvTable;
use nnlif_core::Grid;

use crate::{CliError, Config, Outcome, Scenario};

pub(crate) fn dispatch(scenario: Scenario, c: &Config, seed: u64) -> Result<Outcome, CliError> {
    match scenario {
        Scenario::Simulate => simulate::run(c, seed),
        Scenario::Steady => steady::run(c, seed),
        Scenario::StefanOracle => stefan::run(c, seed),
        Scenario::Entropy => entropy::run(c, seed),
        Scenario::PeriodicityScan => periodicity::run(c, seed),
        Scenario::ParticleCompare => particle::run(c, seed),
        Scenario::SupersolutionCheck => supersolution::run(c, seed),
    }
}

/// `t, n, mass, first_moment, mu` per series row.
pub(crate) fn series_csv(series: &FiringRateSeries) -> Result<String, CliError> {
    let mut t = CsvTable::new(["t", "n", "mass", "first_moment", "mu"]);
    for r in &series.rows {
        t.push(vec![r.t, r.n, r.mass, r.first_moment, r.mu])?;
    }
    Ok(t.render())
}

/// Long format `t, v, rho`.
pub(crate) fn snapshots_csv(snapshots: &[Snapshot], grid: &Grid) -> Result<String, CliError> {
    let mut t = CsvTable::new(["t", "v", "rho"]);
    let centers = grid.centers();
    for s in snapshots {
        for (v, r) in centers.iter().zip(&s.rho) {
            t.push(vec![s.t, *v, *r])?;
        }
    }
    Ok(t.render())
}

/// `v` followed by one column per profile.
pub(crate) fn profiles_csv(
    grid: &Grid,
    names: &[String],
    columns: &[&[f64]],
) -> Result<String, CliError> {
    let mut header = vec!["v".to_string()];
    header.extend(names.iter().cloned());
    let mut t = CsvTable::new(header);
    for (i, v) in grid.centers().into_iter().enumerate() {
        let mut row = vec![v];
        row.extend(columns.iter().map(|c| c[i]));
        t.push(row)?;
    }
    Ok(t.render())
}
