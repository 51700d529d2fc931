//! Entropy dissipation identity and tail decay fit.

use nnlif_core::diagnostics::{entropy_identity_check, EntropyReport, QUADRATIC};
use nnlif_core::fp::{relax_to_stationary, simulate, SimulateOptions};
use nnlif_core::output::{CsvTable, Summary};
use nnlif_core::Grid;

use crate::setup::{lowest_steady_state, simulate_options, Setup};
use crate::{CliError, Config, Outcome};

/// Step budget of the reference relaxation.
const RELAX_MAX_STEPS: usize = 10_000_000;

fn pass(
    c: &Config,
    seed: u64,
    grid: Grid,
    opts: &SimulateOptions,
) -> Result<EntropyReport, CliError> {
    let s = Setup::on_grid(c, seed, crate::setup::params(c)?, grid)?;
    let (p, g) = (&s.params, &s.grid);
    let mut steady = lowest_steady_state(c, p, g)?;
    match c.str_or("entropy", "reference", "profile") {
        "profile" => {}
        "scheme" => {
            let tol = c.f64_or("entropy", "relax_tol", 1e-11)?;
            steady = relax_to_stationary(&steady, g, opts.dt, tol, RELAX_MAX_STEPS)?;
        }
        other => {
            return Err(CliError::Validation(format!(
                "[entropy] reference must be profile or scheme, got {other:?}"
            )))
        }
    }

    // Start after a short warm-up so the initial layer stays out of the identity.
    let warmup = c.f64_or("entropy", "warmup", 0.2)?;
    let (rho, initial) = if warmup > 0.0 {
        let w = SimulateOptions {
            t_end: warmup,
            snapshot_every: None,
            ..opts.clone()
        };
        let w = simulate(p, g, &s.rho0, &s.initial, &w)?;
        if !w.completed() || w.series.blow_up.is_some() {
            return Err(CliError::Numeric("warm-up run did not complete".into()));
        }
        let restart = w.final_state.history.restart(w.final_state.t)?;
        (w.final_state.rho, restart)
    } else {
        (s.rho0.clone(), s.initial.clone())
    };
    let tr = simulate(p, g, &rho, &initial, opts)?;
    if !tr.completed() {
        return Err(CliError::Numeric(
            "entropy run did not reach the horizon".into(),
        ));
    }
    Ok(entropy_identity_check(
        &tr, &steady, p, &initial, &QUADRATIC,
    )?)
}

pub(crate) fn run(c: &Config, seed: u64) -> Result<Outcome, CliError> {
    let p = crate::setup::params(c)?;
    let g = crate::setup::grid(c, &p)?;
    let base = simulate_options(c)?;
    let opts = SimulateOptions {
        snapshot_every: Some(c.f64_or("time", "snapshot_every", 1e-3)?),
        ..base
    };
    let (report, refined) = if c.bool_or("entropy", "refine", false)? {
        let fine_grid = g.refined()?;
        let fine = SimulateOptions {
            dt: 0.5 * opts.dt,
            ..opts.clone()
        };
        let (a, b) = rayon::join(
            || pass(c, seed, g.clone(), &opts),
            || pass(c, seed, fine_grid, &fine),
        );
        (a?, Some(b?))
    } else {
        (pass(c, seed, g, &opts)?, None)
    };

    let mut m = Summary::new();
    m.set("entropy_relative_residual", report.relative_residual())?;
    m.set("entropy_max_abs_residual", report.max_residual())?;
    m.set("max_abs_rate", report.max_abs_rate())?;
    m.set("sign_violations", report.sign_violations)?;
    m.set("hypothesis_ok", report.hypothesis_ok)?;
    m.set("c0", report.c0)?;
    m.set("snapshots", report.rows.len())?;
    if let (Some(first), Some(last)) = (report.rows.first(), report.rows.last()) {
        m.set("e_initial", first.e)?;
        m.set("e_final", last.e)?;
    }
    if let Some(r) = &refined {
        m.set("entropy_relative_residual_refined", r.relative_residual())?;
        m.set("sign_violations_refined", r.sign_violations)?;
    }
    m.set("mu_fit_found", report.fit.is_some())?;
    if let Some(fit) = report.fit {
        let (lo, hi) = fit.confidence();
        m.set("mu_fit", fit.mu)?;
        m.set("mu_fit_r2", fit.r_squared)?;
        m.set("mu_fit_std_err", fit.mu_std_err)?;
        m.set("mu_fit_lo", lo)?;
        m.set("mu_fit_hi", hi)?;
        m.set("mu_fit_t_start", fit.t_start)?;
        m.set("mu_fit_points", fit.points)?;
    }

    let mut t = CsvTable::new([
        "t",
        "e",
        "de_dt_measured",
        "de_dt_identity",
        "dissipation",
        "boundary",
        "delay",
        "n",
        "n_delayed",
    ]);
    for r in &report.rows {
        t.push(vec![
            r.t,
            r.e,
            r.de_dt_measured,
            r.de_dt_identity(),
            r.dissipation,
            r.boundary,
            r.delay,
            r.n,
            r.n_delayed,
        ])?;
    }
    Ok(Outcome {
        summary: m,
        files: vec![("entropy.csv".into(), t.render())],
        blow_up: false,
    })
}
