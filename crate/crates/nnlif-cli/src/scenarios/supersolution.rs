//! Super-solution construction over a `(b, N0_max)` sweep, with an optional
//! envelope check of the firing rate on `[0, D)`.

use nnlif_core::fp::{simulate, SimulateOptions};
use nnlif_core::output::{CsvTable, Summary};
use nnlif_core::supersolution::{build_super_solution, verify_super_solution};
use nnlif_core::ModelParams;
use rayon::prelude::*;

use crate::setup::{simulate_options, Setup};
use crate::{CliError, Config, Outcome};

struct Row {
    b: f64,
    n0_max: f64,
    xi: f64,
    min_residual: f64,
    jump_residual: f64,
    passed: bool,
    /// `min (envelope - N)` over `[0, D)`, when checked.
    envelope_margin: Option<f64>,
    alpha: f64,
}

fn check_pair(
    s: &Setup,
    opts: &SimulateOptions,
    b: f64,
    n0_max: f64,
    tol: f64,
    envelope: bool,
) -> Result<Row, CliError> {
    let base = &s.params;
    let p = ModelParams::new(base.a, b, base.b0, base.d, base.v_r, base.v_f)?;
    let ss = build_super_solution(&p, n0_max, &s.grid)?;
    let rep = verify_super_solution(&ss, &p, n0_max, &s.grid, tol)?;
    let min_residual = rep.left_min.min(rep.middle_min).min(rep.right_min);
    let mut row = Row {
        b,
        n0_max,
        xi: ss.xi,
        min_residual,
        jump_residual: rep.jump_residual,
        passed: rep.passed,
        envelope_margin: None,
        alpha: f64::NAN,
    };
    // On [0, D) the drift only sees N0, so the comparison applies when N0 <= N0_max.
    if envelope && p.d > 0.0 && s.initial.max() <= n0_max {
        let alpha = ss.domination_factor(&s.rho0);
        let run = SimulateOptions {
            t_end: p.d,
            ..opts.clone()
        };
        let tr = simulate(&p, &s.grid, &s.rho0, &s.initial, &run)?;
        let margin = tr
            .series
            .rows
            .iter()
            .filter(|r| r.t < p.d)
            .map(|r| ss.envelope(p.a, alpha, r.t) - r.n)
            .fold(f64::INFINITY, f64::min);
        row.envelope_margin = Some(margin);
        row.alpha = alpha;
    }
    Ok(row)
}

pub(crate) fn run(c: &Config, seed: u64) -> Result<Outcome, CliError> {
    let s = Setup::from_config(c, seed)?;
    let opts = simulate_options(c)?;
    let b_values = c.list_or("supersolution", "b_values", &[-1.0, 0.0, 0.5, 1.0, 3.0])?;
    let n0_values = c.list_or("supersolution", "n0_max_values", &[0.5, 1.0, 2.0, 5.0])?;
    let tol = c.f64_or("tolerances", "supersolution", 1e-8)?;
    let envelope = c.bool_or("supersolution", "envelope_check", true)?;
    if n0_values.iter().any(|&n| n < 0.0) {
        return Err(CliError::Validation(
            "[supersolution] n0_max_values must be non-negative".into(),
        ));
    }

    let pairs: Vec<(f64, f64)> = b_values
        .iter()
        .flat_map(|&b| n0_values.iter().map(move |&n| (b, n)))
        .collect();
    let rows: Vec<Row> = pairs
        .par_iter()
        .map(|&(b, n0)| check_pair(&s, &opts, b, n0, tol, envelope))
        .collect::<Result<_, _>>()?;

    let mut table = CsvTable::new([
        "b",
        "n0_max",
        "xi",
        "min_residual",
        "jump_residual",
        "passed",
        "alpha",
        "envelope_margin",
    ]);
    for r in &rows {
        table.push(vec![
            r.b,
            r.n0_max,
            r.xi,
            r.min_residual,
            r.jump_residual,
            f64::from(u8::from(r.passed)),
            r.alpha,
            r.envelope_margin.unwrap_or(f64::NAN),
        ])?;
    }

    let margins: Vec<f64> = rows.iter().filter_map(|r| r.envelope_margin).collect();
    let mut m = Summary::new();
    m.set("pairs", rows.len())?;
    m.set("pairs_passed", rows.iter().filter(|r| r.passed).count())?;
    m.set("all_passed", rows.iter().all(|r| r.passed))?;
    m.set(
        "min_residual",
        rows.iter()
            .map(|r| r.min_residual)
            .fold(f64::INFINITY, f64::min),
    )?;
    m.set(
        "min_jump_residual",
        rows.iter()
            .map(|r| r.jump_residual)
            .fold(f64::INFINITY, f64::min),
    )?;
    m.set("tolerance", tol)?;
    m.set("envelope_checks", margins.len())?;
    if !margins.is_empty() {
        m.set("envelope_ok", margins.iter().all(|&x| x >= 0.0))?;
        m.set(
            "envelope_min_margin",
            margins.iter().copied().fold(f64::INFINITY, f64::min),
        )?;
    }
    Ok(Outcome {
        summary: m,
        files: vec![("supersolution.csv".into(), table.render())],
        blow_up: false,
    })
}
