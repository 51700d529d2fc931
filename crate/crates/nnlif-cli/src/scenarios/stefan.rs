//! Flux equation solved independently and compared with the finite-volume run.

use nnlif_core::fp::simulate;
use nnlif_core::output::{CsvTable, Summary};
use nnlif_core::stefan::{
    duhamel_u, fixed_point_m, piecewise_extend, CoordinateMap, ExtendOptions, FixedPointOptions,
    PiecewiseLinear,
};

use crate::setup::{simulate_options, Setup};
use crate::{CliError, Config, Outcome};

pub(crate) fn run(c: &Config, seed: u64) -> Result<Outcome, CliError> {
    let s = Setup::from_config(c, seed)?;
    let p = &s.params;
    let map = CoordinateMap::new(p)?;
    let opts = simulate_options(c)?;
    let tr = simulate(p, &s.grid, &s.rho0, &s.initial, &opts)?;
    if !tr.completed() {
        return Err(CliError::Numeric(
            "finite-volume run did not reach the horizon".into(),
        ));
    }
    let tau_end = map.tau(tr.final_state.t);

    // At t = 0, alpha = 1 and s = 0, so u0(x) = rho0(x).
    let points = c.usize_or("stefan", "profile_points", 16_000)?;
    let u0 = PiecewiseLinear::from_fn(s.grid.v_min, p.v_f, points, |v| s.profile_at(v))?;
    let pre = map.prehistory(&s.initial, 64)?;
    let defaults = FixedPointOptions::default();
    let bound = map.linear_window();
    let coupled = p.b != 0.0 && map.d_bar > 0.0;
    let default_window = if coupled { bound } else { defaults.sigma };
    let window = c.f64_or("stefan", "window", default_window)?;
    let fp = FixedPointOptions {
        sigma: window.min(tau_end),
        step: c.f64_or("stefan", "step", defaults.step)?,
        tol: c.f64_or("stefan", "tol", defaults.tol)?,
        max_iter: c.usize_or("stefan", "max_iter", defaults.max_iter)?,
    };
    let mut sol = fixed_point_m(&u0, &pre, p, &fp)?;
    if sol.end() < tau_end - 1e-12 {
        let ext = ExtendOptions {
            window,
            fixed_point: fp,
            ..Default::default()
        };
        sol = piecewise_extend(&sol, p, tau_end, &ext)?;
    }

    let mut flux = CsvTable::new(["t", "tau", "m_stefan", "m_fp", "relative_error"]);
    let mut m_sup: f64 = 0.0;
    for r in &tr.series.rows {
        let tau = map.tau(r.t);
        if tau > sol.end() * (1.0 + 1e-12) {
            break;
        }
        let m_st = sol.flux_at(tau)?;
        let m_fp = map.alpha(tau).powi(2) * r.n;
        let rel = (m_fp - m_st).abs() / m_st.abs();
        m_sup = m_sup.max(rel);
        flux.push(vec![r.t, tau, m_st, m_fp, rel])?;
    }

    let boundary = sol.boundary()?;
    let centers = s.grid.centers();
    let mut density = CsvTable::new(["t", "l1", "fp_l1_norm", "stefan_mass"]);
    let mut l1_max: f64 = 0.0;
    for snap in tr.snapshots.iter().filter(|sn| sn.t > 0.0) {
        let tau = map.tau(snap.t);
        let alpha = map.alpha(tau);
        let edge = boundary.s(tau)?;
        let x: Vec<f64> = centers
            .iter()
            .map(|v| (v / alpha + edge).min(edge))
            .collect();
        let u = duhamel_u(&sol, &x, tau)?;
        let rho: Vec<f64> = u.iter().map(|w| w / alpha).collect();
        let norm = s
            .grid
            .mass(&snap.rho.iter().map(|r| r.abs()).collect::<Vec<_>>());
        let l1 = s.grid.l1_distance(&rho, &snap.rho) / norm;
        l1_max = l1_max.max(l1);
        density.push(vec![
            snap.t,
            l1,
            norm,
            nnlif_core::stefan::stefan_mass(&sol, tau)?,
        ])?;
    }

    let mut m = Summary::new();
    m.set("t_end", tr.final_state.t)?;
    m.set("tau_end", tau_end)?;
    m.set("stefan_tau_end", sol.end())?;
    m.set("m_sup_relative_error", m_sup)?;
    m.set("density_l1_relative_max", l1_max)?;
    m.set("density_snapshots", density.rows.len())?;
    m.set("stefan_windows", sol.seams.len())?;
    m.set("stefan_iterations", sol.iterations)?;
    m.set("stefan_halvings", sol.halvings)?;
    m.set(
        "seam_mismatch_max",
        sol.seam_mismatch.iter().copied().fold(0.0, f64::max),
    )?;
    m.set("fp_steps", tr.steps)?;
    let files = vec![
        ("flux.csv".to_string(), flux.render()),
        ("density_error.csv".to_string(), density.render()),
    ];
    Ok(Outcome {
        summary: m,
        files,
        blow_up: false,
    })
}
