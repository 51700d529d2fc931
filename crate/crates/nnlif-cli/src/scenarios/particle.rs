//! Particle system against the finite-volume density and the steady rate.

use nnlif_core::fp::simulate;
use nnlif_core::output::{CsvTable, Summary};
use nnlif_core::particle::{particle_simulate, ParticleOptions};

use crate::setup::{lowest_steady_state, simulate_options, Setup};
use crate::{CliError, Config, Outcome};

pub(crate) fn run(c: &Config, seed: u64) -> Result<Outcome, CliError> {
    let s = Setup::from_config(c, seed)?;
    let (p, g) = (&s.params, &s.grid);
    let fp_opts = simulate_options(c)?;
    let d = ParticleOptions::default();
    let opts = ParticleOptions {
        n_neurons: c.usize_or("particle", "n_neurons", d.n_neurons)?,
        dt: c.f64_or("particle", "dt", fp_opts.dt)?,
        t_end: fp_opts.t_end,
        bandwidth: c.f64_opt("particle", "bandwidth")?,
        seed,
        histogram_bins: c.usize_or("particle", "bins", d.histogram_bins)?,
        log_spikes: c.bool_or("particle", "log_spikes", false)?,
        bridge_crossings: d.bridge_crossings,
    };
    let burn_in = c.f64_or("particle", "burn_in", 1.0)?;
    let batches = c.usize_or("particle", "batches", 20)?;
    if !(burn_in >= 0.0 && burn_in < opts.t_end) || batches < 2 {
        return Err(CliError::Validation(
            "[particle] burn_in must lie in [0, t_end) and batches must be at least 2".into(),
        ));
    }

    let (pde, particles) = rayon::join(
        || simulate(p, g, &s.rho0, &s.initial, &fp_opts),
        || particle_simulate(p, g, &s.rho0, &s.initial, &opts),
    );
    let (pde, run) = (pde?, particles?);
    if !pde.completed() {
        return Err(CliError::Numeric(
            "finite-volume run did not reach the horizon".into(),
        ));
    }

    let mut m = Summary::new();
    let l1 = run.histogram.l1_distance(&pde.final_state.rho, g)?;
    let noise = run.histogram.noise_level();
    m.set("histogram_l1", l1)?;
    m.set("histogram_noise", noise)?;
    m.set("histogram_ratio", l1 / noise)?;
    m.set("histogram_below_range", run.histogram.below)?;
    m.set("n_neurons", opts.n_neurons)?;
    m.set("particle_dt", opts.dt)?;
    m.set("bandwidth", run.bandwidth)?;
    m.set("largest_cascade", run.largest_cascade)?;
    m.set("spikes_logged", run.ensemble.spike_log.len())?;
    m.set(
        "pde_final_rate",
        pde.series.rows.last().map_or(f64::NAN, |r| r.n),
    )?;
    m.set("pde_max_mass_drift", pde.series.max_mass_drift())?;
    m.set("burn_in", burn_in)?;
    let (mean, se) = run.mean_rate(burn_in, batches).ok_or_else(|| {
        CliError::Numeric(format!(
            "too few rate bins after t = {burn_in} for {batches} batches"
        ))
    })?;
    m.set("rate_mean", mean)?;
    m.set("rate_std_err", se)?;
    // The steady rate is only a reference when the coupling is off or weak.
    match lowest_steady_state(c, p, g) {
        Ok(ss) => {
            m.set("n_inf", ss.n_inf)?;
            m.set("rate_z", (mean - ss.n_inf) / se)?;
        }
        Err(CliError::Numeric(_)) => m.set("n_inf_found", false)?,
        Err(e) => return Err(e),
    }

    let mut rate = CsvTable::new(["t_start", "t_end", "n_hat"]);
    for b in &run.ensemble.rate_estimate {
        rate.push(vec![b.t_start, b.t_end, b.n_hat])?;
    }
    let mut hist = CsvTable::new(["v_lo", "v_hi", "density"]);
    for (k, dens) in run.histogram.density.iter().enumerate() {
        hist.push(vec![
            run.histogram.edges[k],
            run.histogram.edges[k + 1],
            *dens,
        ])?;
    }
    let mut files = vec![
        ("particle_rate.csv".to_string(), rate.render()),
        ("histogram.csv".to_string(), hist.render()),
    ];
    if opts.log_spikes {
        let mut spikes = CsvTable::new(["t", "neuron"]);
        for sp in &run.ensemble.spike_log {
            spikes.push(vec![sp.t, f64::from(sp.neuron)])?;
        }
        files.push(("spikes.csv".to_string(), spikes.render()));
    }
    Ok(Outcome {
        summary: m,
        files,
        blow_up: false,
    })
}
