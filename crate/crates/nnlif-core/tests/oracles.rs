//! Checks against values computed independently of the library.

use nnlif_core::diagnostics::moment_balance;
use nnlif_core::fp::{
    clipped_gaussian, raw_firing_rate, simulate, InitialHistory, SimulateOptions,
};
use nnlif_core::{steady_state_candidates, Grid, ModelParams};

/// Uncoupled stationary rate for `a = 1`, `b0 = mu`, `V_R = -1`, `V_F = 0`:
/// `1 / N = ∫ e^{-(v-mu)^2/2} ∫_{max(v,V_R)}^{0} e^{(w-mu)^2/2} dw dv`,
/// by composite Simpson on both integrals.
fn uncoupled_rate(mu: f64) -> f64 {
    fn simpson(lo: f64, hi: f64, n: usize, f: impl Fn(f64) -> f64) -> f64 {
        let h = (hi - lo) / n as f64;
        let mut s = f(lo) + f(hi);
        for k in 1..n {
            s += if k % 2 == 1 { 4.0 } else { 2.0 } * f(lo + k as f64 * h);
        }
        s * h / 3.0
    }
    let inner = |v: f64| simpson(v.max(-1.0), 0.0, 400, |w| (0.5 * (w - mu).powi(2)).exp());
    let outer = |v: f64| (-0.5 * (v - mu).powi(2)).exp() * inner(v);
    // Split at V_R, where the inner integrand's lower limit has a kink.
    let mass = simpson(mu - 12.0, -1.0, 4000, outer) + simpson(-1.0, 0.0, 400, outer);
    1.0 / mass
}

#[test]
fn uncoupled_steady_rate_matches_independent_quadrature() {
    for mu in [-0.5, 0.0, 0.7] {
        let p = ModelParams::new(1.0, 0.0, mu, 0.0, -1.0, 0.0).unwrap();
        let g = Grid::for_params(&p, 2000, 1.0).unwrap();
        let c = steady_state_candidates(&p, (1e-3, 1e2), 200, &g).unwrap();
        assert_eq!(c.len(), 1);
        let want = uncoupled_rate(mu);
        assert!(
            (c[0].n_inf - want).abs() <= 1e-6 * want,
            "mu {mu}: {} vs {want}",
            c[0].n_inf
        );
    }
}

#[test]
fn uncoupled_run_relaxes_to_the_quadrature_rate() {
    let p = ModelParams::new(1.0, 0.0, 0.0, 0.0, -1.0, 0.0).unwrap();
    let g = Grid::for_params(&p, 1000, 1.0).unwrap();
    let rho = clipped_gaussian(&g, -1.0, 0.5).unwrap();
    let init = InitialHistory::constant(0.0, raw_firing_rate(&rho, &p, &g).unwrap()).unwrap();
    let opts = SimulateOptions {
        t_end: 15.0,
        dt: 1e-3,
        ..Default::default()
    };
    let tr = simulate(&p, &g, &rho, &init, &opts).unwrap();
    let n = tr.series.rows.last().unwrap().n;
    let want = uncoupled_rate(0.0);
    // Spatial error of the second-order scheme at 1000 cells.
    assert!((n - want).abs() <= 2e-3 * want, "{n} vs {want}");
}

#[test]
fn moment_balance_residual_shrinks_under_refinement() {
    // dm1/dt = -m1 + b0 + b N(t - D) - (V_F - V_R) N(t) holds exactly for the PDE.
    // Positive drift keeps the density off v_min, where leakage would bias m1.
    let p = ModelParams::new(1.0, 0.5, 0.2, 0.05, -1.0, 0.0).unwrap();
    let residual = |n: usize, dt: f64| {
        let g = Grid::new(-5.0, 0.0, n, -1.0).unwrap();
        let rho = clipped_gaussian(&g, -1.5, 0.5).unwrap();
        let n0 = raw_firing_rate(&rho, &p, &g).unwrap();
        let init = InitialHistory::constant(p.d, n0).unwrap();
        let opts = SimulateOptions {
            t_end: 1.0,
            dt,
            series_every: Some(0.01),
            ..Default::default()
        };
        let tr = simulate(&p, &g, &rho, &init, &opts).unwrap();
        // Starts after N(t - D) has left the initial transient.
        moment_balance(&tr.series, &p)
            .unwrap()
            .mean_abs_residual(0.2, 1.0)
    };
    let coarse = residual(500, 1e-3);
    let fine = residual(2000, 2.5e-4);
    // First order in (dv, dt): a factor 4 refinement should give about 1/4.
    assert!(fine < 0.35 * coarse, "{coarse} -> {fine}");
}
