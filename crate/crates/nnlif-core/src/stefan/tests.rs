use super::*;
use crate::fp::InitialHistory;

/// `C (-x) exp(-(x + 1)^2 / 0.5)` on `[-6, 0]` with unit mass; `u'(0) = -C e^{-2}`.
fn bump(n: usize) -> (PiecewiseLinear, f64) {
    let f = |x: f64| -x * (-(x + 1.0) * (x + 1.0) / 0.5).exp();
    let raw = PiecewiseLinear::from_fn(-6.0, 0.0, 20_000, f).unwrap();
    let c = 1.0 / raw.integral();
    let u = PiecewiseLinear::from_fn(-6.0, 0.0, n, |x| c * f(x)).unwrap();
    (u, c * (-2.0f64).exp())
}

fn params(b: f64, b0: f64, d: f64) -> ModelParams {
    let mut p = ModelParams::standard(b, d);
    p.b0 = b0;
    p
}

fn solve(b: f64, b0: f64, d: f64, sigma: f64) -> StefanSolution {
    let p = params(b, b0, d);
    let (u0, m0) = bump(6000);
    let map = CoordinateMap::new(&p).unwrap();
    let pre = map
        .prehistory(&InitialHistory::constant(d, m0).unwrap(), 64)
        .unwrap();
    let opts = FixedPointOptions {
        sigma,
        step: 1.25e-3,
        ..Default::default()
    };
    fixed_point_m(&u0, &pre, &p, &opts).unwrap()
}

#[test]
fn initial_term_tends_to_minus_the_boundary_slope() {
    let (u0, m0) = bump(6000);
    for &lag in &[1e-4, 1e-6] {
        let f = volterra::half_space_limit(&u0, lag);
        assert!(
            (f - m0).abs() < 50.0 * lag.sqrt() * m0,
            "lag {lag}: {f} vs {m0}"
        );
    }
}

#[test]
fn flux_stays_in_the_ball_and_starts_at_the_slope() {
    let sol = solve(-0.5, 0.0, 0.2, 0.1);
    let (u0, m0) = bump(6000);
    let ball = 1.0 + 2.0 * u0.max_abs_slope();
    assert!((sol.m[0] - m0).abs() < 5e-3 * m0, "{} vs {m0}", sol.m[0]);
    assert!(sol.m.iter().all(|&m| m >= 0.0 && m <= ball));
    assert_eq!(sol.s[0], 0.0);
    assert!((sol.end() - 0.1).abs() < 1e-12);
}

#[test]
fn flux_is_continuous() {
    let sol = solve(-0.5, 0.0, 0.2, 0.1);
    // Holder-1/2 at the start, where the profile is not compatible to second order.
    for (t, m) in sol.tau.windows(2).zip(sol.m.windows(2)) {
        assert!(
            (m[1] - m[0]).abs() <= 2.0 * (t[1] - t[0]).sqrt(),
            "jump at {}",
            t[0]
        );
    }
}

#[test]
fn inhibitory_boundary_increases_and_excitatory_decreases() {
    let up = solve(-0.5, -0.3, 0.2, 0.05);
    assert!(up.s.windows(2).all(|w| w[1] > w[0]));
    let down = solve(0.5, 0.3, 0.2, 0.05);
    assert!(down.s.windows(2).all(|w| w[1] < w[0]));
}

#[test]
fn boundary_speed_is_bounded_by_the_input() {
    let sol = solve(-0.5, -0.3, 0.2, 0.05);
    let b = sol.boundary().unwrap();
    let i0 = sol
        .tau
        .iter()
        .map(|&t| b.input(t).abs())
        .fold(0.0, f64::max);
    for w in sol.tau.windows(2).zip(sol.s.windows(2)) {
        let (t, s) = w;
        assert!((s[1] - s[0]).abs() <= i0 * (t[1] - t[0]) * (1.0 + 1e-9));
    }
}

#[test]
fn contraction_sums_respect_the_square_root_bound() {
    // phi1 <= 2 m I0 / sqrt(4 pi) * integral of r^{-1/2} / 2 = m I0 sqrt(tau) * 2 / sqrt(4 pi).
    let sol = solve(-0.5, -0.3, 0.2, 0.05);
    let b = sol.boundary().unwrap();
    let ball = 1.0 + 2.0 * sol.u0.max_abs_slope();
    let i0 = sol
        .tau
        .iter()
        .map(|&t| b.input(t).abs())
        .fold(0.0, f64::max);
    for i in 1..sol.tau.len() {
        let (phi1, phi2) = sol.contraction_sums(i).unwrap();
        let bound = 2.0 * ball * i0 * sol.tau[i].sqrt() / (4.0 * std::f64::consts::PI).sqrt();
        assert!(phi1 <= bound * (1.0 + 1e-9), "phi1 {phi1} bound {bound}");
        assert!(phi2 < 0.5 * ball);
    }
}

#[test]
fn duhamel_vanishes_on_the_boundary_and_conserves_mass() {
    let sol = solve(-0.5, 0.0, 0.2, 0.1);
    let b = sol.boundary().unwrap();
    for &tau in &[0.02, 0.05, 0.1] {
        let s = b.s(tau).unwrap();
        let u = duhamel_u(&sol, &[s], tau).unwrap()[0];
        assert!(u.abs() < 1e-4, "u(s) = {u} at {tau}");
        let mass = stefan_mass(&sol, tau).unwrap();
        assert!((mass - 1.0).abs() < 1e-6, "mass {mass} at {tau}");
    }
}

#[test]
fn duhamel_field_is_non_negative() {
    let sol = solve(-0.5, 0.0, 0.2, 0.1);
    let s = sol.boundary().unwrap().s(0.1).unwrap();
    let x: Vec<f64> = (0..=400).map(|k| s - 8.0 + 0.02 * k as f64).collect();
    let u = duhamel_u(&sol, &x, 0.1).unwrap();
    assert!(u.iter().all(|&v| v > -1e-6));
}

#[test]
fn flux_identity_holds_at_both_ends() {
    let sol = solve(-0.5, 0.0, 0.2, 0.1);
    let b = sol.boundary().unwrap();
    let tau = 0.075;
    let m = sol.flux_at(tau).unwrap();
    let (s, s1) = (b.s(tau).unwrap(), b.s1(tau).unwrap());
    let h = 1e-3;
    let u = duhamel_u(&sol, &[s - 2.0 * h, s - h, s], tau).unwrap();
    let slope = (3.0 * u[2] - 4.0 * u[1] + u[0]) / (2.0 * h);
    assert!((m + slope).abs() < 1e-2 * m, "M {m} vs -u_x {}", -slope);
    let v = duhamel_u(&sol, &[s1 - 2.0 * h, s1 - h, s1, s1 + h, s1 + 2.0 * h], tau).unwrap();
    let left = (3.0 * v[2] - 4.0 * v[1] + v[0]) / (2.0 * h);
    let right = (-3.0 * v[2] + 4.0 * v[3] - v[4]) / (2.0 * h);
    assert!(
        (left - right - m).abs() < 1e-2 * m,
        "jump {} vs {m}",
        left - right
    );
}

#[test]
fn zero_flux_gives_pure_heat_evolution() {
    let (u0, _) = bump(3000);
    let map = CoordinateMap::new(&params(0.0, 0.0, 0.0)).unwrap();
    let sol = StefanSolution {
        map,
        tau: vec![0.0, 0.05, 0.1],
        m: vec![0.0; 3],
        s: vec![0.0; 3],
        s1: vec![-1.0; 3],
        prehistory: PiecewiseLinear::new(vec![0.0], vec![0.0]).unwrap(),
        u0: u0.clone(),
        fields: Vec::new(),
        seams: vec![0.0],
        seam_mismatch: Vec::new(),
        iterations: 0,
        halvings: 0,
    };
    let x = [-3.0, -1.0, -0.2];
    let u = duhamel_u(&sol, &x, 0.1).unwrap();
    for (xi, ui) in x.iter().zip(&u) {
        let want = crate::quadrature::composite_gauss(
            |xi2| heat_kernel(*xi, 0.1, xi2, 0.0).unwrap() * u0.eval(xi2),
            -6.0,
            0.0,
            3000,
        );
        assert!((ui - want).abs() < 1e-9);
    }
}

#[test]
fn rejects_profile_not_vanishing_at_zero() {
    let p = params(0.0, 0.0, 0.0);
    let u0 = PiecewiseLinear::new(vec![-1.0, 0.0], vec![0.0, 1.0]).unwrap();
    let pre = PiecewiseLinear::new(vec![0.0], vec![1.0]).unwrap();
    assert!(fixed_point_m(&u0, &pre, &p, &FixedPointOptions::default()).is_err());
}

#[test]
fn rejects_incompatible_prehistory() {
    let p = params(0.0, 0.0, 0.0);
    let (u0, m0) = bump(600);
    let pre = PiecewiseLinear::new(vec![0.0], vec![2.0 * m0]).unwrap();
    let err = fixed_point_m(&u0, &pre, &p, &FixedPointOptions::default()).unwrap_err();
    assert!(matches!(err, NnlifError::Validation(_)));
}

#[test]
fn to_stefan_is_the_identity_at_the_origin() {
    let p = params(0.0, 0.0, 0.0);
    let grid = Grid::new(-6.0, 0.0, 60, -1.0).unwrap();
    let rho = vec![0.5; 60];
    let snaps = [Snapshot {
        t: 0.0,
        rho: rho.clone(),
    }];
    let init = InitialHistory::constant(0.0, 2.0).unwrap();
    let out = to_stefan(&snaps, &grid, &[(0.0, 2.0), (0.5, 3.0)], &init, &p).unwrap();
    assert_eq!(out.tau[0], 0.0);
    assert_eq!(out.m[0], 2.0);
    assert_eq!(out.fields[0].u, rho);
    assert_eq!(out.fields[0].x, grid.centers());
    assert!(out.s.iter().all(|&s| s == 0.0));
}

#[test]
fn to_stefan_rejects_unnormalized_parameters() {
    let mut p = params(0.0, 0.0, 0.0);
    p.v_f = 1.0;
    let grid = Grid::new(-6.0, 0.0, 60, -1.0).unwrap();
    let init = InitialHistory::constant(0.0, 2.0).unwrap();
    assert!(to_stefan(&[], &grid, &[(0.0, 2.0)], &init, &p).is_err());
}

#[test]
fn no_delay_input_is_the_plain_drift() {
    let map = CoordinateMap::new(&params(1.3, 0.4, 0.0)).unwrap();
    assert_eq!(map.delayed_tau(0.7), 0.7);
    let (tau, m) = (0.7, 2.0);
    let n = m / map.alpha(tau).powi(2);
    let want = map.alpha(tau) * (0.4 + 1.3 * n);
    assert!((map.drift_input(tau, m) - want).abs() < 1e-13);
}

#[test]
fn two_windows_match_one_window() {
    let p = params(-0.5, 0.0, 0.2);
    let one = solve(-0.5, 0.0, 0.2, 0.1);
    let half = solve(-0.5, 0.0, 0.2, 0.05);
    let opts = ExtendOptions {
        window: 0.05,
        fixed_point: FixedPointOptions {
            step: 1.25e-3,
            ..Default::default()
        },
        ..Default::default()
    };
    let two = piecewise_extend(&half, &p, 0.1, &opts).unwrap();
    let diff = one
        .tau
        .iter()
        .zip(&one.m)
        .map(|(&t, m)| (two.flux_at(t).unwrap() - m).abs())
        .fold(0.0, f64::max);
    assert!(diff < 2e-3 * one.m[0], "window mismatch {diff}");
    let m_seam = one.flux_at(0.05).unwrap();
    assert!(
        two.seam_mismatch[0] < 1e-2 * m_seam,
        "seam {}",
        two.seam_mismatch[0]
    );
    let seam = two
        .tau
        .iter()
        .position(|&t| (t - 0.05).abs() < 1e-12)
        .unwrap();
    assert!((two.m[seam + 1] - two.m[seam]).abs() < 0.05 * two.m[seam]);
}

#[test]
fn uncoupled_extension_equals_a_fresh_solve() {
    let p = params(0.0, 0.0, 0.2);
    let (u0, m0) = bump(6000);
    let map = CoordinateMap::new(&p).unwrap();
    let pre = map
        .prehistory(&InitialHistory::constant(0.2, m0).unwrap(), 8)
        .unwrap();
    let fp = FixedPointOptions {
        sigma: 0.05,
        step: 1.25e-3,
        ..Default::default()
    };
    let short = fixed_point_m(&u0, &pre, &p, &fp).unwrap();
    let long = fixed_point_m(&u0, &pre, &p, &FixedPointOptions { sigma: 0.1, ..fp }).unwrap();
    let opts = ExtendOptions {
        window: 0.05,
        fixed_point: fp,
        ..Default::default()
    };
    let ext = piecewise_extend(&short, &p, 0.1, &opts).unwrap();
    let diff = long
        .tau
        .iter()
        .zip(&long.m)
        .map(|(&t, m)| (ext.flux_at(t).unwrap() - m).abs())
        .fold(0.0, f64::max);
    assert!(diff < 2e-3 * long.m[0], "mismatch {diff}");
}

#[test]
fn window_beyond_the_decoupling_bound_is_rejected() {
    let p = params(-0.5, 0.0, 0.2);
    let sol = solve(-0.5, 0.0, 0.2, 0.05);
    let opts = ExtendOptions {
        window: 0.3,
        ..Default::default()
    };
    assert!(piecewise_extend(&sol, &p, 0.4, &opts).is_err());
}
