//! Changes of variables and the free boundary `s(tau)`.

use crate::error::{invalid, NnlifError, Result};
use crate::fp::InitialHistory;
use crate::model::ModelParams;
use crate::quadrature::gauss_legendre5;

use super::profile::PiecewiseLinear;

/// Maps between `(t, v)` and `(tau, y)` for normalized parameters.
///
/// `tau = (e^{2t} - 1)/2`, `alpha = (2 tau + 1)^{-1/2} = e^{-t}`, `y = v / alpha`,
/// densities scale as `w = alpha rho` and rates as `M = alpha^2 N`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoordinateMap {
    pub b: f64,
    pub b0: f64,
    pub v_r: f64,
    pub d_bar: f64,
}

impl CoordinateMap {
    pub fn new(params: &ModelParams) -> Result<Self> {
        params.validate()?;
        if !params.is_normalized() {
            return Err(invalid(format!(
                "Stefan coordinates need a = 1 and V_F = 0, got a = {}, V_F = {}",
                params.a, params.v_f
            )));
        }
        Ok(Self {
            b: params.b,
            b0: params.b0,
            v_r: params.v_r,
            d_bar: params.d_bar(),
        })
    }

    pub fn tau(&self, t: f64) -> f64 {
        0.5 * (2.0 * t).exp_m1()
    }

    pub fn time(&self, tau: f64) -> f64 {
        0.5 * (2.0 * tau).ln_1p()
    }

    pub fn alpha(&self, tau: f64) -> f64 {
        1.0 / (2.0 * tau + 1.0).sqrt()
    }

    /// `(t, v) -> (tau, y)`.
    pub fn forward(&self, t: f64, v: f64) -> (f64, f64) {
        let tau = self.tau(t);
        (tau, v / self.alpha(tau))
    }

    /// `(tau, y) -> (t, v)`.
    pub fn inverse(&self, tau: f64, y: f64) -> (f64, f64) {
        (self.time(tau), y * self.alpha(tau))
    }

    /// Image `(1 - D̄) tau - D̄/2` of `t - D`.
    pub fn delayed_tau(&self, tau: f64) -> f64 {
        (1.0 - self.d_bar) * tau - 0.5 * self.d_bar
    }

    /// Image `-D̄/2` of `t = -D`.
    pub fn prehistory_start(&self) -> f64 {
        -0.5 * self.d_bar
    }

    /// Length `D̄ / (2 (1 - D̄))` of the window on which `s` depends only on the past.
    pub fn linear_window(&self) -> f64 {
        0.5 * self.d_bar / (1.0 - self.d_bar)
    }

    /// `s1 - s = V_R / alpha`.
    pub fn reset_offset(&self, tau: f64) -> f64 {
        self.v_r / self.alpha(tau)
    }

    /// Drift input `I = alpha(tau) (b0 + b N(t - D))` given `M(tau_D)`.
    pub fn drift_input(&self, tau: f64, m_delayed: f64) -> f64 {
        let td = self.delayed_tau(tau);
        self.b0 * self.alpha(tau) + self.b * (1.0 - self.d_bar).sqrt() * m_delayed / self.alpha(td)
    }

    /// `M0(tau) = alpha^2 N0(t(tau))` sampled at `n + 1` points of `[-D̄/2, 0]`.
    pub fn prehistory(&self, initial: &InitialHistory, n: usize) -> Result<PiecewiseLinear> {
        let start = self.prehistory_start();
        let f = |tau: f64| self.alpha(tau).powi(2) * initial.at(self.time(tau));
        if start == 0.0 {
            return PiecewiseLinear::new(vec![0.0], vec![f(0.0)]);
        }
        PiecewiseLinear::from_fn(start, 0.0, n.max(1), f)
    }
}

/// Free boundary `s(tau) = -b0 (sqrt(2 tau + 1) - 1) - b / sqrt(1 - D̄) Q(tau_D)`
/// with `Q(z)` the integral of `M alpha^{-1}` from `-D̄/2` to `z`.
#[derive(Debug, Clone)]
pub struct Boundary {
    map: CoordinateMap,
    history: PiecewiseLinear,
    cumulative: Vec<f64>,
}

impl Boundary {
    /// `history` is `M` on `[-D̄/2, tau_end]`, prehistory included.
    pub fn new(map: CoordinateMap, history: PiecewiseLinear) -> Result<Self> {
        if (history.start() - map.prehistory_start()).abs() > 1e-12 {
            return Err(invalid(format!(
                "flux history starts at {} instead of {}",
                history.start(),
                map.prehistory_start()
            )));
        }
        let xs = history.xs();
        let mut cumulative = Vec::with_capacity(xs.len());
        let mut acc = 0.0;
        cumulative.push(0.0);
        for k in 1..xs.len() {
            acc += weighted_piece(&history, k - 1, xs[k - 1], xs[k]);
            cumulative.push(acc);
        }
        Ok(Self {
            map,
            history,
            cumulative,
        })
    }

    pub fn map(&self) -> &CoordinateMap {
        &self.map
    }

    pub fn history(&self) -> &PiecewiseLinear {
        &self.history
    }

    /// `M` at `tau`, interpolated.
    pub fn flux(&self, tau: f64) -> f64 {
        self.history.eval(tau)
    }

    fn q(&self, z: f64) -> Result<f64> {
        let xs = self.history.xs();
        if z < xs[0] - 1e-12 || z > self.history.end() + 1e-12 {
            return Err(NnlifError::Solver(format!(
                "boundary needs M at {z}, history covers [{}, {}]",
                xs[0],
                self.history.end()
            )));
        }
        let k = xs.partition_point(|&x| x <= z).max(1) - 1;
        if k + 1 >= xs.len() {
            return Ok(self.cumulative[xs.len() - 1]);
        }
        Ok(self.cumulative[k] + weighted_piece(&self.history, k, xs[k], z))
    }

    pub fn s(&self, tau: f64) -> Result<f64> {
        let m = &self.map;
        let mut s = -m.b0 * ((2.0 * tau + 1.0).sqrt() - 1.0);
        if m.b != 0.0 {
            s -= m.b / (1.0 - m.d_bar).sqrt() * self.q(m.delayed_tau(tau))?;
        }
        Ok(s)
    }

    /// `s1 = s + V_R / alpha`.
    pub fn s1(&self, tau: f64) -> Result<f64> {
        Ok(self.s(tau)? + self.map.reset_offset(tau))
    }

    /// `I(tau) = -s'(tau)`.
    pub fn input(&self, tau: f64) -> f64 {
        let td = self.map.delayed_tau(tau);
        self.map.drift_input(tau, self.history.eval(td))
    }
}

/// Integral of `M alpha^{-1}` over `[a, b]` inside piece `k` of `history`.
fn weighted_piece(history: &PiecewiseLinear, k: usize, a: f64, b: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    let (x0, x1) = (history.xs()[k], history.xs()[k + 1]);
    let (y0, y1) = (history.ys()[k], history.ys()[k + 1]);
    let slope = if x1 > x0 { (y1 - y0) / (x1 - x0) } else { 0.0 };
    gauss_legendre5(|z| (y0 + slope * (z - x0)) * (2.0 * z + 1.0).sqrt(), a, b)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn map(b: f64, b0: f64, d: f64) -> CoordinateMap {
        let mut p = ModelParams::standard(b, d);
        p.b0 = b0;
        CoordinateMap::new(&p).unwrap()
    }

    #[test]
    fn forward_and_inverse_are_mutual_inverses() {
        let m = map(1.0, 0.0, 0.3);
        for &(t, v) in &[(0.0, -1.0), (0.37, -2.5), (2.0, -0.01)] {
            let (tau, y) = m.forward(t, v);
            let (t2, v2) = m.inverse(tau, y);
            assert!((t2 - t).abs() < 1e-14 * (1.0 + t));
            assert!((v2 - v).abs() < 1e-14 * (1.0 + v.abs()));
            assert!((m.time(tau) + m.alpha(tau).ln()).abs() < 1e-14);
        }
    }

    #[test]
    fn origin_is_fixed() {
        let m = map(1.0, 0.0, 0.3);
        assert_eq!(m.forward(0.0, -0.7), (0.0, -0.7));
        assert_eq!(m.alpha(0.0), 1.0);
    }

    #[test]
    fn delayed_tau_is_the_image_of_t_minus_d() {
        let m = map(1.0, 0.0, 0.4);
        for &t in &[0.4, 0.9, 1.7] {
            let want = m.tau(t - 0.4);
            assert!((m.delayed_tau(m.tau(t)) - want).abs() < 1e-13);
        }
        assert!((m.delayed_tau(m.linear_window())).abs() < 1e-14);
    }

    #[test]
    fn rejects_unnormalized_parameters() {
        let mut p = ModelParams::standard(1.0, 0.0);
        p.a = 2.0;
        assert!(CoordinateMap::new(&p).is_err());
    }

    #[test]
    fn zero_coupling_keeps_the_boundary_still() {
        let m = map(0.0, 0.0, 0.2);
        let h = PiecewiseLinear::new(vec![m.prehistory_start(), 0.0, 1.0], vec![3.0, 3.0, 5.0])
            .unwrap();
        let b = Boundary::new(m, h).unwrap();
        for &tau in &[0.0, 0.3, 1.0] {
            assert_eq!(b.s(tau).unwrap(), 0.0);
        }
    }

    #[test]
    fn constant_rate_boundary_matches_closed_form() {
        // N = c for all t, D = 0: M = c alpha^2, so s = -b c (sqrt(2 tau + 1) - 1).
        let (b, c) = (0.8, 1.5);
        let m = map(b, 0.0, 0.0);
        let h = PiecewiseLinear::from_fn(0.0, 2.0, 400, |z| c / (2.0 * z + 1.0)).unwrap();
        let bd = Boundary::new(m, h).unwrap();
        for tau in [0.1f64, 0.75, 2.0] {
            let want = -b * c * ((2.0 * tau + 1.0).sqrt() - 1.0);
            assert!((bd.s(tau).unwrap() - want).abs() < 1e-5);
        }
    }

    #[test]
    fn delayed_boundary_reads_the_prehistory() {
        // N0 = c on [-D, 0]: on the linear window s = -b c (sqrt(2 tau_D + 1) - sqrt(1 - D̄)) / sqrt(1 - D̄).
        let (b, c, d) = (-0.5, 2.0, 0.2);
        let m = map(b, 0.0, d);
        let init = InitialHistory::constant(d, c).unwrap();
        let h = m.prehistory(&init, 200).unwrap();
        let bd = Boundary::new(m, h).unwrap();
        let k = (1.0 - m.d_bar).sqrt();
        for &tau in &[0.0, 0.1, m.linear_window()] {
            let td = m.delayed_tau(tau);
            let want = -b * c * ((2.0 * td + 1.0).sqrt() - k) / k;
            assert!((bd.s(tau).unwrap() - want).abs() < 1e-6, "tau {tau}");
        }
        assert!(bd.s(m.linear_window() + 0.01).is_err());
    }
}
