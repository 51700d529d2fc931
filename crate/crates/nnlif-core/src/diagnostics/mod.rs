//! Functionals evaluated on solver output: relative entropy and its
//! dissipation identity, the weighted Poincaré gap, `L^2` budgets of the
//! firing rate and the first-moment obstruction to periodic solutions.

mod budget;
mod entropy;
mod moments;
mod poincare;

pub use budget::{firing_rate_l2_budget, smallness_functional, L2Budget};
pub use entropy::{
    density_ratio, entropy_identity_check, relative_entropy, EntropyFunction, EntropyReport,
    EntropyRow, ENTROPY_NOISE_FLOOR, FIT_FRACTION, QUADRATIC, RHO_INF_FLOOR,
};
pub use moments::{
    moment_balance, periodicity_obstruction, periodicity_scan, MomentReport, PeriodicityReport,
    SignCertificate,
};
pub use poincare::{poincare_constant, weighted_gap, PoincareEstimate};

/// Least-squares fit `log y = intercept - mu t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayFit {
    pub mu: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// Standard error of `mu`.
    pub mu_std_err: f64,
    pub t_start: f64,
    pub points: usize,
}

impl DecayFit {
    /// `mu ± 2` standard errors.
    pub fn confidence(&self) -> (f64, f64) {
        (
            self.mu - 2.0 * self.mu_std_err,
            self.mu + 2.0 * self.mu_std_err,
        )
    }
}

/// Fits `log y` against `t`; `None` with fewer than three positive samples.
pub fn decay_fit(t: &[f64], y: &[f64]) -> Option<DecayFit> {
    let pts: Vec<(f64, f64)> = t
        .iter()
        .zip(y)
        .filter(|(_, y)| **y > 0.0)
        .map(|(t, y)| (*t, y.ln()))
        .collect();
    let n = pts.len();
    if n < 3 {
        return None;
    }
    let nf = n as f64;
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / nf;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / nf;
    let stt: f64 = pts.iter().map(|p| (p.0 - mt).powi(2)).sum();
    let sty: f64 = pts.iter().map(|p| (p.0 - mt) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    if !(stt > 0.0) {
        return None;
    }
    let slope = sty / stt;
    let intercept = my - slope * mt;
    let sse: f64 = pts
        .iter()
        .map(|p| (p.1 - intercept - slope * p.0).powi(2))
        .sum();
    let r_squared = if syy > 0.0 { 1.0 - sse / syy } else { 1.0 };
    let mu_std_err = (sse / (nf - 2.0) / stt).sqrt();
    Some(DecayFit {
        mu: -slope,
        intercept,
        r_squared,
        mu_std_err,
        t_start: pts[0].0,
        points: n,
    })
}

/// Derivative at `t[k]` of the Lagrange interpolant through `width` samples
/// around `k`, shifted inward at the ends.
pub fn lagrange_derivative(t: &[f64], y: &[f64], k: usize, width: usize) -> f64 {
    let n = t.len();
    let w = width.min(n).max(2);
    let lo = k.saturating_sub(w / 2).min(n - w);
    let idx = lo..lo + w;
    let x = t[k];
    let mut total = 0.0;
    for j in idx.clone() {
        let weight = if j == k {
            idx.clone()
                .filter(|&m| m != k)
                .map(|m| 1.0 / (x - t[m]))
                .sum::<f64>()
        } else {
            let num: f64 = idx
                .clone()
                .filter(|&m| m != j && m != k)
                .map(|m| x - t[m])
                .product();
            let den: f64 = idx
                .clone()
                .filter(|&m| m != j)
                .map(|m| t[j] - t[m])
                .product();
            num / den
        };
        total += weight * y[j];
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lagrange_derivative_is_exact_on_quartics() {
        let t: Vec<f64> = (0..9)
            .map(|k| 0.3 * k as f64 + 0.01 * (k * k) as f64)
            .collect();
        let f = |x: f64| 1.0 - 2.0 * x + 0.5 * x.powi(3) - 0.1 * x.powi(4);
        let df = |x: f64| -2.0 + 1.5 * x * x - 0.4 * x.powi(3);
        let y: Vec<f64> = t.iter().map(|&x| f(x)).collect();
        for k in 0..t.len() {
            assert!(
                (lagrange_derivative(&t, &y, k, 5) - df(t[k])).abs() < 1e-10,
                "k = {k}"
            );
        }
    }

    #[test]
    fn decay_fit_recovers_an_exponential() {
        let t: Vec<f64> = (0..50).map(|k| k as f64 * 0.2).collect();
        let y: Vec<f64> = t.iter().map(|x| 3.0 * (-0.7 * x).exp()).collect();
        let fit = decay_fit(&t, &y).unwrap();
        assert!((fit.mu - 0.7).abs() < 1e-12);
        assert!((fit.intercept - 3f64.ln()).abs() < 1e-12);
        assert!(fit.r_squared > 1.0 - 1e-12);
    }

    #[test]
    fn decay_fit_needs_three_points() {
        assert!(decay_fit(&[0.0, 1.0], &[1.0, 0.5]).is_none());
        assert!(decay_fit(&[0.0, 1.0, 2.0], &[1.0, 0.0, -1.0]).is_none());
    }
}
