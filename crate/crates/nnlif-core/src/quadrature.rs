//! Quadrature rules: Romberg (trapezoid halving with Richardson extrapolation) and fixed Gauss rules.

use crate::error::{numeric, Result};

const MAX_LEVELS: usize = 24;
const MIN_LEVELS: usize = 4;

/// Romberg integration of `f` over `[a, b]`.
///
/// Stops once two successive diagonal entries agree to `tol * max(1, |I|)`.
pub fn romberg(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(MAX_LEVELS);
    let h0 = b - a;
    let t0 = 0.5 * h0 * (f(a) + f(b));
    check(t0)?;
    rows.push(vec![t0]);
    let mut n_mid = 1usize;
    for k in 1..MAX_LEVELS {
        let h = h0 / (2 * n_mid) as f64;
        let mut mid = 0.0;
        for j in 0..n_mid {
            mid += f(a + (2 * j + 1) as f64 * h);
        }
        check(mid)?;
        let mut row = Vec::with_capacity(k + 1);
        row.push(0.5 * rows[k - 1][0] + h * mid);
        let mut factor = 4.0;
        for m in 1..=k {
            let prev = row[m - 1];
            row.push(prev + (prev - rows[k - 1][m - 1]) / (factor - 1.0));
            factor *= 4.0;
        }
        let best = row[k];
        let last = rows[k - 1][k - 1];
        rows.push(row);
        if k >= MIN_LEVELS && (best - last).abs() <= tol * best.abs().max(1.0) {
            return Ok(best);
        }
        n_mid *= 2;
    }
    Err(numeric(format!("romberg did not converge on [{a}, {b}]")))
}

fn check(x: f64) -> Result<()> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(numeric("non-finite integrand"))
    }
}

const GL5_NODES: [f64; 5] = [
    -0.906_179_845_938_664,
    -0.538_469_310_105_683_1,
    0.0,
    0.538_469_310_105_683_1,
    0.906_179_845_938_664,
];
const GL5_WEIGHTS: [f64; 5] = [
    0.236_926_885_056_189_1,
    0.478_628_670_499_366_5,
    0.568_888_888_888_888_9,
    0.478_628_670_499_366_5,
    0.236_926_885_056_189_1,
];

/// Five-point Gauss-Legendre rule on `[a, b]`, exact for polynomials of degree 9.
pub fn gauss_legendre5(f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    GL5_NODES
        .iter()
        .zip(GL5_WEIGHTS.iter())
        .map(|(x, w)| w * f(mid + half * x))
        .sum::<f64>()
        * half
}

/// Composite Gauss-Legendre over `n` equal panels.
pub fn composite_gauss(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    (0..n)
        .map(|i| gauss_legendre5(&f, a + i as f64 * h, a + (i + 1) as f64 * h))
        .sum()
}

/// Trapezoid rule on samples `y` at abscissae `x`.
pub fn trapezoid(x: &[f64], y: &[f64]) -> f64 {
    x.windows(2)
        .zip(y.windows(2))
        .map(|(xs, ys)| 0.5 * (xs[1] - xs[0]) * (ys[0] + ys[1]))
        .sum()
}

/// Linear interpolation on increasing abscissae, clamped at the ends.
pub fn interp_linear(x: &[f64], y: &[f64], at: f64) -> f64 {
    debug_assert_eq!(x.len(), y.len());
    let n = x.len();
    if n == 0 {
        return 0.0;
    }
    if at <= x[0] {
        return y[0];
    }
    if at >= x[n - 1] {
        return y[n - 1];
    }
    let j = x.partition_point(|&xi| xi <= at);
    let (x0, x1) = (x[j - 1], x[j]);
    let w = (at - x0) / (x1 - x0);
    y[j - 1] + w * (y[j] - y[j - 1])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn romberg_gaussian() {
        let v = romberg(|x| (-x * x).exp(), -8.0, 8.0, 1e-13).unwrap();
        assert!((v - std::f64::consts::PI.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn romberg_flags_nan() {
        assert!(romberg(|x| if x > 0.5 { f64::NAN } else { x }, 0.0, 1.0, 1e-10).is_err());
    }

    #[test]
    fn gauss_rule_degree() {
        let v = gauss_legendre5(|x| x.powi(9) + x.powi(8), -1.0, 2.0);
        let exact = (2f64.powi(10) - 1.0) / 10.0 + (2f64.powi(9) + 1.0) / 9.0;
        assert!((v - exact).abs() < 1e-11);
    }

    #[test]
    fn interp_clamps_and_interpolates() {
        let x = [0.0, 1.0, 3.0];
        let y = [1.0, 3.0, 7.0];
        assert_eq!(interp_linear(&x, &y, -1.0), 1.0);
        assert_eq!(interp_linear(&x, &y, 2.0), 5.0);
        assert_eq!(interp_linear(&x, &y, 5.0), 7.0);
        assert_eq!(interp_linear(&x, &y, 1.0), 3.0);
    }

    #[test]
    fn trapezoid_linear_exact() {
        let x = [0.0, 0.5, 2.0];
        let y = [0.0, 0.5, 2.0];
        assert!((trapezoid(&x, &y) - 2.0).abs() < 1e-15);
    }
}
