//! Piecewise-linear functions used for profiles `u(x)` and flux histories `M(tau)`.

use crate::error::{invalid, Result};

/// Continuous piecewise-linear interpolant through `(x_k, y_k)`.
///
/// Abscissae are non-decreasing; a repeated abscissa marks a jump, and
/// evaluation there takes the right value.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseLinear {
    x: Vec<f64>,
    y: Vec<f64>,
}

impl PiecewiseLinear {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        if x.is_empty() || x.len() != y.len() {
            return Err(invalid(
                "piecewise-linear data needs matching, non-empty samples",
            ));
        }
        if x.iter().chain(&y).any(|v| !v.is_finite()) {
            return Err(invalid("piecewise-linear samples must be finite"));
        }
        if x.windows(2).any(|w| w[1] < w[0]) {
            return Err(invalid("piecewise-linear abscissae must be non-decreasing"));
        }
        Ok(Self { x, y })
    }

    /// Samples `f` at `n + 1` equispaced points of `[a, b]`.
    pub fn from_fn(a: f64, b: f64, n: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        if !(b > a) || n == 0 {
            return Err(invalid(format!(
                "sampling needs a < b and n > 0, got [{a}, {b}], n = {n}"
            )));
        }
        let h = (b - a) / n as f64;
        let x: Vec<f64> = (0..=n)
            .map(|k| if k == n { b } else { a + k as f64 * h })
            .collect();
        let y = x.iter().map(|&t| f(t)).collect();
        Self::new(x, y)
    }

    pub fn xs(&self) -> &[f64] {
        &self.x
    }

    pub fn ys(&self) -> &[f64] {
        &self.y
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn start(&self) -> f64 {
        self.x[0]
    }

    pub fn end(&self) -> f64 {
        self.x[self.x.len() - 1]
    }

    pub fn last_value(&self) -> f64 {
        self.y[self.y.len() - 1]
    }

    /// Value at `t`, constant beyond the ends.
    pub fn eval(&self, t: f64) -> f64 {
        let n = self.x.len();
        if t <= self.x[0] {
            return self.y[0];
        }
        if t >= self.x[n - 1] {
            return self.y[n - 1];
        }
        let k = self.x.partition_point(|&xi| xi <= t);
        let (x0, x1) = (self.x[k - 1], self.x[k]);
        let w = (t - x0) / (x1 - x0);
        self.y[k - 1] + w * (self.y[k] - self.y[k - 1])
    }

    /// Slope of piece `k`, zero for degenerate pieces.
    pub fn slope(&self, k: usize) -> f64 {
        let dx = self.x[k + 1] - self.x[k];
        if dx > 0.0 {
            (self.y[k + 1] - self.y[k]) / dx
        } else {
            0.0
        }
    }

    /// Slope of the last non-degenerate piece.
    pub fn end_slope(&self) -> f64 {
        (0..self.x.len().saturating_sub(1))
            .rev()
            .find(|&k| self.x[k + 1] > self.x[k])
            .map_or(0.0, |k| self.slope(k))
    }

    pub fn max_abs_slope(&self) -> f64 {
        (0..self.x.len().saturating_sub(1))
            .map(|k| self.slope(k).abs())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.y.iter().map(|v| v.abs()).fold(0.0, f64::max)
    }

    /// Exact integral over the sampled range.
    pub fn integral(&self) -> f64 {
        self.x
            .windows(2)
            .zip(self.y.windows(2))
            .map(|(x, y)| 0.5 * (x[1] - x[0]) * (y[0] + y[1]))
            .sum()
    }

    /// Appends samples with abscissae not below the current end.
    pub fn extend(&mut self, x: &[f64], y: &[f64]) -> Result<()> {
        if x.len() != y.len() || x.first().is_some_and(|&x0| x0 < self.end()) {
            return Err(invalid(
                "appended samples must match and start at the current end",
            ));
        }
        self.x.extend_from_slice(x);
        self.y.extend_from_slice(y);
        Ok(())
    }
}
