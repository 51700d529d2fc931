//! Firing-rate history: user-supplied `N0` on `[-D, 0]` plus computed samples for `t >= 0`.

use std::collections::VecDeque;

use crate::error::{invalid, NnlifError, Result};
use crate::quadrature::interp_linear;

const TIME_SLACK: f64 = 1e-12;

/// Samples of the initial history `N0` on `[-D, 0]`, linearly interpolated.
#[derive(Debug, Clone, PartialEq)]
pub struct InitialHistory {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
}

impl InitialHistory {
    pub fn new(times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if times.is_empty() || times.len() != values.len() {
            return Err(invalid(
                "initial history needs matching, non-empty time and value samples",
            ));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(invalid("initial history times must be strictly increasing"));
        }
        if values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(invalid(
                "initial history values must be finite and non-negative",
            ));
        }
        if (times[times.len() - 1]).abs() > TIME_SLACK {
            return Err(invalid("initial history must end at t = 0"));
        }
        Ok(Self { times, values })
    }

    pub fn constant(delay: f64, value: f64) -> Result<Self> {
        if delay > 0.0 {
            Self::new(vec![-delay, 0.0], vec![value, value])
        } else {
            Self::new(vec![0.0], vec![value])
        }
    }

    /// Samples `f` at `n + 1` equispaced points of `[-delay, 0]`.
    pub fn from_fn(delay: f64, n: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        if delay == 0.0 {
            return Self::new(vec![0.0], vec![f(0.0)]);
        }
        let n = n.max(1);
        let times: Vec<f64> = (0..=n)
            .map(|k| -delay + delay * k as f64 / n as f64)
            .collect();
        let values = times.iter().map(|&t| f(t)).collect();
        Self::new(times, values)
    }

    /// Checks coverage of `[-delay, 0]`.
    pub fn check_covers(&self, delay: f64) -> Result<()> {
        if self.times[0] > -delay + TIME_SLACK {
            return Err(invalid(format!(
                "initial history starts at {} but the delay needs {}",
                self.times[0], -delay
            )));
        }
        Ok(())
    }

    pub fn at(&self, t: f64) -> f64 {
        interp_linear(&self.times, &self.values, t)
    }

    pub fn at_zero(&self) -> f64 {
        self.values[self.values.len() - 1]
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }
}

/// Ring buffer of `(t, N)` samples covering at least `[t - D, t]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RateHistory {
    pub delay: f64,
    pub initial: InitialHistory,
    times: VecDeque<f64>,
    values: VecDeque<f64>,
    trimmed: bool,
}

impl RateHistory {
    pub fn new(delay: f64, initial: InitialHistory) -> Result<Self> {
        initial.check_covers(delay)?;
        Ok(Self {
            delay,
            initial,
            times: VecDeque::new(),
            values: VecDeque::new(),
            trimmed: false,
        })
    }

    pub fn push(&mut self, t: f64, n: f64) {
        if let Some(&last) = self.times.back() {
            debug_assert!(t > last);
        }
        self.times.push_back(t);
        self.values.push_back(n);
        let horizon = t - self.delay;
        while self.times.len() > 2 && self.times[1] <= horizon {
            self.times.pop_front();
            self.values.pop_front();
            self.trimmed = true;
        }
    }

    /// `N` on `[now - D, now]` shifted to `[-D, 0]`, to restart a run at `now`.
    pub fn restart(&self, now: f64) -> Result<InitialHistory> {
        let start = now - self.delay;
        let mut times = vec![start];
        let mut values = vec![self.at(start)?];
        let inside = |t: f64| t > start + TIME_SLACK && t < now - TIME_SLACK;
        for &t in self
            .initial
            .times
            .iter()
            .filter(|&&t| t < -TIME_SLACK && inside(t))
        {
            times.push(t);
            values.push(self.initial.at(t));
        }
        for (&t, &n) in self
            .times
            .iter()
            .zip(&self.values)
            .filter(|(t, _)| inside(**t))
        {
            times.push(t);
            values.push(n);
        }
        if self.delay > 0.0 {
            times.push(now);
            values.push(self.at(now)?);
        }
        let mut pairs: Vec<(f64, f64)> = times.into_iter().zip(values).collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let (times, values) = pairs.into_iter().map(|(t, n)| (t - now, n)).unzip();
        InitialHistory::new(times, values)
    }

    pub fn latest(&self) -> Option<(f64, f64)> {
        Some((*self.times.back()?, *self.values.back()?))
    }

    /// `N(s)`: the initial history for `s <= 0`, otherwise linear interpolation of samples.
    ///
    /// Reads past the newest sample return the newest value.
    pub fn at(&self, s: f64) -> Result<f64> {
        if s <= 0.0 || self.times.is_empty() {
            if s < self.initial.times[0] - TIME_SLACK {
                return Err(NnlifError::Solver(format!("history gap at t = {s}")));
            }
            return Ok(self.initial.at(s.min(0.0)));
        }
        let n = self.times.len();
        if s >= self.times[n - 1] {
            return Ok(self.values[n - 1]);
        }
        if s < self.times[0] {
            if !self.trimmed {
                // between t = 0 of the initial history and the first computed sample
                let (t1, n1) = (self.times[0], self.values[0]);
                let n0 = self.initial.at_zero();
                return Ok(n0 + (n1 - n0) * s / t1);
            }
            return Err(NnlifError::Solver(format!("history gap at t = {s}")));
        }
        let j = self.times.partition_point(|&x| x <= s);
        let (t0, t1) = (self.times[j - 1], self.times[j]);
        let w = (s - t0) / (t1 - t0);
        Ok(self.values[j - 1] + w * (self.values[j] - self.values[j - 1]))
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn restart_shifts_the_last_delay_window() {
        let init = InitialHistory::from_fn(0.5, 10, |t| 1.0 - t).unwrap();
        let mut h = RateHistory::new(0.5, init).unwrap();
        for k in 0..=12 {
            let t = k as f64 * 0.025;
            h.push(t, 1.0 + t * t);
        }
        // now = 0.3 still reaches into the initial history.
        let r = h.restart(0.3).unwrap();
        assert_eq!(r.times[0], -0.5);
        assert!((r.times[r.times.len() - 1]).abs() < 1e-15);
        for s in [-0.5, -0.35, -0.3, -0.1, 0.0] {
            assert!((r.at(s) - h.at(0.3 + s).unwrap()).abs() < 1e-12, "s = {s}");
        }
        for k in 13..=40 {
            let t = k as f64 * 0.025;
            h.push(t, 1.0 + t * t);
        }
        let r = h.restart(1.0).unwrap();
        assert!((r.at(-0.25) - (1.0 + 0.75f64.powi(2))).abs() < 1e-3);
        let h0 = RateHistory::new(0.0, InitialHistory::constant(0.0, 3.0).unwrap()).unwrap();
        assert_eq!(h0.restart(0.0).unwrap().values, vec![3.0]);
    }

    #[test]
    fn constant_history_is_constant() {
        let h = RateHistory::new(0.5, InitialHistory::constant(0.5, 2.0).unwrap()).unwrap();
        for s in [-0.5, -0.2, 0.0] {
            assert_eq!(h.at(s).unwrap(), 2.0);
        }
    }

    #[test]
    fn interpolates_and_trims() {
        let mut h = RateHistory::new(0.1, InitialHistory::constant(0.1, 1.0).unwrap()).unwrap();
        for k in 0..=100 {
            let t = k as f64 * 0.01;
            h.push(t, t);
        }
        assert!((h.at(0.955).unwrap() - 0.955).abs() < 1e-12);
        assert!(h.len() <= 13);
        assert!(h.at(0.5).is_err());
    }

    #[test]
    fn gap_before_initial_history() {
        let h = RateHistory::new(0.2, InitialHistory::constant(0.2, 1.0).unwrap()).unwrap();
        assert!(h.at(-0.3).is_err());
        assert!(RateHistory::new(0.5, InitialHistory::constant(0.2, 1.0).unwrap()).is_err());
    }

    #[test]
    fn rejects_bad_samples() {
        assert!(InitialHistory::new(vec![-1.0, 0.0], vec![1.0, -1.0]).is_err());
        assert!(InitialHistory::new(vec![0.0, -1.0], vec![1.0, 1.0]).is_err());
        assert!(InitialHistory::new(vec![-1.0, -0.5], vec![1.0, 1.0]).is_err());
    }
}
