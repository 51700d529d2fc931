//! Uniform finite-volume grid on the truncated voltage domain `[v_min, V_F]`.

use crate::error::{invalid, NnlifError, Result};
use crate::model::ModelParams;

/// Minimum distance of `V_R` from a cell edge, in units of `dv`.
const EDGE_CLEARANCE: f64 = 1e-3;

/// Cell-centred grid; `rho[i]` is the average over `[v_min + i dv, v_min + (i+1) dv]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub v_min: f64,
    pub v_max: f64,
    pub n_cells: usize,
    pub dv: f64,
    /// Cell containing `V_R` in its interior.
    pub r_index: usize,
    pub v_r: f64,
}

impl Grid {
    /// Builds the grid, nudging `v_min` left if `V_R` would sit on a cell edge.
    pub fn new(v_min: f64, v_max: f64, n_cells: usize, v_r: f64) -> Result<Self> {
        if n_cells < 4 {
            return Err(invalid(format!("need at least 4 cells, got {n_cells}")));
        }
        if !(v_min < v_r && v_r < v_max) {
            return Err(invalid(format!(
                "need v_min < V_R < V_F, got {v_min}, {v_r}, {v_max}"
            )));
        }
        let mut lo = v_min;
        for _ in 0..8 {
            let dv = (v_max - lo) / n_cells as f64;
            let pos = (v_r - lo) / dv;
            let frac = pos - pos.floor();
            if frac > EDGE_CLEARANCE && frac < 1.0 - EDGE_CLEARANCE {
                return Ok(Self {
                    v_min: lo,
                    v_max,
                    n_cells,
                    dv,
                    r_index: pos.floor() as usize,
                    v_r,
                });
            }
            lo -= 0.5 * dv;
        }
        Err(invalid("could not place V_R strictly inside a cell"))
    }

    /// Default truncation `v_min = V_F - (12 sqrt(a) + |b| n_guess)`.
    pub fn for_params(params: &ModelParams, n_cells: usize, n_guess: f64) -> Result<Self> {
        let width = default_width(params, n_guess);
        Self::new(params.v_f - width, params.v_f, n_cells, params.v_r)
    }

    #[inline]
    pub fn center(&self, i: usize) -> f64 {
        self.v_min + (i as f64 + 0.5) * self.dv
    }

    #[inline]
    pub fn edge(&self, i: usize) -> f64 {
        self.v_min + i as f64 * self.dv
    }

    pub fn centers(&self) -> Vec<f64> {
        (0..self.n_cells).map(|i| self.center(i)).collect()
    }

    /// Index of the cell containing `v`, if inside the domain.
    pub fn cell_of(&self, v: f64) -> Option<usize> {
        if v < self.v_min || v > self.v_max {
            return None;
        }
        Some((((v - self.v_min) / self.dv).floor() as usize).min(self.n_cells - 1))
    }

    pub fn check_len(&self, len: usize) -> Result<()> {
        if len != self.n_cells {
            return Err(NnlifError::GridMismatch {
                expected: self.n_cells,
                got: len,
            });
        }
        Ok(())
    }

    pub fn mass(&self, rho: &[f64]) -> f64 {
        self.dv * rho.iter().sum::<f64>()
    }

    pub fn first_moment(&self, rho: &[f64]) -> f64 {
        self.dv
            * rho
                .iter()
                .enumerate()
                .map(|(i, r)| self.center(i) * r)
                .sum::<f64>()
    }

    pub fn l1_distance(&self, a: &[f64], b: &[f64]) -> f64 {
        self.dv * a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>()
    }

    /// Cell averages of `f`, with 5-point Gauss-Legendre per cell and a split at `V_R`.
    pub fn cell_averages(&self, f: impl Fn(f64) -> f64) -> Vec<f64> {
        (0..self.n_cells)
            .map(|i| {
                let (lo, hi) = (self.edge(i), self.edge(i + 1));
                let integral = if i == self.r_index {
                    crate::quadrature::gauss_legendre5(&f, lo, self.v_r)
                        + crate::quadrature::gauss_legendre5(&f, self.v_r, hi)
                } else {
                    crate::quadrature::gauss_legendre5(&f, lo, hi)
                };
                integral / self.dv
            })
            .collect()
    }

    /// Linear weights of a unit point mass at `V_R` on the two bracketing cell centres.
    pub fn reset_weights(&self) -> [(usize, f64); 2] {
        let theta = (self.v_r - self.edge(self.r_index)) / self.dv;
        let r = self.r_index;
        if theta >= 0.5 || r == 0 {
            let w = (theta - 0.5).max(0.0);
            [(r, 1.0 - w), ((r + 1).min(self.n_cells - 1), w)]
        } else {
            [(r - 1, 0.5 - theta), (r, 0.5 + theta)]
        }
    }

    /// Same domain with each cell split in two.
    pub fn refined(&self) -> Result<Self> {
        Self::new(self.v_min, self.v_max, 2 * self.n_cells, self.v_r)
    }
}

/// Truncation width `12 sqrt(a) + |b| n_guess`.
pub fn default_width(params: &ModelParams, n_guess: f64) -> f64 {
    12.0 * params.a.sqrt() + params.b.abs() * n_guess.max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn v_r_is_inside_a_cell() {
        let g = Grid::new(-12.0, 0.0, 2000, -1.0).unwrap();
        assert!(g.edge(g.r_index) < -1.0 && -1.0 < g.edge(g.r_index + 1));
        assert_eq!(g.v_min, -12.0);
    }

    #[test]
    fn edge_placement_is_nudged() {
        // dv = 0.5 puts V_R = -1 exactly on an edge.
        let g = Grid::new(-4.0, 0.0, 8, -1.0).unwrap();
        assert!(g.v_min < -4.0);
        let pos = (g.v_r - g.v_min) / g.dv;
        assert!((pos - pos.round()).abs() > EDGE_CLEARANCE);
    }

    #[test]
    fn rejects_small_or_inverted_grids() {
        assert!(Grid::new(-4.0, 0.0, 3, -1.0).is_err());
        assert!(Grid::new(-0.5, 0.0, 100, -1.0).is_err());
    }

    #[test]
    fn default_truncation_width() {
        let p = ModelParams::standard(-2.0, 0.0);
        let g = Grid::for_params(&p, 1000, 1.5).unwrap();
        assert!((g.v_min - (-15.0)).abs() < 0.1);
        assert_eq!(g.v_max, 0.0);
    }

    #[test]
    fn reset_weights_match_the_first_moment() {
        for v_r in [-1.03, -1.0, -0.97, -1.011] {
            let g = Grid::new(-2.0, 0.0, 10, v_r).unwrap();
            let w = g.reset_weights();
            assert!((w[0].1 + w[1].1 - 1.0).abs() < 1e-15);
            let centroid = w[0].1 * g.center(w[0].0) + w[1].1 * g.center(w[1].0);
            assert!((centroid - v_r).abs() < 1e-14);
            assert!(w.iter().all(|&(_, c)| c >= 0.0));
        }
    }

    #[test]
    fn cell_averages_are_exact_for_cubics() {
        let g = Grid::new(-2.0, 0.0, 10, -1.03).unwrap();
        let avg = g.cell_averages(|v| v * v * v);
        for (i, a) in avg.iter().enumerate() {
            let (lo, hi) = (g.edge(i), g.edge(i + 1));
            let exact = (hi.powi(4) - lo.powi(4)) / 4.0 / g.dv;
            assert!((a - exact).abs() < 1e-13);
        }
    }
}
