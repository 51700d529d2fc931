//! Model parameters, the scaled delay and the affine normalization map.

use crate::error::{invalid, Result};

/// Physical parameters of the delayed NNLIF equation.
///
/// Drift is `-v + b0 + b * N(t - D)`, diffusion `a`, reset `v_r`, threshold `v_f`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    pub a: f64,
    pub b: f64,
    pub b0: f64,
    pub d: f64,
    pub v_r: f64,
    pub v_f: f64,
}

impl ModelParams {
    pub fn new(a: f64, b: f64, b0: f64, d: f64, v_r: f64, v_f: f64) -> Result<Self> {
        let p = Self {
            a,
            b,
            b0,
            d,
            v_r,
            v_f,
        };
        p.validate()?;
        Ok(p)
    }

    /// The reference parameter set `a = 1, V_R = -1, V_F = 0, b0 = 0`.
    pub fn standard(b: f64, d: f64) -> Self {
        Self {
            a: 1.0,
            b,
            b0: 0.0,
            d,
            v_r: -1.0,
            v_f: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [self.a, self.b, self.b0, self.d, self.v_r, self.v_f];
        if fields.iter().any(|x| !x.is_finite()) {
            return Err(invalid("model parameters must be finite"));
        }
        if self.a <= 0.0 {
            return Err(invalid(format!("a must be positive, got {}", self.a)));
        }
        if self.v_r >= self.v_f {
            return Err(invalid(format!(
                "need V_R < V_F, got {} >= {}",
                self.v_r, self.v_f
            )));
        }
        if self.d < 0.0 {
            return Err(invalid(format!(
                "delay must be non-negative, got {}",
                self.d
            )));
        }
        Ok(())
    }

    /// Scaled delay `1 - exp(-2D)`.
    pub fn d_bar(&self) -> f64 {
        -(-2.0 * self.d).exp_m1()
    }

    /// Drift velocity at voltage `v` for delayed firing rate `n_delayed`.
    #[inline]
    pub fn drift(&self, v: f64, n_delayed: f64) -> f64 {
        -v + self.b0 + self.b * n_delayed
    }

    pub fn is_normalized(&self) -> bool {
        self.a == 1.0 && self.v_f == 0.0
    }
}

/// Scaled delay `1 - exp(-2D)`. Below 1 in exact arithmetic; in `f64` it
/// rounds to 1 once `D` exceeds about 18.4.
pub fn scaled_delay(d: f64) -> Result<f64> {
    if !(d >= 0.0) {
        return Err(invalid(format!("delay must be non-negative, got {d}")));
    }
    Ok(-(-2.0 * d).exp_m1())
}

/// Affine voltage change `v' = (v - V_F) / sqrt(a)` with density Jacobian `sqrt(a)`.
///
/// Time and firing rate are unchanged. The drift constants transform as
/// `b' = b / sqrt(a)` and `b0' = (b0 - V_F) / sqrt(a)`, so `b0' = 0` exactly when `b0 = V_F`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Normalization {
    pub original: ModelParams,
    pub normalized: ModelParams,
    shift: f64,
    scale: f64,
}

impl Normalization {
    /// Image of an original voltage.
    pub fn forward_v(&self, v: f64) -> f64 {
        (v - self.shift) / self.scale
    }

    /// Preimage of a normalized voltage.
    pub fn inverse_v(&self, v: f64) -> f64 {
        self.scale * v + self.shift
    }

    /// Normalized density value at `self.forward_v(v)` given the original density value at `v`.
    pub fn forward_density(&self, rho: f64) -> f64 {
        self.scale * rho
    }

    pub fn inverse_density(&self, rho: f64) -> f64 {
        rho / self.scale
    }

    /// Transform a density sampled at `vs` (original voltages) into normalized samples.
    pub fn forward_profile(&self, vs: &[f64], rho: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let v = vs.iter().map(|&x| self.forward_v(x)).collect();
        let r = rho.iter().map(|&x| self.forward_density(x)).collect();
        (v, r)
    }

    pub fn inverse_profile(&self, vs: &[f64], rho: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let v = vs.iter().map(|&x| self.inverse_v(x)).collect();
        let r = rho.iter().map(|&x| self.inverse_density(x)).collect();
        (v, r)
    }
}

/// Rescale to `a = 1, V_F = 0`.
pub fn normalize_problem(params: &ModelParams) -> Result<Normalization> {
    params.validate()?;
    let scale = params.a.sqrt();
    let shift = params.v_f;
    let normalized = ModelParams {
        a: 1.0,
        b: params.b / scale,
        b0: (params.b0 - shift) / scale,
        d: params.d,
        v_r: (params.v_r - shift) / scale,
        v_f: 0.0,
    };
    Ok(Normalization {
        original: *params,
        normalized,
        shift,
        scale,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scaled_delay_values() {
        assert_eq!(scaled_delay(0.0).unwrap(), 0.0);
        // 1 - e^-1 to 20 digits: 0.63212055882855767840
        assert!((scaled_delay(0.5).unwrap() - 0.632_120_558_828_557_7).abs() < 1e-15);
        assert!(scaled_delay(1e3).unwrap() <= 1.0);
        assert!(scaled_delay(15.0).unwrap() < 1.0);
        assert!(scaled_delay(-0.1).is_err());
        assert!(scaled_delay(f64::NAN).is_err());
    }

    #[test]
    fn validation_rejects_bad_parameters() {
        assert!(ModelParams::new(0.0, 0.0, 0.0, 0.0, -1.0, 0.0).is_err());
        assert!(ModelParams::new(1.0, 0.0, 0.0, 0.0, 0.0, 0.0).is_err());
        assert!(ModelParams::new(1.0, 0.0, 0.0, -1.0, -1.0, 0.0).is_err());
        assert!(ModelParams::new(1.0, 0.0, 0.0, 0.0, -1.0, 0.0).is_ok());
    }

    #[test]
    fn normalized_params_map_to_identity() {
        let p = ModelParams::standard(0.7, 0.3);
        let n = normalize_problem(&p).unwrap();
        assert_eq!(n.normalized, p);
        for v in [-3.0, -1.0, 0.0] {
            assert_eq!(n.forward_v(v), v);
        }
    }

    #[test]
    fn affine_map_example() {
        let p = ModelParams::new(4.0, 1.0, 0.0, 0.0, 1.0, 2.0).unwrap();
        let n = normalize_problem(&p).unwrap();
        assert_eq!(n.forward_v(2.0), 0.0);
        assert_eq!(n.forward_v(1.0), -0.5);
        assert_eq!(n.normalized.v_r, -0.5);
        assert_eq!(n.normalized.a, 1.0);
        assert_eq!(n.normalized.b, 0.5);
    }

    #[test]
    fn density_round_trip() {
        let p = ModelParams::new(4.0, 1.0, 0.5, 0.1, 1.0, 2.0).unwrap();
        let n = normalize_problem(&p).unwrap();
        let vs: Vec<f64> = (0..200).map(|i| -6.0 + 0.04 * i as f64).collect();
        let rho: Vec<f64> = vs.iter().map(|v| (-(v - 0.5) * (v - 0.5)).exp()).collect();
        let (v1, r1) = n.forward_profile(&vs, &rho);
        let (v2, r2) = n.inverse_profile(&v1, &r1);
        for i in 0..vs.len() {
            assert!((v2[i] - vs[i]).abs() <= 4.0 * f64::EPSILON * vs[i].abs().max(1.0));
            assert_eq!(r2[i], rho[i]);
        }
    }
}
