//! Linear algebra and flux kernels of the IMEX step.

use std::cell::RefCell;

/// Solves a tridiagonal system in place with the Thomas algorithm.
///
/// `lower[i]` couples row `i` to `i - 1`, `upper[i]` couples row `i` to `i + 1`.
/// The system must be diagonally dominant; no pivoting is done.
#[cfg(test)]
pub(crate) fn solve_tridiagonal(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &mut [f64]) {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut denom = diag[0];
    c[0] = upper[0] / denom;
    rhs[0] /= denom;
    for i in 1..n {
        denom = diag[i] - lower[i] * c[i - 1];
        if i + 1 < n {
            c[i] = upper[i] / denom;
        }
        rhs[i] = (rhs[i] - lower[i] * rhs[i - 1]) / denom;
    }
    for i in (0..n - 1).rev() {
        rhs[i] -= c[i] * rhs[i + 1];
    }
}

/// Stencil of the threshold outflow `-a d_v rho(V_F)` in the implicit step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Outflow {
    /// `a (7 rho_{n-1} - rho_{n-2}) / 2dv`, exact for quadratics; can be negative.
    SecondOrder,
    /// `2 a rho_{n-1} / dv`; the system is then an M-matrix and keeps positivity.
    TwoPoint,
}

impl Outflow {
    /// Weights of `(rho_{n-1}, rho_{n-2})` in `dv / a` times the outflow.
    pub(crate) fn weights(self) -> (f64, f64) {
        match self {
            Outflow::SecondOrder => (3.5, -0.5),
            Outflow::TwoPoint => (2.0, 0.0),
        }
    }
}

/// LU factors of the tridiagonal part plus the Sherman-Morrison vector.
#[derive(Debug, Clone, PartialEq)]
struct Factorization {
    n: usize,
    outflow: Outflow,
    lambda_bits: u64,
    deposit: Vec<(usize, u64)>,
    lower: Vec<f64>,
    upper_scaled: Vec<f64>,
    inv_denom: Vec<f64>,
    z: Vec<f64>,
    z_dot: f64,
}

impl Factorization {
    fn new(n: usize, lambda: f64, deposit: &[(usize, f64)], outflow: Outflow) -> Self {
        let (w_last, w_prev) = outflow.weights();
        let mut lower = vec![-lambda; n];
        let mut diag = vec![1.0 + 2.0 * lambda; n];
        let mut upper = vec![-lambda; n];
        lower[0] = 0.0;
        upper[n - 1] = 0.0;
        diag[0] = 1.0 + 3.0 * lambda;
        diag[n - 1] = 1.0 + (1.0 + w_last) * lambda;
        lower[n - 1] = -(1.0 - w_prev) * lambda;
        let mut upper_scaled = vec![0.0; n];
        let mut inv_denom = vec![0.0; n];
        for i in 0..n {
            let denom = if i == 0 {
                diag[0]
            } else {
                diag[i] - lower[i] * upper_scaled[i - 1]
            };
            inv_denom[i] = 1.0 / denom;
            upper_scaled[i] = upper[i] * inv_denom[i];
        }
        let mut f = Self {
            n,
            outflow,
            lambda_bits: lambda.to_bits(),
            deposit: deposit.iter().map(|&(j, c)| (j, c.to_bits())).collect(),
            lower,
            upper_scaled,
            inv_denom,
            z: vec![0.0; n],
            z_dot: 0.0,
        };
        let mut z = vec![0.0; n];
        for &(j, c) in deposit {
            z[j] += c;
        }
        f.solve_tridiagonal(&mut z);
        f.z_dot = f.w_dot(&z);
        f.z = z;
        f
    }

    fn matches(&self, n: usize, lambda: f64, deposit: &[(usize, f64)], outflow: Outflow) -> bool {
        self.n == n
            && self.outflow == outflow
            && self.lambda_bits == lambda.to_bits()
            && self.deposit.len() == deposit.len()
            && self
                .deposit
                .iter()
                .zip(deposit)
                .all(|(a, b)| a.0 == b.0 && a.1 == b.1.to_bits())
    }

    fn w_dot(&self, x: &[f64]) -> f64 {
        let lambda = f64::from_bits(self.lambda_bits);
        let (w_last, w_prev) = self.outflow.weights();
        -lambda * (w_last * x[self.n - 1] + w_prev * x[self.n - 2])
    }

    fn solve_tridiagonal(&self, rhs: &mut [f64]) {
        let n = self.n;
        rhs[0] *= self.inv_denom[0];
        for i in 1..n {
            rhs[i] = (rhs[i] - self.lower[i] * rhs[i - 1]) * self.inv_denom[i];
        }
        for i in (0..n - 1).rev() {
            rhs[i] -= self.upper_scaled[i] * rhs[i + 1];
        }
    }
}

thread_local! {
    static FACTORIZATION: RefCell<Option<Factorization>> = const { RefCell::new(None) };
}

/// Implicit diffusion with threshold outflow and reinjection with weights `deposit`.
///
/// The matrix is `T + u w^T` with `u = sum_k c_k e_{j_k}` and `w` the outflow
/// stencil, e.g. `lambda (-3.5 e_{n-1} + 0.5 e_{n-2})`; the rank-one term is
/// handled with Sherman-Morrison. Factors are cached per thread for repeated `lambda`.
pub(crate) fn implicit_diffusion(
    rhs: &mut [f64],
    lambda: f64,
    deposit: &[(usize, f64)],
    outflow: Outflow,
) {
    let n = rhs.len();
    FACTORIZATION.with(|cell| {
        let mut slot = cell.borrow_mut();
        if !slot
            .as_ref()
            .is_some_and(|f| f.matches(n, lambda, deposit, outflow))
        {
            *slot = Some(Factorization::new(n, lambda, deposit, outflow));
        }
        let f = slot.as_ref().expect("factorization was just built");
        f.solve_tridiagonal(rhs);
        let factor = f.w_dot(rhs) / (1.0 + f.z_dot);
        for (y, zi) in rhs.iter_mut().zip(&f.z) {
            *y -= factor * zi;
        }
    });
}

#[inline]
fn van_leer(local: f64, upwind: f64) -> f64 {
    let prod = local * upwind;
    if prod > 0.0 {
        2.0 * prod / (local + upwind)
    } else {
        0.0
    }
}

/// Explicit drift update `rho - dt/dv (G_{i+1/2} - G_{i-1/2})`.
///
/// Face values are upwind cells plus half a van Leer limited slope (MUSCL), so
/// the steady flux has no `O(dt)` term. Positivity needs `dt |c| <= dv / 2`.
/// `velocity(v)` is evaluated at interior faces; boundary faces carry no drift flux.
pub(crate) fn drift_update(
    rho: &[f64],
    v_min: f64,
    dv: f64,
    dt: f64,
    velocity: impl Fn(f64) -> f64,
) -> Vec<f64> {
    let n = rho.len();
    let at = |i: isize| -> f64 {
        if i < 0 {
            -rho[0]
        } else if i as usize >= n {
            -rho[n - 1]
        } else {
            rho[i as usize]
        }
    };
    let ratio = dt / dv;
    let mut out = rho.to_vec();
    for i in 0..n - 1 {
        let face = v_min + (i + 1) as f64 * dv;
        let c = velocity(face);
        let ii = i as isize;
        let local = rho[i + 1] - rho[i];
        let (donor, upwind) = if c >= 0.0 {
            (rho[i], rho[i] - at(ii - 1))
        } else {
            (rho[i + 1], at(ii + 2) - rho[i + 1])
        };
        let flux = c * donor + 0.5 * c.abs() * van_leer(local, upwind);
        let transfer = ratio * flux;
        out[i] -= transfer;
        out[i + 1] += transfer;
    }
    out
}
