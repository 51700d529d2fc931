//! Numerical laboratory for the delayed nonlinear noisy leaky integrate-and-fire
//! (NNLIF) mean-field equation
//!
//! `d_t rho + d_v[(-v + b0 + b N(t-D)) rho] - a d_vv rho = N(t) delta(v - V_R)`, `v <= V_F`,
//!
//! with firing rate `N = -a d_v rho(V_F)`.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod diagnostics;
pub mod error;
pub mod fp;
pub mod grid;
pub mod model;
pub mod output;
pub mod particle;
pub mod quadrature;
pub mod steady;
pub mod stefan;
pub mod supersolution;

pub use error::{NnlifError, Result};
pub use grid::Grid;
pub use model::{normalize_problem, scaled_delay, ModelParams, Normalization};
pub use steady::{steady_state_candidates, SteadyState};
pub use supersolution::{build_super_solution, verify_super_solution, SuperSolution};
