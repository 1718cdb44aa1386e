//! Vanishing-discount limits of optimal control problems.
//!
//! Two regimes share this crate:
//!
//! * finite-state Shapley/Bellman operators ([`operators`], [`discrete`]):
//!   discounted fixed points `T((1−α)v_α) = v_α`, sub-invariant half-lines
//!   `s ↦ u + sη`, the lexicographic gain–bias system, and a brute-force
//!   policy-enumeration oracle for the mean payoff;
//! * grid-discretized stationary Hamilton–Jacobi–Bellman equations
//!   ([`control`], [`hjb`]): `λV + H(x, −∇V) = 0` on an invariant domain, the
//!   rescaled family `λV_λ`, residual checks for the limit systems, rate of
//!   convergence, and the reachable-set limit value.
//!
//! Everything numeric is generic over [`Scalar`] (`f32` or `f64`); the
//! aliases at the crate root fix `f64`.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod control;
pub mod discrete;
pub mod error;
pub mod grid;
pub mod hjb;
pub mod lattice;
pub(crate) mod linalg;
pub mod operators;
pub mod scalar;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub type ValueVector = lattice::ValueVector<f64>;
pub type MdpModel = operators::MdpModel<f64>;
pub type OperatorHandle = operators::OperatorHandle<f64>;
pub type HalfLine = discrete::HalfLine<f64>;
pub type GainBias = discrete::GainBias<f64>;
pub type DiscountedSolution = discrete::DiscountedSolution<f64>;
pub type ControlSystem = control::ControlSystem<f64>;
pub type Grid = grid::Grid<f64>;
pub type GridFunction = grid::GridFunction<f64>;
pub type HjbSolveResult = hjb::HjbSolveResult<f64>;
