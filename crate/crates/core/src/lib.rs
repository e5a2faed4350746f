//! Space-time Chebyshev collocation for the one-dimensional nonlinear
//! peridynamic equation
//!
//! ```text
//! ∂²u/∂t² = ∫ C(x − x') (u(x', t) − u(x, t))³ dx',   u(x, t₀) = u₀,  ∂ₜu(x, t₀) = v₀.
//! ```
//!
//! The displacement is expanded in Chebyshev polynomials in both space and
//! time and collocated on the tensor Gauss–Lobatto grid, which turns the
//! evolution problem into one nonlinear algebraic system solved with
//! Levenberg–Marquardt. Convolutions with the micromodulus go through cosine
//! transforms and precomputed kernel moments.
//!
//! Modules, bottom-up:
//!
//! - [`cheb`]: grids, transforms and coefficient-space differentiation;
//! - [`operator`]: micromodulus, convolutions and the operator `L`;
//! - [`solver`]: the collocation system and the least-squares solver;
//! - [`newmark`]: a Chebyshev-in-space / Newmark-β-in-time reference;
//! - [`experiments`]: convergence, comparison and timing studies.

// Negated comparisons are how NaN gets rejected along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cheb;
pub mod error;
pub mod experiments;
pub mod newmark;
pub mod operator;
pub mod quadrature;
pub mod solver;

pub use error::{Error, Result};
