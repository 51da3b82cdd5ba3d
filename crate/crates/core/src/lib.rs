//! Linesearch Douglas-Rachford splitting and ADMM with quasi-Newton directions.
//!
//! The crate is organised around two drivers:
//!
//! * [`drs::drs_ls_solve`] minimises `φ₁ + φ₂` given only proximal oracles of
//!   the two terms. Each iteration takes a nominal DRS step, then tries to
//!   replace it with `s + d` for a direction `d` produced by a
//!   [`directions::DirectionEngine`], backtracking along the segment between
//!   the two until the Douglas-Rachford envelope decreases sufficiently.
//! * [`admm::admm_ls_solve`] does the same for `f(x) + g(z)` subject to
//!   `Ax + Bz = b`, using the augmented Lagrangian as merit function.
//!
//! Both drivers work in the smooth regime (`φ₁` has Lipschitz gradient, the
//! merit decreases) and in the strongly convex regime (`φ₁` strongly convex,
//! the merit increases). When `φ₁` (resp. `f`) is a generalized quadratic the
//! linesearch reuses at most two evaluations of its proximal map per
//! iteration, see [`quadcache`].
//!
//! Problem builders for sparse least squares, sparse PCA (single and
//! consensus form) and linear MPC live in [`problems`]; independent
//! brute-force checks used by the test suites live in [`testkit`].

// `!(a < b)` is used on purpose so that NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod admm;
pub mod certificate;
pub mod constants;
pub mod diagnostics;
pub mod directions;
pub mod drs;
pub mod duality;
pub mod envelope;
pub mod error;
pub mod oracles;
pub mod problem;
pub mod problems;
pub mod quadcache;
pub mod testkit;
pub mod trace;

mod cache;

pub use error::{Error, OracleError, Result};
pub use problem::{ProxOracle, Regime, SplitProblem};

/// Dense column vector used throughout the crate.
pub type Vector = nalgebra::DVector<f64>;
/// Dense matrix used throughout the crate.
pub type Matrix = nalgebra::DMatrix<f64>;
