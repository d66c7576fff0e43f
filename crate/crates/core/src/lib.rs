//! Numerical laboratory for linear transport equations whose velocity
//! divergence is only sub-exponentially integrable.
//!
//! The crate is `no_std` (it needs `alloc`) and contains every algorithm:
//!
//! - [`young`]: Young functions, Luxemburg norms on sampled grids and the
//!   Orlicz Hölder / interpolation estimates.
//! - [`cantor_map`]: the middle-thirds Cantor set, the bump function `g` that
//!   vanishes exactly on it, the primitive `f`, the Cantor-shifted maps `f_m`.
//! - [`field`]: the counterexample velocity field, its log-domain divergence
//!   and the integrability checks of its divergence.
//! - [`flows`]: the explicit flows built from `f_m`, their solutions and the
//!   weak-formulation residuals that certify non-uniqueness.
//! - [`solver`]: a mollified characteristic solver and the a-priori,
//!   commutator, product and duality checks.
//! - [`problems`]: seeded problem families for the solver suites.
//! - [`stability`]: the triple-log Gronwall comparator and the quantitative
//!   stability bounds.
//!
//! File formats, batch orchestration and the command line live in the
//! `transport-lab` crate.
#![no_std]
// `!(x > 0.0)` rejects NaN along with the out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod cantor_map;
pub mod error;
pub mod field;
pub mod flows;
pub mod grid;
pub mod math;
pub mod monotone;
pub mod problems;
pub mod quadrature;
pub mod solver;
pub mod stability;
pub mod young;

pub use error::{Error, Result};
