//! Numerical laboratory for interior transition layers of the heterogeneous
//! Allen–Cahn equation `ε²Δu = (u − a(x))(u² − 1)` with Neumann conditions.
//!
//! The crate builds high-order layer approximations, solves the full problem
//! by Newton and fixed-point iteration, and studies the spectrum of the
//! linearized operator near resonances.

// Index loops mirror the stencils; negated comparisons reject NaN on purpose.
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod asymptotic;
pub mod cli;
pub mod error;
pub mod geometry;
pub mod numerics;
pub mod pde;
pub mod profile;
pub mod spectrum;

pub use error::{Error, Result};
