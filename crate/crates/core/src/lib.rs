//! Exact inversion of convolution with a weighted sum of rectangle
//! indicators whose rectangles form a strict staircase.

// `!(x <= tol)` is used on purpose so that NaN fails validation checks.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod forward;
pub mod geometry;
pub mod io;
pub mod measure;
pub mod neumann;
pub mod reconstruct;
pub mod smoothfn;

pub use error::{Error, Result};
pub use num_complex::Complex64;
