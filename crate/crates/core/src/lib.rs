//! Goodness-of-fit tests for Smith and Schlather max-stable models based on
//! rank-based estimators of extremal coefficients.

// Negated comparisons are deliberate: NaN must fail every range check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// Dense linear algebra reads more clearly with explicit indices.
#![allow(clippy::needless_range_loop)]

pub mod data;
pub mod error;
pub mod fit;
pub mod gof;
pub mod linalg;
pub mod models;
pub mod mvn;
pub mod optim;
pub mod pickands;
pub mod ranks;
pub mod rng;
pub mod simulate;
pub mod study;

pub use error::{Error, Result};
