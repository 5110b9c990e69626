//! Gradient compression operators and the optimization methods built on them.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cgd;
pub mod classes;
pub mod compressors;
pub mod distributed;
pub mod error;
pub mod problems;
pub mod rng;
pub mod stats;
pub mod trace;
pub mod vector;

pub use error::{Error, Result};
pub use vector::DenseVector;
