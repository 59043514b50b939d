//! Benchmarking uncertainty-quantification methods across training-set sizes.

pub mod datasets;
pub mod error;
pub mod harness;
pub mod methods;
pub mod metrics;
pub mod nn;
pub mod seed;

pub use error::{Error, Result};
