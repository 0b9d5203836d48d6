//! Monte-Carlo benchmarks and diagnostics for subspace DOA estimators, with
//! and without a learned surrogate covariance.

pub mod commands;
pub mod config;
pub mod diagnostics;
pub mod error;
pub mod sweep;

pub use config::RunConfig;
pub use error::{BenchError, Result};
