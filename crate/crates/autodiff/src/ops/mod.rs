//! Differentiable operations, implemented as methods on [`Var`](crate::Var).

mod basic;
mod complex;
mod nn;
mod spectral;

pub use basic::concat;
pub use complex::{decode_matrix, encode_matrix};
pub use spectral::{GAP_FLOOR, MULTIPLE_ROOT};
