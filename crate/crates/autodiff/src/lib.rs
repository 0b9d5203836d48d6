//! Small reverse-mode automatic differentiation engine.
//!
//! Values live on a [`Tape`]; every operation on a [`Var`] appends a node with
//! its backward rule, and [`Tape::backward`] sweeps the nodes in reverse.
//! Complex matrices are stored as real tensors with a leading axis of length
//! 2 holding the real and imaginary planes.
//!
//! ```
//! use ssn_autodiff::{Tape, Tensor};
//!
//! let tape = Tape::new();
//! let x = tape.leaf(Tensor::new(&[2], vec![1.0, -3.0]));
//! let y = x.square().sum();
//! let g = tape.backward(y);
//! assert_eq!(g.get(x).unwrap().data(), &[2.0, -6.0]);
//! ```

mod adam;
mod gemm;
pub mod gradcheck;
pub mod ops;
mod tape;
mod tensor;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use ops::{concat, decode_matrix, encode_matrix};
pub use tape::{Gradients, Tape, Var};
pub use tensor::Tensor;
