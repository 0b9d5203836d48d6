//! Core array-processing toolkit for direction-of-arrival estimation.
//!
//! The crate covers the classical pipeline end to end:
//!
//! * [`array`] builds steering vectors for nominal, broadband and
//!   miscalibrated uniform linear arrays,
//! * [`signal`] simulates narrowband and OFDM snapshot matrices and labelled
//!   datasets (with a bit-exact binary file format in [`dataset_io`]),
//! * [`covariance`] estimates covariance and lagged autocorrelation matrices
//!   and applies spatial smoothing or forward-backward averaging,
//! * [`estimators`] runs MUSIC, Root-MUSIC, ESPRIT, broadband MUSIC and the
//!   MVDR beampattern on any covariance-like matrix.
//!
//! Angles are in radians throughout and element spacing is normalized to the
//! nominal half wavelength.

pub mod array;
pub mod covariance;
pub mod dataset_io;
pub mod error;
pub mod estimators;
pub mod linalg;
pub mod rng;
pub mod signal;

pub use error::{DoaError, Result};

/// Complex double used for every signal and matrix entry.
pub type C64 = num_complex::Complex<f64>;
/// Dense complex matrix.
pub type CMatrix = nalgebra::DMatrix<C64>;
/// Dense complex column vector.
pub type CVector = nalgebra::DVector<C64>;
