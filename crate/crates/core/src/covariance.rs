//! Covariance estimation and pre-processing.

use crate::error::{domain, Result};
use crate::linalg::hermitize;
use crate::{CMatrix, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Provenance {
    Empirical,
    /// Spatially smoothed.
    Sps,
    /// Forward-backward averaged.
    Fb,
    Surrogate,
}

/// Hermitian covariance estimate together with how it was produced.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceLike {
    pub matrix: CMatrix,
    pub provenance: Provenance,
}

impl CovarianceLike {
    pub fn new(matrix: CMatrix, provenance: Provenance) -> Self {
        Self { matrix: hermitize(&matrix), provenance }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Same matrix scaled by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        Self { matrix: &self.matrix * C64::new(c, 0.0), provenance: self.provenance }
    }
}

/// Lagged autocorrelation slices `R[τ]`, `τ = 0..=tau_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct AutocorrTensor {
    pub lags: Vec<CMatrix>,
    pub tau_max: usize,
}

impl AutocorrTensor {
    pub fn n_sensors(&self) -> usize {
        self.lags[0].nrows()
    }
}

/// `(1/T)·X·Xᴴ`.
pub fn empirical_covariance(x: &CMatrix) -> Result<CovarianceLike> {
    let t = x.ncols();
    if t == 0 {
        return domain("empirical covariance needs at least one snapshot");
    }
    let r = x * x.adjoint() / C64::new(t as f64, 0.0);
    Ok(CovarianceLike::new(r, Provenance::Empirical))
}

/// `R[τ] = 1/(T-τ)·Σ_{t<T-τ} x(t)·xᴴ(t+τ)` for every lag up to `tau_max`.
///
/// Only lag 0 is symmetrized; higher lags are not Hermitian in general.
pub fn lagged_autocorrelation(x: &CMatrix, tau_max: usize) -> Result<AutocorrTensor> {
    let (n, t) = x.shape();
    if tau_max >= t {
        return domain(format!("tau_max {tau_max} must be below the snapshot count {t}"));
    }
    let mut lags = Vec::with_capacity(tau_max + 1);
    for tau in 0..=tau_max {
        let count = t - tau;
        let lead = x.columns(0, count);
        let lagged = x.columns(tau, count);
        let mut r = lead * lagged.adjoint() / C64::new(count as f64, 0.0);
        if tau == 0 {
            r = hermitize(&r);
        }
        debug_assert_eq!(r.shape(), (n, n));
        lags.push(r);
    }
    Ok(AutocorrTensor { lags, tau_max })
}

/// Default spatial-smoothing subarray size, `⌊N/2⌋ + 1`.
pub fn default_subarray_size(n_sensors: usize) -> usize {
    n_sensors / 2 + 1
}

/// Average of the empirical covariances of the `N - L + 1` sliding subarrays
/// of size `L`.
pub fn spatial_smoothing(x: &CMatrix, subarray_size: usize) -> Result<CovarianceLike> {
    let (n, t) = x.shape();
    if subarray_size == 0 || subarray_size > n {
        return domain(format!("subarray size {subarray_size} must lie in 1..={n}"));
    }
    if t == 0 {
        return domain("spatial smoothing needs at least one snapshot");
    }
    let count = n - subarray_size + 1;
    let mut acc = CMatrix::zeros(subarray_size, subarray_size);
    for start in 0..count {
        let sub = x.rows(start, subarray_size);
        acc += &sub * sub.adjoint();
    }
    acc /= C64::new((count * t) as f64, 0.0);
    Ok(CovarianceLike::new(acc, Provenance::Sps))
}

/// `(R + J·conj(R)·J)/2` with `J` the exchange matrix.
pub fn forward_backward(r: &CovarianceLike) -> CovarianceLike {
    let n = r.dim();
    let m = &r.matrix;
    let fb = CMatrix::from_fn(n, n, |i, j| (m[(i, j)] + m[(n - 1 - i, n - 1 - j)].conj()) * 0.5);
    CovarianceLike::new(fb, Provenance::Fb)
}
