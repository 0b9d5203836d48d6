//! Model-based DOA estimators operating on a [`CovarianceLike`].
//!
//! Every estimator starts from the same [`SubspaceDecomposition`]: the
//! eigenvectors of the covariance sorted by descending eigenvalue, split into a
//! signal basis of `M̂` columns and a noise basis holding the rest.

mod broadband;
mod esprit;
mod export;
mod music;
mod mvdr;
mod root_music;

pub use broadband::{broadband_music, broadband_music_spectrum, DEFAULT_NUM_BINS};
pub use esprit::esprit_doa;
pub use export::{rootset_csv, spectrum_csv};
pub use music::{angle_grid, find_peaks, find_peaks_circular, music_doa, music_spectrum, DEFAULT_GRID_RESOLUTION};
pub use mvdr::mvdr_beampattern;
pub use root_music::{
    root_to_angle, rootmusic_coefficients, rootmusic_doa, select_roots, RootSelection,
};

use crate::covariance::CovarianceLike;
use crate::error::{domain, DoaError, Result};
use crate::linalg::{hermitian_defect, hermitian_eigh, max_abs};
use crate::CMatrix;

#[derive(Debug, Clone, PartialEq)]
pub struct SubspaceDecomposition {
    /// Eigenvalues in descending order.
    pub eigenvalues: Vec<f64>,
    /// Eigenvectors of the `M̂` largest eigenvalues (`N × M̂`).
    pub signal_basis: CMatrix,
    /// Remaining eigenvectors (`N × (N - M̂)`).
    pub noise_basis: CMatrix,
    pub num_sources_est: usize,
}

impl SubspaceDecomposition {
    pub fn n_sensors(&self) -> usize {
        self.signal_basis.nrows()
    }
}

/// A pseudo-spectrum sampled on a uniform angle grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SpatialSpectrum {
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
}

impl SpatialSpectrum {
    pub fn resolution(&self) -> f64 {
        self.grid[1] - self.grid[0]
    }

    /// Copy scaled to unit maximum.
    pub fn normalized(&self) -> Self {
        let peak = self.values.iter().copied().fold(0.0f64, f64::max);
        let scale = if peak > 0.0 { 1.0 / peak } else { 1.0 };
        Self { grid: self.grid.clone(), values: self.values.iter().map(|v| v * scale).collect() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DoaEstimate {
    /// Angles sorted ascending, length `num_sources_est`.
    pub angles: Vec<f64>,
    pub num_sources_est: usize,
    /// How many angles are zero padding for missing peaks or roots.
    pub shortfall: usize,
}

impl DoaEstimate {
    pub(crate) fn from_angles(mut angles: Vec<f64>, wanted: usize) -> Self {
        let shortfall = wanted.saturating_sub(angles.len());
        angles.truncate(wanted);
        angles.resize(wanted, 0.0);
        angles.sort_by(f64::total_cmp);
        Self { angles, num_sources_est: wanted, shortfall }
    }
}

/// Polynomial roots together with the indices chosen as DOAs.
#[derive(Debug, Clone, PartialEq)]
pub struct RootSet {
    pub roots: Vec<crate::C64>,
    pub selected: Vec<usize>,
}

/// Source count from the largest ratio between consecutive eigenvalues.
///
/// Returns the smallest `k` in `1..N` maximizing `λ_k / λ_{k+1}`; denominators
/// are floored at `1e-12`.
pub fn estimate_num_sources(eigenvalues: &[f64]) -> usize {
    assert!(eigenvalues.len() >= 2, "need at least two eigenvalues");
    let mut best_k = 1;
    let mut best_ratio = f64::NEG_INFINITY;
    for k in 1..eigenvalues.len() {
        let ratio = eigenvalues[k - 1] / eigenvalues[k].max(1e-12);
        if ratio > best_ratio {
            best_ratio = ratio;
            best_k = k;
        }
    }
    best_k
}

/// Eigen-split of `r` into signal and noise subspaces. `m_override` fixes `M̂`
/// (0 puts every eigenvector in the noise basis); otherwise it is estimated.
pub fn decompose(r: &CovarianceLike, m_override: Option<usize>) -> Result<SubspaceDecomposition> {
    let m = &r.matrix;
    if !m.is_square() || m.nrows() < 2 {
        return domain(format!("covariance must be square with N >= 2, got {:?}", m.shape()));
    }
    let defect = hermitian_defect(m);
    if defect > 1e-9 * max_abs(m).max(1.0) {
        return Err(DoaError::Contract(format!("covariance is not Hermitian (defect {defect:.3e})")));
    }
    let n = m.nrows();
    let (eigenvalues, vectors) = hermitian_eigh(m);
    let m_hat = match m_override {
        Some(k) if k < n => k,
        Some(k) => return domain(format!("source count {k} must be below N = {n}")),
        None => estimate_num_sources(&eigenvalues),
    };
    Ok(SubspaceDecomposition {
        signal_basis: vectors.columns(0, m_hat).into_owned(),
        noise_basis: vectors.columns(m_hat, n - m_hat).into_owned(),
        eigenvalues,
        num_sources_est: m_hat,
    })
}

#[cfg(test)]
pub(crate) mod testutil {
    use crate::array::ArrayGeometry;
    use crate::covariance::{CovarianceLike, Provenance};
    use crate::{CMatrix, C64};

    /// `A·R_S·Aᴴ + σ²I` for a nominal array with unit-power sources.
    pub fn analytic_covariance(n: usize, thetas: &[f64], noise_var: f64, coherent: bool) -> CovarianceLike {
        let g = ArrayGeometry::nominal(n).unwrap();
        let a = g.steering_matrix(thetas).unwrap();
        let m = thetas.len();
        let rs = if coherent {
            CMatrix::from_element(m, m, C64::new(1.0, 0.0))
        } else {
            CMatrix::identity(m, m)
        };
        let r = &a * rs * a.adjoint() + CMatrix::identity(n, n) * C64::new(noise_var, 0.0);
        CovarianceLike::new(r, Provenance::Empirical)
    }

    pub fn deg(x: f64) -> f64 {
        x.to_radians()
    }
}
