use std::f64::consts::{FRAC_PI_2, PI};

use super::{DoaEstimate, SpatialSpectrum, SubspaceDecomposition};
use crate::array::ArrayGeometry;
use crate::error::{domain, Result};

/// 0.5° grid step.
pub const DEFAULT_GRID_RESOLUTION: f64 = 0.5 * PI / 180.0;

/// Uniform grid over `[-π/2, π/2]` including both endpoints, with a step as
/// close to `resolution` as divides the range evenly.
pub fn angle_grid(resolution: f64) -> Vec<f64> {
    assert!(resolution > 0.0 && resolution <= PI, "grid resolution must lie in (0, pi]");
    let steps = (PI / resolution).round().max(1.0) as usize;
    let h = PI / steps as f64;
    (0..=steps).map(|i| (-FRAC_PI_2 + i as f64 * h).min(FRAC_PI_2)).collect()
}

/// `P(θ) = 1/‖U_Nᴴ a(θ)‖²` on a uniform grid.
pub fn music_spectrum(dec: &SubspaceDecomposition, geometry: &ArrayGeometry, grid_resolution: f64) -> Result<SpatialSpectrum> {
    if dec.noise_basis.ncols() == 0 {
        return domain("MUSIC needs a nonempty noise subspace");
    }
    if geometry.n_sensors() != dec.n_sensors() {
        return domain(format!(
            "geometry has {} sensors but the covariance is {}x{}",
            geometry.n_sensors(),
            dec.n_sensors(),
            dec.n_sensors()
        ));
    }
    let grid = angle_grid(grid_resolution);
    let un_h = dec.noise_basis.adjoint();
    let values = grid
        .iter()
        .map(|&t| {
            let a = geometry.steering_vector(t)?.entries;
            let proj = &un_h * a;
            Ok(1.0 / proj.norm_squared().max(1e-300))
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(SpatialSpectrum { grid, values })
}

/// Indices of strict local maxima. Plateaus count once, at their midpoint;
/// grid endpoints are eligible. A run that spans the whole grid is no peak.
pub fn find_peaks(values: &[f64]) -> Vec<usize> {
    let same = |a: f64, b: f64| (a - b).abs() <= 1e-12 * a.abs().max(b.abs());
    let n = values.len();
    let mut peaks = Vec::new();
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && same(values[j + 1], values[i]) {
            j += 1;
        }
        let left_lower = i == 0 || values[i - 1] < values[i];
        let right_lower = j == n - 1 || values[j + 1] < values[j];
        let has_neighbor = i > 0 || j < n - 1;
        if left_lower && right_lower && has_neighbor {
            peaks.push((i + j) / 2);
        }
        i = j + 1;
    }
    peaks
}

/// Peaks of a spectrum whose first and last samples are the same direction
/// (`±π/2`): the last sample is dropped and the rest wraps around.
pub fn find_peaks_circular(values: &[f64]) -> Vec<usize> {
    let n = values.len().saturating_sub(1);
    if n < 2 {
        return Vec::new();
    }
    let ring = &values[..n];
    let start = (0..n).min_by(|&a, &b| ring[a].total_cmp(&ring[b])).unwrap_or(0);
    let rotated: Vec<f64> = (0..n).map(|k| ring[(start + k) % n]).collect();
    let mut peaks: Vec<usize> = find_peaks(&rotated).into_iter().map(|k| (start + k) % n).collect();
    peaks.sort_unstable();
    peaks
}

/// Whether the spectrum covers `[-π/2, π/2]` with equal end values, so that
/// both ends are one direction.
fn wraps_around(spectrum: &SpatialSpectrum) -> bool {
    match (spectrum.grid.first(), spectrum.grid.last(), spectrum.values.first(), spectrum.values.last()) {
        (Some(a), Some(b), Some(u), Some(v)) => {
            (a + FRAC_PI_2).abs() < 1e-12 && (b - FRAC_PI_2).abs() < 1e-12 && (u - v).abs() <= 1e-9 * u.abs().max(v.abs())
        }
        _ => false,
    }
}

/// The `m_hat` highest peaks of a spectrum, sorted by angle. Missing peaks are
/// padded with angle 0 and counted in `shortfall`. Spectra whose ends meet
/// are searched circularly.
pub fn music_doa(spectrum: &SpatialSpectrum, m_hat: usize) -> DoaEstimate {
    assert!(m_hat >= 1, "need at least one source");
    let mut peaks = if wraps_around(spectrum) {
        find_peaks_circular(&spectrum.values)
    } else {
        find_peaks(&spectrum.values)
    };
    peaks.sort_by(|&a, &b| spectrum.values[b].total_cmp(&spectrum.values[a]));
    let angles = peaks.iter().take(m_hat).map(|&k| spectrum.grid[k]).collect();
    DoaEstimate::from_angles(angles, m_hat)
}
