use std::f64::consts::PI;

use rustfft::FftPlanner;

use super::music::{angle_grid, music_doa};
use super::{decompose, DoaEstimate, SpatialSpectrum};
use crate::array::ArrayGeometry;
use crate::covariance::{CovarianceLike, Provenance};
use crate::error::{domain, Result};
use crate::{CMatrix, C64};

pub const DEFAULT_NUM_BINS: usize = 50;

/// Groups whose energy falls below this fraction of the strongest group are
/// left out of the aggregate.
const SILENT_GROUP: f64 = 1e-12;

/// Aggregated broadband MUSIC spectrum.
///
/// The `T` DFT bins of the snapshots are split into `num_bins` contiguous
/// groups. Each group yields a covariance from its frequency-domain vectors and
/// a MUSIC spectrum steered at the group's mean frequency (bin `k` sits at
/// `k·f_s/T`); the spectra, each scaled to unit maximum, are summed.
pub fn broadband_music_spectrum(
    x: &CMatrix,
    m_hat: usize,
    num_bins: usize,
    sample_rate_hz: f64,
    bandwidth_hz: f64,
    grid_resolution: f64,
) -> Result<SpatialSpectrum> {
    let (n, t) = x.shape();
    if num_bins == 0 || t < num_bins {
        return domain(format!("broadband MUSIC needs T >= num_bins >= 1 (T = {t}, bins = {num_bins})"));
    }
    if m_hat == 0 || m_hat >= n {
        return domain(format!("source count {m_hat} must lie in 1..{n}"));
    }
    if !(sample_rate_hz > 0.0 && bandwidth_hz > 0.0) {
        return domain("sample rate and bandwidth must be positive");
    }
    let geometry = ArrayGeometry::nominal(n)?;
    let c = 2.0 * bandwidth_hz;

    let mut freq = CMatrix::zeros(n, t);
    let fft = FftPlanner::<f64>::new().plan_fft_forward(t);
    let mut buf = vec![C64::new(0.0, 0.0); t];
    for row in 0..n {
        for k in 0..t {
            buf[k] = x[(row, k)];
        }
        fft.process(&mut buf);
        for k in 0..t {
            freq[(row, k)] = buf[k];
        }
    }

    let mut groups = Vec::with_capacity(num_bins);
    for g in 0..num_bins {
        let lo = g * t / num_bins;
        let hi = (g + 1) * t / num_bins;
        let block = freq.columns(lo, hi - lo);
        let r = &block * block.adjoint() / C64::new((hi - lo) as f64, 0.0);
        let energy: f64 = (0..n).map(|i| r[(i, i)].re).sum();
        let center = (lo + hi - 1) as f64 / 2.0 * sample_rate_hz / t as f64;
        groups.push((r, energy, center));
    }
    let loudest = groups.iter().fold(0.0f64, |acc, g| acc.max(g.1));

    let grid = angle_grid(grid_resolution);
    let mut total = vec![0.0; grid.len()];
    for (r, energy, center) in groups {
        if center <= 0.0 || energy <= SILENT_GROUP * loudest {
            continue;
        }
        let omega = 2.0 * PI * center;
        let dec = decompose(&CovarianceLike::new(r, Provenance::Empirical), Some(m_hat))?;
        let un_h = dec.noise_basis.adjoint();
        let mut values = Vec::with_capacity(grid.len());
        for &theta in &grid {
            let a = geometry.broadband_steering_vector(omega, theta, c)?.entries;
            values.push(1.0 / (&un_h * a).norm_squared().max(1e-300));
        }
        let peak = values.iter().copied().fold(0.0f64, f64::max);
        for (acc, v) in total.iter_mut().zip(values) {
            *acc += v / peak;
        }
    }
    Ok(SpatialSpectrum { grid, values: total })
}

/// Peaks of [`broadband_music_spectrum`] on the default 0.5° grid.
pub fn broadband_music(x: &CMatrix, m_hat: usize, num_bins: usize, sample_rate_hz: f64, bandwidth_hz: f64) -> Result<DoaEstimate> {
    let spectrum =
        broadband_music_spectrum(x, m_hat, num_bins, sample_rate_hz, bandwidth_hz, super::DEFAULT_GRID_RESOLUTION)?;
    Ok(music_doa(&spectrum, m_hat))
}
