use super::{angle_grid, SpatialSpectrum};
use crate::array::ArrayGeometry;
use crate::covariance::CovarianceLike;
use crate::error::{domain, Result};
use crate::linalg::regularized_inverse;

/// Capon beampattern `1/(aᴴ R⁻¹ a)` on a uniform grid.
pub fn mvdr_beampattern(r: &CovarianceLike, geometry: &ArrayGeometry, grid_resolution: f64) -> Result<SpatialSpectrum> {
    if geometry.n_sensors() != r.dim() {
        return domain(format!("geometry has {} sensors, covariance is {n}x{n}", geometry.n_sensors(), n = r.dim()));
    }
    let inv = regularized_inverse(&r.matrix);
    let grid = angle_grid(grid_resolution);
    let values = grid
        .iter()
        .map(|&t| {
            let a = geometry.steering_vector(t)?.entries;
            let q = (a.adjoint() * &inv * &a)[(0, 0)].re;
            Ok(1.0 / q.max(1e-300))
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(SpatialSpectrum { grid, values })
}
