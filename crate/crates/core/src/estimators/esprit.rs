use std::f64::consts::PI;

use super::{decompose, DoaEstimate};
use crate::covariance::CovarianceLike;
use crate::error::{domain, DoaError, Result};
use crate::linalg::{eigenvalues, least_squares};

/// ESPRIT from the rotation operator between the two shifted subarrays of the
/// signal basis.
pub fn esprit_doa(r: &CovarianceLike, m_hat: usize) -> Result<DoaEstimate> {
    let n = r.dim();
    if m_hat == 0 || m_hat + 2 > n {
        return domain(format!("ESPRIT source count {m_hat} must lie in 1..={}", n.saturating_sub(2)));
    }
    let dec = decompose(r, Some(m_hat))?;
    let us = &dec.signal_basis;
    let us1 = us.rows(0, n - 1).into_owned();
    let us2 = us.rows(1, n - 1).into_owned();
    let h = least_squares(&us1, &us2)?;
    let phases = eigenvalues(&h)?;
    let mut angles = Vec::with_capacity(m_hat);
    for z in phases {
        let u = -z.arg() / PI;
        if u.abs() > 1.0 + 1e-9 {
            return Err(DoaError::Numerical(format!("ESPRIT phase {u} outside [-1, 1]")));
        }
        angles.push(u.clamp(-1.0, 1.0).asin());
    }
    Ok(DoaEstimate::from_angles(angles, m_hat))
}
