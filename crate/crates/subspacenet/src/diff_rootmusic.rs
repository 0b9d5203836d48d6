//! Root-MUSIC on the tape, from a surrogate covariance to DOA angles.

use doa_core::estimators::select_roots;
use doa_core::{DoaError, Result, C64};
use ssn_autodiff::{concat, Tensor, Var};

#[derive(Debug, Clone, Copy)]
pub struct RootAngles<'t> {
    /// `[m]` angles; the last `shortfall` entries are zero padding.
    pub angles: Var<'t>,
    pub shortfall: usize,
}

/// Eigendecomposition, noise projector, polynomial coefficients, roots,
/// pair selection and angle conversion for a `[2, N, N]` covariance. The
/// selection is discrete and taken from forward values.
pub fn differentiable_rootmusic<'t>(r: Var<'t>, m: usize) -> Result<RootAngles<'t>> {
    let n = r.shape()[1];
    if m == 0 || m >= n {
        return Err(DoaError::Domain(format!("root-MUSIC needs 1 <= M <= N-1, got M = {m}, N = {n}")));
    }
    let (_, vecs) = r.eigh();
    let noise = vecs.complex_columns(m, n - m);
    let proj = noise.complex_matmul(noise.adjoint());
    let roots = proj.diagonal_sums().polyroots()?;
    let values = roots.value();
    let deg = values.shape()[1];
    let z: Vec<C64> = (0..deg).map(|k| C64::new(values.data()[k], values.data()[deg + k])).collect();
    let sel = select_roots(&z, m);
    let found = sel.len();
    let tape = r.tape();
    let mut parts = Vec::with_capacity(2);
    if found > 0 {
        let idx: Vec<usize> = sel.inside.iter().copied().chain(sel.inside.iter().map(|k| k + deg)).collect();
        parts.push(roots.gather(idx, &[2, found]).root_angle());
    }
    if found < m {
        parts.push(tape.constant(Tensor::zeros(&[m - found])));
    }
    let angles = if parts.len() == 1 { parts[0] } else { concat(&parts) };
    Ok(RootAngles { angles, shortfall: m - found })
}
