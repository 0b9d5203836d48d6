//! Dense complex linear algebra used by the estimators.
//!
//! Thin wrappers over `nalgebra` that fix ordering conventions (eigenvalues
//! descending) and the polynomial coefficient layout (ascending powers).

use nalgebra::linalg::{Schur, SymmetricEigen};

use crate::error::{DoaError, Result};
use crate::{CMatrix, C64};

/// Largest absolute deviation of `m` from its conjugate transpose.
pub fn hermitian_defect(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// `(m + mᴴ)/2`.
pub fn hermitize(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()) * C64::new(0.5, 0.0)
}

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0f64, |acc, z| acc.max(z.norm()))
}

/// Hermitian eigendecomposition with eigenvalues sorted in descending order.
///
/// Column `k` of the returned matrix is the unit eigenvector of eigenvalue `k`.
/// Only the Hermitian part of `m` is used.
pub fn hermitian_eigh(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    assert!(m.is_square(), "hermitian_eigh needs a square matrix");
    let n = m.nrows();
    let eig = SymmetricEigen::new(hermitize(m));
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut vectors = CMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    (values, vectors)
}

/// Eigenvalues of a general complex square matrix (complex Schur form).
pub fn eigenvalues(m: &CMatrix) -> Result<Vec<C64>> {
    if m.nrows() == 1 {
        return Ok(vec![m[(0, 0)]]);
    }
    let schur = Schur::try_new(m.clone(), 1e-15, 10_000)
        .ok_or_else(|| DoaError::Numerical("Schur iteration did not converge".into()))?;
    let (_, t) = schur.unpack();
    Ok((0..t.nrows()).map(|k| t[(k, k)]).collect())
}

/// Evaluates `Σ c_k z^k` and its derivative by Horner's rule.
pub fn poly_eval(coeffs: &[C64], z: C64) -> (C64, C64) {
    let mut p = C64::new(0.0, 0.0);
    let mut dp = C64::new(0.0, 0.0);
    for &c in coeffs.iter().rev() {
        dp = dp * z + p;
        p = p * z + c;
    }
    (p, dp)
}

/// Companion matrix of the polynomial with ascending coefficients `coeffs`.
pub fn companion(coeffs: &[C64]) -> CMatrix {
    let deg = coeffs.len() - 1;
    let lead = coeffs[deg];
    let mut c = CMatrix::zeros(deg, deg);
    for j in 0..deg {
        c[(0, j)] = -coeffs[deg - 1 - j] / lead;
    }
    for i in 1..deg {
        c[(i, i - 1)] = C64::new(1.0, 0.0);
    }
    c
}

/// All roots of `Σ c_k z^k` (ascending coefficients) via companion-matrix
/// eigenvalues, each polished with a few guarded Newton steps.
pub fn poly_roots(coeffs: &[C64]) -> Result<Vec<C64>> {
    if coeffs.len() < 2 {
        return Err(DoaError::Domain("polynomial must have degree >= 1".into()));
    }
    let lead = coeffs[coeffs.len() - 1];
    if lead.norm() <= 1e-14 {
        return Err(DoaError::Domain(format!(
            "leading coefficient magnitude {:.3e} too small",
            lead.norm()
        )));
    }
    let mut roots = eigenvalues(&companion(coeffs))?;
    for z in roots.iter_mut() {
        *z = polish_root(coeffs, *z);
    }
    Ok(roots)
}

fn polish_root(coeffs: &[C64], mut z: C64) -> C64 {
    let (mut p, _) = poly_eval(coeffs, z);
    for _ in 0..3 {
        let (_, dp) = poly_eval(coeffs, z);
        if dp.norm() < 1e-300 {
            break;
        }
        let cand = z - p / dp;
        let (pc, _) = poly_eval(coeffs, cand);
        if pc.norm() < p.norm() {
            z = cand;
            p = pc;
        } else {
            break;
        }
    }
    z
}

/// Least-squares solution of `a·x = b` through the SVD pseudo-inverse.
///
/// Fails when `a` is numerically rank deficient.
pub fn least_squares(a: &CMatrix, b: &CMatrix) -> Result<CMatrix> {
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if !(smax > 0.0) || smin <= smax * 1e-12 {
        return Err(DoaError::Numerical(format!(
            "rank-deficient system (singular values {smin:.3e} .. {smax:.3e})"
        )));
    }
    svd.solve(b, 0.0)
        .map_err(|e| DoaError::Numerical(format!("least squares failed: {e}")))
}

/// Singular values in descending order.
pub fn singular_values(m: &CMatrix) -> Vec<f64> {
    let mut s: Vec<f64> = m.singular_values().iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Inverse of a Hermitian positive semi-definite matrix, with diagonal loading
/// of `1e-9·trace/N` when its condition number exceeds `1e12`.
pub fn regularized_inverse(m: &CMatrix) -> CMatrix {
    let n = m.nrows();
    let (vals, _) = hermitian_eigh(m);
    let lmax = vals[0].abs();
    let lmin = vals[n - 1].abs();
    let mut work = hermitize(m);
    if lmin <= 0.0 || lmax / lmin > 1e12 {
        let trace: f64 = (0..n).map(|i| m[(i, i)].re).sum();
        let load = 1e-9 * trace.abs().max(f64::MIN_POSITIVE) / n as f64;
        for i in 0..n {
            work[(i, i)] += C64::new(load, 0.0);
        }
    }
    let (vals, vecs) = hermitian_eigh(&work);
    let mut inv = CMatrix::zeros(n, n);
    for k in 0..n {
        let scale = 1.0 / vals[k];
        let u = vecs.column(k);
        for i in 0..n {
            for j in 0..n {
                inv[(i, j)] += u[i] * u[j].conj() * scale;
            }
        }
    }
    inv
}
