use std::f64::consts::PI;

use super::{DoaEstimate, RootSet, SubspaceDecomposition};
use crate::error::{domain, Result};
use crate::linalg::{poly_eval, poly_roots};
use crate::C64;

/// Coefficients `f_{-(N-1)} ..= f_{N-1}` of `D(z) = Σ_n f_n zⁿ`, where
/// `F = U_N·U_Nᴴ` and `f_n` is the sum of the `n`-th diagonal of `F`.
///
/// The returned vector doubles as the ascending coefficient list of
/// `z^{N-1}·D(z)`.
pub fn rootmusic_coefficients(dec: &SubspaceDecomposition) -> Result<Vec<C64>> {
    if dec.noise_basis.ncols() == 0 {
        return domain("Root-MUSIC needs a nonempty noise subspace");
    }
    let f = &dec.noise_basis * dec.noise_basis.adjoint();
    let n = f.nrows();
    let mut coeffs = vec![C64::new(0.0, 0.0); 2 * n - 1];
    for shift in 0..n {
        let mut acc = C64::new(0.0, 0.0);
        for i in 0..n - shift {
            acc += f[(i, i + shift)];
        }
        coeffs[n - 1 + shift] = acc;
        coeffs[n - 1 - shift] = acc.conj();
    }
    Ok(coeffs)
}

/// `θ = -asin(arg(z)/π)`.
pub fn root_to_angle(z: C64) -> f64 {
    (-z.arg() / PI).clamp(-1.0, 1.0).asin()
}

/// Roots grouped into reciprocal pairs `(z, 1/conj(z))` and ranked by how
/// close the inner member lies to the unit circle.
#[derive(Debug, Clone, PartialEq)]
pub struct RootSelection {
    /// Index of the inner root (`|z| ≤ 1`) of each chosen pair, best first.
    pub inside: Vec<usize>,
    /// Index of its reciprocal partner, when one was found.
    pub partner: Vec<Option<usize>>,
}

impl RootSelection {
    pub fn len(&self) -> usize {
        self.inside.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inside.is_empty()
    }

    /// Angle of each chosen pair, in ranking order. Uses the argument of the
    /// pair sum, which is robust when a double root on the circle splits.
    pub fn angles(&self, roots: &[C64]) -> Vec<f64> {
        self.inside
            .iter()
            .zip(&self.partner)
            .map(|(&i, p)| {
                let z = match p {
                    Some(j) => roots[i] + roots[*j],
                    None => roots[i],
                };
                root_to_angle(z)
            })
            .collect()
    }
}

/// Pairs roots greedily from the smallest modulus outwards with the unpaired
/// root nearest to `1/conj(z)`, then keeps the `m_hat` pairs whose inner root
/// is closest to the unit circle.
pub fn select_roots(roots: &[C64], m_hat: usize) -> RootSelection {
    let mut order: Vec<usize> = (0..roots.len()).collect();
    order.sort_by(|&a, &b| roots[a].norm().total_cmp(&roots[b].norm()));
    let mut used = vec![false; roots.len()];
    let mut pairs: Vec<(usize, Option<usize>)> = Vec::new();
    for &i in &order {
        if used[i] {
            continue;
        }
        used[i] = true;
        let z = roots[i];
        if z.norm() > 1.0 + 1e-6 {
            continue;
        }
        let mirror = if z.norm() > 0.0 { C64::new(1.0, 0.0) / z.conj() } else { C64::new(f64::INFINITY, 0.0) };
        let partner = (0..roots.len())
            .filter(|&j| !used[j])
            .min_by(|&a, &b| (roots[a] - mirror).norm().total_cmp(&(roots[b] - mirror).norm()));
        if let Some(j) = partner {
            used[j] = true;
        }
        let (lo, hi) = match partner {
            Some(j) if roots[j].norm() < z.norm() => (j, Some(i)),
            _ => (i, partner),
        };
        pairs.push((lo, hi));
    }
    pairs.sort_by(|a, b| {
        let da = (roots[a.0].norm() - 1.0).abs();
        let db = (roots[b.0].norm() - 1.0).abs();
        da.total_cmp(&db)
    });
    pairs.truncate(m_hat);
    RootSelection { inside: pairs.iter().map(|p| p.0).collect(), partner: pairs.iter().map(|p| p.1).collect() }
}

/// Strips coefficient pairs that vanish at both ends of the symmetric list,
/// lowering the degree instead of producing roots at zero and infinity.
fn trim_symmetric(coeffs: &[C64]) -> &[C64] {
    let scale = coeffs.iter().fold(0.0f64, |acc, c| acc.max(c.norm()));
    let tiny = 1e-13 * scale.max(f64::MIN_POSITIVE);
    let mut lo = 0;
    let mut hi = coeffs.len();
    while hi - lo > 1 && coeffs[hi - 1].norm() <= tiny && coeffs[lo].norm() <= tiny {
        lo += 1;
        hi -= 1;
    }
    &coeffs[lo..hi]
}

/// A double root of `p` is a simple root of `p'`; Newton on `p'` recovers it
/// to full precision where the split pair only reaches `√ε`.
fn refine_double_root(deriv: &[C64], mut w: C64) -> C64 {
    if deriv.len() < 2 {
        return w;
    }
    let (mut d, _) = poly_eval(deriv, w);
    for _ in 0..4 {
        let (_, dd) = poly_eval(deriv, w);
        if dd.norm() < 1e-300 {
            break;
        }
        let cand = w - d / dd;
        let (dc, _) = poly_eval(deriv, cand);
        if dc.norm() >= d.norm() {
            break;
        }
        w = cand;
        d = dc;
    }
    w
}

/// Root-MUSIC DOAs from the `m_hat` root pairs nearest the unit circle.
pub fn rootmusic_doa(dec: &SubspaceDecomposition, m_hat: usize) -> Result<(DoaEstimate, RootSet)> {
    let n = dec.n_sensors();
    if m_hat == 0 || m_hat > n - 1 {
        return domain(format!("source count {m_hat} must lie in 1..={}", n - 1));
    }
    let coeffs = rootmusic_coefficients(dec)?;
    let trimmed = trim_symmetric(&coeffs);
    let roots = if trimmed.len() < 2 { Vec::new() } else { poly_roots(trimmed)? };
    let sel = select_roots(&roots, m_hat);
    let mut angles = sel.angles(&roots);
    let deriv: Vec<C64> = trimmed.iter().enumerate().skip(1).map(|(k, &c)| c * k as f64).collect();
    for (k, (&i, p)) in sel.inside.iter().zip(&sel.partner).enumerate() {
        if let Some(j) = *p {
            if (roots[i] - roots[j]).norm() < 1e-4 {
                angles[k] = root_to_angle(refine_double_root(&deriv, (roots[i] + roots[j]) * 0.5));
            }
        }
    }
    let estimate = DoaEstimate::from_angles(angles, m_hat);
    Ok((estimate, RootSet { roots, selected: sel.inside }))
}
