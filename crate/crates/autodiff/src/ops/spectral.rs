//! Hermitian eigendecomposition and polynomial roots with implicit gradients.

use doa_core::linalg::{hermitian_eigh, poly_eval, poly_roots};
use doa_core::{CMatrix, DoaError, C64};

use super::complex::{decode_matrix, encode_matrix};
use crate::tape::Var;
use crate::tensor::Tensor;

/// Relative eigenvalue gap below which the backward pass floors the divisor.
pub const GAP_FLOOR: f64 = 1e-8;
/// `|p'(z)|` below which a root is treated as multiple and gets no gradient.
pub const MULTIPLE_ROOT: f64 = 1e-12;

impl<'t> Var<'t> {
    /// Eigendecomposition of the Hermitian part of a complex `[2, N, N]`
    /// matrix: eigenvalues `[N]` in descending order and unit eigenvectors
    /// `[2, N, N]` as columns.
    ///
    /// Gradients are exact for losses that do not depend on eigenvector
    /// phases. Gaps `λ_j - λ_i` smaller than `1e-8·max|λ|` are floored; each
    /// floored pair that carries gradient is counted on the tape.
    pub fn eigh(self) -> (Var<'t>, Var<'t>) {
        let r = self.value();
        let s = r.shape();
        assert!(s.len() == 3 && s[0] == 2 && s[1] == s[2], "eigh needs a square complex matrix, got {s:?}");
        let n = s[1];
        let (vals, vecs) = hermitian_eigh(&decode_matrix(&r));
        let mut packed = vals.clone();
        packed.extend_from_slice(encode_matrix(&vecs).data());
        let tape = self.tape;
        let counter = tape.gap_clamp_counter();
        let node = tape.op(
            Tensor::new(&[n + 2 * n * n], packed),
            &[self],
            Box::new(move |g, _| {
                let gl = &g.data()[..n];
                let gv = decode_matrix(&Tensor::new(&[2, n, n], g.data()[n..].to_vec()));
                let m = vecs.adjoint() * gv;
                let scale = vals.iter().fold(0.0f64, |a, v| a.max(v.abs()));
                let floor = (GAP_FLOOR * scale).max(f64::MIN_POSITIVE);
                let m_scale = m.iter().fold(0.0f64, |a, z| a.max(z.norm()));
                let mut clamps = 0;
                let mut x = CMatrix::zeros(n, n);
                for i in 0..n {
                    x[(i, i)] = C64::new(gl[i], 0.0);
                    for j in 0..n {
                        if i == j {
                            continue;
                        }
                        let skew = (m[(i, j)] - m[(j, i)].conj()) * 0.5;
                        let mut gap = vals[j] - vals[i];
                        if gap.abs() < floor {
                            if i < j && skew.norm() > 1e-10 * m_scale {
                                clamps += 1;
                            }
                            gap = if gap < 0.0 { -floor } else { floor };
                        }
                        x[(i, j)] = skew / gap;
                    }
                }
                counter.add(clamps);
                let ga = &vecs * x * vecs.adjoint();
                let sym = (&ga + ga.adjoint()) * C64::new(0.5, 0.0);
                vec![Some(encode_matrix(&sym))]
            }),
        );
        (node.slice_flat(0, &[n]), node.slice_flat(n, &[2, n, n]))
    }

    /// Roots of `Σ_k c_k z^k` for complex ascending coefficients `[2, D+1]`,
    /// returned as `[2, D]`. Backward uses `∂z/∂c_k = -z^k / p'(z)`; roots with
    /// `|p'(z)| < 1e-12` get zero gradient and are counted on the tape.
    pub fn polyroots(self) -> Result<Var<'t>, DoaError> {
        let c = self.value();
        let s = c.shape();
        assert!(s.len() == 2 && s[0] == 2 && s[1] >= 2, "polyroots needs coefficients [2, D+1], got {s:?}");
        let len = s[1];
        let coeffs: Vec<C64> = (0..len).map(|k| C64::new(c.data()[k], c.data()[len + k])).collect();
        let roots = poly_roots(&coeffs)?;
        let deg = roots.len();
        let mut data = vec![0.0; 2 * deg];
        for (k, z) in roots.iter().enumerate() {
            data[k] = z.re;
            data[deg + k] = z.im;
        }
        let tape = self.tape;
        let counter = tape.root_warning_counter();
        Ok(tape.op(
            Tensor::new(&[2, deg], data),
            &[self],
            Box::new(move |g, _| {
                let mut d = vec![0.0; 2 * len];
                let mut multiple = 0;
                for (k, &z) in roots.iter().enumerate() {
                    let gz = C64::new(g.data()[k], g.data()[deg + k]);
                    if gz.norm() == 0.0 {
                        continue;
                    }
                    let (_, dp) = poly_eval(&coeffs, z);
                    if dp.norm() < MULTIPLE_ROOT {
                        multiple += 1;
                        continue;
                    }
                    let mut zn = C64::new(1.0, 0.0);
                    for n in 0..len {
                        let contrib = (-zn / dp).conj() * gz;
                        d[n] += contrib.re;
                        d[len + n] += contrib.im;
                        zn *= z;
                    }
                }
                counter.add(multiple);
                vec![Some(Tensor::new(&[2, len], d))]
            }),
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gradcheck::{gradient_error, random_inputs};
    use crate::tape::Tape;

    /// Random Hermitian matrix with eigenvalues `1, 2, ..., n` scaled by 1/n.
    fn spaced_hermitian(n: usize, seed: u64) -> Tensor {
        let raw = decode_matrix(&random_inputs(&[&[2, n, n]], seed)[0]);
        let q = raw.qr().q();
        let d = CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(n, (0..n).map(|k| C64::new((k + 1) as f64 / n as f64, 0.0))));
        encode_matrix(&(&q * d * q.adjoint()))
    }

    #[test]
    fn top_eigenvalue_gradient_is_outer_product() {
        let r = spaced_hermitian(5, 1);
        let tape = Tape::new();
        let x = tape.leaf(r.clone());
        let (vals, vecs) = x.eigh();
        let top = vals.gather(vec![0], &[1]).sum();
        let g = decode_matrix(tape.backward(top).get(x).unwrap());
        let v = decode_matrix(&vecs.value());
        let u = v.column(0);
        let outer = u * u.adjoint();
        assert!(doa_core::linalg::max_abs(&(g - outer)) < 1e-12);
    }

    #[test]
    fn diagonal_input_passes_through() {
        let tape = Tape::new();
        let mut t = Tensor::zeros(&[2, 3, 3]);
        for (i, v) in [3.0, 1.0, 2.0].iter().enumerate() {
            t.data_mut()[i * 3 + i] = *v;
        }
        let x = tape.leaf(t);
        let (vals, vecs) = x.eigh();
        assert_eq!(vals.value().data(), &[3.0, 2.0, 1.0]);
        let v = decode_matrix(&vecs.value());
        for (col, row) in [0usize, 2, 1].iter().enumerate() {
            assert!((v[(*row, col)].norm() - 1.0).abs() < 1e-14);
        }
        let w = tape.constant(Tensor::new(&[3], vec![1.0, 10.0, 100.0]));
        let g = tape.backward(vals.mul(w).sum()).get(x).unwrap().clone();
        assert!((g.data()[0] - 1.0).abs() < 1e-14);
        assert!((g.data()[4] - 100.0).abs() < 1e-14);
        assert!((g.data()[8] - 10.0).abs() < 1e-14);
    }

    #[test]
    fn eigh_gradient_finite_differences() {
        for seed in 0..10 {
            let r = spaced_hermitian(8, seed);
            let weights = random_inputs(&[&[2, 8, 8]], 100 + seed)[0].clone();
            let err = gradient_error(&[r], 1e-5, |tape, v| {
                let (vals, vecs) = v[0].eigh();
                let noise = vecs.complex_columns(3, 5);
                let proj = noise.complex_matmul(noise.adjoint());
                let w = tape.constant(weights.clone());
                proj.mul(w).sum().add(vals.square().sum())
            });
            assert!(err < 1e-4, "seed {seed}: {err:.3e}");
        }
    }

    #[test]
    fn quadratic_root_derivative() {
        let tape = Tape::new();
        let c = tape.leaf(Tensor::new(&[2, 3], vec![2.0, -3.0, 1.0, 0.0, 0.0, 0.0]));
        let roots = c.polyroots().unwrap();
        let r = roots.value();
        let k = if (r.data()[0] - 1.0).abs() < 1e-12 { 0 } else { 1 };
        assert!((r.data()[k] - 1.0).abs() < 1e-12);
        let pick = roots.gather(vec![k], &[1]).sum();
        let g = tape.backward(pick).get(c).unwrap().clone();
        assert!((g.data()[0] - 1.0).abs() < 1e-12);
    }

    fn spread_poly(seed: u64) -> Tensor {
        // monic degree-6 polynomial from roots on distinct rays
        let mut coeffs = vec![C64::new(1.0, 0.0)];
        for k in 0..6 {
            let z = C64::from_polar(0.5 + 0.2 * k as f64 + 0.01 * seed as f64, 1.0 * k as f64 + 0.1 * seed as f64);
            let mut next = vec![C64::new(0.0, 0.0); coeffs.len() + 1];
            for (i, &c) in coeffs.iter().enumerate() {
                next[i + 1] += c;
                next[i] -= c * z;
            }
            coeffs = next;
        }
        let len = coeffs.len();
        let mut data = vec![0.0; 2 * len];
        for (i, c) in coeffs.iter().enumerate() {
            data[i] = c.re;
            data[len + i] = c.im;
        }
        Tensor::new(&[2, len], data)
    }

    fn sorted_root_loss<'t>(c: Var<'t>, weights: &Tensor) -> Var<'t> {
        let roots = c.polyroots().unwrap();
        let r = roots.value();
        let mut order: Vec<usize> = (0..6).collect();
        order.sort_by(|&a, &b| r.data()[a].atan2(r.data()[6 + a]).total_cmp(&r.data()[b].atan2(r.data()[6 + b])));
        let idx: Vec<usize> = order.iter().copied().chain(order.iter().map(|k| k + 6)).collect();
        let w = c.tape().constant(weights.clone());
        roots.gather(idx, &[12]).mul(w).sum()
    }

    #[test]
    fn polyroots_gradient_finite_differences() {
        for seed in 0..10 {
            let weights = random_inputs(&[&[12]], 200 + seed)[0].clone();
            let err = gradient_error(&[spread_poly(seed)], 1e-6, |_, v| sorted_root_loss(v[0], &weights));
            assert!(err < 1e-4, "seed {seed}: {err:.3e}");
        }
    }

    #[test]
    fn polyroots_first_order_perturbation() {
        let c = spread_poly(3);
        let delta = 1e-6;
        let coeffs = |t: &Tensor| -> Vec<C64> { (0..7).map(|k| C64::new(t.data()[k], t.data()[7 + k])).collect() };
        let base = poly_roots(&coeffs(&c)).unwrap();
        for n in 0..7 {
            let mut bumped = c.clone();
            bumped.data_mut()[n] += delta;
            let moved = poly_roots(&coeffs(&bumped)).unwrap();
            for &z in &base {
                let (_, dp) = poly_eval(&coeffs(&c), z);
                let predicted = z - delta * z.powi(n as i32) / dp;
                let nearest = moved.iter().map(|w| (w - predicted).norm()).fold(f64::INFINITY, f64::min);
                assert!(nearest < 1e-10, "n {n}: residual {nearest:.3e}");
            }
        }
    }

    #[test]
    fn multiple_root_is_flagged() {
        let tape = Tape::new();
        // z², whose companion matrix is an exact Jordan block
        let c = tape.leaf(Tensor::new(&[2, 3], vec![0.0, 0.0, 1.0, 0.0, 0.0, 0.0]));
        let roots = c.polyroots().unwrap();
        let loss = roots.sum();
        let g = tape.backward(loss).get(c).cloned().unwrap_or_else(|| Tensor::zeros(&[2, 3]));
        assert!(g.data().iter().all(|x| x.is_finite()));
        assert!(tape.root_warnings() >= 1);
    }
}
