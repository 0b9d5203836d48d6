//! Complex matrix operations on the paired-channel encoding `[2, ...]`.
//!
//! Gradients follow the convention `g = ∂L/∂Re + j·∂L/∂Im`, which makes the
//! backward pass of a holomorphic product `C = A·B` read `gA = gC·Bᴴ`,
//! `gB = Aᴴ·gC`.

use std::f64::consts::PI;

use crate::gemm::gemm;
use crate::tape::Var;
use crate::tensor::Tensor;

fn dims(t: &Tensor, what: &str) -> (usize, usize) {
    let s = t.shape();
    assert!(s.len() == 3 && s[0] == 2, "{what} must be a complex matrix [2, m, n], got {s:?}");
    (s[1], s[2])
}

/// `C = A·B` on split real/imaginary planes.
#[allow(clippy::too_many_arguments)]
fn cgemm(m: usize, k: usize, n: usize, a: &[f64], ta: bool, conj_a: bool, b: &[f64], tb: bool, conj_b: bool) -> Vec<f64> {
    let (ar, ai) = a.split_at(m * k);
    let (br, bi) = b.split_at(k * n);
    let sa = if conj_a { -1.0 } else { 1.0 };
    let sb = if conj_b { -1.0 } else { 1.0 };
    let mut out = vec![0.0; 2 * m * n];
    let (cr, ci) = out.split_at_mut(m * n);
    let mut tmp = vec![0.0; m * n];
    // Re = ar·br - (sa·ai)(sb·bi)
    gemm(m, k, n, ar, ta, br, tb, cr, false);
    gemm(m, k, n, ai, ta, bi, tb, &mut tmp, false);
    let s = sa * sb;
    for (c, t) in cr.iter_mut().zip(&tmp) {
        *c -= s * t;
    }
    // Im = ar·(sb·bi) + (sa·ai)·br
    gemm(m, k, n, ar, ta, bi, tb, ci, false);
    gemm(m, k, n, ai, ta, br, tb, &mut tmp, false);
    for (c, t) in ci.iter_mut().zip(&tmp) {
        *c = sb * *c + sa * t;
    }
    out
}

impl<'t> Var<'t> {
    /// Complex matrix product `[2, m, k] × [2, k, n] → [2, m, n]`.
    pub fn complex_matmul(self, other: Var<'t>) -> Var<'t> {
        let (a, b) = (self.value(), other.value());
        let (m, k) = dims(&a, "complex_matmul lhs");
        let (k2, n) = dims(&b, "complex_matmul rhs");
        assert_eq!(k, k2, "complex_matmul: inner dimensions {k} and {k2} differ");
        let out = cgemm(m, k, n, a.data(), false, false, b.data(), false, false);
        self.tape.op(
            Tensor::new(&[2, m, n], out),
            &[self, other],
            Box::new(move |g, need| {
                // gA = gC · Bᴴ, gB = Aᴴ · gC
                let ga = need[0].then(|| Tensor::new(&[2, m, k], cgemm(m, n, k, g.data(), false, false, b.data(), true, true)));
                let gb = need[1].then(|| Tensor::new(&[2, k, n], cgemm(k, m, n, a.data(), true, true, g.data(), false, false)));
                vec![ga, gb]
            }),
        )
    }

    /// Conjugate transpose of a complex matrix.
    pub fn adjoint(self) -> Var<'t> {
        let a = self.value();
        let (m, n) = dims(&a, "adjoint");
        let mut out = vec![0.0; 2 * m * n];
        for i in 0..m {
            for j in 0..n {
                out[j * m + i] = a.data()[i * n + j];
                out[m * n + j * m + i] = -a.data()[m * n + i * n + j];
            }
        }
        self.tape.op(
            Tensor::new(&[2, n, m], out),
            &[self],
            Box::new(move |g, _| {
                let mut d = vec![0.0; 2 * m * n];
                for i in 0..m {
                    for j in 0..n {
                        d[i * n + j] = g.data()[j * m + i];
                        d[m * n + i * n + j] = -g.data()[m * n + j * m + i];
                    }
                }
                vec![Some(Tensor::new(&[2, m, n], d))]
            }),
        )
    }

    /// `K·Kᴴ + ε·I` for a square complex `K`.
    pub fn hermitian_gram(self, eps: f64) -> Var<'t> {
        let (n, n2) = dims(&self.value(), "hermitian_gram");
        assert_eq!(n, n2, "hermitian_gram needs a square matrix");
        let mut shift = Tensor::zeros(&[2, n, n]);
        for i in 0..n {
            shift.data_mut()[i * n + i] = eps;
        }
        self.complex_matmul(self.adjoint()).add_const(&shift)
    }

    /// Columns `start..start+count` of a complex matrix.
    pub fn complex_columns(self, start: usize, count: usize) -> Var<'t> {
        let (m, n) = dims(&self.value(), "complex_columns");
        assert!(start + count <= n, "columns {start}..{} out of range for {n}", start + count);
        let mut idx = Vec::with_capacity(2 * m * count);
        for plane in 0..2 {
            for i in 0..m {
                for j in start..start + count {
                    idx.push(plane * m * n + i * n + j);
                }
            }
        }
        self.gather(idx, &[2, m, count])
    }

    /// Diagonal sums of a square complex matrix `F`: entry `k` of the
    /// `[2, 2N-1]` result is `Σ_i F[i, i + k - (N-1)]`.
    pub fn diagonal_sums(self) -> Var<'t> {
        let f = self.value();
        let (n, n2) = dims(&f, "diagonal_sums");
        assert_eq!(n, n2, "diagonal_sums needs a square matrix");
        let len = 2 * n - 1;
        let mut out = vec![0.0; 2 * len];
        for plane in 0..2 {
            for i in 0..n {
                for j in 0..n {
                    out[plane * len + j + n - 1 - i] += f.data()[plane * n * n + i * n + j];
                }
            }
        }
        self.tape.op(
            Tensor::new(&[2, len], out),
            &[self],
            Box::new(move |g, _| {
                let mut d = vec![0.0; 2 * n * n];
                for plane in 0..2 {
                    for i in 0..n {
                        for j in 0..n {
                            d[plane * n * n + i * n + j] = g.data()[plane * len + j + n - 1 - i];
                        }
                    }
                }
                vec![Some(Tensor::new(&[2, n, n], d))]
            }),
        )
    }

    /// `θ = -asin(arg(z)/π)` for each entry of a complex vector `[2, K]`, with
    /// `|arg(z)/π|` clamped to `1 - 1e-9`.
    pub fn root_angle(self) -> Var<'t> {
        let z = self.value();
        let s = z.shape();
        assert!(s.len() == 2 && s[0] == 2, "root_angle needs a complex vector [2, K], got {s:?}");
        let k = s[1];
        let limit = 1.0 - 1e-9;
        let mut theta = vec![0.0; k];
        let mut dtheta = vec![(0.0, 0.0); k];
        for i in 0..k {
            let (x, y) = (z.data()[i], z.data()[k + i]);
            let u = (y.atan2(x) / PI).clamp(-limit, limit);
            theta[i] = -u.asin();
            let r2 = (x * x + y * y).max(1e-300);
            let dt_darg = -1.0 / (PI * (1.0 - u * u).sqrt());
            dtheta[i] = (dt_darg * -y / r2, dt_darg * x / r2);
        }
        self.tape.op(
            Tensor::new(&[k], theta),
            &[self],
            Box::new(move |g, _| {
                let mut d = vec![0.0; 2 * k];
                for i in 0..k {
                    d[i] = g.data()[i] * dtheta[i].0;
                    d[k + i] = g.data()[i] * dtheta[i].1;
                }
                vec![Some(Tensor::new(&[2, k], d))]
            }),
        )
    }
}

/// Packs a complex matrix into the `[2, m, n]` encoding.
pub fn encode_matrix(m: &doa_core::CMatrix) -> Tensor {
    let (r, c) = m.shape();
    let mut data = vec![0.0; 2 * r * c];
    for i in 0..r {
        for j in 0..c {
            data[i * c + j] = m[(i, j)].re;
            data[r * c + i * c + j] = m[(i, j)].im;
        }
    }
    Tensor::new(&[2, r, c], data)
}

/// Inverse of [`encode_matrix`].
pub fn decode_matrix(t: &Tensor) -> doa_core::CMatrix {
    let (r, c) = dims(t, "decode_matrix");
    doa_core::CMatrix::from_fn(r, c, |i, j| doa_core::C64::new(t.data()[i * c + j], t.data()[r * c + i * c + j]))
}
