//! Elementwise arithmetic, reductions and shape manipulation.

use std::f64::consts::PI;

use crate::gemm::gemm;
use crate::tape::Var;
use crate::tensor::Tensor;

fn check_same(a: &Tensor, b: &Tensor, op: &str) {
    assert_eq!(a.shape(), b.shape(), "{op}: shape mismatch {:?} vs {:?}", a.shape(), b.shape());
}

impl<'t> Var<'t> {
    pub fn add(self, other: Var<'t>) -> Var<'t> {
        let (a, b) = (self.value(), other.value());
        check_same(&a, &b, "add");
        let out = Tensor::new(a.shape(), a.data().iter().zip(b.data()).map(|(x, y)| x + y).collect());
        self.tape.op(out, &[self, other], Box::new(|g, _| vec![Some(g.clone()), Some(g.clone())]))
    }

    pub fn sub(self, other: Var<'t>) -> Var<'t> {
        let (a, b) = (self.value(), other.value());
        check_same(&a, &b, "sub");
        let out = Tensor::new(a.shape(), a.data().iter().zip(b.data()).map(|(x, y)| x - y).collect());
        self.tape.op(out, &[self, other], Box::new(|g, _| vec![Some(g.clone()), Some(g.map(|x| -x))]))
    }

    /// Elementwise product.
    pub fn mul(self, other: Var<'t>) -> Var<'t> {
        let (a, b) = (self.value(), other.value());
        check_same(&a, &b, "mul");
        let out = Tensor::new(a.shape(), a.data().iter().zip(b.data()).map(|(x, y)| x * y).collect());
        self.tape.op(
            out,
            &[self, other],
            Box::new(move |g, need| {
                let ga = need[0].then(|| Tensor::new(g.shape(), g.data().iter().zip(b.data()).map(|(u, v)| u * v).collect()));
                let gb = need[1].then(|| Tensor::new(g.shape(), g.data().iter().zip(a.data()).map(|(u, v)| u * v).collect()));
                vec![ga, gb]
            }),
        )
    }

    pub fn scale(self, c: f64) -> Var<'t> {
        let out = self.value().map(|x| c * x);
        self.tape.op(out, &[self], Box::new(move |g, _| vec![Some(g.map(|x| c * x))]))
    }

    pub fn neg(self) -> Var<'t> {
        self.scale(-1.0)
    }

    /// Adds a constant tensor of the same shape.
    pub fn add_const(self, c: &Tensor) -> Var<'t> {
        let a = self.value();
        check_same(&a, c, "add_const");
        let out = Tensor::new(a.shape(), a.data().iter().zip(c.data()).map(|(x, y)| x + y).collect());
        self.tape.op(out, &[self], Box::new(|g, _| vec![Some(g.clone())]))
    }

    pub fn add_scalar(self, c: f64) -> Var<'t> {
        let out = self.value().map(|x| x + c);
        self.tape.op(out, &[self], Box::new(|g, _| vec![Some(g.clone())]))
    }

    pub fn relu(self) -> Var<'t> {
        let a = self.value();
        let out = a.map(|x| x.max(0.0));
        self.tape.op(
            out,
            &[self],
            Box::new(move |g, _| {
                let d = g.data().iter().zip(a.data()).map(|(u, &x)| if x > 0.0 { *u } else { 0.0 }).collect();
                vec![Some(Tensor::new(g.shape(), d))]
            }),
        )
    }

    pub fn square(self) -> Var<'t> {
        let a = self.value();
        let out = a.map(|x| x * x);
        self.tape.op(
            out,
            &[self],
            Box::new(move |g, _| {
                let d = g.data().iter().zip(a.data()).map(|(u, x)| 2.0 * x * u).collect();
                vec![Some(Tensor::new(g.shape(), d))]
            }),
        )
    }

    /// Square root; the gradient at exactly zero is taken as zero.
    pub fn sqrt(self) -> Var<'t> {
        let out = self.value().map(f64::sqrt);
        let y = out.clone();
        self.tape.op(
            out,
            &[self],
            Box::new(move |g, _| {
                let d = g.data().iter().zip(y.data()).map(|(u, &s)| if s > 0.0 { u / (2.0 * s) } else { 0.0 }).collect();
                vec![Some(Tensor::new(g.shape(), d))]
            }),
        )
    }

    /// `d - π·round(d/π)`, mapping angle differences into `[-π/2, π/2]`. The
    /// rounding is piecewise constant, so the gradient passes through.
    pub fn wrap_pi(self) -> Var<'t> {
        let out = self.value().map(|d| d - PI * (d / PI).round());
        self.tape.op(out, &[self], Box::new(|g, _| vec![Some(g.clone())]))
    }

    pub fn sum(self) -> Var<'t> {
        let a = self.value();
        let shape = a.shape().to_vec();
        let out = Tensor::scalar(a.data().iter().sum());
        self.tape.op(out, &[self], Box::new(move |g, _| vec![Some(Tensor::full(&shape, g.item()))]))
    }

    pub fn mean(self) -> Var<'t> {
        let n = self.value().len() as f64;
        self.sum().scale(1.0 / n)
    }

    pub fn reshape(self, shape: &[usize]) -> Var<'t> {
        let a = self.value();
        let old = a.shape().to_vec();
        let out = (*a).clone().reshaped(shape);
        self.tape.op(out, &[self], Box::new(move |g, _| vec![Some(g.clone().reshaped(&old))]))
    }

    /// `out.flat[i] = self.flat[indices[i]]`, reshaped to `shape`. Indices may
    /// repeat; their gradients accumulate.
    pub fn gather(self, indices: Vec<usize>, shape: &[usize]) -> Var<'t> {
        let a = self.value();
        let src_shape = a.shape().to_vec();
        let data = indices
            .iter()
            .map(|&i| {
                assert!(i < a.len(), "gather index {i} out of bounds for {} values", a.len());
                a.data()[i]
            })
            .collect();
        let out = Tensor::new(shape, data);
        self.tape.op(
            out,
            &[self],
            Box::new(move |g, _| {
                let mut d = Tensor::zeros(&src_shape);
                for (&i, u) in indices.iter().zip(g.data()) {
                    d.data_mut()[i] += u;
                }
                vec![Some(d)]
            }),
        )
    }

    /// Contiguous flat range `[offset, offset + prod(shape))`.
    pub fn slice_flat(self, offset: usize, shape: &[usize]) -> Var<'t> {
        let len: usize = shape.iter().product();
        self.gather((offset..offset + len).collect(), shape)
    }

    /// Real matrix product of `[m, k]` and `[k, n]`.
    pub fn matmul(self, other: Var<'t>) -> Var<'t> {
        let (a, b) = (self.value(), other.value());
        assert!(a.shape().len() == 2 && b.shape().len() == 2, "matmul needs 2-D operands");
        let (m, k) = (a.shape()[0], a.shape()[1]);
        let (k2, n) = (b.shape()[0], b.shape()[1]);
        assert_eq!(k, k2, "matmul: inner dimensions {k} and {k2} differ");
        let mut c = vec![0.0; m * n];
        gemm(m, k, n, a.data(), false, b.data(), false, &mut c, false);
        self.tape.op(
            Tensor::new(&[m, n], c),
            &[self, other],
            Box::new(move |g, need| {
                let ga = need[0].then(|| {
                    let mut d = vec![0.0; m * k];
                    gemm(m, n, k, g.data(), false, b.data(), true, &mut d, false);
                    Tensor::new(&[m, k], d)
                });
                let gb = need[1].then(|| {
                    let mut d = vec![0.0; k * n];
                    gemm(k, m, n, a.data(), true, g.data(), false, &mut d, false);
                    Tensor::new(&[k, n], d)
                });
                vec![ga, gb]
            }),
        )
    }
}

/// Concatenation along the leading axis.
pub fn concat<'t>(parts: &[Var<'t>]) -> Var<'t> {
    assert!(!parts.is_empty(), "concat of nothing");
    let values: Vec<_> = parts.iter().map(|p| p.value()).collect();
    let tail = values[0].shape().get(1..).unwrap_or(&[]).to_vec();
    let mut lead = 0;
    let mut data = Vec::new();
    let mut sizes = Vec::with_capacity(parts.len());
    for v in &values {
        assert!(!v.shape().is_empty() && v.shape()[1..] == tail[..], "concat: incompatible shape {:?}", v.shape());
        lead += v.shape()[0];
        data.extend_from_slice(v.data());
        sizes.push((v.shape().to_vec(), v.len()));
    }
    let mut shape = vec![lead];
    shape.extend_from_slice(&tail);
    parts[0].tape.op(
        Tensor::new(&shape, data),
        parts,
        Box::new(move |g, need| {
            let mut offset = 0;
            sizes
                .iter()
                .zip(need)
                .map(|((shape, len), &n)| {
                    let piece = n.then(|| Tensor::new(shape, g.data()[offset..offset + len].to_vec()));
                    offset += len;
                    piece
                })
                .collect()
        }),
    )
}

#[cfg(test)]
mod tests {
    use crate::gradcheck::assert_gradients;
    use crate::tape::Tape;
    use crate::tensor::Tensor;

    #[test]
    fn forward_values() {
        let tape = Tape::new();
        let a = tape.leaf(Tensor::new(&[3], vec![1.0, -2.0, 3.0]));
        let b = tape.leaf(Tensor::new(&[3], vec![0.5, 4.0, -1.0]));
        assert_eq!(a.add(b).value().data(), &[1.5, 2.0, 2.0]);
        assert_eq!(a.mul(b).value().data(), &[0.5, -8.0, -3.0]);
        assert_eq!(a.relu().value().data(), &[1.0, 0.0, 3.0]);
        assert_eq!(a.sum().item(), 2.0);
        let w = tape.leaf(Tensor::new(&[2], vec![4.0, -4.0])).wrap_pi();
        assert!((w.value().data()[0] - (4.0 - std::f64::consts::PI)).abs() < 1e-15);
    }

    #[test]
    fn elementwise_gradients() {
        for seed in 0..10 {
            assert_gradients(&[&[5], &[5]], seed, |_, v| v[0].mul(v[1]).add(v[0].square()).sub(v[1].scale(0.3)).sum());
            assert_gradients(&[&[6]], seed, |_, v| v[0].relu().add_scalar(0.5).sqrt().sum());
            assert_gradients(&[&[4]], seed, |_, v| v[0].scale(2.5).wrap_pi().square().mean());
        }
    }

    #[test]
    fn matmul_gradients() {
        for seed in 0..10 {
            assert_gradients(&[&[3, 4], &[4, 2]], seed, |_, v| v[0].matmul(v[1]).square().sum());
        }
    }

    #[test]
    fn shape_op_gradients() {
        for seed in 0..10 {
            assert_gradients(&[&[2, 3], &[1, 3]], seed, |_, v| {
                let c = super::concat(&[v[0], v[1]]);
                let r = c.reshape(&[9]).gather(vec![8, 0, 0, 4, 2], &[5]);
                r.mul(r).sum().add(c.slice_flat(3, &[3]).sum())
            });
        }
    }

    #[test]
    #[should_panic(expected = "shape mismatch")]
    fn mismatched_add_panics() {
        let tape = Tape::new();
        let a = tape.leaf(Tensor::zeros(&[2]));
        let b = tape.leaf(Tensor::zeros(&[3]));
        let _ = a.add(b);
    }
}
