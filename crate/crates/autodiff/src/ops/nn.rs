//! Convolution layers and the anti-rectifier.

use crate::gemm::gemm;
use crate::tape::Var;
use crate::tensor::Tensor;

/// Patches of a `[c, h, w]` image for a `kh × kw` window: rows indexed by
/// `(c, a, b)`, columns by output position `(i, j)`.
fn im2col(x: &[f64], c: usize, h: usize, w: usize, kh: usize, kw: usize) -> Vec<f64> {
    let (ho, wo) = (h - kh + 1, w - kw + 1);
    let mut cols = vec![0.0; c * kh * kw * ho * wo];
    let mut row = 0;
    for ch in 0..c {
        for a in 0..kh {
            for b in 0..kw {
                let dst = &mut cols[row * ho * wo..(row + 1) * ho * wo];
                for i in 0..ho {
                    let src = &x[ch * h * w + (i + a) * w + b..][..wo];
                    dst[i * wo..(i + 1) * wo].copy_from_slice(src);
                }
                row += 1;
            }
        }
    }
    cols
}

/// Adjoint of [`im2col`]: scatter-adds patch columns back into an image.
fn col2im(cols: &[f64], c: usize, h: usize, w: usize, kh: usize, kw: usize) -> Vec<f64> {
    let (ho, wo) = (h - kh + 1, w - kw + 1);
    let mut x = vec![0.0; c * h * w];
    let mut row = 0;
    for ch in 0..c {
        for a in 0..kh {
            for b in 0..kw {
                let src = &cols[row * ho * wo..(row + 1) * ho * wo];
                for i in 0..ho {
                    let dst = &mut x[ch * h * w + (i + a) * w + b..][..wo];
                    for (d, s) in dst.iter_mut().zip(&src[i * wo..(i + 1) * wo]) {
                        *d += s;
                    }
                }
                row += 1;
            }
        }
    }
    x
}

fn dims3(t: &Tensor, what: &str) -> (usize, usize, usize) {
    assert_eq!(t.shape().len(), 3, "{what} must be [C, H, W], got {:?}", t.shape());
    (t.shape()[0], t.shape()[1], t.shape()[2])
}

impl<'t> Var<'t> {
    /// Valid cross-correlation, stride 1: `x [Cin, H, W]`, `weight
    /// [Cout, Cin, kh, kw]`, `bias [Cout]` → `[Cout, H-kh+1, W-kw+1]`.
    pub fn conv2d(self, weight: Var<'t>, bias: Var<'t>) -> Var<'t> {
        let (x, wt, bs) = (self.value(), weight.value(), bias.value());
        let (cin, h, w) = dims3(&x, "conv2d input");
        let ws = wt.shape().to_vec();
        assert!(ws.len() == 4 && ws[1] == cin, "conv2d weight {ws:?} does not fit {cin} input channels");
        let (cout, kh, kw) = (ws[0], ws[2], ws[3]);
        assert_eq!(bs.shape(), &[cout], "conv2d bias must be [{cout}]");
        assert!(h >= kh && w >= kw, "conv2d input {h}x{w} smaller than kernel");
        let (ho, wo) = (h - kh + 1, w - kw + 1);
        let (kk, p) = (cin * kh * kw, ho * wo);
        let cols = im2col(x.data(), cin, h, w, kh, kw);
        let mut out = vec![0.0; cout * p];
        for co in 0..cout {
            out[co * p..(co + 1) * p].fill(bs.data()[co]);
        }
        gemm(cout, kk, p, wt.data(), false, &cols, false, &mut out, true);
        self.tape.op(
            Tensor::new(&[cout, ho, wo], out),
            &[self, weight, bias],
            Box::new(move |g, need| {
                let gx = need[0].then(|| {
                    let mut gcols = vec![0.0; kk * p];
                    gemm(kk, cout, p, wt.data(), true, g.data(), false, &mut gcols, false);
                    Tensor::new(&[cin, h, w], col2im(&gcols, cin, h, w, kh, kw))
                });
                let gw = need[1].then(|| {
                    let mut d = vec![0.0; cout * kk];
                    gemm(cout, p, kk, g.data(), false, &cols, true, &mut d, false);
                    Tensor::new(&[cout, cin, kh, kw], d)
                });
                let gb = need[2].then(|| {
                    Tensor::new(&[cout], (0..cout).map(|co| g.data()[co * p..(co + 1) * p].iter().sum()).collect())
                });
                vec![gx, gw, gb]
            }),
        )
    }

    /// Transposed convolution, stride 1, no padding: `x [Cin, H, W]`,
    /// `weight [Cin, Cout, kh, kw]`, `bias [Cout]` → `[Cout, H+kh-1, W+kw-1]`.
    pub fn deconv2d(self, weight: Var<'t>, bias: Var<'t>) -> Var<'t> {
        let (x, wt, bs) = (self.value(), weight.value(), bias.value());
        let (cin, h, w) = dims3(&x, "deconv2d input");
        let ws = wt.shape().to_vec();
        assert!(ws.len() == 4 && ws[0] == cin, "deconv2d weight {ws:?} does not fit {cin} input channels");
        let (cout, kh, kw) = (ws[1], ws[2], ws[3]);
        assert_eq!(bs.shape(), &[cout], "deconv2d bias must be [{cout}]");
        let (ho, wo) = (h + kh - 1, w + kw - 1);
        let (kk, p) = (cout * kh * kw, h * w);
        let mut cols = vec![0.0; kk * p];
        gemm(kk, cin, p, wt.data(), true, x.data(), false, &mut cols, false);
        let mut out = col2im(&cols, cout, ho, wo, kh, kw);
        let plane = ho * wo;
        for co in 0..cout {
            for v in &mut out[co * plane..(co + 1) * plane] {
                *v += bs.data()[co];
            }
        }
        self.tape.op(
            Tensor::new(&[cout, ho, wo], out),
            &[self, weight, bias],
            Box::new(move |g, need| {
                let gcols = im2col(g.data(), cout, ho, wo, kh, kw);
                let gx = need[0].then(|| {
                    let mut d = vec![0.0; cin * p];
                    gemm(cin, kk, p, wt.data(), false, &gcols, false, &mut d, false);
                    Tensor::new(&[cin, h, w], d)
                });
                let gw = need[1].then(|| {
                    let mut d = vec![0.0; cin * kk];
                    gemm(cin, p, kk, x.data(), false, &gcols, true, &mut d, false);
                    Tensor::new(&[cin, cout, kh, kw], d)
                });
                let gb = need[2].then(|| {
                    Tensor::new(&[cout], (0..cout).map(|co| g.data()[co * plane..(co + 1) * plane].iter().sum()).collect())
                });
                vec![gx, gw, gb]
            }),
        )
    }

    /// Anti-rectifier `concat(relu(x), relu(-x))` along the leading axis.
    pub fn arelu(self) -> Var<'t> {
        let x = self.value();
        assert!(!x.shape().is_empty(), "arelu needs a leading axis");
        let n = x.len();
        let mut shape = x.shape().to_vec();
        shape[0] *= 2;
        let mut data = Vec::with_capacity(2 * n);
        data.extend(x.data().iter().map(|v| v.max(0.0)));
        data.extend(x.data().iter().map(|v| (-v).max(0.0)));
        let in_shape = x.shape().to_vec();
        self.tape.op(
            Tensor::new(&shape, data),
            &[self],
            Box::new(move |g, _| {
                let (pos, neg) = g.data().split_at(n);
                let d = x
                    .data()
                    .iter()
                    .zip(pos.iter().zip(neg))
                    .map(|(&v, (p, q))| if v > 0.0 { *p } else if v < 0.0 { -q } else { 0.0 })
                    .collect();
                vec![Some(Tensor::new(&in_shape, d))]
            }),
        )
    }
}
