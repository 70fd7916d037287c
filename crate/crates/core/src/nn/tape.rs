//! Reverse-mode differentiation over a linear tape of dense tensors.
//!
//! Layouts: linear weights are `[in, out]`, activations `[batch, features]`,
//! volumes channel-last `[batch, d, d, d, c]` and conv weights
//! `[k, k, k, c_in, c_out]`.

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use super::params::ParamSet;
use super::tensor::{gemm_nn, gemm_nt, gemm_tn, Tensor};
use crate::math::{exp, ln, softplus};

const HALF_LN_2PI: f64 = 0.918_938_533_204_672_8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Var(usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConvGeom {
    pub batch: usize,
    pub d_in: usize,
    pub c_in: usize,
    pub k: usize,
    pub stride: usize,
    pub pad: usize,
    pub d_out: usize,
    pub c_out: usize,
}

impl ConvGeom {
    fn patch_len(&self) -> usize {
        self.k * self.k * self.k * self.c_in
    }

    fn out_voxels(&self) -> usize {
        self.d_out * self.d_out * self.d_out
    }

    fn is_pointwise(&self) -> bool {
        self.k == 1 && self.stride == 1 && self.pad == 0
    }

    /// Calls `f(row, col_offset, input_offset)` for every in-bounds tap.
    fn for_taps(&self, mut f: impl FnMut(usize, usize, usize)) {
        let (d, c, k) = (self.d_in as isize, self.c_in, self.k);
        let vo = self.out_voxels();
        for b in 0..self.batch {
            for oz in 0..self.d_out {
                for oy in 0..self.d_out {
                    for ox in 0..self.d_out {
                        let row = b * vo + (oz * self.d_out + oy) * self.d_out + ox;
                        let mut col = 0;
                        for dz in 0..k {
                            let iz = (oz * self.stride + dz) as isize - self.pad as isize;
                            for dy in 0..k {
                                let iy = (oy * self.stride + dy) as isize - self.pad as isize;
                                for dx in 0..k {
                                    let ix = (ox * self.stride + dx) as isize - self.pad as isize;
                                    if iz >= 0 && iy >= 0 && ix >= 0 && iz < d && iy < d && ix < d {
                                        let voxel = ((b as isize * d + iz) * d + iy) * d + ix;
                                        f(row, col, voxel as usize * c);
                                    }
                                    col += c;
                                }
                            }
                        }
                    }
                }
            }
        }
    }
}

/// Precomputed trilinear lookups into a `[batch, r, r, r, c]` lattice:
/// output row `p` is `Σ weights[p][j] * lattice_row(corners[p][j])`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrilinearPlan {
    pub corners: Vec<[u32; 8]>,
    pub weights: Vec<[f64; 8]>,
}

#[derive(Debug)]
enum Op {
    Leaf,
    Param(usize),
    Linear { x: usize, w: usize, b: usize },
    Conv3d { x: usize, w: usize, b: usize, geo: ConvGeom, cols: Vec<f64> },
    Relu(usize),
    Tanh(usize),
    Sigmoid(usize),
    Clamp { x: usize, lo: f64, hi: f64 },
    Reshape(usize),
    Concat(Vec<usize>),
    Trilinear { feat: usize, plan: Arc<TrilinearPlan> },
    Add(usize, usize),
    Scale(usize, f64),
    Mean(usize),
    GaussianLogProb { mean: usize, log_std: usize, u: Vec<f64> },
    PpoClip { logp: usize, old: Vec<f64>, adv: Vec<f64>, eps: f64 },
    Mse { x: usize, target: Vec<f64> },
    BceLogits { z: usize, y: Vec<f64> },
    GaussianEntropy(usize),
    WeightedSum(Vec<(usize, f64)>),
}

struct Node {
    value: Tensor,
    op: Op,
    needs_grad: bool,
}

/// One forward pass. Parameters are read from the borrowed [`ParamSet`]
/// without copying.
pub struct Tape<'p> {
    params: &'p ParamSet,
    nodes: Vec<Node>,
}

impl<'p> Tape<'p> {
    pub fn new(params: &'p ParamSet) -> Self {
        Tape {
            params,
            nodes: Vec::new(),
        }
    }

    pub fn value(&self, v: Var) -> &Tensor {
        match self.nodes[v.0].op {
            Op::Param(i) => &self.params.tensors()[i],
            _ => &self.nodes[v.0].value,
        }
    }

    fn val(&self, i: usize) -> &Tensor {
        self.value(Var(i))
    }

    fn push(&mut self, value: Tensor, op: Op, needs_grad: bool) -> Var {
        self.nodes.push(Node {
            value,
            op,
            needs_grad,
        });
        Var(self.nodes.len() - 1)
    }

    fn ng(&self, v: Var) -> bool {
        self.nodes[v.0].needs_grad
    }

    pub fn input(&mut self, t: Tensor) -> Var {
        self.push(t, Op::Leaf, false)
    }

    pub fn param(&mut self, index: usize) -> Var {
        self.push(Tensor::default(), Op::Param(index), true)
    }

    pub fn param_named(&mut self, name: &str) -> Var {
        let i = self.params.index_of(name).unwrap_or_else(|| panic!("no parameter named {name}"));
        self.param(i)
    }

    /// `[B, in] · [in, out] + [out]`.
    pub fn linear(&mut self, x: Var, w: Var, b: Var) -> Var {
        let (xv, wv, bv) = (self.value(x), self.value(w), self.value(b));
        let (bsz, inp) = (xv.rows(), xv.row_len());
        let out = wv.shape[1];
        assert_eq!(wv.shape[0], inp, "linear: input width {inp} vs weight {:?}", wv.shape);
        let mut y = Vec::with_capacity(bsz * out);
        for _ in 0..bsz {
            y.extend_from_slice(&bv.data);
        }
        gemm_nn(&xv.data, &wv.data, &mut y, bsz, inp, out);
        let ng = self.ng(x) || self.ng(w) || self.ng(b);
        self.push(
            Tensor {
                shape: vec![bsz, out],
                data: y,
            },
            Op::Linear { x: x.0, w: w.0, b: b.0 },
            ng,
        )
    }

    /// Cubic 3D convolution over `[B, d, d, d, c_in]` with zero padding.
    pub fn conv3d(&mut self, x: Var, w: Var, b: Var, stride: usize, pad: usize) -> Var {
        let (xv, wv, bv) = (self.value(x), self.value(w), self.value(b));
        assert_eq!(xv.shape.len(), 5, "conv3d input must be [B, d, d, d, c]");
        let (k, c_in, c_out) = (wv.shape[0], wv.shape[3], wv.shape[4]);
        assert_eq!(xv.shape[4], c_in);
        let d_in = xv.shape[1];
        let geo = ConvGeom {
            batch: xv.shape[0],
            d_in,
            c_in,
            k,
            stride,
            pad,
            d_out: (d_in + 2 * pad - k) / stride + 1,
            c_out,
        };
        let rows = geo.batch * geo.out_voxels();
        let kk = geo.patch_len();
        let cols = if geo.is_pointwise() {
            Vec::new()
        } else {
            let mut cols = vec![0.0; rows * kk];
            geo.for_taps(|row, col, off| {
                cols[row * kk + col..row * kk + col + c_in].copy_from_slice(&xv.data[off..off + c_in]);
            });
            cols
        };
        let mut y = Vec::with_capacity(rows * c_out);
        for _ in 0..rows {
            y.extend_from_slice(&bv.data);
        }
        let a = if geo.is_pointwise() { &xv.data } else { &cols };
        gemm_nn(a, &wv.data, &mut y, rows, kk, c_out);
        let ng = self.ng(x) || self.ng(w) || self.ng(b);
        let d = geo.d_out;
        self.push(
            Tensor {
                shape: vec![geo.batch, d, d, d, c_out],
                data: y,
            },
            Op::Conv3d {
                x: x.0,
                w: w.0,
                b: b.0,
                geo,
                cols,
            },
            ng,
        )
    }

    fn unary(&mut self, x: Var, f: impl Fn(f64) -> f64, op: Op) -> Var {
        let xv = self.value(x);
        let t = Tensor {
            shape: xv.shape.clone(),
            data: xv.data.iter().map(|&v| f(v)).collect(),
        };
        let ng = self.ng(x);
        self.push(t, op, ng)
    }

    pub fn relu(&mut self, x: Var) -> Var {
        self.unary(x, |v| v.max(0.0), Op::Relu(x.0))
    }

    pub fn tanh(&mut self, x: Var) -> Var {
        self.unary(x, crate::math::tanh, Op::Tanh(x.0))
    }

    pub fn sigmoid(&mut self, x: Var) -> Var {
        self.unary(x, sigmoid, Op::Sigmoid(x.0))
    }

    /// Elementwise clamp; the gradient passes only strictly inside.
    pub fn clamp(&mut self, x: Var, lo: f64, hi: f64) -> Var {
        self.unary(x, |v| v.clamp(lo, hi), Op::Clamp { x: x.0, lo, hi })
    }

    pub fn reshape(&mut self, x: Var, shape: &[usize]) -> Var {
        let xv = self.value(x);
        assert_eq!(shape.iter().product::<usize>(), xv.len(), "reshape size mismatch");
        let t = Tensor {
            shape: shape.to_vec(),
            data: xv.data.clone(),
        };
        let ng = self.ng(x);
        self.push(t, Op::Reshape(x.0), ng)
    }

    /// Concatenates `[B, n_i]` blocks along the feature axis.
    pub fn concat(&mut self, xs: &[Var]) -> Var {
        let b = self.value(xs[0]).rows();
        let widths: Vec<usize> = xs.iter().map(|&x| self.value(x).row_len()).collect();
        let total: usize = widths.iter().sum();
        let mut data = Vec::with_capacity(b * total);
        for r in 0..b {
            for &x in xs {
                let v = self.value(x);
                assert_eq!(v.rows(), b, "concat batch mismatch");
                data.extend_from_slice(v.row(r));
            }
        }
        let ng = xs.iter().any(|&x| self.ng(x));
        self.push(
            Tensor {
                shape: vec![b, total],
                data,
            },
            Op::Concat(xs.iter().map(|x| x.0).collect()),
            ng,
        )
    }

    /// Gathers interpolated lattice features: `[points, c]`.
    pub fn trilinear(&mut self, feat: Var, plan: Arc<TrilinearPlan>) -> Var {
        let fv = self.value(feat);
        let c = *fv.shape.last().expect("lattice has channels");
        let mut out = vec![0.0; plan.corners.len() * c];
        for (p, (cs, ws)) in plan.corners.iter().zip(&plan.weights).enumerate() {
            let o = &mut out[p * c..(p + 1) * c];
            for (&node, &w) in cs.iter().zip(ws) {
                if w == 0.0 {
                    continue;
                }
                let src = &fv.data[node as usize * c..(node as usize + 1) * c];
                for (ov, sv) in o.iter_mut().zip(src) {
                    *ov += w * sv;
                }
            }
        }
        let ng = self.ng(feat);
        self.push(
            Tensor {
                shape: vec![plan.corners.len(), c],
                data: out,
            },
            Op::Trilinear { feat: feat.0, plan },
            ng,
        )
    }

    pub fn add(&mut self, a: Var, b: Var) -> Var {
        let (av, bv) = (self.value(a), self.value(b));
        assert_eq!(av.len(), bv.len(), "add size mismatch");
        let t = Tensor {
            shape: av.shape.clone(),
            data: av.data.iter().zip(&bv.data).map(|(x, y)| x + y).collect(),
        };
        let ng = self.ng(a) || self.ng(b);
        self.push(t, Op::Add(a.0, b.0), ng)
    }

    pub fn scale(&mut self, x: Var, s: f64) -> Var {
        self.unary(x, |v| v * s, Op::Scale(x.0, s))
    }

    pub fn mean(&mut self, x: Var) -> Var {
        let xv = self.value(x);
        let m = xv.data.iter().sum::<f64>() / xv.len() as f64;
        let ng = self.ng(x);
        self.push(Tensor::scalar(m), Op::Mean(x.0), ng)
    }

    /// Per-row diagonal Gaussian log-density of the constant samples `u`
    /// (`[B, A]`) under `mean` (`[B, A]`) and `log_std` (`[A]`): `[B]`.
    pub fn gaussian_log_prob(&mut self, mean: Var, log_std: Var, u: Vec<f64>) -> Var {
        let (mv, lv) = (self.value(mean), self.value(log_std));
        let (b, a) = (mv.rows(), mv.row_len());
        assert_eq!(lv.len(), a);
        assert_eq!(u.len(), b * a);
        let mut out = vec![0.0; b];
        for (r, o) in out.iter_mut().enumerate() {
            for j in 0..a {
                let z = (u[r * a + j] - mv.data[r * a + j]) * exp(-lv.data[j]);
                *o += -0.5 * z * z - lv.data[j] - HALF_LN_2PI;
            }
        }
        let ng = self.ng(mean) || self.ng(log_std);
        self.push(
            Tensor {
                shape: vec![b],
                data: out,
            },
            Op::GaussianLogProb {
                mean: mean.0,
                log_std: log_std.0,
                u,
            },
            ng,
        )
    }

    /// `-mean(min(ρA, clip(ρ, 1-ε, 1+ε)A))` with `ρ = exp(logp - old)`.
    pub fn ppo_clip(&mut self, logp: Var, old: Vec<f64>, adv: Vec<f64>, eps: f64) -> Var {
        let lv = self.value(logp);
        let n = lv.len();
        let mut s = 0.0;
        for i in 0..n {
            let rho = exp(lv.data[i] - old[i]);
            let s1 = rho * adv[i];
            let s2 = rho.clamp(1.0 - eps, 1.0 + eps) * adv[i];
            s += s1.min(s2);
        }
        let ng = self.ng(logp);
        self.push(
            Tensor::scalar(-s / n as f64),
            Op::PpoClip {
                logp: logp.0,
                old,
                adv,
                eps,
            },
            ng,
        )
    }

    /// `mean((x - target)²)`.
    pub fn mse(&mut self, x: Var, target: Vec<f64>) -> Var {
        let xv = self.value(x);
        assert_eq!(xv.len(), target.len());
        let m = xv
            .data
            .iter()
            .zip(&target)
            .map(|(a, t)| (a - t) * (a - t))
            .sum::<f64>()
            / target.len() as f64;
        let ng = self.ng(x);
        self.push(Tensor::scalar(m), Op::Mse { x: x.0, target }, ng)
    }

    /// Mean binary cross-entropy of `sigmoid(z)` against labels `y`,
    /// evaluated in the numerically stable logit form.
    pub fn bce_logits(&mut self, z: Var, y: Vec<f64>) -> Var {
        let zv = self.value(z);
        assert_eq!(zv.len(), y.len());
        let m = zv
            .data
            .iter()
            .zip(&y)
            .map(|(&z, &y)| softplus(z) - y * z)
            .sum::<f64>()
            / y.len() as f64;
        let ng = self.ng(z);
        self.push(Tensor::scalar(m), Op::BceLogits { z: z.0, y }, ng)
    }

    /// Entropy of a diagonal Gaussian with the given log-stds.
    pub fn gaussian_entropy(&mut self, log_std: Var) -> Var {
        let lv = self.value(log_std);
        let h = lv.data.iter().map(|l| l + 0.5 + HALF_LN_2PI).sum();
        let ng = self.ng(log_std);
        self.push(Tensor::scalar(h), Op::GaussianEntropy(log_std.0), ng)
    }

    /// `Σ c_i x_i` over scalar nodes.
    pub fn weighted_sum(&mut self, terms: &[(Var, f64)]) -> Var {
        let s = terms.iter().map(|&(v, c)| c * self.value(v).item()).sum();
        let ng = terms.iter().any(|&(v, _)| self.ng(v));
        self.push(
            Tensor::scalar(s),
            Op::WeightedSum(terms.iter().map(|&(v, c)| (v.0, c)).collect()),
            ng,
        )
    }

    /// Gradients of the scalar `loss` with respect to every parameter, in
    /// [`ParamSet`] order (zeros for parameters not on the tape).
    pub fn backward(&self, loss: Var) -> Vec<Tensor> {
        let mut grads: Vec<Option<Tensor>> = (0..self.nodes.len()).map(|_| None).collect();
        let lv = self.value(loss);
        grads[loss.0] = Some(Tensor::full(&lv.shape, 1.0));
        let mut out: Vec<Tensor> = self.params.tensors().iter().map(|t| Tensor::zeros(&t.shape)).collect();

        for i in (0..=loss.0).rev() {
            let Some(g) = grads[i].take() else { continue };
            if !self.nodes[i].needs_grad {
                continue;
            }
            let y = &self.nodes[i].value;
            match &self.nodes[i].op {
                Op::Leaf => {}
                Op::Param(p) => out[*p].add_assign(&g),
                Op::Linear { x, w, b } => {
                    let (xv, wv) = (self.val(*x), self.val(*w));
                    let (bsz, inp, outw) = (xv.rows(), xv.row_len(), wv.shape[1]);
                    if self.nodes[*x].needs_grad {
                        let mut dx = Tensor::zeros(&xv.shape);
                        gemm_nt(&g.data, &wv.data, &mut dx.data, bsz, outw, inp);
                        accumulate(&mut grads, *x, dx);
                    }
                    if self.nodes[*w].needs_grad {
                        let mut dw = Tensor::zeros(&wv.shape);
                        gemm_tn(&xv.data, &g.data, &mut dw.data, bsz, inp, outw);
                        accumulate(&mut grads, *w, dw);
                    }
                    if self.nodes[*b].needs_grad {
                        accumulate(&mut grads, *b, column_sums(&g.data, outw));
                    }
                }
                Op::Conv3d { x, w, b, geo, cols } => {
                    let (xv, wv) = (self.val(*x), self.val(*w));
                    let rows = geo.batch * geo.out_voxels();
                    let kk = geo.patch_len();
                    if self.nodes[*w].needs_grad {
                        let a = if geo.is_pointwise() { &xv.data } else { cols };
                        let mut dw = Tensor::zeros(&wv.shape);
                        gemm_tn(a, &g.data, &mut dw.data, rows, kk, geo.c_out);
                        accumulate(&mut grads, *w, dw);
                    }
                    if self.nodes[*b].needs_grad {
                        accumulate(&mut grads, *b, column_sums(&g.data, geo.c_out));
                    }
                    if self.nodes[*x].needs_grad {
                        let mut dcols = vec![0.0; rows * kk];
                        gemm_nt(&g.data, &wv.data, &mut dcols, rows, geo.c_out, kk);
                        let dx = if geo.is_pointwise() {
                            Tensor {
                                shape: xv.shape.clone(),
                                data: dcols,
                            }
                        } else {
                            let mut dx = Tensor::zeros(&xv.shape);
                            let c = geo.c_in;
                            geo.for_taps(|row, col, off| {
                                let src = &dcols[row * kk + col..row * kk + col + c];
                                for (d, s) in dx.data[off..off + c].iter_mut().zip(src) {
                                    *d += s;
                                }
                            });
                            dx
                        };
                        accumulate(&mut grads, *x, dx);
                    }
                }
                Op::Relu(x) => {
                    let d = zip_map(&g, y, |g, y| if y > 0.0 { g } else { 0.0 });
                    accumulate(&mut grads, *x, d);
                }
                Op::Tanh(x) => {
                    let d = zip_map(&g, y, |g, y| g * (1.0 - y * y));
                    accumulate(&mut grads, *x, d);
                }
                Op::Sigmoid(x) => {
                    let d = zip_map(&g, y, |g, y| g * y * (1.0 - y));
                    accumulate(&mut grads, *x, d);
                }
                Op::Clamp { x, lo, hi } => {
                    let xv = self.val(*x);
                    let d = zip_map(&g, xv, |g, v| if v > *lo && v < *hi { g } else { 0.0 });
                    accumulate(&mut grads, *x, d);
                }
                Op::Reshape(x) => {
                    let d = Tensor {
                        shape: self.val(*x).shape.clone(),
                        data: g.data,
                    };
                    accumulate(&mut grads, *x, d);
                }
                Op::Concat(xs) => {
                    let b = y.rows();
                    let total = y.row_len();
                    let mut off = 0;
                    for &x in xs {
                        let xv = self.val(x);
                        let w = xv.row_len();
                        if self.nodes[x].needs_grad {
                            let mut d = Tensor::zeros(&xv.shape);
                            for r in 0..b {
                                d.data[r * w..(r + 1) * w].copy_from_slice(&g.data[r * total + off..r * total + off + w]);
                            }
                            accumulate(&mut grads, x, d);
                        }
                        off += w;
                    }
                }
                Op::Trilinear { feat, plan } => {
                    let fv = self.val(*feat);
                    let c = *fv.shape.last().unwrap_or(&1);
                    let mut d = Tensor::zeros(&fv.shape);
                    for (p, (cs, ws)) in plan.corners.iter().zip(&plan.weights).enumerate() {
                        let gp = &g.data[p * c..(p + 1) * c];
                        for (&node, &w) in cs.iter().zip(ws) {
                            if w == 0.0 {
                                continue;
                            }
                            let dst = &mut d.data[node as usize * c..(node as usize + 1) * c];
                            for (dv, gv) in dst.iter_mut().zip(gp) {
                                *dv += w * gv;
                            }
                        }
                    }
                    accumulate(&mut grads, *feat, d);
                }
                Op::Add(a, b) => {
                    if self.nodes[*a].needs_grad {
                        accumulate(&mut grads, *a, g.clone());
                    }
                    if self.nodes[*b].needs_grad {
                        accumulate(&mut grads, *b, g);
                    }
                }
                Op::Scale(x, s) => {
                    let mut d = g;
                    d.scale(*s);
                    accumulate(&mut grads, *x, d);
                }
                Op::Mean(x) => {
                    let xv = self.val(*x);
                    accumulate(&mut grads, *x, Tensor::full(&xv.shape, g.item() / xv.len() as f64));
                }
                Op::GaussianLogProb { mean, log_std, u } => {
                    let (mv, lv) = (self.val(*mean), self.val(*log_std));
                    let (b, a) = (mv.rows(), mv.row_len());
                    let mut dm = Tensor::zeros(&mv.shape);
                    let mut dl = Tensor::zeros(&lv.shape);
                    for r in 0..b {
                        for j in 0..a {
                            let inv = exp(-lv.data[j]);
                            let z = (u[r * a + j] - mv.data[r * a + j]) * inv;
                            dm.data[r * a + j] = g.data[r] * z * inv;
                            dl.data[j] += g.data[r] * (z * z - 1.0);
                        }
                    }
                    if self.nodes[*mean].needs_grad {
                        accumulate(&mut grads, *mean, dm);
                    }
                    if self.nodes[*log_std].needs_grad {
                        accumulate(&mut grads, *log_std, dl);
                    }
                }
                Op::PpoClip { logp, old, adv, eps } => {
                    let lv = self.val(*logp);
                    let n = lv.len() as f64;
                    let mut d = Tensor::zeros(&lv.shape);
                    for i in 0..lv.len() {
                        let rho = exp(lv.data[i] - old[i]);
                        let s1 = rho * adv[i];
                        let s2 = rho.clamp(1.0 - eps, 1.0 + eps) * adv[i];
                        if s1 <= s2 {
                            d.data[i] = -g.item() * adv[i] * rho / n;
                        }
                    }
                    accumulate(&mut grads, *logp, d);
                }
                Op::Mse { x, target } => {
                    let xv = self.val(*x);
                    let n = target.len() as f64;
                    let d = Tensor {
                        shape: xv.shape.clone(),
                        data: xv
                            .data
                            .iter()
                            .zip(target)
                            .map(|(a, t)| g.item() * 2.0 * (a - t) / n)
                            .collect(),
                    };
                    accumulate(&mut grads, *x, d);
                }
                Op::BceLogits { z, y: labels } => {
                    let zv = self.val(*z);
                    let n = labels.len() as f64;
                    let d = Tensor {
                        shape: zv.shape.clone(),
                        data: zv
                            .data
                            .iter()
                            .zip(labels)
                            .map(|(&z, &t)| g.item() * (sigmoid(z) - t) / n)
                            .collect(),
                    };
                    accumulate(&mut grads, *z, d);
                }
                Op::GaussianEntropy(x) => {
                    let xv = self.val(*x);
                    accumulate(&mut grads, *x, Tensor::full(&xv.shape, g.item()));
                }
                Op::WeightedSum(terms) => {
                    for &(x, c) in terms {
                        if self.nodes[x].needs_grad {
                            accumulate(&mut grads, x, Tensor::scalar(c * g.item()));
                        }
                    }
                }
            }
        }
        out
    }
}

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + exp(-x))
    } else {
        let e = exp(x);
        e / (1.0 + e)
    }
}

/// Mean binary cross-entropy on probabilities clamped to `[1e-7, 1 - 1e-7]`.
pub fn bce(p: &[f64], y: &[f64]) -> f64 {
    let s: f64 = p
        .iter()
        .zip(y)
        .map(|(&p, &y)| {
            let p = p.clamp(1e-7, 1.0 - 1e-7);
            -(y * ln(p) + (1.0 - y) * ln(1.0 - p))
        })
        .sum();
    s / p.len().max(1) as f64
}

fn accumulate(grads: &mut [Option<Tensor>], i: usize, d: Tensor) {
    match &mut grads[i] {
        Some(g) => g.add_assign(&d),
        slot => *slot = Some(d),
    }
}

fn zip_map(g: &Tensor, y: &Tensor, f: impl Fn(f64, f64) -> f64) -> Tensor {
    Tensor {
        shape: y.shape.clone(),
        data: g.data.iter().zip(&y.data).map(|(&a, &b)| f(a, b)).collect(),
    }
}

fn column_sums(data: &[f64], n: usize) -> Tensor {
    let mut s = vec![0.0; n];
    for row in data.chunks_exact(n) {
        for (a, b) in s.iter_mut().zip(row) {
            *a += b;
        }
    }
    Tensor {
        shape: vec![n],
        data: s,
    }
}
