use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::Rng as _;

use super::tape::{Tape, Var};
use super::tensor::Tensor;
use crate::error::{Error, Result};
use crate::math::sqrt;
use crate::rng::Rng;

/// Named, ordered collection of trainable tensors.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ParamSet {
    names: Vec<String>,
    tensors: Vec<Tensor>,
}

impl ParamSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, name: &str, t: Tensor) -> usize {
        assert!(self.index_of(name).is_none(), "duplicate parameter {name}");
        self.names.push(name.to_string());
        self.tensors.push(t);
        self.tensors.len() - 1
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn get(&self, name: &str) -> Option<&Tensor> {
        self.index_of(name).map(|i| &self.tensors[i])
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn tensors(&self) -> &[Tensor] {
        &self.tensors
    }

    pub fn tensors_mut(&mut self) -> &mut [Tensor] {
        &mut self.tensors
    }

    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    pub fn scalar_count(&self) -> usize {
        self.tensors.iter().map(Tensor::len).sum()
    }

    pub fn all_finite(&self) -> bool {
        self.tensors.iter().all(Tensor::all_finite)
    }

    /// `name.w` (`[inp, out]`, uniform in `±gain/sqrt(inp)`) and `name.b` (zeros).
    pub fn add_linear(&mut self, rng: &mut Rng, name: &str, inp: usize, out: usize, gain: f64) -> (usize, usize) {
        let bound = gain / sqrt(inp as f64);
        let w = uniform(rng, &[inp, out], bound);
        let wi = self.add(&alloc::format!("{name}.w"), w);
        let bi = self.add(&alloc::format!("{name}.b"), Tensor::zeros(&[out]));
        (wi, bi)
    }

    /// `name.w` (`[k, k, k, c_in, c_out]`) and `name.b`.
    pub fn add_conv(&mut self, rng: &mut Rng, name: &str, k: usize, c_in: usize, c_out: usize) -> (usize, usize) {
        let fan_in = k * k * k * c_in;
        let w = uniform(rng, &[k, k, k, c_in, c_out], 1.0 / sqrt(fan_in as f64));
        let wi = self.add(&alloc::format!("{name}.w"), w);
        let bi = self.add(&alloc::format!("{name}.b"), Tensor::zeros(&[c_out]));
        (wi, bi)
    }

    /// Checks that `other` has identical names and shapes.
    pub fn check_layout(&self, other: &ParamSet) -> Result<()> {
        if self.names != other.names {
            return Err(Error::InvalidArgument("parameter names differ".to_string()));
        }
        for (n, (a, b)) in self.names.iter().zip(self.tensors.iter().zip(&other.tensors)) {
            if a.shape != b.shape {
                return Err(Error::InvalidArgument(alloc::format!(
                    "parameter {n}: shape {:?} vs {:?}",
                    a.shape,
                    b.shape
                )));
            }
        }
        Ok(())
    }

    /// Replaces every tensor's values with those of `other` (same layout).
    pub fn load_from(&mut self, other: &ParamSet) -> Result<()> {
        self.check_layout(other)?;
        self.tensors.clone_from(&other.tensors);
        Ok(())
    }
}

fn uniform(rng: &mut Rng, shape: &[usize], bound: f64) -> Tensor {
    let mut t = Tensor::zeros(shape);
    for v in &mut t.data {
        *v = rng.random_range(-bound..=bound);
    }
    t
}

pub fn global_norm(grads: &[Tensor]) -> f64 {
    sqrt(grads.iter().map(Tensor::sq_norm).sum())
}

/// Rescales `grads` so their global L2 norm is at most `max_norm`.
/// Returns the norm before clipping.
pub fn clip_grad_norm(grads: &mut [Tensor], max_norm: f64) -> f64 {
    let n = global_norm(grads);
    if n > max_norm && n > 0.0 {
        let s = max_norm / n;
        for g in grads {
            g.scale(s);
        }
    }
    n
}

#[derive(Debug, Clone, PartialEq)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    m: Vec<Tensor>,
    v: Vec<Tensor>,
    t: u64,
}

impl Adam {
    pub fn new(params: &ParamSet, lr: f64) -> Self {
        let zeros: Vec<Tensor> = params.tensors().iter().map(|t| Tensor::zeros(&t.shape)).collect();
        Adam {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            m: zeros.clone(),
            v: zeros,
            t: 0,
        }
    }

    pub fn steps(&self) -> u64 {
        self.t
    }

    pub fn step(&mut self, params: &mut ParamSet, grads: &[Tensor]) {
        self.t += 1;
        let bc1 = 1.0 - crate::math::powi(self.beta1, self.t.min(i32::MAX as u64) as i32);
        let bc2 = 1.0 - crate::math::powi(self.beta2, self.t.min(i32::MAX as u64) as i32);
        for (((p, g), m), v) in params
            .tensors
            .iter_mut()
            .zip(grads)
            .zip(&mut self.m)
            .zip(&mut self.v)
        {
            for i in 0..p.data.len() {
                let gi = g.data[i];
                m.data[i] = self.beta1 * m.data[i] + (1.0 - self.beta1) * gi;
                v.data[i] = self.beta2 * v.data[i] + (1.0 - self.beta2) * gi * gi;
                let mh = m.data[i] / bc1;
                let vh = v.data[i] / bc2;
                p.data[i] -= self.lr * mh / (sqrt(vh) + self.eps);
            }
        }
    }
}

/// Worst relative error between taped gradients and central differences
/// with step `h`. At most `per_tensor` entries of each parameter are probed
/// (evenly strided). Relative error is `|a - n| / max(|a|, |n|, 1e-6)`.
pub fn gradient_check(params: &ParamSet, h: f64, per_tensor: usize, f: impl Fn(&mut Tape) -> Var) -> f64 {
    let analytic = {
        let mut tape = Tape::new(params);
        let loss = f(&mut tape);
        tape.backward(loss)
    };
    let eval = |p: &ParamSet| {
        let mut tape = Tape::new(p);
        let loss = f(&mut tape);
        tape.value(loss).item()
    };
    let mut work = params.clone();
    let mut worst: f64 = 0.0;
    for (ti, g) in analytic.iter().enumerate() {
        let n = g.len();
        let stride = (n / per_tensor.max(1)).max(1);
        for i in (0..n).step_by(stride) {
            let orig = work.tensors[ti].data[i];
            work.tensors[ti].data[i] = orig + h;
            let up = eval(&work);
            work.tensors[ti].data[i] = orig - h;
            let down = eval(&work);
            work.tensors[ti].data[i] = orig;
            let numeric = (up - down) / (2.0 * h);
            let a = g.data[i];
            let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-6);
            worst = worst.max(rel);
        }
    }
    worst
}
