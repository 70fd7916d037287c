use super::*;
use crate::rng::rng_from_seed;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use rand::Rng as _;

const H: f64 = 1e-5;
const TOL: f64 = 1e-4;

fn rand_tensor(seed: u64, shape: &[usize]) -> Tensor {
    let mut r = rng_from_seed(seed);
    let mut t = Tensor::zeros(shape);
    for v in &mut t.data {
        *v = r.random_range(-1.0..1.0);
    }
    t
}

#[test]
fn linear_tanh_sigmoid_relu_gradients() {
    let mut rng = rng_from_seed(1);
    let mut p = ParamSet::new();
    p.add_linear(&mut rng, "l1", 6, 5, 1.0);
    p.add_linear(&mut rng, "l2", 5, 4, 1.0);
    p.add_linear(&mut rng, "l3", 4, 3, 1.0);
    let x = rand_tensor(2, &[7, 6]);
    let target: Vec<f64> = rand_tensor(3, &[21]).data;
    let err = gradient_check(&p, H, 64, |t| {
        let xi = t.input(x.clone());
        let (w, b) = (t.param_named("l1.w"), t.param_named("l1.b"));
        let h = t.linear(xi, w, b);
        let h = t.tanh(h);
        let (w, b) = (t.param_named("l2.w"), t.param_named("l2.b"));
        let h = t.linear(h, w, b);
        let h = t.relu(h);
        let (w, b) = (t.param_named("l3.w"), t.param_named("l3.b"));
        let h = t.linear(h, w, b);
        let h = t.sigmoid(h);
        t.mse(h, target.clone())
    });
    assert!(err < TOL, "rel err {err}");
}

fn naive_conv(x: &Tensor, w: &Tensor, b: &Tensor, stride: usize, pad: usize) -> Tensor {
    let (n, d, c_in) = (x.shape[0], x.shape[1], x.shape[4]);
    let (k, c_out) = (w.shape[0], w.shape[4]);
    let d_out = (d + 2 * pad - k) / stride + 1;
    let mut y = Tensor::zeros(&[n, d_out, d_out, d_out, c_out]);
    for bi in 0..n {
        for oz in 0..d_out {
            for oy in 0..d_out {
                for ox in 0..d_out {
                    for co in 0..c_out {
                        let mut s = b.data[co];
                        for dz in 0..k {
                            for dy in 0..k {
                                for dx in 0..k {
                                    let iz = (oz * stride + dz) as isize - pad as isize;
                                    let iy = (oy * stride + dy) as isize - pad as isize;
                                    let ix = (ox * stride + dx) as isize - pad as isize;
                                    let d = d as isize;
                                    if iz < 0 || iy < 0 || ix < 0 || iz >= d || iy >= d || ix >= d {
                                        continue;
                                    }
                                    for ci in 0..c_in {
                                        let xo = ((((bi as isize * d + iz) * d + iy) * d + ix) as usize) * c_in + ci;
                                        let wo = (((dz * k + dy) * k + dx) * c_in + ci) * c_out + co;
                                        s += x.data[xo] * w.data[wo];
                                    }
                                }
                            }
                        }
                        let yo = (((bi * d_out + oz) * d_out + oy) * d_out + ox) * c_out + co;
                        y.data[yo] = s;
                    }
                }
            }
        }
    }
    y
}

#[test]
fn conv_matches_direct_convolution() {
    for &(k, stride, pad) in &[(3, 1, 1), (2, 2, 0), (3, 2, 1), (1, 1, 0)] {
        let mut rng = rng_from_seed(k as u64 * 10 + stride as u64);
        let mut p = ParamSet::new();
        p.add_conv(&mut rng, "c", k, 2, 3);
        p.tensors_mut()[1] = rand_tensor(9, &[3]);
        let x = rand_tensor(4, &[2, 5, 5, 5, 2]);
        let mut t = Tape::new(&p);
        let xi = t.input(x.clone());
        let (w, b) = (t.param(0), t.param(1));
        let y = t.conv3d(xi, w, b, stride, pad);
        let want = naive_conv(&x, &p.tensors()[0], &p.tensors()[1], stride, pad);
        assert_eq!(t.value(y).shape, want.shape);
        for (a, b) in t.value(y).data.iter().zip(&want.data) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}

#[test]
fn stacked_conv_gradients() {
    // the second conv's input gradient feeds the first conv's weights
    for &(k, stride, pad) in &[(3, 1, 1), (2, 2, 0), (3, 2, 1), (1, 1, 0)] {
        let mut rng = rng_from_seed(20 + k as u64);
        let mut p = ParamSet::new();
        p.add_conv(&mut rng, "c1", 3, 1, 2);
        p.add_conv(&mut rng, "c2", k, 2, 3);
        p.tensors_mut()[1] = rand_tensor(5, &[2]);
        let x = rand_tensor(6, &[2, 4, 4, 4, 1]);
        let err = gradient_check(&p, H, 40, |t| {
            let xi = t.input(x.clone());
            let (w, b) = (t.param(0), t.param(1));
            let h = t.conv3d(xi, w, b, 1, 1);
            let h = t.tanh(h);
            let (w, b) = (t.param(2), t.param(3));
            let h = t.conv3d(h, w, b, stride, pad);
            let h = t.tanh(h);
            let n = t.value(h).len();
            let flat = t.reshape(h, &[n]);
            t.mse(flat, vec![0.3; n])
        });
        assert!(err < TOL, "k{k} s{stride} p{pad}: rel err {err}");
    }
}

#[test]
fn concat_and_trilinear_gradients() {
    let mut p = ParamSet::new();
    p.add("lattice", rand_tensor(7, &[1, 3, 3, 3, 2]));
    p.add("side", rand_tensor(8, &[4, 3]));
    let plan = Arc::new(TrilinearPlan {
        corners: (0..4)
            .map(|i| {
                let base = i as u32 % 2;
                [0, 1, 3, 4, 9, 10, 12, 13].map(|c| c + base)
            })
            .collect(),
        weights: (0..4)
            .map(|i| {
                let f = 0.1 + 0.2 * i as f64;
                let g = [1.0 - f, f];
                let mut w = [0.0; 8];
                for (j, wj) in w.iter_mut().enumerate() {
                    *wj = g[j & 1] * g[(j >> 1) & 1] * g[(j >> 2) & 1];
                }
                w
            })
            .collect(),
    });
    let err = gradient_check(&p, H, 60, |t| {
        let lat = t.param(0);
        let f = t.trilinear(lat, plan.clone());
        let s = t.param(1);
        let c = t.concat(&[f, s]);
        let c = t.tanh(c);
        t.mse(c, (0..20).map(|i| i as f64 * 0.05).collect())
    });
    assert!(err < TOL, "rel err {err}");
}

#[test]
fn trilinear_weights_reproduce_corner_values() {
    let mut p = ParamSet::new();
    p.add("lattice", rand_tensor(7, &[1, 2, 2, 2, 1]));
    let mut w = [0.0; 8];
    w[5] = 1.0;
    let plan = Arc::new(TrilinearPlan {
        corners: vec![[0, 1, 2, 3, 4, 5, 6, 7]],
        weights: vec![w],
    });
    let mut t = Tape::new(&p);
    let l = t.param(0);
    let f = t.trilinear(l, plan);
    assert_eq!(t.value(f).item(), p.tensors()[0].data[5]);
}

#[test]
fn gaussian_ppo_entropy_gradients() {
    let mut p = ParamSet::new();
    p.add("mean", rand_tensor(10, &[6, 3]));
    p.add("log_std", Tensor::new(&[3], vec![-0.5, 0.2, -1.0]).unwrap());
    p.add("value", rand_tensor(11, &[6]));
    let u = rand_tensor(12, &[6, 3]).data;
    // old log-probs chosen so every ratio stays well away from 1 ± ε
    let old: Vec<f64> = {
        let mut t = Tape::new(&p);
        let (m, l) = (t.param(0), t.param(1));
        let lp = t.gaussian_log_prob(m, l, u.clone());
        t.value(lp)
            .data
            .iter()
            .enumerate()
            .map(|(i, v)| v + [0.05, -0.05, 0.5, -0.5, 0.0, 0.1][i])
            .collect()
    };
    let adv = vec![1.0, -0.5, 0.7, -1.2, 0.3, 2.0];
    let err = gradient_check(&p, H, 64, |t| {
        let (m, l) = (t.param(0), t.param(1));
        let l = t.clamp(l, -5.0, 2.0);
        let lp = t.gaussian_log_prob(m, l, u.clone());
        let pg = t.ppo_clip(lp, old.clone(), adv.clone(), 0.2);
        let v = t.param(2);
        let vl = t.mse(v, vec![0.5; 6]);
        let ent = t.gaussian_entropy(l);
        t.weighted_sum(&[(pg, 1.0), (vl, 0.5), (ent, -1e-3)])
    });
    assert!(err < TOL, "rel err {err}");
}

#[test]
fn gaussian_log_prob_matches_closed_form() {
    let mut p = ParamSet::new();
    p.add("mean", Tensor::new(&[1, 2], vec![0.3, -0.2]).unwrap());
    p.add("log_std", Tensor::new(&[2], vec![-0.5, 0.1]).unwrap());
    let u = vec![0.1, 0.4];
    let mut t = Tape::new(&p);
    let (m, l) = (t.param(0), t.param(1));
    let lp = t.gaussian_log_prob(m, l, u.clone());
    let mut want = 0.0;
    for j in 0..2 {
        let s = libm::exp(p.tensors()[1].data[j]);
        let z = (u[j] - p.tensors()[0].data[j]) / s;
        want += -0.5 * z * z - libm::log(s * libm::sqrt(2.0 * core::f64::consts::PI));
    }
    assert!((t.value(lp).item() - want).abs() < 1e-12);
}

#[test]
fn bce_logit_gradients_and_value() {
    let mut p = ParamSet::new();
    p.add("z", rand_tensor(13, &[10]));
    let y: Vec<f64> = (0..10).map(|i| (i % 2) as f64).collect();
    let err = gradient_check(&p, H, 10, |t| {
        let z = t.param(0);
        t.bce_logits(z, y.clone())
    });
    assert!(err < TOL, "rel err {err}");
    let mut t = Tape::new(&p);
    let z = t.param(0);
    let l = t.bce_logits(z, y.clone());
    let probs: Vec<f64> = p.tensors()[0].data.iter().map(|&z| sigmoid(z)).collect();
    assert!((t.value(l).item() - bce(&probs, &y)).abs() < 1e-9);
}

#[test]
fn bce_invariants() {
    let y = [0.0, 1.0, 1.0, 0.0];
    assert!(bce(&y, &y) < 1e-6);
    assert!(bce(&[0.3, 0.6, 0.9, 0.1], &y) >= 0.0);
    // clamping keeps confident mistakes finite
    assert!(bce(&[1.0, 0.0, 0.0, 1.0], &y).is_finite());
}

#[test]
fn clamp_blocks_gradient_outside() {
    let mut p = ParamSet::new();
    p.add("x", Tensor::new(&[3], vec![-6.0, 0.0, 3.0]).unwrap());
    let mut t = Tape::new(&p);
    let x = t.param(0);
    let c = t.clamp(x, -5.0, 2.0);
    assert_eq!(t.value(c).data, vec![-5.0, 0.0, 2.0]);
    let s = t.mean(c);
    let g = t.backward(s);
    assert_eq!(g[0].data, vec![0.0, 1.0 / 3.0, 0.0]);
}

#[test]
fn unused_parameters_get_zero_gradient() {
    let mut p = ParamSet::new();
    p.add("a", Tensor::scalar(2.0));
    p.add("b", Tensor::scalar(3.0));
    let mut t = Tape::new(&p);
    let a = t.param(0);
    let s = t.scale(a, 4.0);
    let g = t.backward(s);
    assert_eq!(g[0].item(), 4.0);
    assert_eq!(g[1].item(), 0.0);
}

#[test]
fn adam_minimises_a_quadratic() {
    let mut p = ParamSet::new();
    p.add("x", Tensor::new(&[2], vec![3.0, -2.0]).unwrap());
    let mut opt = Adam::new(&p, 0.05);
    for _ in 0..2000 {
        let g = {
            let mut t = Tape::new(&p);
            let x = t.param(0);
            let l = t.mse(x, vec![1.0, 0.5]);
            t.backward(l)
        };
        opt.step(&mut p, &g);
    }
    let x = &p.tensors()[0].data;
    assert!((x[0] - 1.0).abs() < 1e-3 && (x[1] - 0.5).abs() < 1e-3, "{x:?}");
    assert_eq!(opt.steps(), 2000);
}

#[test]
fn grad_norm_clipping() {
    let mut g = vec![Tensor::new(&[2], vec![3.0, 0.0]).unwrap(), Tensor::scalar(4.0)];
    let n = clip_grad_norm(&mut g, 1.0);
    assert!((n - 5.0).abs() < 1e-12);
    assert!((global_norm(&g) - 1.0).abs() < 1e-12);
    let before = g.clone();
    clip_grad_norm(&mut g, 10.0);
    assert_eq!(g, before);
}

#[test]
fn layout_check() {
    let mut rng = rng_from_seed(0);
    let mut a = ParamSet::new();
    a.add_linear(&mut rng, "l", 3, 2, 1.0);
    let mut b = ParamSet::new();
    b.add_linear(&mut rng, "l", 3, 2, 1.0);
    assert!(a.check_layout(&b).is_ok());
    a.load_from(&b).unwrap();
    assert_eq!(a, b);
    let mut c = ParamSet::new();
    c.add_linear(&mut rng, "l", 2, 2, 1.0);
    assert!(a.check_layout(&c).is_err());
}
