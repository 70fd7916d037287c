//! A PPO sanity problem with a known optimum.

use alloc::vec;
use alloc::vec::Vec;

use super::{compute_gae, ppo_update, Dist, Heads, PpoConfig, PpoSamples, LOG_STD_MAX, LOG_STD_MIN};
use crate::nn::{Adam, ParamSet, Tensor};
use crate::rng::{derive_seed, rng_from_seed};

/// Optimal action of [`gaussian_bandit`].
pub const BANDIT_OPTIMUM: f64 = 2.0;

/// One-step bandit with reward `-(a - 2)²` on an unsquashed Gaussian,
/// solved with [`ppo_update`] in batches of 50 pulls. Returns the final mean
/// action after at most `budget` pulls.
pub fn gaussian_bandit(seed: u64, budget: usize) -> f64 {
    let mut p = ParamSet::new();
    p.add("mu.w", Tensor::zeros(&[1, 1]));
    p.add("mu.b", Tensor::zeros(&[1]));
    p.add("v.w", Tensor::zeros(&[1, 1]));
    p.add("v.b", Tensor::zeros(&[1]));
    p.add("log_std", Tensor::zeros(&[1]));
    let cfg = PpoConfig {
        epochs: 10,
        minibatch: 25,
        lr: 0.01,
        entropy_coef: 0.0,
        max_grad_norm: 10.0,
        n_envs: 1,
        ..PpoConfig::default()
    };
    let mut opt = Adam::new(&p, cfg.lr);
    let mut rng = rng_from_seed(derive_seed(seed, "bandit", 0));
    let batch = 50;
    let mean_of = |p: &ParamSet| p.tensors()[0].data[0] + p.tensors()[1].data[0];
    for _ in 0..budget / batch {
        let dist = Dist {
            mean: vec![mean_of(&p)],
            log_std: p.get("log_std").unwrap().data.clone(),
        };
        let value = p.tensors()[2].data[0] + p.tensors()[3].data[0];
        let mut u = Vec::new();
        let mut lp = Vec::new();
        let mut rewards = Vec::new();
        for _ in 0..batch {
            let e: f64 = rand_distr::Distribution::sample(&rand_distr::StandardNormal, &mut rng);
            let a = dist.mean[0] + libm::exp(dist.log_std[0]) * e;
            u.push(a);
            lp.push(dist.gaussian_log_prob(&[a]));
            rewards.push(-(a - 2.0) * (a - 2.0));
        }
        let (adv, ret) = compute_gae(&rewards, &vec![value; batch], &vec![true; batch], 0.0, cfg.gamma, cfg.gae_lambda);
        let samples = PpoSamples {
            action_dim: 1,
            u,
            log_prob: lp,
            advantages: adv,
            returns: ret,
        };
        ppo_update(&mut p, &mut opt, &samples, &cfg, &mut rng, |t, idx| {
            let ones = t.input(Tensor::full(&[idx.len(), 1], 1.0));
            let (w, b) = (t.param(0), t.param(1));
            let mean = t.linear(ones, w, b);
            let (w, b) = (t.param(2), t.param(3));
            let value = t.linear(ones, w, b);
            let ls = t.param(4);
            let log_std = t.clamp(ls, LOG_STD_MIN, LOG_STD_MAX);
            Heads { mean, log_std, value }
        })
        .expect("bandit update is well formed");
    }
    mean_of(&p)
}
