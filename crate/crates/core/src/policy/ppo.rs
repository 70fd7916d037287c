use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::Write as _;

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::math::{exp, sqrt};
use crate::nn::{clip_grad_norm, Adam, ParamSet, Tape, Var};
use crate::rng::Rng;

#[derive(Debug, Clone, PartialEq)]
pub struct PpoConfig {
    pub clip_eps: f64,
    pub gamma: f64,
    pub gae_lambda: f64,
    pub epochs: usize,
    pub minibatch: usize,
    pub lr: f64,
    pub entropy_coef: f64,
    pub value_coef: f64,
    pub n_envs: usize,
    pub max_grad_norm: f64,
}

impl Default for PpoConfig {
    fn default() -> Self {
        PpoConfig {
            clip_eps: 0.2,
            gamma: 0.99,
            gae_lambda: 0.95,
            epochs: 4,
            minibatch: 256,
            lr: 3e-4,
            entropy_coef: 1e-3,
            value_coef: 0.5,
            n_envs: 8,
            max_grad_norm: 0.5,
        }
    }
}

impl PpoConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.clip_eps > 0.0
            && (0.0..=1.0).contains(&self.gamma)
            && (0.0..=1.0).contains(&self.gae_lambda)
            && self.epochs > 0
            && self.minibatch > 0
            && self.lr > 0.0
            && self.entropy_coef >= 0.0
            && self.value_coef >= 0.0
            && self.n_envs > 0
            && self.max_grad_norm > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(alloc::format!("invalid PPO settings: {self:?}")))
        }
    }
}

/// Tape variables produced by a policy for a minibatch: per-row Gaussian
/// means `[B, A]`, log-stds `[A]` and values `[B, 1]`.
#[derive(Debug, Clone, Copy)]
pub struct Heads {
    pub mean: Var,
    pub log_std: Var,
    pub value: Var,
}

/// Flattened training batch. `log_prob` holds the Gaussian part only; the
/// tanh Jacobian does not depend on the parameters and cancels in ratios.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PpoSamples {
    pub action_dim: usize,
    pub u: Vec<f64>,
    pub log_prob: Vec<f64>,
    pub advantages: Vec<f64>,
    pub returns: Vec<f64>,
}

impl PpoSamples {
    pub fn len(&self) -> usize {
        self.advantages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.advantages.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PpoStats {
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
    pub approx_kl: f64,
    pub clip_fraction: f64,
    pub minibatches: usize,
}

fn normalized(a: &[f64]) -> Vec<f64> {
    let n = a.len().max(1) as f64;
    let mean = a.iter().sum::<f64>() / n;
    let var = a.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let sd = sqrt(var);
    a.iter().map(|v| (v - mean) / (sd + 1e-8)).collect()
}

fn dump(idx: &[usize], s: &PpoSamples, adv: &[f64]) -> String {
    let mut out = String::new();
    for &i in idx.iter().take(16) {
        let _ = write!(
            out,
            " [{i}: adv {:.4e} ret {:.4e} logp {:.4e}]",
            adv[i], s.returns[i], s.log_prob[i]
        );
    }
    if idx.len() > 16 {
        let _ = write!(out, " ... {} more", idx.len() - 16);
    }
    out
}

/// Clipped-surrogate PPO over `samples`. `forward` builds the network heads
/// for the given sample indices on the tape.
pub fn ppo_update(
    params: &mut ParamSet,
    opt: &mut Adam,
    samples: &PpoSamples,
    cfg: &PpoConfig,
    rng: &mut Rng,
    forward: impl for<'p> Fn(&mut Tape<'p>, &[usize]) -> Heads,
) -> Result<PpoStats> {
    let n = samples.len();
    let a = samples.action_dim;
    if n == 0 {
        return Ok(PpoStats::default());
    }
    let adv = normalized(&samples.advantages);
    let mut order: Vec<usize> = (0..n).collect();
    let mut stats = PpoStats::default();
    for _ in 0..cfg.epochs {
        order.shuffle(rng);
        for idx in order.chunks(cfg.minibatch) {
            let b = idx.len();
            let mut u = Vec::with_capacity(b * a);
            for &i in idx {
                u.extend_from_slice(&samples.u[i * a..(i + 1) * a]);
            }
            let old: Vec<f64> = idx.iter().map(|&i| samples.log_prob[i]).collect();
            let mb_adv: Vec<f64> = idx.iter().map(|&i| adv[i]).collect();
            let ret: Vec<f64> = idx.iter().map(|&i| samples.returns[i]).collect();

            let (mut grads, pl, vl, ent, kl, clipped) = {
                let mut tape = Tape::new(params);
                let h = forward(&mut tape, idx);
                let logp = tape.gaussian_log_prob(h.mean, h.log_std, u);
                let new_lp = tape.value(logp).data.clone();
                let pg = tape.ppo_clip(logp, old.clone(), mb_adv, cfg.clip_eps);
                let vloss = tape.mse(h.value, ret);
                let entropy = tape.gaussian_entropy(h.log_std);
                let loss = tape.weighted_sum(&[(pg, 1.0), (vloss, cfg.value_coef), (entropy, -cfg.entropy_coef)]);
                let lv = tape.value(loss).item();
                if !lv.is_finite() {
                    return Err(Error::NonFinite(alloc::format!(
                        "PPO loss {lv} on minibatch of {b}:{}",
                        dump(idx, samples, &adv)
                    )));
                }
                let mut kl = 0.0;
                let mut clipped = 0usize;
                for (o, nl) in old.iter().zip(&new_lp) {
                    kl += o - nl;
                    let rho = exp(nl - o);
                    if (rho - 1.0).abs() > cfg.clip_eps {
                        clipped += 1;
                    }
                }
                (
                    tape.backward(loss),
                    tape.value(pg).item(),
                    tape.value(vloss).item(),
                    tape.value(entropy).item(),
                    kl / b as f64,
                    clipped as f64 / b as f64,
                )
            };
            clip_grad_norm(&mut grads, cfg.max_grad_norm);
            opt.step(params, &grads);
            stats.policy_loss += pl;
            stats.value_loss += vl;
            stats.entropy += ent;
            stats.approx_kl += kl;
            stats.clip_fraction += clipped;
            stats.minibatches += 1;
        }
    }
    let m = stats.minibatches as f64;
    stats.policy_loss /= m;
    stats.value_loss /= m;
    stats.entropy /= m;
    stats.approx_kl /= m;
    stats.clip_fraction /= m;
    if !params.all_finite() {
        return Err(Error::NonFinite("parameters after PPO update".into()));
    }
    Ok(stats)
}
