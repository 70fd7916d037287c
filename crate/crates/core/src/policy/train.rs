use alloc::sync::Arc;
use alloc::vec::Vec;

use rand::Rng as _;

use super::{
    featurize, ppo_update, sample_action_with, tanh_log_jacobian, ActorCritic, Heads, NetConfig, ObsFeatures,
    PpoConfig, PpoSamples, RolloutBuffer, Step,
};
use crate::env::{EnvConfig, EnvState, ProbeSpec, Transition};
use crate::error::{Error, Result};
use crate::geometry::VoxelGrid;
use crate::math::{sqrt, Vec3};
use crate::nn::{Adam, Tape};
use crate::reward::{RewardConfig, RewardTracker};
use crate::rng::{derive_seed, rng_from_seed, Rng};

/// Anything that can drive the hand for an episode.
pub trait Actor {
    fn begin_episode(&mut self, env: &EnvState, seed: u64);
    /// Next action given the current state and the previous transition.
    fn act(&mut self, env: &EnvState, last: Option<&Transition>) -> Result<Vec<f64>>;
}

/// A trained network acting through sampled (or mode) actions.
#[derive(Debug, Clone)]
pub struct PolicyActor<'a> {
    net: &'a ActorCritic,
    rng: Rng,
    pub deterministic: bool,
}

impl<'a> PolicyActor<'a> {
    pub fn new(net: &'a ActorCritic, deterministic: bool) -> Self {
        PolicyActor {
            net,
            rng: rng_from_seed(0),
            deterministic,
        }
    }
}

impl Actor for PolicyActor<'_> {
    fn begin_episode(&mut self, _env: &EnvState, seed: u64) {
        self.rng = rng_from_seed(seed);
    }

    fn act(&mut self, env: &EnvState, _last: Option<&Transition>) -> Result<Vec<f64>> {
        let obs = featurize(&self.net.cfg, env.observed(), env.pose_features());
        let dist = self.net.policy_forward(&obs)?;
        Ok(if self.deterministic {
            dist.mode()
        } else {
            sample_action_with(&dist, &mut self.rng).action
        })
    }
}

/// Runs `env` to its horizon, calling `on_step` after every transition.
pub fn run_episode(
    env: &mut EnvState,
    actor: &mut dyn Actor,
    seed: u64,
    mut on_step: impl FnMut(&EnvState, &[f64], &Transition),
) -> Result<()> {
    actor.begin_episode(env, seed);
    let mut last: Option<Transition> = None;
    while !env.is_done() {
        let a = actor.act(env, last.as_ref())?;
        let tr = env.step(&a)?;
        on_step(env, &a, &tr);
        last = Some(tr);
    }
    Ok(())
}

/// A training object: its ground-truth grid and, for the chamfer reward,
/// surface samples.
#[derive(Debug, Clone)]
pub struct TrainShape {
    pub grid: Arc<VoxelGrid>,
    pub surface: Option<Arc<Vec<Vec3>>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    /// Environment step budget, rounded up to whole collection rounds of
    /// `n_envs × horizon` steps.
    pub total_steps: u64,
    pub ppo: PpoConfig,
    pub net: NetConfig,
    pub env: EnvConfig,
    pub reward: RewardConfig,
    /// Scale rewards by the running std of discounted returns.
    pub normalize_rewards: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            total_steps: 200_000,
            ppo: PpoConfig::default(),
            net: NetConfig::default(),
            env: EnvConfig::default(),
            reward: RewardConfig::default(),
            normalize_rewards: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TrainLogRow {
    pub iter: usize,
    pub env_steps: u64,
    pub mean_reward: f64,
    pub mean_observed: f64,
    pub mean_visited: f64,
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
}

pub struct TrainProgress<'a> {
    pub row: &'a TrainLogRow,
    pub model: &'a ActorCritic,
}

#[derive(Debug, Clone, Copy, Default)]
struct RunningStat {
    n: f64,
    mean: f64,
    m2: f64,
}

impl RunningStat {
    fn push(&mut self, x: f64) {
        self.n += 1.0;
        let d = x - self.mean;
        self.mean += d / self.n;
        self.m2 += d * (x - self.mean);
    }

    fn std(&self) -> f64 {
        if self.n < 2.0 {
            1.0
        } else {
            sqrt(self.m2 / self.n)
        }
    }
}

/// PPO on the intrinsic reward. Each round resets `n_envs` environments on
/// randomly drawn training shapes and collects one full episode from each.
pub fn train_explore(
    cfg: &TrainConfig,
    spec: Arc<ProbeSpec>,
    shapes: &[TrainShape],
    seed: u64,
    on_iter: &mut dyn FnMut(&TrainProgress) -> Result<()>,
) -> Result<(ActorCritic, Vec<TrainLogRow>)> {
    if shapes.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    cfg.ppo.validate()?;
    cfg.reward.validate()?;
    spec.validate()?;
    if cfg.net.action_dim != spec.action_dim() || cfg.net.pose_dim != spec.action_dim() {
        return Err(Error::InvalidArgument(alloc::format!(
            "network expects {} actions, hand has {}",
            cfg.net.action_dim,
            spec.action_dim()
        )));
    }
    let mut net = ActorCritic::new(cfg.net.clone(), derive_seed(seed, "init", 0))?;
    let mut log = Vec::new();
    if cfg.total_steps == 0 {
        return Ok((net, log));
    }
    let n_envs = cfg.ppo.n_envs;
    let horizon = cfg.env.horizon;
    let per_iter = (n_envs * horizon) as u64;
    let iters = cfg.total_steps.div_ceil(per_iter) as usize;
    let mut opt = Adam::new(&net.params, cfg.ppo.lr);
    let mut rng = rng_from_seed(derive_seed(seed, "train", 0));
    let mut ret_stat = RunningStat::default();

    for it in 0..iters {
        let mut envs = Vec::with_capacity(n_envs);
        let mut trackers = Vec::with_capacity(n_envs);
        for e in 0..n_envs {
            let shape = &shapes[rng.random_range(0..shapes.len())];
            let ep_seed = derive_seed(seed, "episode", (it * n_envs + e) as u64);
            envs.push(EnvState::reset(spec.clone(), cfg.env.clone(), shape.grid.clone(), ep_seed)?);
            let mut tr = RewardTracker::new(cfg.reward.clone());
            tr.reset(shape.surface.clone());
            trackers.push(tr);
        }
        let mut buf = RolloutBuffer::new(n_envs, horizon);
        let mut disc = alloc::vec![0.0; n_envs];
        let mut raw = alloc::vec![0.0; n_envs];
        for t in 0..horizon {
            let feats: Vec<ObsFeatures> = envs
                .iter()
                .map(|e| featurize(&net.cfg, e.observed(), e.pose_features()))
                .collect();
            let refs: Vec<&ObsFeatures> = feats.iter().collect();
            let out = net.evaluate(&refs)?;
            for (e, (obs, (dist, value))) in feats.into_iter().zip(out).enumerate() {
                let s = sample_action_with(&dist, &mut rng);
                let tr = envs[e].step(&s.action)?;
                let r = trackers[e].reward(&tr, envs[e].ground_truth()).total;
                raw[e] += r;
                let r = if cfg.normalize_rewards {
                    disc[e] = disc[e] * cfg.ppo.gamma + r;
                    ret_stat.push(disc[e]);
                    r / ret_stat.std().max(1e-8)
                } else {
                    r
                };
                buf.push(
                    e,
                    Step {
                        obs,
                        u: s.u,
                        log_prob: s.log_prob,
                        reward: r,
                        value,
                        done: t + 1 == horizon,
                    },
                )?;
            }
        }

        let (advantages, returns) = buf.advantages(cfg.ppo.gamma, cfg.ppo.gae_lambda);
        let steps: Vec<&Step> = buf.steps().collect();
        let a = cfg.net.action_dim;
        let mut samples = PpoSamples {
            action_dim: a,
            u: Vec::with_capacity(steps.len() * a),
            log_prob: Vec::with_capacity(steps.len()),
            advantages,
            returns,
        };
        for s in &steps {
            samples.u.extend_from_slice(&s.u);
            samples.log_prob.push(s.log_prob + tanh_log_jacobian(&s.u));
        }
        let ncfg = net.cfg.clone();
        let obs: Vec<&ObsFeatures> = steps.iter().map(|s| &s.obs).collect();
        let stats = ppo_update(
            &mut net.params,
            &mut opt,
            &samples,
            &cfg.ppo,
            &mut rng,
            |tape: &mut Tape, idx: &[usize]| -> Heads {
                let batch: Vec<&ObsFeatures> = idx.iter().map(|&i| obs[i]).collect();
                let (g, p) = ncfg.batch_inputs(&batch);
                let (g, p) = (tape.input(g), tape.input(p));
                ncfg.heads(tape, g, p)
            },
        )?;

        let k = n_envs as f64;
        let row = TrainLogRow {
            iter: it,
            env_steps: (it as u64 + 1) * per_iter,
            mean_reward: raw.iter().sum::<f64>() / k,
            mean_observed: envs.iter().map(|e| e.observed().count() as f64).sum::<f64>() / k,
            mean_visited: envs.iter().map(|e| e.visited().count() as f64).sum::<f64>() / k,
            policy_loss: stats.policy_loss,
            value_loss: stats.value_loss,
            entropy: stats.entropy,
        };
        log::debug!(
            "iter {} steps {} reward {:.3} observed {:.1} visited {:.1} kl {:.4}",
            row.iter,
            row.env_steps,
            row.mean_reward,
            row.mean_observed,
            row.mean_visited,
            stats.approx_kl
        );
        on_iter(&TrainProgress { row: &row, model: &net })?;
        log.push(row);
    }
    Ok((net, log))
}
