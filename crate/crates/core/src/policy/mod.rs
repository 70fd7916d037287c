//! Exploration policy: observation encoding, actor-critic networks, tanh
//! squashed Gaussian actions, GAE and PPO.

mod bandit;
mod baselines;
mod gae;
mod ppo;
mod train;

pub use bandit::{gaussian_bandit, BANDIT_OPTIMUM};
pub use baselines::{HeuristicPolicy, RandomPolicy};
pub use gae::{compute_gae, RolloutBuffer, Step};
pub use ppo::{ppo_update, Heads, PpoConfig, PpoSamples, PpoStats};
pub use train::{run_episode, train_explore, Actor, PolicyActor, TrainConfig, TrainLogRow, TrainProgress, TrainShape};

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};

use crate::env::Observation;
use crate::error::{Error, Result};
use crate::geometry::VoxelGrid;
use crate::math::{exp, softplus, tanh};
use crate::nn::{ParamSet, Tape, Tensor, Var};
use crate::rng::{rng_from_seed, Rng};

/// Largest pre-squash magnitude; keeps `tanh(u)` strictly inside (-1, 1).
pub const U_LIMIT: f64 = 15.0;
pub const LOG_STD_MIN: f64 = -5.0;
pub const LOG_STD_MAX: f64 = 2.0;
const LN_2: f64 = core::f64::consts::LN_2;
const HALF_LN_2PI: f64 = 0.918_938_533_204_672_8;

#[derive(Debug, Clone, PartialEq)]
pub struct NetConfig {
    pub grid_res: usize,
    /// Max-pool factor applied to the observed grid before the encoder.
    pub pool: usize,
    pub channels: [usize; 6],
    /// 2: stride-2 layers use k2, the others k1. 3: k3 everywhere, pad 1.
    pub kernel: usize,
    pub hidden: usize,
    pub action_dim: usize,
    pub pose_dim: usize,
    pub init_log_std: f64,
    pub shared_encoder: bool,
}

impl Default for NetConfig {
    fn default() -> Self {
        NetConfig {
            grid_res: 32,
            pool: 2,
            channels: [8, 16, 16, 32, 32, 32],
            kernel: 2,
            hidden: 128,
            action_dim: 28,
            pose_dim: 28,
            init_log_std: -0.5,
            shared_encoder: true,
        }
    }
}

impl NetConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |why: &str| Err(Error::InvalidArgument(alloc::format!("policy network: {why}")));
        if self.pool == 0 || self.grid_res % self.pool != 0 {
            return bad("pool must divide the grid resolution");
        }
        if self.input_res() % 8 != 0 {
            return bad("pooled resolution must be divisible by 8");
        }
        if !(self.kernel == 2 || self.kernel == 3) {
            return bad("kernel must be 2 or 3");
        }
        if self.channels.contains(&0) || self.hidden == 0 || self.action_dim == 0 {
            return bad("zero width layer");
        }
        Ok(())
    }

    pub fn input_res(&self) -> usize {
        self.grid_res / self.pool
    }

    /// Encoder output width: final lattice cells times last channel count.
    pub fn grid_feature_dim(&self) -> usize {
        let r = self.input_res() / 8;
        r * r * r * self.channels[5]
    }

    pub fn feature_dim(&self) -> usize {
        self.grid_feature_dim() + self.pose_dim
    }

    fn encode(&self, tape: &mut Tape, prefix: &str, grids: Var) -> Var {
        let mut h = grids;
        for l in 0..6 {
            let (_, s, pad) = self.layer_geometry(l);
            let w = tape.param_named(&alloc::format!("{prefix}{l}.w"));
            let b = tape.param_named(&alloc::format!("{prefix}{l}.b"));
            h = tape.conv3d(h, w, b, s, pad);
            h = tape.relu(h);
        }
        let n = tape.value(h).rows();
        tape.reshape(h, &[n, self.grid_feature_dim()])
    }

    fn mlp(&self, tape: &mut Tape, prefix: &str, layers: usize, x: Var, act: fn(&mut Tape, Var) -> Var) -> Var {
        let mut h = x;
        for l in 0..layers {
            let w = tape.param_named(&alloc::format!("{prefix}{l}.w"));
            let b = tape.param_named(&alloc::format!("{prefix}{l}.b"));
            h = tape.linear(h, w, b);
            if l + 1 < layers {
                h = act(tape, h);
            }
        }
        h
    }

    /// Network heads on a batch: grids `[B, r, r, r, 1]`, poses `[B, pose_dim]`.
    pub fn heads(&self, tape: &mut Tape, grids: Var, pose: Var) -> Heads {
        let g = self.encode(tape, "enc", grids);
        let feat = tape.concat(&[g, pose]);
        let vfeat = if self.shared_encoder {
            feat
        } else {
            let g = self.encode(tape, "venc", grids);
            tape.concat(&[g, pose])
        };
        let mean = self.mlp(tape, "pi", POLICY_LAYERS, feat, |t, v| t.tanh(v));
        let value = self.mlp(tape, "v", VALUE_LAYERS, vfeat, |t, v| t.tanh(v));
        let ls = tape.param_named("log_std");
        let log_std = tape.clamp(ls, LOG_STD_MIN, LOG_STD_MAX);
        Heads { mean, log_std, value }
    }

    /// Stacks observations into network input tensors.
    pub fn batch_inputs(&self, obs: &[&ObsFeatures]) -> (Tensor, Tensor) {
        let r = self.input_res();
        let mut g = Tensor::zeros(&[obs.len(), r, r, r, 1]);
        let mut p = Tensor::zeros(&[obs.len(), self.pose_dim]);
        let vox = r * r * r;
        for (b, o) in obs.iter().enumerate() {
            for (d, &s) in g.data[b * vox..(b + 1) * vox].iter_mut().zip(&o.grid) {
                *d = s as f64;
            }
            p.data[b * self.pose_dim..(b + 1) * self.pose_dim].copy_from_slice(&o.pose);
        }
        (g, p)
    }

    fn layer_geometry(&self, layer: usize) -> (usize, usize, usize) {
        let strided = layer % 2 == 0;
        match (self.kernel, strided) {
            (2, true) => (2, 2, 0),
            (2, false) => (1, 1, 0),
            (_, true) => (3, 2, 1),
            (_, false) => (3, 1, 1),
        }
    }
}

/// Encoder inputs for one step: the pooled observed grid and the
/// normalized hand configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct ObsFeatures {
    pub grid: Vec<u8>,
    pub pose: Vec<f64>,
}

/// Max-pools a binary grid by `factor` into a byte lattice (x fastest).
pub fn pool_grid(grid: &VoxelGrid, factor: usize) -> Vec<u8> {
    let n = grid.resolution();
    let r = n / factor;
    let mut out = vec![0u8; r * r * r];
    for idx in grid.occupied() {
        let [i, j, k] = grid.coords(idx);
        out[(i / factor) + r * ((j / factor) + r * (k / factor))] = 1;
    }
    out
}

pub fn featurize(cfg: &NetConfig, grid: &VoxelGrid, pose: Vec<f64>) -> ObsFeatures {
    ObsFeatures {
        grid: pool_grid(grid, cfg.pool),
        pose,
    }
}

pub fn featurize_observation(cfg: &NetConfig, obs: &Observation) -> ObsFeatures {
    featurize(cfg, &obs.grid, obs.pose.clone())
}

/// Diagonal Gaussian over pre-squash actions.
#[derive(Debug, Clone, PartialEq)]
pub struct Dist {
    pub mean: Vec<f64>,
    pub log_std: Vec<f64>,
}

impl Dist {
    pub fn std(&self) -> Vec<f64> {
        self.log_std.iter().map(|&l| exp(l)).collect()
    }

    /// Gaussian log-density of the pre-squash sample `u`.
    pub fn gaussian_log_prob(&self, u: &[f64]) -> f64 {
        u.iter()
            .zip(&self.mean)
            .zip(&self.log_std)
            .map(|((&u, &m), &l)| {
                let z = (u - m) * exp(-l);
                -0.5 * z * z - l - HALF_LN_2PI
            })
            .sum()
    }

    /// Log-density of `tanh(u)`, including the squashing Jacobian.
    pub fn log_prob(&self, u: &[f64]) -> f64 {
        self.gaussian_log_prob(u) - tanh_log_jacobian(u)
    }

    pub fn mode(&self) -> Vec<f64> {
        self.mean.iter().map(|&m| tanh(m.clamp(-U_LIMIT, U_LIMIT))).collect()
    }
}

/// `Σ log(1 - tanh(u)²)`, computed as `2(ln 2 - u - softplus(-2u))`.
pub fn tanh_log_jacobian(u: &[f64]) -> f64 {
    u.iter().map(|&u| 2.0 * (LN_2 - u - softplus(-2.0 * u))).sum()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ActionSample {
    pub action: Vec<f64>,
    pub u: Vec<f64>,
    pub log_prob: f64,
}

pub fn sample_action_with(dist: &Dist, rng: &mut Rng) -> ActionSample {
    let u: Vec<f64> = dist
        .mean
        .iter()
        .zip(&dist.log_std)
        .map(|(&m, &l)| {
            let e: f64 = StandardNormal.sample(rng);
            (m + exp(l) * e).clamp(-U_LIMIT, U_LIMIT)
        })
        .collect();
    ActionSample {
        action: u.iter().map(|&v| tanh(v)).collect(),
        log_prob: dist.log_prob(&u),
        u,
    }
}

pub fn sample_action(dist: &Dist, seed: u64) -> ActionSample {
    sample_action_with(dist, &mut rng_from_seed(seed))
}

/// Shared-trunk actor-critic.
#[derive(Debug, Clone, PartialEq)]
pub struct ActorCritic {
    pub cfg: NetConfig,
    pub params: ParamSet,
}

pub const POLICY_LAYERS: usize = 4;
pub const VALUE_LAYERS: usize = 3;

impl ActorCritic {
    pub fn new(cfg: NetConfig, seed: u64) -> Result<ActorCritic> {
        cfg.validate()?;
        let mut rng = rng_from_seed(seed);
        let mut p = ParamSet::new();
        let encoders: &[&str] = if cfg.shared_encoder { &["enc"] } else { &["enc", "venc"] };
        for e in encoders {
            let mut c_in = 1;
            for (l, &c) in cfg.channels.iter().enumerate() {
                let (k, _, _) = cfg.layer_geometry(l);
                p.add_conv(&mut rng, &alloc::format!("{e}{l}"), k, c_in, c);
                c_in = c;
            }
        }
        let f = cfg.feature_dim();
        let h = cfg.hidden;
        for l in 0..POLICY_LAYERS {
            let inp = if l == 0 { f } else { h };
            let (out, gain) = if l + 1 == POLICY_LAYERS { (cfg.action_dim, 0.01) } else { (h, 1.0) };
            p.add_linear(&mut rng, &alloc::format!("pi{l}"), inp, out, gain);
        }
        for l in 0..VALUE_LAYERS {
            let inp = if l == 0 { f } else { h };
            let out = if l + 1 == VALUE_LAYERS { 1 } else { h };
            p.add_linear(&mut rng, &alloc::format!("v{l}"), inp, out, 1.0);
        }
        p.add("log_std", Tensor::full(&[cfg.action_dim], cfg.init_log_std));
        Ok(ActorCritic { cfg, params: p })
    }

    /// Rebuilds a network around loaded parameters, checking the layout.
    pub fn from_params(cfg: NetConfig, params: ParamSet) -> Result<ActorCritic> {
        let fresh = ActorCritic::new(cfg, 0)?;
        fresh.params.check_layout(&params)?;
        Ok(ActorCritic { cfg: fresh.cfg, params })
    }

    /// Whether a parameter belongs to the policy head (mean MLP, log-std).
    pub fn is_policy_param(name: &str) -> bool {
        name.starts_with("pi") || name == "log_std"
    }

    pub fn heads(&self, tape: &mut Tape, grids: Var, pose: Var) -> Heads {
        self.cfg.heads(tape, grids, pose)
    }

    pub fn batch_inputs(&self, obs: &[&ObsFeatures]) -> (Tensor, Tensor) {
        self.cfg.batch_inputs(obs)
    }

    /// Action distributions and value estimates for a batch of observations.
    pub fn evaluate(&self, obs: &[&ObsFeatures]) -> Result<Vec<(Dist, f64)>> {
        for o in obs {
            if o.pose.len() != self.cfg.pose_dim || !o.pose.iter().all(|v| v.is_finite()) {
                return Err(Error::NonFinite("observation pose".into()));
            }
        }
        let (g, p) = self.batch_inputs(obs);
        let mut tape = Tape::new(&self.params);
        let (gi, pi) = (tape.input(g), tape.input(p));
        let h = self.heads(&mut tape, gi, pi);
        let mean = tape.value(h.mean);
        let log_std = tape.value(h.log_std);
        let value = tape.value(h.value);
        if !mean.all_finite() || !value.all_finite() {
            return Err(Error::NonFinite(alloc::format!(
                "policy activations: mean finite {}, value finite {}",
                mean.all_finite(),
                value.all_finite()
            )));
        }
        Ok((0..obs.len())
            .map(|b| {
                (
                    Dist {
                        mean: mean.row(b).to_vec(),
                        log_std: log_std.data.clone(),
                    },
                    value.data[b],
                )
            })
            .collect())
    }

    pub fn policy_forward(&self, obs: &ObsFeatures) -> Result<Dist> {
        Ok(self.evaluate(&[obs])?.remove(0).0)
    }
}

/// Draws a uniform random unit vector (used by scripted policies).
pub(crate) fn random_unit(rng: &mut Rng) -> crate::math::Vec3 {
    loop {
        let v = crate::math::Vec3::new(
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        );
        let n = v.norm();
        if n > 1e-3 && n <= 1.0 {
            return v * (1.0 / n);
        }
    }
}
