//! Run configuration: one flat namespace of dotted keys, written as TOML.
//!
//! Every key has a default; a file only lists what it changes. The digest
//! is a SHA-256 over the canonical text of all keys except `eval.*` and
//! `paths.*`, which do not affect trained artifacts.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use sha2::{Digest, Sha256};
use toml::Value;

use tslam_core::corpus::{Family, FamilyMix};
use tslam_core::env::{EnvConfig, ProbeSpec};
use tslam_core::eval::{Aggregation, EvalConfig};
use tslam_core::metrics::MetricsConfig;
use tslam_core::policy::TrainConfig;
use tslam_core::recon::ReconConfig;
use tslam_core::reward::{RewardConfig, RewardVariant};

use crate::error::{Result, WorkbenchError};

#[derive(Debug, Clone, PartialEq)]
pub struct CorpusSettings {
    pub count: usize,
    pub mix: FamilyMix,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeSettings {
    pub joints: Vec<usize>,
    pub translation_step: f64,
    pub angle_step: f64,
    pub joint_step: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalSettings {
    pub poses: usize,
    pub aggregation: Aggregation,
    pub seeds: usize,
    pub metric_samples: usize,
    pub recon_resolution: usize,
    pub export_meshes: bool,
    pub workers: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PathSettings {
    pub corpus: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub policy: Option<PathBuf>,
    pub recon: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub seed: u64,
    pub corpus: CorpusSettings,
    pub probe: ProbeSettings,
    pub env: EnvConfig,
    pub reward: RewardConfig,
    pub train: TrainConfig,
    pub recon: ReconConfig,
    /// Fraction of the training split held back to select the best
    /// reconstruction checkpoint.
    pub recon_validation: f64,
    /// Train reconstruction on grids observed by the exploration policy as
    /// well as on synthetic touch masks.
    pub recon_policy_masks: bool,
    pub eval: EvalSettings,
    pub paths: PathSettings,
}

impl Default for RunConfig {
    fn default() -> Self {
        let spec = ProbeSpec::default();
        RunConfig {
            seed: 0,
            corpus: CorpusSettings {
                count: 100,
                mix: FamilyMix::default(),
            },
            probe: ProbeSettings {
                joints: vec![4, 4, 4, 5, 5],
                translation_step: spec.translation_step,
                angle_step: spec.angle_step,
                joint_step: spec.joint_step,
            },
            env: EnvConfig::default(),
            reward: RewardConfig::default(),
            train: TrainConfig::default(),
            recon: ReconConfig::default(),
            recon_validation: 0.1,
            recon_policy_masks: false,
            eval: EvalSettings {
                poses: 4,
                aggregation: Aggregation::Union,
                seeds: 5,
                metric_samples: 10_000,
                recon_resolution: 32,
                export_meshes: true,
                workers: 0,
            },
            paths: PathSettings::default(),
        }
    }
}

fn mix_to_string(mix: &FamilyMix) -> String {
    mix.0
        .iter()
        .map(|(f, w)| format!("{}:{}", f.tag(), w))
        .collect::<Vec<_>>()
        .join(",")
}

fn mix_from_str(s: &str) -> Result<FamilyMix, String> {
    let mut out = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (tag, w) = match part.split_once(':') {
            Some((t, w)) => (t.trim(), w.trim().parse::<f64>().map_err(|_| format!("bad weight in `{part}`"))?),
            None => (part, 1.0),
        };
        let f = Family::from_tag(tag).map_err(|e| e.to_string())?;
        out.push((f, w));
    }
    if out.is_empty() {
        return Err("empty family mix".into());
    }
    Ok(FamilyMix(out))
}

fn int(v: i64) -> Value {
    Value::Integer(v)
}

fn usize_list(v: &[usize]) -> Value {
    Value::Array(v.iter().map(|&x| int(x as i64)).collect())
}

fn path_value(p: &Option<PathBuf>) -> Option<Value> {
    p.as_ref().map(|p| Value::String(p.display().to_string()))
}

fn as_f64(v: &Value) -> Result<f64, String> {
    match v {
        Value::Float(f) => Ok(*f),
        Value::Integer(i) => Ok(*i as f64),
        _ => Err("expected a number".into()),
    }
}

fn as_usize(v: &Value) -> Result<usize, String> {
    match v {
        Value::Integer(i) if *i >= 0 => Ok(*i as usize),
        _ => Err("expected a non-negative integer".into()),
    }
}

fn as_u64(v: &Value) -> Result<u64, String> {
    match v {
        Value::Integer(i) if *i >= 0 => Ok(*i as u64),
        // seeds beyond i64 range are written as strings
        Value::String(s) => s.parse().map_err(|_| "expected an unsigned integer".into()),
        _ => Err("expected a non-negative integer".into()),
    }
}

fn as_bool(v: &Value) -> Result<bool, String> {
    v.as_bool().ok_or_else(|| "expected true or false".into())
}

fn as_str(v: &Value) -> Result<&str, String> {
    v.as_str().ok_or_else(|| "expected a string".into())
}

fn as_usize_list(v: &Value) -> Result<Vec<usize>, String> {
    v.as_array()
        .ok_or_else(|| "expected an array of integers".to_string())?
        .iter()
        .map(as_usize)
        .collect()
}

fn u64_value(v: u64) -> Value {
    if v <= i64::MAX as u64 {
        int(v as i64)
    } else {
        Value::String(v.to_string())
    }
}

impl RunConfig {
    /// Every key with its effective value, sorted by key.
    pub fn entries(&self) -> Vec<(String, Value)> {
        let t = &self.train;
        let p = &t.ppo;
        let n = &t.net;
        let r = &self.recon;
        let e = &self.eval;
        let mut v: Vec<(&str, Option<Value>)> = vec![
            ("seed", Some(u64_value(self.seed))),
            ("corpus.count", Some(int(self.corpus.count as i64))),
            ("corpus.mix", Some(Value::String(mix_to_string(&self.corpus.mix)))),
            ("probe.joints", Some(usize_list(&self.probe.joints))),
            ("probe.translation_step", Some(Value::Float(self.probe.translation_step))),
            ("probe.angle_step", Some(Value::Float(self.probe.angle_step))),
            ("probe.joint_step", Some(Value::Float(self.probe.joint_step))),
            ("env.resolution", Some(int(self.env.resolution as i64))),
            ("env.horizon", Some(int(self.env.horizon as i64))),
            ("env.step_ms", Some(int(self.env.step_ms as i64))),
            ("env.spawn_radius", Some(Value::Float(self.env.spawn_radius))),
            ("env.substeps", Some(int(self.env.substeps as i64))),
            ("reward.variant", Some(Value::String(self.reward.variant.tag().into()))),
            ("reward.lambda", Some(Value::Float(self.reward.lambda))),
            ("reward.k", Some(int(self.reward.k as i64))),
            ("reward.alpha", Some(Value::Float(self.reward.alpha))),
            ("reward.stride", Some(int(self.reward.stride as i64))),
            ("reward.samples", Some(int(self.reward.samples as i64))),
            ("reward.hull_fallback", Some(Value::Boolean(self.reward.hull_fallback))),
            ("ppo.clip_eps", Some(Value::Float(p.clip_eps))),
            ("ppo.gamma", Some(Value::Float(p.gamma))),
            ("ppo.gae_lambda", Some(Value::Float(p.gae_lambda))),
            ("ppo.epochs", Some(int(p.epochs as i64))),
            ("ppo.minibatch", Some(int(p.minibatch as i64))),
            ("ppo.lr", Some(Value::Float(p.lr))),
            ("ppo.entropy_coef", Some(Value::Float(p.entropy_coef))),
            ("ppo.value_coef", Some(Value::Float(p.value_coef))),
            ("ppo.n_envs", Some(int(p.n_envs as i64))),
            ("ppo.max_grad_norm", Some(Value::Float(p.max_grad_norm))),
            ("train.total_steps", Some(u64_value(t.total_steps))),
            ("train.normalize_rewards", Some(Value::Boolean(t.normalize_rewards))),
            ("net.pool", Some(int(n.pool as i64))),
            ("net.channels", Some(usize_list(&n.channels))),
            ("net.kernel", Some(int(n.kernel as i64))),
            ("net.hidden", Some(int(n.hidden as i64))),
            ("net.init_log_std", Some(Value::Float(n.init_log_std))),
            ("net.shared_encoder", Some(Value::Boolean(n.shared_encoder))),
            ("recon.channels", Some(usize_list(&r.channels))),
            ("recon.hidden", Some(int(r.hidden as i64))),
            ("recon.hidden_layers", Some(int(r.hidden_layers as i64))),
            ("recon.points", Some(int(r.points as i64))),
            ("recon.surface_sigma", Some(Value::Float(r.surface_sigma))),
            ("recon.coverage_min", Some(Value::Float(r.coverage_min))),
            ("recon.coverage_max", Some(Value::Float(r.coverage_max))),
            ("recon.mask_depth", Some(int(r.mask_depth as i64))),
            ("recon.patch_radius", Some(Value::Float(r.patch_radius))),
            ("recon.epochs", Some(int(r.epochs as i64))),
            ("recon.batch", Some(int(r.batch as i64))),
            ("recon.lr", Some(Value::Float(r.lr))),
            ("recon.max_grad_norm", Some(Value::Float(r.max_grad_norm))),
            ("recon.heldout_samples", Some(int(r.heldout_samples as i64))),
            ("recon.validation", Some(Value::Float(self.recon_validation))),
            ("recon.policy_masks", Some(Value::Boolean(self.recon_policy_masks))),
            ("eval.poses", Some(int(e.poses as i64))),
            ("eval.aggregation", Some(Value::String(e.aggregation.tag().into()))),
            ("eval.seeds", Some(int(e.seeds as i64))),
            ("eval.metric_samples", Some(int(e.metric_samples as i64))),
            ("eval.recon_resolution", Some(int(e.recon_resolution as i64))),
            ("eval.export_meshes", Some(Value::Boolean(e.export_meshes))),
            ("eval.workers", Some(int(e.workers as i64))),
            ("paths.corpus", path_value(&self.paths.corpus)),
            ("paths.out", path_value(&self.paths.out)),
            ("paths.policy", path_value(&self.paths.policy)),
            ("paths.recon", path_value(&self.paths.recon)),
        ];
        v.sort_by(|a, b| a.0.cmp(b.0));
        v.into_iter().filter_map(|(k, val)| val.map(|x| (k.to_string(), x))).collect()
    }

    fn set(&mut self, key: &str, v: &Value) -> Result<(), String> {
        let t = &mut self.train;
        match key {
            "seed" => self.seed = as_u64(v)?,
            "corpus.count" => self.corpus.count = as_usize(v)?,
            "corpus.mix" => self.corpus.mix = mix_from_str(as_str(v)?)?,
            "probe.joints" => self.probe.joints = as_usize_list(v)?,
            "probe.translation_step" => self.probe.translation_step = as_f64(v)?,
            "probe.angle_step" => self.probe.angle_step = as_f64(v)?,
            "probe.joint_step" => self.probe.joint_step = as_f64(v)?,
            "env.resolution" => self.env.resolution = as_usize(v)?,
            "env.horizon" => self.env.horizon = as_usize(v)?,
            "env.step_ms" => self.env.step_ms = as_u64(v)?,
            "env.spawn_radius" => self.env.spawn_radius = as_f64(v)?,
            "env.substeps" => self.env.substeps = as_usize(v)?,
            "reward.variant" => self.reward.variant = RewardVariant::from_str(as_str(v)?).map_err(|e| e.to_string())?,
            "reward.lambda" => self.reward.lambda = as_f64(v)?,
            "reward.k" => self.reward.k = as_usize(v)?,
            "reward.alpha" => self.reward.alpha = as_f64(v)?,
            "reward.stride" => self.reward.stride = as_usize(v)?,
            "reward.samples" => self.reward.samples = as_usize(v)?,
            "reward.hull_fallback" => self.reward.hull_fallback = as_bool(v)?,
            "ppo.clip_eps" => t.ppo.clip_eps = as_f64(v)?,
            "ppo.gamma" => t.ppo.gamma = as_f64(v)?,
            "ppo.gae_lambda" => t.ppo.gae_lambda = as_f64(v)?,
            "ppo.epochs" => t.ppo.epochs = as_usize(v)?,
            "ppo.minibatch" => t.ppo.minibatch = as_usize(v)?,
            "ppo.lr" => t.ppo.lr = as_f64(v)?,
            "ppo.entropy_coef" => t.ppo.entropy_coef = as_f64(v)?,
            "ppo.value_coef" => t.ppo.value_coef = as_f64(v)?,
            "ppo.n_envs" => t.ppo.n_envs = as_usize(v)?,
            "ppo.max_grad_norm" => t.ppo.max_grad_norm = as_f64(v)?,
            "train.total_steps" => t.total_steps = as_u64(v)?,
            "train.normalize_rewards" => t.normalize_rewards = as_bool(v)?,
            "net.pool" => t.net.pool = as_usize(v)?,
            "net.channels" => {
                let c = as_usize_list(v)?;
                t.net.channels = c.try_into().map_err(|_| "expected exactly 6 channel counts".to_string())?;
            }
            "net.kernel" => t.net.kernel = as_usize(v)?,
            "net.hidden" => t.net.hidden = as_usize(v)?,
            "net.init_log_std" => t.net.init_log_std = as_f64(v)?,
            "net.shared_encoder" => t.net.shared_encoder = as_bool(v)?,
            "recon.channels" => self.recon.channels = as_usize_list(v)?,
            "recon.hidden" => self.recon.hidden = as_usize(v)?,
            "recon.hidden_layers" => self.recon.hidden_layers = as_usize(v)?,
            "recon.points" => self.recon.points = as_usize(v)?,
            "recon.surface_sigma" => self.recon.surface_sigma = as_f64(v)?,
            "recon.coverage_min" => self.recon.coverage_min = as_f64(v)?,
            "recon.coverage_max" => self.recon.coverage_max = as_f64(v)?,
            "recon.mask_depth" => self.recon.mask_depth = as_usize(v)?,
            "recon.patch_radius" => self.recon.patch_radius = as_f64(v)?,
            "recon.epochs" => self.recon.epochs = as_usize(v)?,
            "recon.batch" => self.recon.batch = as_usize(v)?,
            "recon.lr" => self.recon.lr = as_f64(v)?,
            "recon.max_grad_norm" => self.recon.max_grad_norm = as_f64(v)?,
            "recon.heldout_samples" => self.recon.heldout_samples = as_usize(v)?,
            "recon.policy_masks" => self.recon_policy_masks = as_bool(v)?,
            "recon.validation" => self.recon_validation = as_f64(v)?,
            "eval.poses" => self.eval.poses = as_usize(v)?,
            "eval.aggregation" => self.eval.aggregation = Aggregation::from_tag(as_str(v)?).map_err(|e| e.to_string())?,
            "eval.seeds" => self.eval.seeds = as_usize(v)?,
            "eval.metric_samples" => self.eval.metric_samples = as_usize(v)?,
            "eval.recon_resolution" => self.eval.recon_resolution = as_usize(v)?,
            "eval.export_meshes" => self.eval.export_meshes = as_bool(v)?,
            "eval.workers" => self.eval.workers = as_usize(v)?,
            "paths.corpus" => self.paths.corpus = Some(as_str(v)?.into()),
            "paths.out" => self.paths.out = Some(as_str(v)?.into()),
            "paths.policy" => self.paths.policy = Some(as_str(v)?.into()),
            "paths.recon" => self.paths.recon = Some(as_str(v)?.into()),
            _ => return Err("unknown key".into()),
        }
        Ok(())
    }

    /// Sets one dotted key, validating the result.
    pub fn set_key(&mut self, key: &str, v: &Value) -> Result<()> {
        self.set(key, v)
            .map_err(|why| WorkbenchError::Config(format!("`{key}`: {why}")))?;
        self.sync();
        Ok(())
    }

    /// Keeps values that several modules share consistent.
    fn sync(&mut self) {
        let r = self.env.resolution;
        self.train.env = self.env.clone();
        self.train.reward = self.reward;
        self.train.net.grid_res = r;
        self.recon.resolution = r;
        let dim = self.probe_spec().action_dim();
        self.train.net.action_dim = dim;
        self.train.net.pose_dim = dim;
    }

    pub fn from_toml_str(text: &str) -> Result<RunConfig> {
        let table: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| WorkbenchError::Config(e.message().to_string()))?;
        let mut flat = Vec::new();
        flatten("", &table, &mut flat);
        let mut cfg = RunConfig::default();
        for (k, v) in &flat {
            cfg.set(k, v)
                .map_err(|why| WorkbenchError::Config(format!("`{k}`: {why}")))?;
        }
        cfg.sync();
        cfg.validate()?;
        Ok(cfg)
    }

    /// Rebuilds a config from `key = value` pairs as written by
    /// [`RunConfig::entries`].
    pub fn from_pairs<'a>(pairs: impl IntoIterator<Item = (&'a str, &'a str)>) -> Result<RunConfig> {
        let mut cfg = RunConfig::default();
        for (k, text) in pairs {
            let t: toml::Table = format!("v = {text}")
                .parse()
                .map_err(|_| WorkbenchError::Config(format!("`{k}`: unparsable value `{text}`")))?;
            cfg.set(k, &t["v"])
                .map_err(|why| WorkbenchError::Config(format!("`{k}`: {why}")))?;
        }
        cfg.sync();
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path).map_err(|e| WorkbenchError::Config(format!("{}: {e}", path.display())))?;
        RunConfig::from_toml_str(&text).map_err(|e| match e {
            WorkbenchError::Config(m) => WorkbenchError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    /// Flat `key = value` lines, sorted; parses back to the same config.
    pub fn to_toml_string(&self) -> String {
        let mut s = String::new();
        for (k, v) in self.entries() {
            let _ = writeln!(s, "{k} = {v}");
        }
        s
    }

    pub fn canonical_text(&self) -> String {
        let mut s = String::new();
        for (k, v) in self.entries() {
            if k.starts_with("eval.") || k.starts_with("paths.") {
                continue;
            }
            let _ = writeln!(s, "{k} = {v}");
        }
        s
    }

    /// First 16 hex digits of the SHA-256 of the canonical text.
    pub fn digest(&self) -> String {
        let h = Sha256::digest(self.canonical_text().as_bytes());
        hex::encode(&h[..8])
    }

    pub fn probe_spec(&self) -> ProbeSpec {
        let mut s = ProbeSpec::with_joint_counts(&self.probe.joints);
        s.translation_step = self.probe.translation_step;
        s.angle_step = self.probe.angle_step;
        s.joint_step = self.probe.joint_step;
        s
    }

    pub fn eval_config(&self) -> EvalConfig {
        EvalConfig {
            pose_count: self.eval.poses,
            aggregation: self.eval.aggregation,
            env: self.env.clone(),
            metrics: MetricsConfig {
                n_samples: self.eval.metric_samples,
                seed: 0,
            },
            recon_resolution: self.eval.recon_resolution,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let cfg = |m: String| Err(WorkbenchError::Config(m));
        if self.probe.joints.is_empty() || self.probe.joints.contains(&0) {
            return cfg("probe.joints must list at least one finger, each with joints".into());
        }
        if let Err(e) = self.probe_spec().validate() {
            return cfg(format!("probe: {e}"));
        }
        if self.env.resolution < 8 || self.env.horizon == 0 || self.env.substeps == 0 || !(self.env.spawn_radius > 0.0) {
            return cfg("env: resolution >= 8, positive horizon, substeps and spawn radius required".into());
        }
        for (what, r) in [
            ("reward", self.reward.validate()),
            ("ppo", self.train.ppo.validate()),
            ("net", self.train.net.validate()),
            ("recon", self.recon.validate()),
        ] {
            if let Err(e) = r {
                return cfg(format!("{what}: {e}"));
            }
        }
        if self.corpus.count == 0 {
            return cfg("corpus.count must be positive".into());
        }
        if let Err(e) = self.corpus.mix.allocate(self.corpus.count) {
            return cfg(format!("corpus.mix: {e}"));
        }
        if !(0.0..1.0).contains(&self.recon_validation) {
            return cfg("recon.validation must lie in [0, 1)".into());
        }
        if self.eval.poses == 0 || self.eval.seeds == 0 || self.eval.metric_samples == 0 || self.eval.recon_resolution < 2 {
            return cfg("eval: poses, seeds, metric_samples must be positive and recon_resolution >= 2".into());
        }
        Ok(())
    }
}

fn flatten(prefix: &str, t: &toml::Table, out: &mut Vec<(String, Value)>) {
    for (k, v) in t {
        let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
        match v {
            Value::Table(inner) => flatten(&key, inner, out),
            other => out.push((key, other.clone())),
        }
    }
}
