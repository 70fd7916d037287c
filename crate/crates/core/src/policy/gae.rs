use alloc::vec::Vec;

use super::ObsFeatures;
use crate::error::{Error, Result};

/// Generalized advantage estimation over one trajectory segment.
/// `last_value` bootstraps the step after the segment unless it ended in a
/// terminal step. Returns `(advantages, returns)`.
pub fn compute_gae(
    rewards: &[f64],
    values: &[f64],
    dones: &[bool],
    last_value: f64,
    gamma: f64,
    lambda: f64,
) -> (Vec<f64>, Vec<f64>) {
    let n = rewards.len();
    assert!(values.len() == n && dones.len() == n, "gae: ragged buffer");
    let mut adv = alloc::vec![0.0; n];
    let mut next_adv = 0.0;
    let mut next_value = last_value;
    for t in (0..n).rev() {
        let live = if dones[t] { 0.0 } else { 1.0 };
        let delta = rewards[t] + gamma * next_value * live - values[t];
        next_adv = delta + gamma * lambda * live * next_adv;
        adv[t] = next_adv;
        next_value = values[t];
    }
    let ret = adv.iter().zip(values).map(|(a, v)| a + v).collect();
    (adv, ret)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Step {
    pub obs: ObsFeatures,
    /// Pre-squash action.
    pub u: Vec<f64>,
    /// Log-probability of the squashed action.
    pub log_prob: f64,
    pub reward: f64,
    pub value: f64,
    pub done: bool,
}

/// Per-environment trajectory segments of one collection round.
#[derive(Debug, Clone, PartialEq)]
pub struct RolloutBuffer {
    horizon: usize,
    segments: Vec<Vec<Step>>,
    last_values: Vec<f64>,
}

impl RolloutBuffer {
    pub fn new(n_envs: usize, horizon: usize) -> Self {
        RolloutBuffer {
            horizon,
            segments: (0..n_envs).map(|_| Vec::with_capacity(horizon)).collect(),
            last_values: alloc::vec![0.0; n_envs],
        }
    }

    pub fn capacity(&self) -> usize {
        self.segments.len() * self.horizon
    }

    pub fn len(&self) -> usize {
        self.segments.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_full(&self) -> bool {
        self.segments.iter().all(|s| s.len() == self.horizon)
    }

    pub fn push(&mut self, env: usize, step: Step) -> Result<()> {
        if !step.reward.is_finite() {
            return Err(Error::NonFinite(alloc::format!("reward from env {env}")));
        }
        let seg = &mut self.segments[env];
        if seg.len() == self.horizon {
            return Err(Error::InvalidArgument(alloc::format!("rollout segment {env} is full")));
        }
        seg.push(step);
        Ok(())
    }

    pub fn set_last_value(&mut self, env: usize, v: f64) {
        self.last_values[env] = v;
    }

    /// Steps in env-major order.
    pub fn steps(&self) -> impl Iterator<Item = &Step> {
        self.segments.iter().flatten()
    }

    /// Advantages and returns in the same order as [`Self::steps`].
    pub fn advantages(&self, gamma: f64, lambda: f64) -> (Vec<f64>, Vec<f64>) {
        let (mut adv, mut ret) = (Vec::with_capacity(self.len()), Vec::with_capacity(self.len()));
        for (seg, &last) in self.segments.iter().zip(&self.last_values) {
            let r: Vec<f64> = seg.iter().map(|s| s.reward).collect();
            let v: Vec<f64> = seg.iter().map(|s| s.value).collect();
            let d: Vec<bool> = seg.iter().map(|s| s.done).collect();
            let (a, g) = compute_gae(&r, &v, &d, last, gamma, lambda);
            adv.extend(a);
            ret.extend(g);
        }
        (adv, ret)
    }
}
