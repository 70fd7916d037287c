use alloc::vec;
use alloc::vec::Vec;

use rand::Rng as _;

use super::train::Actor;
use crate::env::probe::{angles_facing, JointAxis, BASE_DOF};
use crate::env::{EnvState, Transition};
use crate::error::Result;
use crate::math::Vec3;
use core::f64::consts::PI;
use crate::rng::{rng_from_seed, Rng};

/// Uniform actions in `[-1, 1]` every step.
#[derive(Debug, Clone)]
pub struct RandomPolicy {
    rng: Rng,
}

impl RandomPolicy {
    pub fn new() -> Self {
        RandomPolicy { rng: rng_from_seed(0) }
    }
}

impl Default for RandomPolicy {
    fn default() -> Self {
        Self::new()
    }
}

impl Actor for RandomPolicy {
    fn begin_episode(&mut self, _env: &EnvState, seed: u64) {
        self.rng = rng_from_seed(seed);
    }

    fn act(&mut self, env: &EnvState, _last: Option<&Transition>) -> Result<Vec<f64>> {
        let dim = env.spec().action_dim();
        Ok((0..dim).map(|_| self.rng.random_range(-1.0..=1.0)).collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Phase {
    Approach,
    Close(usize),
    Reopen(usize),
}

/// Scripted power grasp: approach the workspace centre facing it, close
/// every flexion joint for `close_steps`, then reopen for `reopen_steps`
/// while backing off sideways with a random wrist turn, and repeat.
#[derive(Debug, Clone)]
pub struct HeuristicPolicy {
    pub close_steps: usize,
    pub reopen_steps: usize,
    /// Approach ends once the palm is this close to the centre.
    pub stop_radius: f64,
    rng: Rng,
    phase: Phase,
    lateral: Vec3,
    twist: [f64; 3],
}

impl HeuristicPolicy {
    pub fn new() -> Self {
        HeuristicPolicy {
            close_steps: 40,
            reopen_steps: 20,
            stop_radius: 0.05,
            rng: rng_from_seed(0),
            phase: Phase::Approach,
            lateral: Vec3::ZERO,
            twist: [0.0; 3],
        }
    }

    fn flex_mask(env: &EnvState) -> Vec<bool> {
        let mut mask = vec![false; env.spec().action_dim()];
        let mut d = BASE_DOF;
        for f in &env.spec().fingers {
            for l in &f.links {
                mask[d] = l.axis != JointAxis::AbductZ;
                d += 1;
            }
        }
        mask
    }
}

impl Default for HeuristicPolicy {
    fn default() -> Self {
        Self::new()
    }
}

fn wrap(a: f64) -> f64 {
    let mut a = a % (2.0 * PI);
    if a > PI {
        a -= 2.0 * PI;
    } else if a < -PI {
        a += 2.0 * PI;
    }
    a
}

impl Actor for HeuristicPolicy {
    fn begin_episode(&mut self, _env: &EnvState, seed: u64) {
        self.rng = rng_from_seed(seed);
        self.phase = Phase::Approach;
    }

    fn act(&mut self, env: &EnvState, last: Option<&Transition>) -> Result<Vec<f64>> {
        let spec = env.spec();
        let q = &env.probe().q;
        let pos = env.probe().position();
        let flex = Self::flex_mask(env);
        let mut a = vec![0.0; spec.action_dim()];
        let touched = last.is_some_and(|t| !t.contacts.is_empty() || t.blocked > 0);

        if self.phase == Phase::Approach && (touched || pos.norm() < self.stop_radius) {
            self.phase = Phase::Close(0);
        }
        match self.phase {
            Phase::Approach => {
                let to_centre = -pos;
                for (ai, v) in a.iter_mut().zip(to_centre.to_array()) {
                    *ai = (v / spec.translation_step).clamp(-1.0, 1.0);
                }
                let want = angles_facing(to_centre, q[5]);
                for i in 0..3 {
                    a[3 + i] = (wrap(want[i] - q[3 + i]) / spec.angle_step).clamp(-1.0, 1.0);
                }
                for d in BASE_DOF..a.len() {
                    a[d] = (-q[d] / spec.joint_step).clamp(-1.0, 1.0);
                }
            }
            Phase::Close(n) => {
                for d in BASE_DOF..a.len() {
                    a[d] = if flex[d] { 1.0 } else { 0.0 };
                }
                self.phase = if n + 1 >= self.close_steps {
                    let out = pos.normalized().unwrap_or(Vec3::X);
                    let side = super::random_unit(&mut self.rng);
                    self.lateral = (side - out * side.dot(out)).normalized().unwrap_or(Vec3::Y);
                    self.twist = [
                        self.rng.random_range(-1.0..=1.0),
                        self.rng.random_range(-1.0..=1.0),
                        self.rng.random_range(-1.0..=1.0),
                    ];
                    Phase::Reopen(0)
                } else {
                    Phase::Close(n + 1)
                };
            }
            Phase::Reopen(n) => {
                let out = pos.normalized().unwrap_or(Vec3::X);
                let dir = out * 0.5 + self.lateral * 0.5;
                a[..3].copy_from_slice(&dir.to_array());
                a[3..6].copy_from_slice(&self.twist);
                for d in BASE_DOF..a.len() {
                    a[d] = if flex[d] { -1.0 } else { 0.0 };
                }
                self.phase = if n + 1 >= self.reopen_steps {
                    Phase::Approach
                } else {
                    Phase::Reopen(n + 1)
                };
            }
        }
        Ok(a)
    }
}
