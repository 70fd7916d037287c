//! Kinematic hand: a free-floating base with three rotational DOF and a set
//! of serial finger chains, each link ending in a spherical contact sensor.
//!
//! Hand frame: fingers extend along +x from the palm, `FlexY` joints bend
//! about the local y axis and `AbductZ` joints swing about local z.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math::{Frame, Mat3, Vec3};

pub const BASE_DOF: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JointAxis {
    AbductZ,
    FlexY,
    /// Flexion about -y, for opposing digits.
    FlexNegY,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinkSpec {
    pub axis: JointAxis,
    /// Distance from this joint to the next, along the link's local +x.
    pub length: f64,
    pub limits: (f64, f64),
    pub sensor_radius: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FingerSpec {
    /// Palm-frame position of the first joint.
    pub mount: Vec3,
    pub links: Vec<LinkSpec>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeSpec {
    pub fingers: Vec<FingerSpec>,
    pub palm_radius: f64,
    /// Base position is clamped to `[-base_limit, base_limit]³`.
    pub base_limit: f64,
    /// Limits of arm roll (about world z), wrist pitch (y) and wrist roll (x).
    pub angle_limits: [(f64, f64); 3],
    pub translation_step: f64,
    pub angle_step: f64,
    pub joint_step: f64,
}

impl Default for ProbeSpec {
    fn default() -> Self {
        ProbeSpec::with_joint_counts(&[4, 4, 4, 5, 5])
    }
}

impl ProbeSpec {
    /// Default geometry with the given joints per finger. The last two
    /// fingers (or the last one, for fewer than four) oppose the others.
    pub fn with_joint_counts(counts: &[usize]) -> ProbeSpec {
        use core::f64::consts::PI;
        let opposing = if counts.len() >= 4 { 2 } else { usize::from(counts.len() > 1) };
        let upper = counts.len() - opposing;
        let mut fingers = Vec::with_capacity(counts.len());
        for (f, &joints) in counts.iter().enumerate() {
            let (row, slot, z, flex) = if f < upper {
                (upper, f, 0.03, JointAxis::FlexY)
            } else {
                (opposing, f - upper, -0.03, JointAxis::FlexNegY)
            };
            let y = (slot as f64 - (row as f64 - 1.0) / 2.0) * 0.04;
            let mut links = Vec::with_capacity(joints);
            for j in 0..joints {
                links.push(if j == 0 {
                    LinkSpec {
                        axis: JointAxis::AbductZ,
                        length: 0.035,
                        limits: (-0.35, 0.35),
                        sensor_radius: 0.015,
                    }
                } else {
                    LinkSpec {
                        axis: flex,
                        length: 0.035,
                        limits: (-0.2, 1.6),
                        sensor_radius: 0.015,
                    }
                });
            }
            fingers.push(FingerSpec {
                mount: Vec3::new(0.02, y, z),
                links,
            });
        }
        ProbeSpec {
            fingers,
            palm_radius: 0.015,
            base_limit: 0.7,
            angle_limits: [(-PI, PI), (-PI / 2.0, PI / 2.0), (-PI, PI)],
            translation_step: 0.02,
            angle_step: 0.1,
            joint_step: 0.15,
        }
    }

    pub fn joint_count(&self) -> usize {
        self.fingers.iter().map(|f| f.links.len()).sum()
    }

    pub fn action_dim(&self) -> usize {
        BASE_DOF + self.joint_count()
    }

    /// Palm sensor plus one per link.
    pub fn site_count(&self) -> usize {
        1 + self.joint_count()
    }

    pub fn site_radii(&self) -> Vec<f64> {
        let mut r = vec![self.palm_radius];
        for f in &self.fingers {
            r.extend(f.links.iter().map(|l| l.sensor_radius));
        }
        r
    }

    pub fn max_radius(&self) -> f64 {
        self.site_radii().into_iter().fold(0.0, f64::max)
    }

    /// Longest distance from the palm origin to a sensor centre.
    pub fn reach(&self) -> f64 {
        self.fingers
            .iter()
            .map(|f| f.mount.norm() + f.links.iter().map(|l| l.length).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// `(lo, hi)` for every configuration coordinate, in state order.
    pub fn limits(&self) -> Vec<(f64, f64)> {
        let b = self.base_limit;
        let mut out = vec![(-b, b); 3];
        out.extend_from_slice(&self.angle_limits);
        for f in &self.fingers {
            out.extend(f.links.iter().map(|l| l.limits));
        }
        out
    }

    /// Per-coordinate displacement for a unit action.
    pub fn step_scales(&self) -> Vec<f64> {
        let mut out = vec![self.translation_step; 3];
        out.extend_from_slice(&[self.angle_step; 3]);
        out.extend(core::iter::repeat_n(self.joint_step, self.joint_count()));
        out
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |why: &str| Err(Error::InvalidArgument(why.into()));
        if self.fingers.is_empty() {
            return bad("probe needs at least one finger");
        }
        for (lo, hi) in self.limits() {
            if !(lo < hi) {
                return bad("joint limits must satisfy lo < hi");
            }
        }
        if self.site_radii().iter().any(|&r| !(r > 0.0)) {
            return bad("sensor radii must be positive");
        }
        if !(self.translation_step > 0.0 && self.angle_step > 0.0 && self.joint_step > 0.0) {
            return bad("step limits must be positive");
        }
        Ok(())
    }
}

/// Configuration vector: `[x, y, z, arm_roll, wrist_pitch, wrist_roll,
/// joints...]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeState {
    pub q: Vec<f64>,
}

impl ProbeState {
    /// Open hand at `position` with the given base angles.
    pub fn open(spec: &ProbeSpec, position: Vec3, angles: [f64; 3]) -> ProbeState {
        let mut q = vec![0.0; spec.action_dim()];
        q[..3].copy_from_slice(&position.to_array());
        q[3..6].copy_from_slice(&angles);
        ProbeState { q }
    }

    pub fn position(&self) -> Vec3 {
        Vec3::new(self.q[0], self.q[1], self.q[2])
    }

    pub fn orientation(&self) -> Mat3 {
        Mat3::rot_z(self.q[3])
            .mul(&Mat3::rot_y(self.q[4]))
            .mul(&Mat3::rot_x(self.q[5]))
    }

    pub fn joints(&self) -> &[f64] {
        &self.q[BASE_DOF..]
    }

    pub fn clamp_to(&mut self, spec: &ProbeSpec) {
        for (v, (lo, hi)) in self.q.iter_mut().zip(spec.limits()) {
            *v = v.clamp(lo, hi);
        }
    }

    pub fn within_limits(&self, spec: &ProbeSpec) -> bool {
        self.q
            .iter()
            .zip(spec.limits())
            .all(|(&v, (lo, hi))| v >= lo && v <= hi)
    }
}

/// Base and arm angles that point the hand's +x axis along `dir`.
pub fn angles_facing(dir: Vec3, wrist_roll: f64) -> [f64; 3] {
    let d = dir.normalized().unwrap_or(Vec3::X);
    let pitch = -crate::math::asin(d.z.clamp(-1.0, 1.0));
    let roll = crate::math::atan2(d.y, d.x);
    [roll, pitch, wrist_roll]
}

fn joint_rotation(axis: JointAxis, angle: f64) -> Mat3 {
    match axis {
        JointAxis::AbductZ => Mat3::rot_z(angle),
        JointAxis::FlexY => Mat3::rot_y(angle),
        JointAxis::FlexNegY => Mat3::rot_y(-angle),
    }
}

/// World-frame sensor centres: the palm first, then each finger's links
/// from proximal to distal.
pub fn forward_kinematics(spec: &ProbeSpec, state: &ProbeState) -> Vec<Vec3> {
    let mut out = Vec::with_capacity(spec.site_count());
    forward_kinematics_into(spec, state, &mut out);
    out
}

pub fn forward_kinematics_into(spec: &ProbeSpec, state: &ProbeState, out: &mut Vec<Vec3>) {
    out.clear();
    let base = Frame::new(state.orientation(), state.position());
    out.push(base.translation);
    let joints = state.joints();
    let mut ji = 0;
    for finger in &spec.fingers {
        let mut frame = base.compose(&Frame::new(Mat3::IDENTITY, finger.mount));
        for link in &finger.links {
            let joint = Frame::new(joint_rotation(link.axis, joints[ji]), Vec3::ZERO);
            frame = frame.compose(&joint);
            frame = frame.compose(&Frame::new(Mat3::IDENTITY, Vec3::new(link.length, 0.0, 0.0)));
            out.push(frame.translation);
            ji += 1;
        }
    }
}

/// Maps each coordinate to `[-1, 1]` by its limits.
pub fn normalize(spec: &ProbeSpec, q: &[f64]) -> Vec<f64> {
    q.iter()
        .zip(spec.limits())
        .map(|(&v, (lo, hi))| 2.0 * (v - lo) / (hi - lo) - 1.0)
        .collect()
}

pub fn denormalize(spec: &ProbeSpec, u: &[f64]) -> Vec<f64> {
    u.iter()
        .zip(spec.limits())
        .map(|(&v, (lo, hi))| lo + (v + 1.0) * 0.5 * (hi - lo))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::FRAC_PI_2;

    #[test]
    fn default_spec_has_28_dof() {
        let s = ProbeSpec::default();
        assert_eq!(s.joint_count(), 22);
        assert_eq!(s.action_dim(), 28);
        assert_eq!(s.site_count(), 23);
        s.validate().unwrap();
        assert!(s.max_radius() < 0.5 / 32.0);
    }

    #[test]
    fn zero_angles_accumulate_offsets() {
        let s = ProbeSpec::default();
        let p = Vec3::new(0.1, -0.2, 0.3);
        let st = ProbeState::open(&s, p, [0.0; 3]);
        let sites = forward_kinematics(&s, &st);
        assert_eq!(sites[0], p);
        let mut i = 1;
        for f in &s.fingers {
            let mut acc = p + f.mount;
            for l in &f.links {
                acc.x += l.length;
                assert!(sites[i].dist(acc) < 1e-15);
                i += 1;
            }
        }
    }

    #[test]
    fn translation_equivariance() {
        let s = ProbeSpec::default();
        let mut st = ProbeState::open(&s, Vec3::ZERO, [0.3, -0.4, 1.1]);
        for (k, j) in st.q[BASE_DOF..].iter_mut().enumerate() {
            *j = 0.05 * k as f64;
        }
        let a = forward_kinematics(&s, &st);
        let d = Vec3::new(0.05, -0.01, 0.2);
        st.q[0] += d.x;
        st.q[1] += d.y;
        st.q[2] += d.z;
        let b = forward_kinematics(&s, &st);
        for (x, y) in a.iter().zip(&b) {
            assert!((*y - *x - d).norm() < 1e-14);
        }
    }

    #[test]
    fn single_link_quarter_turn() {
        let len = 0.1;
        let spec = ProbeSpec {
            fingers: vec![FingerSpec {
                mount: Vec3::ZERO,
                links: vec![LinkSpec {
                    axis: JointAxis::FlexY,
                    length: len,
                    limits: (-2.0, 2.0),
                    sensor_radius: 0.01,
                }],
            }],
            ..ProbeSpec::default()
        };
        let mut st = ProbeState::open(&spec, Vec3::ZERO, [0.0; 3]);
        st.q[BASE_DOF] = FRAC_PI_2;
        let sites = forward_kinematics(&spec, &st);
        // rotating +x by +90 deg about y gives -z
        assert!(sites[1].dist(Vec3::new(0.0, 0.0, -len)) < 1e-15);
    }

    #[test]
    fn facing_angles_point_the_hand() {
        let s = ProbeSpec::default();
        for dir in [Vec3::X, -Vec3::Y, Vec3::new(0.3, -0.5, 0.8), -Vec3::Z] {
            let st = ProbeState::open(&s, Vec3::ZERO, angles_facing(dir, 0.7));
            let x = st.orientation().apply(Vec3::X);
            assert!(x.dist(dir.normalized().unwrap()) < 1e-12);
        }
    }

    #[test]
    fn normalization_round_trip() {
        let s = ProbeSpec::default();
        let q: Vec<f64> = s
            .limits()
            .iter()
            .enumerate()
            .map(|(i, (lo, hi))| lo + (hi - lo) * ((i * 37 % 11) as f64 / 10.0))
            .collect();
        let u = normalize(&s, &q);
        assert!(u.iter().all(|v| (-1.0..=1.0).contains(v)));
        let back = denormalize(&s, &u);
        for (a, b) in q.iter().zip(&back) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}
