//! Exploration environment: a kinematic hand touching a fixed voxelized
//! object, accumulating what it has touched (`observed`) and everything its
//! sensors have swept (`visited`).

pub mod probe;

use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt::Write as _;

use rand::Rng as _;

use crate::error::{Error, Result};
use crate::geometry::{voxelize_solid, CellIndex, Mesh, VoxelGrid};
use crate::math::{cos, floor, sin, Aabb, Mat3, Vec3};
use crate::rng::rng_from_seed;

pub use probe::{
    angles_facing, denormalize, forward_kinematics, normalize, FingerSpec, JointAxis, LinkSpec,
    ProbeSpec, ProbeState, BASE_DOF,
};

#[derive(Debug, Clone, PartialEq)]
pub struct EnvConfig {
    pub resolution: usize,
    pub horizon: usize,
    /// Nominal duration of one step. Bookkeeping only.
    pub step_ms: u64,
    pub spawn_radius: f64,
    /// Collision checks per DOF move.
    pub substeps: usize,
}

impl Default for EnvConfig {
    fn default() -> Self {
        EnvConfig {
            resolution: 32,
            horizon: 200,
            step_ms: 30,
            spawn_radius: 0.5,
            substeps: 4,
        }
    }
}

impl EnvConfig {
    pub fn episode_duration_ms(&self) -> u64 {
        self.horizon as u64 * self.step_ms
    }

    pub fn episode_seconds(&self) -> f64 {
        self.episode_duration_ms() as f64 / 1000.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContactEvent {
    pub sensor: u32,
    pub point: Vec3,
    pub cell: [u32; 3],
    pub step: u32,
}

/// What one step changed. `new_observed` and `new_visited` are counted
/// against the grids as they were before the step.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Transition {
    /// Cells overlapped by any sensor sphere after the move, ascending.
    pub swept: Vec<CellIndex>,
    /// Ground-truth occupied cells among `swept`, ascending.
    pub touched: Vec<CellIndex>,
    pub contacts: Vec<ContactEvent>,
    pub new_observed: usize,
    pub new_visited: usize,
    /// DOF moves cut short by contact.
    pub blocked: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub grid: VoxelGrid,
    /// Configuration normalized to `[-1, 1]` by the probe limits.
    pub pose: Vec<f64>,
}

/// Yaw of object pose `pose_id` out of `pose_count`.
pub fn pose_angle(pose_id: usize, pose_count: usize) -> Result<f64> {
    if pose_count == 0 || pose_id >= pose_count {
        return Err(Error::InvalidPose {
            pose_id,
            pose_count,
        });
    }
    Ok(pose_id as f64 * core::f64::consts::TAU / pose_count as f64)
}

pub fn yaw_mesh(mesh: &Mesh, angle: f64) -> Result<Mesh> {
    let r = Mat3::rot_z(angle);
    mesh.map_vertices(|v| r.apply(v))
}

/// Ground truth for one object pose: the mesh yawed about the vertical axis
/// and voxelized over the unit workspace.
pub fn posed_ground_truth(mesh: &Mesh, n: usize, pose_id: usize, pose_count: usize) -> Result<VoxelGrid> {
    let angle = pose_angle(pose_id, pose_count)?;
    let m = yaw_mesh(mesh, angle)?;
    Ok(voxelize_solid(&m, n, Aabb::unit_workspace()).0)
}

/// Marks in `canonical` the cell containing each occupied cell centre of
/// `posed` after undoing a yaw of `angle`.
pub fn derotate_into(posed: &VoxelGrid, angle: f64, canonical: &mut VoxelGrid) {
    let r = Mat3::rot_z(-angle);
    for idx in posed.occupied() {
        let [i, j, k] = posed.coords(idx);
        if let Some([a, b, c]) = canonical.cell_of(r.apply(posed.cell_center(i, j, k))) {
            canonical.set(a, b, c, true);
        }
    }
}

/// Calls `f` for every cell whose box lies within `r` of `c`
/// (`strict` excludes boxes exactly at distance `r`).
fn for_cells_near(grid: &VoxelGrid, c: Vec3, r: f64, strict: bool, mut f: impl FnMut(usize, [usize; 3], f64)) {
    let n = grid.resolution() as isize;
    let e = grid.edge();
    let o = grid.bbox_min();
    let lo = (c - Vec3::splat(r) - o) / e;
    let hi = (c + Vec3::splat(r) - o) / e;
    let range = |a: f64, b: f64| -> (isize, isize) {
        ((floor(a) as isize).max(0), (floor(b) as isize).min(n - 1))
    };
    let (x0, x1) = range(lo.x, hi.x);
    let (y0, y1) = range(lo.y, hi.y);
    let (z0, z1) = range(lo.z, hi.z);
    let r2 = r * r;
    for k in z0..=z1 {
        for j in y0..=y1 {
            for i in x0..=x1 {
                let (i, j, k) = (i as usize, j as usize, k as usize);
                let d2 = grid.cell_box(i, j, k).dist_sq(c);
                if d2 < r2 || (!strict && d2 == r2) {
                    f(grid.index(i, j, k), [i, j, k], d2);
                }
            }
        }
    }
}

/// True when the sensor centre lies deeper than `r` inside the occupied
/// solid, i.e. the open ball of radius `r` touches only occupied cells.
pub fn penetrates(gt: &VoxelGrid, c: Vec3, r: f64) -> bool {
    if gt.cell_of(c).is_none() {
        return false;
    }
    let mut all = true;
    for_cells_near(gt, c, r, true, |idx, _, _| all &= gt.get_index(idx));
    // the open ball may leave the grid, which counts as free space
    let b = gt.bbox();
    let inside_box = (0..3).all(|a| c[a] - r >= b.min[a] && c[a] + r <= b.max[a]);
    all && inside_box
}

/// Contact point on occupied cell `ijk`: the closest box point to the sensor
/// centre, moved to the nearest face bordering free space when it would
/// otherwise sit on a face shared with another occupied cell (or inside).
fn surface_point(gt: &VoxelGrid, ijk: [usize; 3], c: Vec3) -> Vec3 {
    let b = gt.cell_box(ijk[0], ijk[1], ijk[2]);
    let p = b.clamp(c);
    let mut best: Option<(f64, Vec3)> = None;
    for axis in 0..3 {
        for (side, plane) in [(-1isize, b.min[axis]), (1, b.max[axis])] {
            let mut nb = ijk.map(|v| v as isize);
            nb[axis] += side;
            if gt.get_signed(nb[0], nb[1], nb[2]) {
                continue;
            }
            if p[axis] == plane {
                return p;
            }
            let mut q = p.to_array();
            q[axis] = plane;
            let q = Vec3::from_array(q);
            let d = q.dist_sq(c);
            if best.is_none_or(|(bd, _)| d < bd) {
                best = Some((d, q));
            }
        }
    }
    best.map_or(p, |(_, q)| q)
}

fn overlaps(gt: &VoxelGrid, c: Vec3, r: f64) -> bool {
    let mut any = false;
    for_cells_near(gt, c, r, false, |idx, _, _| any |= gt.get_index(idx));
    any
}

#[derive(Debug, Clone)]
pub struct EnvState {
    spec: Arc<ProbeSpec>,
    config: EnvConfig,
    radii: Vec<f64>,
    probe: ProbeState,
    sites: Vec<Vec3>,
    observed: VoxelGrid,
    visited: VoxelGrid,
    ground_truth: Arc<VoxelGrid>,
    t: usize,
}

impl PartialEq for EnvState {
    fn eq(&self, o: &Self) -> bool {
        self.probe == o.probe
            && self.observed == o.observed
            && self.visited == o.visited
            && self.t == o.t
            && self.ground_truth == o.ground_truth
            && self.config == o.config
    }
}

impl EnvState {
    /// Fresh episode: hand placed uniformly on the spawn sphere, facing the
    /// workspace centre with a random wrist roll, fingers open and clear of
    /// the object. Grids start empty.
    pub fn reset(spec: Arc<ProbeSpec>, config: EnvConfig, ground_truth: Arc<VoxelGrid>, seed: u64) -> Result<EnvState> {
        spec.validate()?;
        if ground_truth.resolution() != config.resolution {
            return Err(Error::ResolutionMismatch {
                expected: config.resolution,
                found: ground_truth.resolution(),
            });
        }
        let mut rng = rng_from_seed(seed);
        let radii = spec.site_radii();
        let mut probe = ProbeState::open(&spec, Vec3::ZERO, [0.0; 3]);
        let mut sites = Vec::new();
        for _attempt in 0..256 {
            let z: f64 = rng.random_range(-1.0..=1.0);
            let phi: f64 = rng.random_range(0.0..core::f64::consts::TAU);
            let rxy = crate::math::sqrt((1.0 - z * z).max(0.0));
            let p = Vec3::new(rxy * cos(phi), rxy * sin(phi), z) * config.spawn_radius;
            let roll: f64 = rng.random_range(-core::f64::consts::PI..core::f64::consts::PI);
            probe = ProbeState::open(&spec, p, angles_facing(-p, roll));
            probe.clamp_to(&spec);
            sites = forward_kinematics(&spec, &probe);
            if !sites.iter().zip(&radii).any(|(&c, &r)| overlaps(&ground_truth, c, r)) {
                break;
            }
        }
        let observed = ground_truth.empty_like();
        Ok(EnvState {
            spec,
            config,
            radii,
            probe,
            sites,
            visited: observed.clone(),
            observed,
            ground_truth,
            t: 0,
        })
    }

    pub fn spec(&self) -> &ProbeSpec {
        &self.spec
    }

    pub fn config(&self) -> &EnvConfig {
        &self.config
    }

    pub fn probe(&self) -> &ProbeState {
        &self.probe
    }

    pub fn sites(&self) -> &[Vec3] {
        &self.sites
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    pub fn observed(&self) -> &VoxelGrid {
        &self.observed
    }

    pub fn visited(&self) -> &VoxelGrid {
        &self.visited
    }

    pub fn ground_truth(&self) -> &VoxelGrid {
        &self.ground_truth
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn is_done(&self) -> bool {
        self.t >= self.config.horizon
    }

    pub fn observe(&self) -> Observation {
        Observation {
            grid: self.observed.clone(),
            pose: normalize(&self.spec, &self.probe.q),
        }
    }

    /// Normalized configuration only (avoids copying the grid).
    pub fn pose_features(&self) -> Vec<f64> {
        normalize(&self.spec, &self.probe.q)
    }

    /// Moves the hand to `probe` directly (scripted starts and tests).
    pub fn place_probe(&mut self, probe: ProbeState) -> Result<()> {
        if probe.q.len() != self.spec.action_dim() || !probe.within_limits(&self.spec) {
            return Err(Error::InvalidArgument("probe state outside limits".into()));
        }
        let sites = forward_kinematics(&self.spec, &probe);
        if self.any_penetration(&sites) {
            return Err(Error::InvalidArgument("probe state penetrates the object".into()));
        }
        self.probe = probe;
        self.sites = sites;
        Ok(())
    }

    fn any_penetration(&self, sites: &[Vec3]) -> bool {
        sites
            .iter()
            .zip(&self.radii)
            .any(|(&c, &r)| penetrates(&self.ground_truth, c, r))
    }

    /// Applies one action. Components are clamped to `[-1, 1]` (NaN counts
    /// as 0), scaled by the per-DOF step limits and integrated one DOF at a
    /// time; a DOF whose move would push a sensor centre deeper than its
    /// radius into the object stops at the last collision-free substep.
    pub fn step(&mut self, action: &[f64]) -> Result<Transition> {
        if self.is_done() {
            return Err(Error::EpisodeFinished {
                step: self.t,
                horizon: self.config.horizon,
            });
        }
        let dim = self.spec.action_dim();
        if action.len() != dim {
            return Err(Error::Shape(alloc::format!(
                "action has {} components, expected {dim}",
                action.len()
            )));
        }
        let limits = self.spec.limits();
        let scales = self.spec.step_scales();
        let subs = self.config.substeps.max(1);
        let mut blocked = 0;
        let mut buf = Vec::with_capacity(self.sites.len());
        for d in 0..dim {
            let a = if action[d].is_nan() { 0.0 } else { action[d].clamp(-1.0, 1.0) };
            let start = self.probe.q[d];
            let target = (start + a * scales[d]).clamp(limits[d].0, limits[d].1);
            if target == start {
                continue;
            }
            for s in 1..=subs {
                self.probe.q[d] = start + (target - start) * (s as f64 / subs as f64);
                probe::forward_kinematics_into(&self.spec, &self.probe, &mut buf);
                if self.any_penetration(&buf) {
                    self.probe.q[d] = start + (target - start) * ((s - 1) as f64 / subs as f64);
                    blocked += 1;
                    break;
                }
            }
        }
        probe::forward_kinematics_into(&self.spec, &self.probe, &mut buf);
        self.sites = buf;

        let mut tr = Transition {
            blocked,
            ..Transition::default()
        };
        let step = self.t as u32;
        for (s, (&c, &r)) in self.sites.iter().zip(&self.radii).enumerate() {
            let gt = &self.ground_truth;
            for_cells_near(gt, c, r, false, |idx, ijk, _| {
                tr.swept.push(idx as CellIndex);
                if gt.get_index(idx) {
                    tr.touched.push(idx as CellIndex);
                    tr.contacts.push(ContactEvent {
                        sensor: s as u32,
                        point: surface_point(gt, ijk, c),
                        cell: ijk.map(|v| v as u32),
                        step,
                    });
                }
            });
        }
        tr.swept.sort_unstable();
        tr.swept.dedup();
        tr.touched.sort_unstable();
        tr.touched.dedup();
        for &idx in &tr.swept {
            if !self.visited.get_index(idx as usize) {
                self.visited.set_index(idx as usize, true);
                tr.new_visited += 1;
            }
        }
        for &idx in &tr.touched {
            if !self.observed.get_index(idx as usize) {
                self.observed.set_index(idx as usize, true);
                tr.new_observed += 1;
            }
        }
        self.t += 1;
        Ok(tr)
    }
}

/// One line of an episode trace.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub t: usize,
    pub action: Vec<f64>,
    pub contacts: usize,
    pub new_voxels: usize,
}

impl TraceRecord {
    pub fn new(t: usize, action: &[f64], tr: &Transition) -> TraceRecord {
        TraceRecord {
            t,
            action: action.to_vec(),
            contacts: tr.contacts.len(),
            new_voxels: tr.new_observed,
        }
    }

    /// `t<TAB>a0,a1,...<TAB>contacts<TAB>new_voxels`
    pub fn to_line(&self) -> String {
        let mut s = String::new();
        let _ = write!(s, "{}\t", self.t);
        for (i, a) in self.action.iter().enumerate() {
            if i > 0 {
                s.push(',');
            }
            let _ = write!(s, "{a:.6}");
        }
        let _ = write!(s, "\t{}\t{}", self.contacts, self.new_voxels);
        s
    }
}
