//! Intrinsic rewards. Every variant adds `lambda * coverage` to its own
//! term; the two "minus" variants drop one half of the default
//! discovery + coverage reward.

use alloc::collections::BTreeSet;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::env::Transition;
use crate::error::{Error, Result};
use crate::geometry::{alpha_shape, convex_hull, sample_surface, CellIndex, KdTree, Mesh, VoxelGrid};
use crate::math::{floor, Vec3};
use crate::metrics::chamfer_points;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RewardVariant {
    DiscoveryCoverage,
    NoCoverage,
    NoDiscovery,
    Knn,
    Points,
    Contact,
    Disagreement,
    Chamfer,
}

impl RewardVariant {
    pub const ALL: [RewardVariant; 8] = [
        RewardVariant::DiscoveryCoverage,
        RewardVariant::NoCoverage,
        RewardVariant::NoDiscovery,
        RewardVariant::Knn,
        RewardVariant::Points,
        RewardVariant::Contact,
        RewardVariant::Disagreement,
        RewardVariant::Chamfer,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            RewardVariant::DiscoveryCoverage => "discovery+coverage",
            RewardVariant::NoCoverage => "-coverage",
            RewardVariant::NoDiscovery => "-discovery",
            RewardVariant::Knn => "knn",
            RewardVariant::Points => "points",
            RewardVariant::Contact => "contact",
            RewardVariant::Disagreement => "disagreement",
            RewardVariant::Chamfer => "chamfer",
        }
    }
}

impl fmt::Display for RewardVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for RewardVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let v = match s {
            "discovery+coverage" | "tslam" => RewardVariant::DiscoveryCoverage,
            "-coverage" => RewardVariant::NoCoverage,
            "-discovery" | "-curiosity" => RewardVariant::NoDiscovery,
            "knn" => RewardVariant::Knn,
            "points" => RewardVariant::Points,
            "contact" => RewardVariant::Contact,
            "disagreement" => RewardVariant::Disagreement,
            "chamfer" => RewardVariant::Chamfer,
            _ => return Err(Error::InvalidArgument(alloc::format!("unknown reward variant {s:?}"))),
        };
        Ok(v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RewardConfig {
    pub variant: RewardVariant,
    pub lambda: f64,
    pub k: usize,
    pub alpha: f64,
    /// Disagreement is recomputed every `stride` steps.
    pub stride: usize,
    /// Surface samples per shape for the disagreement chamfer.
    pub samples: usize,
    /// Fall back to the convex hull when the alpha shape is empty.
    pub hull_fallback: bool,
}

impl Default for RewardConfig {
    fn default() -> Self {
        RewardConfig {
            variant: RewardVariant::DiscoveryCoverage,
            lambda: 0.1,
            k: 5,
            alpha: 0.1,
            stride: 1,
            samples: 256,
            hull_fallback: true,
        }
    }
}

impl RewardConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0) || !self.lambda.is_finite() {
            return Err(Error::InvalidArgument("reward lambda must be >= 0".into()));
        }
        if self.k == 0 || self.stride == 0 || self.samples == 0 {
            return Err(Error::InvalidArgument("reward k, stride and samples must be >= 1".into()));
        }
        if !(self.alpha > 0.0) {
            return Err(Error::InvalidArgument("reward alpha must be > 0".into()));
        }
        Ok(())
    }
}

/// Touched cells not yet observed.
pub fn discovery_reward(touched: &[CellIndex], previously_observed: &VoxelGrid) -> usize {
    touched
        .iter()
        .filter(|&&c| !previously_observed.get_index(c as usize))
        .count()
}

/// Swept cells not yet visited.
pub fn coverage_reward(swept: &[CellIndex], previously_visited: &VoxelGrid) -> usize {
    swept
        .iter()
        .filter(|&&c| !previously_visited.get_index(c as usize))
        .count()
}

pub fn combined_reward(r_d: usize, r_c: usize, lambda: f64) -> f64 {
    r_d as f64 + lambda * r_c as f64
}

/// Mean over `new_points` of the mean distance to their `k` nearest
/// accumulated points (all of them when fewer than `k`); 0 without history.
pub fn knn_reward(new_points: &[Vec3], accumulated: &[Vec3], k: usize) -> f64 {
    if new_points.is_empty() || accumulated.is_empty() {
        return 0.0;
    }
    let tree = KdTree::build(accumulated);
    knn_reward_with(new_points, &tree, k)
}

fn knn_reward_with(new_points: &[Vec3], tree: &KdTree, k: usize) -> f64 {
    if new_points.is_empty() || tree.is_empty() {
        return 0.0;
    }
    let k = k.min(tree.len()).max(1);
    let total: f64 = new_points
        .iter()
        .map(|&p| {
            let nb = tree.k_nearest(p, k);
            nb.iter().map(|n| n.dist).sum::<f64>() / nb.len() as f64
        })
        .sum();
    total / new_points.len() as f64
}

fn point_key(p: Vec3, grid: &VoxelGrid) -> [i64; 3] {
    let rel = (p - grid.bbox_min()) / grid.edge();
    [floor(rel.x) as i64, floor(rel.y) as i64, floor(rel.z) as i64]
}

/// Contact points landing in voxels that held no earlier contact point;
/// `seen` is updated.
pub fn points_reward(new_points: &[Vec3], grid: &VoxelGrid, seen: &mut BTreeSet<[i64; 3]>) -> usize {
    new_points
        .iter()
        .filter(|&&p| seen.insert(point_key(p, grid)))
        .count()
}

pub fn contact_reward(any_contact: bool) -> f64 {
    if any_contact {
        1.0
    } else {
        0.0
    }
}

/// Shape estimate of a contact cloud: its alpha shape, else (optionally)
/// its convex hull. `None` when neither exists.
pub fn shape_estimate(points: &[Vec3], alpha: f64, hull_fallback: bool) -> Option<Mesh> {
    alpha_shape(points, alpha).or_else(|| if hull_fallback { convex_hull(points) } else { None })
}

fn estimate_samples(points: &[Vec3], cfg: &RewardConfig) -> Option<Vec<Vec3>> {
    let m = shape_estimate(points, cfg.alpha, cfg.hull_fallback)?;
    let s = sample_surface(&m, cfg.samples, 0x5eed).ok()?;
    Some(s.into_iter().map(|x| x.point).collect())
}

/// Chamfer-L2 between surface samples of the shape estimates before and
/// after; 0 when either estimate is degenerate.
pub fn disagreement_reward(before: &[Vec3], after: &[Vec3], cfg: &RewardConfig) -> f64 {
    match (estimate_samples(before, cfg), estimate_samples(after, cfg)) {
        (Some(a), Some(b)) => chamfer_points(&a, &b),
        _ => 0.0,
    }
}

pub const CHAMFER_REWARD_EPS: f64 = 1e-4;

/// `1 / (eps + CD(accumulated, gt))`, 0 for an empty history.
pub fn chamfer_reward(accumulated: &[Vec3], gt_samples: &[Vec3]) -> f64 {
    if accumulated.is_empty() || gt_samples.is_empty() {
        return 0.0;
    }
    1.0 / (CHAMFER_REWARD_EPS + chamfer_points(accumulated, gt_samples))
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RewardParts {
    pub total: f64,
    pub discovery: usize,
    pub coverage: usize,
}

fn bits(p: Vec3) -> [u64; 3] {
    [p.x.to_bits(), p.y.to_bits(), p.z.to_bits()]
}

/// Per-episode reward state: the accumulated contact cloud and whatever
/// the active variant needs between steps.
#[derive(Debug, Clone)]
pub struct RewardTracker {
    cfg: RewardConfig,
    points: Vec<Vec3>,
    point_set: BTreeSet<[u64; 3]>,
    seen_voxels: BTreeSet<[i64; 3]>,
    gt_samples: Option<Arc<Vec<Vec3>>>,
    last_estimate: Option<Vec<Vec3>>,
    steps: usize,
}

impl RewardTracker {
    pub fn new(cfg: RewardConfig) -> RewardTracker {
        RewardTracker {
            cfg,
            points: Vec::new(),
            point_set: BTreeSet::new(),
            seen_voxels: BTreeSet::new(),
            gt_samples: None,
            last_estimate: None,
            steps: 0,
        }
    }

    pub fn config(&self) -> &RewardConfig {
        &self.cfg
    }

    /// Clears episode state. The chamfer variant needs ground-truth surface
    /// samples of the current object.
    pub fn reset(&mut self, gt_samples: Option<Arc<Vec<Vec3>>>) {
        self.points.clear();
        self.point_set.clear();
        self.seen_voxels.clear();
        self.gt_samples = gt_samples;
        self.last_estimate = None;
        self.steps = 0;
    }

    pub fn points(&self) -> &[Vec3] {
        &self.points
    }

    /// Reward for one environment transition. `grid` supplies the voxel
    /// frame for point deduplication.
    pub fn reward(&mut self, tr: &Transition, grid: &VoxelGrid) -> RewardParts {
        let (r_d, r_c) = (tr.new_observed, tr.new_visited);
        let mut fresh = Vec::new();
        for c in &tr.contacts {
            if self.point_set.insert(bits(c.point)) {
                fresh.push(c.point);
            }
        }
        let term = match self.cfg.variant {
            RewardVariant::DiscoveryCoverage | RewardVariant::NoCoverage => r_d as f64,
            RewardVariant::NoDiscovery => 0.0,
            RewardVariant::Knn => knn_reward(&fresh, &self.points, self.cfg.k),
            RewardVariant::Points => points_reward(&fresh, grid, &mut self.seen_voxels) as f64,
            RewardVariant::Contact => contact_reward(!tr.contacts.is_empty()),
            RewardVariant::Disagreement | RewardVariant::Chamfer => 0.0,
        };
        self.points.extend_from_slice(&fresh);
        let term = match self.cfg.variant {
            RewardVariant::Disagreement if self.steps % self.cfg.stride == 0 => {
                let now = estimate_samples(&self.points, &self.cfg);
                let r = match (&self.last_estimate, &now) {
                    (Some(a), Some(b)) => chamfer_points(a, b),
                    _ => 0.0,
                };
                self.last_estimate = now;
                r
            }
            RewardVariant::Chamfer => self
                .gt_samples
                .as_ref()
                .map_or(0.0, |gt| chamfer_reward(&self.points, gt)),
            _ => term,
        };
        let lambda = match self.cfg.variant {
            RewardVariant::NoCoverage => 0.0,
            _ => self.cfg.lambda,
        };
        self.steps += 1;
        RewardParts {
            total: term + lambda * r_c as f64,
            discovery: r_d,
            coverage: r_c,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn discovery_and_coverage_counts() {
        let mut g = VoxelGrid::workspace(4);
        g.set_index(1, true);
        assert_eq!(discovery_reward(&[2, 3, 4], &g), 3);
        assert_eq!(discovery_reward(&[1], &g), 0);
        assert_eq!(discovery_reward(&[], &g), 0);
        let mut v = VoxelGrid::workspace(4);
        for c in [0, 1, 2, 3] {
            v.set_index(c, true);
        }
        assert_eq!(coverage_reward(&(0..10).collect::<Vec<_>>(), &v), 6);
    }

    #[test]
    fn combined_formula() {
        assert!((combined_reward(3, 6, 0.1) - 3.6).abs() < 1e-15);
        assert_eq!(combined_reward(3, 6, 0.0), 3.0);
        assert_eq!(combined_reward(0, 6, 0.5), 3.0);
    }

    #[test]
    fn knn_cases() {
        let d = 0.3;
        assert!((knn_reward(&[Vec3::new(d, 0.0, 0.0)], &[Vec3::ZERO], 5) - d).abs() < 1e-15);
        let p = Vec3::new(0.1, 0.2, 0.3);
        assert_eq!(knn_reward(&[p], &[p; 6], 5), 0.0);
        assert_eq!(knn_reward(&[p], &[], 5), 0.0);
        // distances 1, 2, 3, 4, 5
        let acc: Vec<Vec3> = (1..=5).map(|i| Vec3::new(i as f64, 0.0, 0.0)).collect();
        assert!((knn_reward(&[Vec3::ZERO], &acc, 5) - 3.0).abs() < 1e-15);
    }

    #[test]
    fn knn_translation_invariant() {
        let acc: Vec<Vec3> = (0..20)
            .map(|i| Vec3::new((i as f64 * 0.37).sin(), (i as f64 * 0.91).cos(), i as f64 * 0.05))
            .collect();
        let new = [Vec3::new(0.2, 0.1, 0.4), Vec3::new(-0.3, 0.5, 0.0)];
        let t = Vec3::new(0.25, -0.5, 0.125);
        let a = knn_reward(&new, &acc, 5);
        let shifted: Vec<Vec3> = acc.iter().map(|&p| p + t).collect();
        let b = knn_reward(&new.map(|p| p + t), &shifted, 5);
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn points_dedup_by_voxel() {
        let g = VoxelGrid::workspace(32);
        let e = g.edge();
        let mut seen = BTreeSet::new();
        let four: Vec<Vec3> = (0..4).map(|i| Vec3::new(-0.4 + i as f64 * 2.0 * e, 0.01, 0.01)).collect();
        assert_eq!(points_reward(&four, &g, &mut seen), 4);
        assert_eq!(points_reward(&[four[0] + Vec3::splat(1e-4)], &g, &mut seen), 0);
        assert_eq!(points_reward(&[], &g, &mut seen), 0);
    }

    #[test]
    fn contact_is_binary() {
        assert_eq!(contact_reward(true), 1.0);
        assert_eq!(contact_reward(false), 0.0);
    }

    #[test]
    fn disagreement_cases() {
        let cfg = RewardConfig::default();
        let tet = vec![
            Vec3::ZERO,
            Vec3::new(0.3, 0.0, 0.0),
            Vec3::new(0.0, 0.3, 0.0),
            Vec3::new(0.0, 0.0, 0.3),
        ];
        assert_eq!(disagreement_reward(&tet, &tet, &cfg), 0.0);
        let mut with_inner = tet.clone();
        with_inner.push(Vec3::splat(0.05));
        // alpha 0.1 is too small for this tetrahedron, so both use the hull
        assert_eq!(disagreement_reward(&tet, &with_inner, &cfg), 0.0);
        let mut far = tet.clone();
        far.push(Vec3::splat(1.0));
        assert!(disagreement_reward(&tet, &far, &cfg) > 0.0);
        assert_eq!(disagreement_reward(&[], &[], &cfg), 0.0);
    }

    #[test]
    fn chamfer_reward_cases() {
        let gt = vec![Vec3::ZERO, Vec3::X];
        assert!((chamfer_reward(&gt, &gt) - 1e4).abs() < 1e-6);
        assert_eq!(chamfer_reward(&[], &gt), 0.0);
        let t = 0.1;
        let shifted: Vec<Vec3> = gt.iter().map(|&p| p + Vec3::new(0.0, t, 0.0)).collect();
        let want = 1.0 / (1e-4 + t * t);
        assert!((chamfer_reward(&shifted, &gt) - want).abs() < 1e-9);
    }

    #[test]
    fn variant_tags_round_trip() {
        for v in RewardVariant::ALL {
            assert_eq!(v.tag().parse::<RewardVariant>().unwrap(), v);
        }
        assert_eq!("-curiosity".parse::<RewardVariant>().unwrap(), RewardVariant::NoDiscovery);
        assert!("nope".parse::<RewardVariant>().is_err());
    }
}
