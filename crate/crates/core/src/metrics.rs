//! Evaluation metrics: volumetric IoU on grids, squared-L2 chamfer distance
//! and normal consistency on area-uniform surface samples.

use alloc::vec::Vec;

use crate::error::Result;
use crate::geometry::{grid_to_blocky_mesh, sample_surface, KdTree, Mesh, VoxelGrid};
use crate::math::Vec3;
use crate::rng::derive_seed;

/// Chamfer value for an empty mesh: the squared diagonal of the unit
/// workspace.
pub const CHAMFER_SENTINEL: f64 = 3.0;

/// `|a ∧ b| / |a ∨ b|`, 1 when both grids are empty.
pub fn volumetric_iou(a: &VoxelGrid, b: &VoxelGrid) -> Result<f64> {
    a.check_same_frame(b)?;
    let union = a.count_or(b);
    if union == 0 {
        return Ok(1.0);
    }
    Ok(a.count_and(b) as f64 / union as f64)
}

fn mean_nn_sq(from: &[Vec3], tree: &KdTree) -> f64 {
    let s: f64 = from
        .iter()
        .map(|&p| tree.nearest(p).map_or(0.0, |n| n.dist * n.dist))
        .sum();
    s / from.len() as f64
}

/// Symmetric squared-L2 chamfer between two non-empty clouds:
/// `(mean_a d²(a, B) + mean_b d²(b, A)) / 2`.
pub fn chamfer_points(a: &[Vec3], b: &[Vec3]) -> f64 {
    if a.is_empty() || b.is_empty() {
        return CHAMFER_SENTINEL;
    }
    let ta = KdTree::build(a);
    let tb = KdTree::build(b);
    0.5 * (mean_nn_sq(a, &tb) + mean_nn_sq(b, &ta))
}

fn samples(mesh: &Mesh, n: usize, seed: u64) -> Result<(Vec<Vec3>, Vec<Vec3>)> {
    let s = sample_surface(mesh, n, derive_seed(seed, "surface", 0))?;
    Ok(s.iter().map(|x| (x.point, x.normal)).unzip())
}

/// Chamfer-L2 on `n_samples` area-uniform samples per mesh. Both meshes
/// are sampled with the same seed, so swapping the arguments gives the same
/// value bit for bit. An empty mesh scores [`CHAMFER_SENTINEL`].
pub fn chamfer_l2(a: &Mesh, b: &Mesh, n_samples: usize, seed: u64) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Ok(CHAMFER_SENTINEL);
    }
    let (pa, _) = samples(a, n_samples, seed)?;
    let (pb, _) = samples(b, n_samples, seed)?;
    Ok(chamfer_points(&pa, &pb))
}

fn mean_abs_dot(from: &[Vec3], from_n: &[Vec3], tree: &KdTree, to_n: &[Vec3]) -> f64 {
    let s: f64 = from
        .iter()
        .zip(from_n)
        .map(|(&p, n)| tree.nearest(p).map_or(0.0, |nb| n.dot(to_n[nb.index as usize]).abs()))
        .sum();
    s / from.len() as f64
}

/// Symmetrized mean `|n_p · n_q|` over nearest-neighbour sample pairs; 0
/// when either mesh is empty.
pub fn normal_consistency(a: &Mesh, b: &Mesh, n_samples: usize, seed: u64) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Ok(0.0);
    }
    let (pa, na) = samples(a, n_samples, seed)?;
    let (pb, nb) = samples(b, n_samples, seed)?;
    let ta = KdTree::build(&pa);
    let tb = KdTree::build(&pb);
    let v = 0.5 * (mean_abs_dot(&pa, &na, &tb, &nb) + mean_abs_dot(&pb, &nb, &ta, &na));
    Ok(v.clamp(0.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricsConfig {
    pub n_samples: usize,
    pub seed: u64,
}

impl Default for MetricsConfig {
    fn default() -> Self {
        MetricsConfig {
            n_samples: 10_000,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricsReport {
    pub iou: f64,
    /// Squared-L2 chamfer in workspace units (not scaled).
    pub chamfer_l2: f64,
    pub normal_consistency: f64,
    pub n_samples: usize,
    pub seed: u64,
}

impl MetricsReport {
    pub fn compute(pred_grid: &VoxelGrid, pred_mesh: &Mesh, gt_grid: &VoxelGrid, gt_mesh: &Mesh, cfg: &MetricsConfig) -> Result<Self> {
        Ok(MetricsReport {
            iou: volumetric_iou(pred_grid, gt_grid)?,
            chamfer_l2: chamfer_l2(pred_mesh, gt_mesh, cfg.n_samples, cfg.seed)?,
            normal_consistency: normal_consistency(pred_mesh, gt_mesh, cfg.n_samples, cfg.seed)?,
            n_samples: cfg.n_samples,
            seed: cfg.seed,
        })
    }

    /// Field-wise mean; `None` for an empty slice.
    pub fn mean(reports: &[MetricsReport]) -> Option<MetricsReport> {
        let first = reports.first()?;
        let n = reports.len() as f64;
        Some(MetricsReport {
            iou: reports.iter().map(|r| r.iou).sum::<f64>() / n,
            chamfer_l2: reports.iter().map(|r| r.chamfer_l2).sum::<f64>() / n,
            normal_consistency: reports.iter().map(|r| r.normal_consistency).sum::<f64>() / n,
            n_samples: first.n_samples,
            seed: first.seed,
        })
    }
}

/// Scores for the raw observed grid and for its reconstruction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunReport {
    pub grid: MetricsReport,
    pub recon: MetricsReport,
}

impl RunReport {
    pub fn mean(reports: &[RunReport]) -> Option<RunReport> {
        let g: Vec<_> = reports.iter().map(|r| r.grid).collect();
        let r: Vec<_> = reports.iter().map(|r| r.recon).collect();
        Some(RunReport {
            grid: MetricsReport::mean(&g)?,
            recon: MetricsReport::mean(&r)?,
        })
    }
}

/// Scores an observed grid (meshed as blocks for the surface metrics) and a
/// reconstruction given as its decoded occupancy grid plus extracted mesh.
pub fn evaluate_run(
    observed: &VoxelGrid,
    recon_grid: &VoxelGrid,
    recon_mesh: &Mesh,
    gt_grid: &VoxelGrid,
    gt_mesh: &Mesh,
    cfg: &MetricsConfig,
) -> Result<RunReport> {
    let blocky = grid_to_blocky_mesh(observed)?;
    Ok(RunReport {
        grid: MetricsReport::compute(observed, &blocky, gt_grid, gt_mesh, cfg)?,
        recon: MetricsReport::compute(recon_grid, recon_mesh, gt_grid, gt_mesh, cfg)?,
    })
}
