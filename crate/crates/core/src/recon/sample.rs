use alloc::vec::Vec;

use rand::Rng as _;
use rand_distr::{Distribution, Normal};

use super::ReconConfig;
use crate::error::{Error, Result};
use crate::geometry::{sample_surface, Mesh, VoxelGrid};
use crate::math::Vec3;
use crate::rng::{derive_seed, rng_from_seed};

/// Occupied cells within `depth` layers of the exterior, peeling by
/// 26-connectivity (cells outside the grid count as exterior). `depth` 0
/// returns every occupied cell.
pub fn shell(grid: &VoxelGrid, depth: usize) -> VoxelGrid {
    if depth == 0 {
        return grid.clone();
    }
    let mut remaining = grid.clone();
    let mut out = grid.empty_like();
    for _ in 0..depth {
        let mut layer = grid.empty_like();
        for idx in remaining.occupied() {
            let [i, j, k] = remaining.coords(idx).map(|v| v as isize);
            let mut exposed = false;
            'n: for dk in -1..=1 {
                for dj in -1..=1 {
                    for di in -1..=1 {
                        if (di, dj, dk) != (0, 0, 0) && !remaining.get_signed(i + di, j + dj, k + dk) {
                            exposed = true;
                            break 'n;
                        }
                    }
                }
            }
            if exposed {
                layer.set_index(idx, true);
            }
        }
        if layer.is_empty() {
            break;
        }
        for idx in layer.occupied() {
            remaining.set_index(idx, false);
        }
        out.union_with(&layer);
    }
    out
}

/// Synthetic touch pattern: random patches of `eligible` cells, grown until
/// exactly `round(fraction · |eligible|)` cells are covered. The last patch
/// is trimmed nearest-first.
pub fn touch_mask(eligible: &VoxelGrid, fraction: f64, max_radius: f64, seed: u64) -> VoxelGrid {
    let cells: Vec<usize> = eligible.occupied().collect();
    let target = ((fraction.clamp(0.0, 1.0) * cells.len() as f64) + 0.5) as usize;
    let mut out = eligible.empty_like();
    let mut rng = rng_from_seed(seed);
    let mut covered = 0;
    let n = eligible.resolution() as isize;
    while covered < target {
        let centre = loop {
            let c = cells[rng.random_range(0..cells.len())];
            if !out.get_index(c) {
                break c;
            }
        };
        let radius = rng.random_range(1.0..=max_radius.max(1.0));
        let [ci, cj, ck] = eligible.coords(centre).map(|v| v as isize);
        let r = radius as isize + 1;
        let mut patch: Vec<(f64, usize)> = Vec::new();
        for k in (ck - r).max(0)..=(ck + r).min(n - 1) {
            for j in (cj - r).max(0)..=(cj + r).min(n - 1) {
                for i in (ci - r).max(0)..=(ci + r).min(n - 1) {
                    let d2 = ((i - ci) * (i - ci) + (j - cj) * (j - cj) + (k - ck) * (k - ck)) as f64;
                    let idx = eligible.index(i as usize, j as usize, k as usize);
                    if d2 <= radius * radius && eligible.get_index(idx) && !out.get_index(idx) {
                        patch.push((d2, idx));
                    }
                }
            }
        }
        patch.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        for (_, idx) in patch {
            if covered == target {
                break;
            }
            out.set_index(idx, true);
            covered += 1;
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSample {
    pub input: VoxelGrid,
    /// Query positions normalized to the grid box, `[0, 1]³`.
    pub points: Vec<Vec3>,
    pub labels: Vec<f64>,
    /// Achieved fraction of eligible cells revealed.
    pub coverage: f64,
}

/// Training sample with a coverage fraction drawn from the configured range.
pub fn make_training_sample(mesh: &Mesh, gt: &VoxelGrid, cfg: &ReconConfig, seed: u64) -> Result<TrainingSample> {
    let mut rng = rng_from_seed(derive_seed(seed, "coverage", 0));
    let f = if cfg.coverage_max > cfg.coverage_min {
        rng.random_range(cfg.coverage_min..=cfg.coverage_max)
    } else {
        cfg.coverage_min
    };
    make_training_sample_with(mesh, gt, cfg, f, seed)
}

/// Training sample at a fixed coverage fraction. Half the query points are
/// uniform in the box, half are surface samples displaced by Gaussian noise;
/// labels are ground-truth cell occupancy.
pub fn make_training_sample_with(
    mesh: &Mesh,
    gt: &VoxelGrid,
    cfg: &ReconConfig,
    coverage: f64,
    seed: u64,
) -> Result<TrainingSample> {
    if gt.resolution() != cfg.resolution {
        return Err(Error::ResolutionMismatch {
            expected: cfg.resolution,
            found: gt.resolution(),
        });
    }
    let eligible = shell(gt, cfg.mask_depth);
    let input = touch_mask(&eligible, coverage, cfg.patch_radius, derive_seed(seed, "mask", 0));
    let achieved = if eligible.is_empty() {
        0.0
    } else {
        input.count() as f64 / eligible.count() as f64
    };

    let bbox = gt.bbox();
    let ext = bbox.extent();
    let n_surface = cfg.points / 2;
    let mut rng = rng_from_seed(derive_seed(seed, "points", 0));
    let mut points = Vec::with_capacity(cfg.points);
    for _ in 0..cfg.points - n_surface {
        points.push(Vec3::new(rng.random(), rng.random(), rng.random()));
    }
    if n_surface > 0 {
        let surf = sample_surface(mesh, n_surface, derive_seed(seed, "surface", 0))?;
        let noise = Normal::new(0.0, cfg.surface_sigma * gt.edge()).map_err(|_| {
            Error::InvalidArgument("surface sigma must be finite and non-negative".into())
        })?;
        for s in surf {
            let q = s.point + Vec3::new(noise.sample(&mut rng), noise.sample(&mut rng), noise.sample(&mut rng));
            let u = q - bbox.min;
            points.push(Vec3::new(
                (u.x / ext.x).clamp(0.0, 1.0),
                (u.y / ext.y).clamp(0.0, 1.0),
                (u.z / ext.z).clamp(0.0, 1.0),
            ));
        }
    }
    let labels = points.iter().map(|&p| label_at(gt, p)).collect();
    Ok(TrainingSample {
        input,
        points,
        labels,
        coverage: achieved,
    })
}

/// Occupancy of the cell containing normalized position `p`.
pub(crate) fn label_at(gt: &VoxelGrid, p: Vec3) -> f64 {
    let n = gt.resolution();
    let c = |v: f64| ((v * n as f64) as usize).min(n - 1);
    if gt.get(c(p.x), c(p.y), c(p.z)) {
        1.0
    } else {
        0.0
    }
}
