//! Solid voxelization and point containment by axis-aligned ray parity.
//!
//! Rays are cast along each of the three axes and crossings are counted
//! with an exact tie-break: a query point lying on a projected edge or vertex
//! is treated as if displaced by `(ε, ε²)` in the projection plane. Edge
//! functions are evaluated on canonically ordered endpoints, so two
//! triangles sharing an edge always agree on which side the point lies and
//! every crossing of a closed surface is counted exactly once.

use alloc::vec;
use alloc::vec::Vec;

use super::mesh::Mesh;
use super::voxel::VoxelGrid;
use crate::math::{Aabb, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct VoxelizeStats {
    /// Cells whose three per-axis parities were not unanimous.
    pub ambiguous: usize,
}

#[inline]
fn axes(a: usize) -> (usize, usize) {
    ((a + 1) % 3, (a + 2) % 3)
}

/// Edge function of `q` against the directed edge `a -> b`, computed on the
/// lexicographically ordered endpoints so that reversing the edge negates the
/// result exactly.
#[inline]
fn edge_fn(a: (f64, f64), b: (f64, f64), q: (f64, f64)) -> f64 {
    if a <= b {
        (b.0 - a.0) * (q.1 - a.1) - (b.1 - a.1) * (q.0 - a.0)
    } else {
        -((a.0 - b.0) * (q.1 - b.1) - (a.1 - b.1) * (q.0 - b.0))
    }
}

/// Sign of the edge function after the symbolic `(ε, ε²)` displacement of `q`.
#[inline]
fn edge_positive(a: (f64, f64), b: (f64, f64), w: f64) -> bool {
    if w != 0.0 {
        return w > 0.0;
    }
    let du = b.0 - a.0;
    let dv = b.1 - a.1;
    dv < 0.0 || (dv == 0.0 && du > 0.0)
}

/// Projected triangle prepared for ray tests along one axis.
#[derive(Debug, Clone, Copy)]
struct ProjTri {
    p: [(f64, f64); 3],
    depth: [f64; 3],
    area2: f64,
    lo: (f64, f64),
    hi: (f64, f64),
}

impl ProjTri {
    fn new(tri: [Vec3; 3], axis: usize) -> Option<ProjTri> {
        let (u, v) = axes(axis);
        let mut p = tri.map(|t| (t[u], t[v]));
        let mut depth = tri.map(|t| t[axis]);
        let mut area2 = edge_fn(p[0], p[1], p[2]);
        if area2 == 0.0 {
            return None;
        }
        if area2 < 0.0 {
            p.swap(1, 2);
            depth.swap(1, 2);
            area2 = -area2;
        }
        let lo = (p[0].0.min(p[1].0).min(p[2].0), p[0].1.min(p[1].1).min(p[2].1));
        let hi = (p[0].0.max(p[1].0).max(p[2].0), p[0].1.max(p[1].1).max(p[2].1));
        Some(ProjTri {
            p,
            depth,
            area2,
            lo,
            hi,
        })
    }

    /// Depth along the ray axis where the ray through `q` pierces the
    /// triangle, if it does.
    #[inline]
    fn hit(&self, q: (f64, f64)) -> Option<f64> {
        if q.0 < self.lo.0 || q.0 > self.hi.0 || q.1 < self.lo.1 || q.1 > self.hi.1 {
            return None;
        }
        let [a, b, c] = self.p;
        let w0 = edge_fn(b, c, q);
        if !edge_positive(b, c, w0) {
            return None;
        }
        let w1 = edge_fn(c, a, q);
        if !edge_positive(c, a, w1) {
            return None;
        }
        let w2 = edge_fn(a, b, q);
        if !edge_positive(a, b, w2) {
            return None;
        }
        let d = (w0 * self.depth[0] + w1 * self.depth[1] + w2 * self.depth[2]) / self.area2;
        Some(d)
    }
}

/// Cell-center solid voxelization with 3-axis parity majority vote.
pub fn voxelize_solid(mesh: &Mesh, n: usize, bbox: Aabb) -> (VoxelGrid, VoxelizeStats) {
    let mut grid = VoxelGrid::new(n, bbox).expect("valid voxelization box");
    let mut votes = vec![0u8; grid.cell_count()];
    let e = grid.edge();
    let min = bbox.min;
    let center = |a: usize, i: usize| min[a] + (i as f64 + 0.5) * e;

    for axis in 0..3 {
        let (u, v) = axes(axis);
        // hits per ray line (j along u, k along v)
        let mut lines: Vec<Vec<f64>> = vec![Vec::new(); n * n];
        for f in 0..mesh.face_count() {
            let Some(t) = ProjTri::new(mesh.triangle(f), axis) else {
                continue;
            };
            let j0 = cell_lo(t.lo.0, min[u], e, n);
            let j1 = cell_hi(t.hi.0, min[u], e, n);
            let k0 = cell_lo(t.lo.1, min[v], e, n);
            let k1 = cell_hi(t.hi.1, min[v], e, n);
            for k in k0..k1 {
                for j in j0..j1 {
                    if let Some(d) = t.hit((center(u, j), center(v, k))) {
                        lines[j + n * k].push(d);
                    }
                }
            }
        }
        for k in 0..n {
            for j in 0..n {
                let hits = &mut lines[j + n * k];
                if hits.is_empty() {
                    continue;
                }
                hits.sort_unstable_by(f64::total_cmp);
                let mut passed = 0usize;
                for i in 0..n {
                    let c = center(axis, i);
                    while passed < hits.len() && hits[passed] < c {
                        passed += 1;
                    }
                    if passed % 2 == 1 {
                        let mut ijk = [0usize; 3];
                        ijk[axis] = i;
                        ijk[u] = j;
                        ijk[v] = k;
                        votes[grid.index(ijk[0], ijk[1], ijk[2])] += 1;
                    }
                }
            }
        }
    }

    let mut stats = VoxelizeStats::default();
    for (idx, &vote) in votes.iter().enumerate() {
        if vote >= 2 {
            grid.set_index(idx, true);
        }
        if vote == 1 || vote == 2 {
            stats.ambiguous += 1;
        }
    }
    (grid, stats)
}

/// First cell index whose center is >= `x`.
fn cell_lo(x: f64, min: f64, e: f64, n: usize) -> usize {
    let t = crate::math::ceil((x - min) / e - 0.5);
    t.max(0.0).min(n as f64) as usize
}

/// One past the last cell index whose center is <= `x`.
fn cell_hi(x: f64, min: f64, e: f64, n: usize) -> usize {
    let t = crate::math::floor((x - min) / e - 0.5) + 1.0;
    t.max(0.0).min(n as f64) as usize
}

/// Point-in-solid queries against a fixed mesh, using the same parity rule as
/// [`voxelize_solid`] so that a query at a cell center reproduces the
/// voxelization result.
#[derive(Debug, Clone)]
pub struct InsideTester {
    per_axis: [AxisBins; 3],
}

#[derive(Debug, Clone)]
struct AxisBins {
    tris: Vec<ProjTri>,
    lo: (f64, f64),
    cell: (f64, f64),
    bins: usize,
    /// CSR layout: `start[b]..start[b+1]` indexes into `items`.
    start: Vec<u32>,
    items: Vec<u32>,
}

impl AxisBins {
    fn build(mesh: &Mesh, axis: usize, bins: usize) -> AxisBins {
        let tris: Vec<ProjTri> = (0..mesh.face_count())
            .filter_map(|f| ProjTri::new(mesh.triangle(f), axis))
            .collect();
        let (mut lo, mut hi) = ((f64::INFINITY, f64::INFINITY), (f64::NEG_INFINITY, f64::NEG_INFINITY));
        for t in &tris {
            lo = (lo.0.min(t.lo.0), lo.1.min(t.lo.1));
            hi = (hi.0.max(t.hi.0), hi.1.max(t.hi.1));
        }
        if tris.is_empty() {
            lo = (0.0, 0.0);
            hi = (1.0, 1.0);
        }
        let cell = (
            ((hi.0 - lo.0) / bins as f64).max(1e-12),
            ((hi.1 - lo.1) / bins as f64).max(1e-12),
        );
        let bin_of = |x: f64, o: f64, c: f64| -> usize {
            (crate::math::floor((x - o) / c).max(0.0) as usize).min(bins - 1)
        };
        let mut counts = vec![0u32; bins * bins + 1];
        let mut ranges = Vec::with_capacity(tris.len());
        for t in &tris {
            let r = (
                bin_of(t.lo.0, lo.0, cell.0),
                bin_of(t.hi.0, lo.0, cell.0),
                bin_of(t.lo.1, lo.1, cell.1),
                bin_of(t.hi.1, lo.1, cell.1),
            );
            for bv in r.2..=r.3 {
                for bu in r.0..=r.1 {
                    counts[bu + bins * bv + 1] += 1;
                }
            }
            ranges.push(r);
        }
        for b in 1..counts.len() {
            counts[b] += counts[b - 1];
        }
        let mut fill = counts.clone();
        let mut items = vec![0u32; *counts.last().unwrap() as usize];
        for (ti, r) in ranges.iter().enumerate() {
            for bv in r.2..=r.3 {
                for bu in r.0..=r.1 {
                    let b = bu + bins * bv;
                    items[fill[b] as usize] = ti as u32;
                    fill[b] += 1;
                }
            }
        }
        AxisBins {
            tris,
            lo,
            cell,
            bins,
            start: counts,
            items,
        }
    }

    fn parity(&self, p: Vec3, axis: usize) -> bool {
        let (u, v) = axes(axis);
        let q = (p[u], p[v]);
        let fu = (q.0 - self.lo.0) / self.cell.0;
        let fv = (q.1 - self.lo.1) / self.cell.1;
        if fu < -1e-9 || fv < -1e-9 || fu > self.bins as f64 + 1e-9 || fv > self.bins as f64 + 1e-9
        {
            return false;
        }
        let bu = (crate::math::floor(fu).max(0.0) as usize).min(self.bins - 1);
        let bv = (crate::math::floor(fv).max(0.0) as usize).min(self.bins - 1);
        let b = bu + self.bins * bv;
        let mut crossings = 0usize;
        for &ti in &self.items[self.start[b] as usize..self.start[b + 1] as usize] {
            if let Some(d) = self.tris[ti as usize].hit(q) {
                if d < p[axis] {
                    crossings += 1;
                }
            }
        }
        crossings % 2 == 1
    }
}

impl InsideTester {
    pub fn new(mesh: &Mesh) -> InsideTester {
        let bins = (crate::math::sqrt(mesh.face_count() as f64) as usize).clamp(1, 128);
        InsideTester {
            per_axis: [
                AxisBins::build(mesh, 0, bins),
                AxisBins::build(mesh, 1, bins),
                AxisBins::build(mesh, 2, bins),
            ],
        }
    }

    /// Majority vote of the three axis parities.
    pub fn contains(&self, p: Vec3) -> bool {
        let votes = (0..3).filter(|&a| self.per_axis[a].parity(p, a)).count();
        votes >= 2
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::primitives;

    #[test]
    fn lower_half_box_count() {
        // box covering z in [-0.5, 0]: exactly 32*32*16 centers inside
        let m = primitives::box_mesh(Vec3::splat(-0.5), Vec3::new(0.5, 0.5, 0.0));
        let (g, stats) = voxelize_solid(&m, 32, Aabb::unit_workspace());
        assert_eq!(g.count(), 32 * 32 * 16);
        assert_eq!(stats.ambiguous, 0);
        // oracle: analytic inside test at every center
        for idx in 0..g.cell_count() {
            let [i, j, k] = g.coords(idx);
            let c = g.cell_center(i, j, k);
            assert_eq!(g.get_index(idx), c.z < 0.0);
        }
    }

    #[test]
    fn sphere_matches_analytic_centers() {
        let m = primitives::icosphere(Vec3::ZERO, 0.4, 4);
        let (g, stats) = voxelize_solid(&m, 32, Aabb::unit_workspace());
        let mut expected = 0;
        for idx in 0..g.cell_count() {
            let [i, j, k] = g.coords(idx);
            let inside = g.cell_center(i, j, k).norm() < 0.4;
            expected += inside as usize;
            assert_eq!(g.get_index(idx), inside, "cell {i},{j},{k}");
        }
        assert_eq!(g.count(), expected);
        assert_eq!(stats.ambiguous, 0);
    }

    #[test]
    fn mesh_outside_box_gives_empty_grid() {
        let m = primitives::box_mesh(Vec3::splat(2.0), Vec3::splat(3.0));
        let (g, _) = voxelize_solid(&m, 16, Aabb::unit_workspace());
        assert!(g.is_empty());
    }

    #[test]
    fn rays_through_shared_diagonals_count_once() {
        // centers with x == y hit the top face diagonal exactly
        let m = primitives::box_mesh(Vec3::new(-0.5, -0.5, -0.5), Vec3::new(0.5, 0.5, 0.0));
        let rotated = m.map_vertices(|v| Vec3::new(v.y, v.x, v.z)).unwrap();
        let (g, s) = voxelize_solid(&rotated, 8, Aabb::unit_workspace());
        assert_eq!(g.count(), 8 * 8 * 4);
        assert_eq!(s.ambiguous, 0);
    }

    #[test]
    fn idempotent() {
        let m = primitives::torus(Vec3::ZERO, 0.3, 0.08, 48, 24);
        let a = voxelize_solid(&m, 32, Aabb::unit_workspace());
        let b = voxelize_solid(&m, 32, Aabb::unit_workspace());
        assert_eq!(a, b);
    }

    #[test]
    fn monotone_under_dilation() {
        let mut prev: Option<VoxelGrid> = None;
        for r in [0.2, 0.25, 0.3, 0.35, 0.42] {
            let m = primitives::icosphere(Vec3::ZERO, r, 3);
            let (g, _) = voxelize_solid(&m, 32, Aabb::unit_workspace());
            if let Some(p) = &prev {
                assert!(p.is_subset_of(&g), "radius {r} lost voxels");
            }
            prev = Some(g);
        }
    }

    #[test]
    fn inside_tester_agrees_with_voxelization() {
        let m = primitives::torus(Vec3::new(0.02, -0.01, 0.0), 0.3, 0.1, 40, 20);
        let (g, _) = voxelize_solid(&m, 24, Aabb::unit_workspace());
        let t = InsideTester::new(&m);
        for idx in 0..g.cell_count() {
            let [i, j, k] = g.coords(idx);
            assert_eq!(t.contains(g.cell_center(i, j, k)), g.get_index(idx));
        }
    }
}
