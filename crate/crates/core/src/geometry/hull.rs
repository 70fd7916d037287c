//! Convex hulls and alpha shapes of small point clouds.
//!
//! Both return meshes in a canonical vertex and face order, so the same
//! boundary always produces the same mesh regardless of input order or of
//! points that do not lie on it.

use alloc::vec::Vec;

use super::knn::KdTree;
use super::mesh::Mesh;
use crate::math::{sqrt, Vec3};

fn lex(a: &Vec3, b: &Vec3) -> core::cmp::Ordering {
    a.x.total_cmp(&b.x)
        .then(a.y.total_cmp(&b.y))
        .then(a.z.total_cmp(&b.z))
}

fn dedup(points: &[Vec3]) -> Vec<Vec3> {
    let mut p: Vec<Vec3> = points.iter().copied().filter(|p| p.is_finite()).collect();
    p.sort_by(lex);
    p.dedup_by(|a, b| lex(a, b).is_eq());
    p
}

/// Mesh over the used points only, vertices sorted lexicographically and
/// faces rotated to start at their smallest index, then sorted.
fn canonical_mesh(points: &[Vec3], tris: &[[usize; 3]]) -> Option<Mesh> {
    if tris.is_empty() {
        return None;
    }
    let mut used: Vec<usize> = tris.iter().flatten().copied().collect();
    used.sort_unstable();
    used.dedup();
    used.sort_by(|&a, &b| lex(&points[a], &points[b]));
    let mut remap = alloc::vec![u32::MAX; points.len()];
    for (new, &old) in used.iter().enumerate() {
        remap[old] = new as u32;
    }
    let mut faces: Vec<[u32; 3]> = tris
        .iter()
        .map(|t| {
            let f = t.map(|i| remap[i]);
            let r = (0..3).min_by_key(|&k| f[k]).unwrap_or(0);
            [f[r], f[(r + 1) % 3], f[(r + 2) % 3]]
        })
        .collect();
    faces.sort_unstable();
    faces.dedup();
    let vertices = used.iter().map(|&i| points[i]).collect();
    Mesh::from_triangles(vertices, faces).ok().filter(|m| !m.is_empty())
}

fn plane_dist(p: &[Vec3], f: [usize; 3], q: Vec3) -> f64 {
    let n = (p[f[1]] - p[f[0]]).cross(p[f[2]] - p[f[0]]);
    match n.normalized() {
        Some(n) => n.dot(q - p[f[0]]),
        None => 0.0,
    }
}

/// Outward-wound convex hull, or `None` when fewer than four non-coplanar
/// points are given.
pub fn convex_hull(points: &[Vec3]) -> Option<Mesh> {
    let p = dedup(points);
    if p.len() < 4 {
        return None;
    }
    let bb = crate::math::Aabb::from_points(&p)?;
    let scale = bb.extent().max_elem().max(1e-300);
    let eps = 1e-10 * scale;

    // initial simplex from extreme points
    let i0 = 0;
    let i1 = (0..p.len()).max_by(|&a, &b| p[a].dist_sq(p[i0]).total_cmp(&p[b].dist_sq(p[i0])))?;
    let d01 = p[i1] - p[i0];
    let line_dist = |q: Vec3| d01.cross(q - p[i0]).norm();
    let i2 = (0..p.len()).max_by(|&a, &b| line_dist(p[a]).total_cmp(&line_dist(p[b])))?;
    if line_dist(p[i2]) <= eps * d01.norm() {
        return None;
    }
    let nrm = d01.cross(p[i2] - p[i0]).normalized()?;
    let pd = |q: Vec3| nrm.dot(q - p[i0]);
    let i3 = (0..p.len()).max_by(|&a, &b| pd(p[a]).abs().total_cmp(&pd(p[b]).abs()))?;
    if pd(p[i3]).abs() <= eps {
        return None;
    }
    let mut faces: Vec<[usize; 3]> = if pd(p[i3]) > 0.0 {
        alloc::vec![[i0, i2, i1], [i0, i1, i3], [i1, i2, i3], [i2, i0, i3]]
    } else {
        alloc::vec![[i0, i1, i2], [i0, i3, i1], [i1, i3, i2], [i2, i3, i0]]
    };

    for q in 0..p.len() {
        if q == i0 || q == i1 || q == i2 || q == i3 {
            continue;
        }
        let visible: Vec<bool> = faces.iter().map(|&f| plane_dist(&p, f, p[q]) > eps).collect();
        if !visible.iter().any(|&v| v) {
            continue;
        }
        let mut vis_edges = Vec::new();
        for (f, _) in faces.iter().zip(&visible).filter(|(_, &v)| v) {
            for k in 0..3 {
                vis_edges.push((f[k], f[(k + 1) % 3]));
            }
        }
        let mut next: Vec<[usize; 3]> = faces
            .iter()
            .zip(&visible)
            .filter(|(_, &v)| !v)
            .map(|(f, _)| *f)
            .collect();
        for &(a, b) in &vis_edges {
            if !vis_edges.contains(&(b, a)) {
                next.push([a, b, q]);
            }
        }
        faces = next;
    }
    canonical_mesh(&p, &faces)
}

/// Circumcenter and circumradius of a triangle, `None` if degenerate.
fn circumcircle(a: Vec3, b: Vec3, c: Vec3) -> Option<(Vec3, f64, Vec3)> {
    let ab = b - a;
    let ac = c - a;
    let n = ab.cross(ac);
    let n2 = n.norm_sq();
    if n2 <= 1e-24 * { let m = ab.norm_sq().max(ac.norm_sq()); m * m } {
        return None;
    }
    let off = (n.cross(ab) * ac.norm_sq() + ac.cross(n) * ab.norm_sq()) / (2.0 * n2);
    Some((a + off, off.norm(), n / sqrt(n2)))
}

/// Boundary triangles of the alpha complex: a triangle is kept when one of
/// the two radius-`alpha` spheres through its corners contains no other
/// point. `None` when no triangle qualifies.
pub fn alpha_shape(points: &[Vec3], alpha: f64) -> Option<Mesh> {
    let p = dedup(points);
    if p.len() < 4 || !(alpha > 0.0) {
        return None;
    }
    let tree = KdTree::build(&p);
    let inner = alpha * (1.0 - 1e-9);
    let mut tris = Vec::new();
    for i in 0..p.len() {
        let nb: Vec<usize> = tree
            .within_radius(p[i], 2.0 * alpha)
            .into_iter()
            .map(|x| x as usize)
            .filter(|&j| j > i)
            .collect();
        for (a, &j) in nb.iter().enumerate() {
            for &k in &nb[a + 1..] {
                if p[j].dist_sq(p[k]) > 4.0 * alpha * alpha {
                    continue;
                }
                let Some((c, rho, n)) = circumcircle(p[i], p[j], p[k]) else {
                    continue;
                };
                if rho > alpha {
                    continue;
                }
                let h = sqrt((alpha * alpha - rho * rho).max(0.0));
                let empty = |centre: Vec3| {
                    tree.k_nearest(centre, 4).iter().all(|nb| {
                        let m = nb.index as usize;
                        m == i || m == j || m == k || nb.dist >= inner
                    })
                };
                if empty(c + n * h) || empty(c - n * h) {
                    tris.push([i, j, k]);
                }
            }
        }
    }
    canonical_mesh(&p, &tris)
}
