//! Marching cubes over a regular scalar lattice.
//!
//! The per-case triangulation is derived from the cube faces rather than
//! read from a hand-written table: on every face the iso-contour segments
//! are chosen so that inside corners (value > iso) are separated across
//! ambiguous faces. The choice depends only on the four face values, so two
//! cubes sharing a face always produce the same segments and the extracted
//! surface is closed wherever it does not reach the lattice boundary.

use alloc::vec;
use alloc::vec::Vec;

use super::mesh::Mesh;
use crate::error::{Error, Result};
use crate::math::Vec3;

/// Scalar samples on a regular lattice, x varying fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    pub dims: [usize; 3],
    /// World position of lattice node (0, 0, 0).
    pub origin: Vec3,
    pub spacing: f64,
    pub values: Vec<f64>,
}

impl ScalarField {
    pub fn new(dims: [usize; 3], origin: Vec3, spacing: f64, values: Vec<f64>) -> Result<Self> {
        if values.len() != dims[0] * dims[1] * dims[2] {
            return Err(Error::InvalidArgument("field size does not match dims".into()));
        }
        Ok(ScalarField {
            dims,
            origin,
            spacing,
            values,
        })
    }

    /// Samples `f` at every node.
    pub fn from_fn(dims: [usize; 3], origin: Vec3, spacing: f64, f: impl Fn(Vec3) -> f64) -> Self {
        let mut values = Vec::with_capacity(dims[0] * dims[1] * dims[2]);
        for k in 0..dims[2] {
            for j in 0..dims[1] {
                for i in 0..dims[0] {
                    values.push(f(origin + Vec3::new(i as f64, j as f64, k as f64) * spacing));
                }
            }
        }
        ScalarField {
            dims,
            origin,
            spacing,
            values,
        }
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize, k: usize) -> f64 {
        self.values[i + self.dims[0] * (j + self.dims[1] * k)]
    }

    pub fn node(&self, i: usize, j: usize, k: usize) -> Vec3 {
        self.origin + Vec3::new(i as f64, j as f64, k as f64) * self.spacing
    }

    /// Copy surrounded by a one-node border filled with `value`.
    pub fn padded(&self, value: f64) -> ScalarField {
        let d = self.dims.map(|v| v + 2);
        let mut values = vec![value; d[0] * d[1] * d[2]];
        for k in 0..self.dims[2] {
            for j in 0..self.dims[1] {
                for i in 0..self.dims[0] {
                    values[(i + 1) + d[0] * ((j + 1) + d[1] * (k + 1))] = self.at(i, j, k);
                }
            }
        }
        ScalarField {
            dims: d,
            origin: self.origin - Vec3::splat(self.spacing),
            spacing: self.spacing,
            values,
        }
    }
}

#[inline]
fn corner_offset(c: usize) -> [usize; 3] {
    [c & 1, (c >> 1) & 1, (c >> 2) & 1]
}

/// Edge between two corners differing in exactly one bit: `axis * 4 + rest`,
/// where `rest` packs the two remaining corner bits.
fn edge_id(a: usize, b: usize) -> usize {
    let diff = a ^ b;
    let axis = diff.trailing_zeros() as usize;
    let base = a & !diff;
    let (u, v) = ((axis + 1) % 3, (axis + 2) % 3);
    axis * 4 + ((base >> u) & 1) + 2 * ((base >> v) & 1)
}

fn edge_corners(e: usize) -> (usize, usize) {
    let axis = e / 4;
    let rest = e % 4;
    let (u, v) = ((axis + 1) % 3, (axis + 2) % 3);
    let base = ((rest & 1) << u) | (((rest >> 1) & 1) << v);
    (base, base | (1 << axis))
}

/// Face corners in counter-clockwise order seen from outside the cube.
fn face_cycle(axis: usize, side: usize) -> [usize; 4] {
    let (u, v) = ((axis + 1) % 3, (axis + 2) % 3);
    let c = |du: usize, dv: usize| (side << axis) | (du << u) | (dv << v);
    let ccw = [c(0, 0), c(1, 0), c(1, 1), c(0, 1)];
    if side == 1 {
        ccw
    } else {
        [ccw[0], ccw[3], ccw[2], ccw[1]]
    }
}

/// Closed loops of crossed edges for one corner mask.
fn case_loops(mask: u8) -> Vec<Vec<u8>> {
    let inside = |c: usize| (mask >> c) & 1 == 1;
    let mut next = [u8::MAX; 12];
    for axis in 0..3 {
        for side in 0..2 {
            let p = face_cycle(axis, side);
            for i in 0..4 {
                let (a, b) = (p[i], p[(i + 1) % 4]);
                if inside(a) && !inside(b) {
                    // walk back over the inside arc to its entry edge
                    let mut j = (i + 3) % 4;
                    loop {
                        let (c, d) = (p[j], p[(j + 1) % 4]);
                        if !inside(c) && inside(d) {
                            next[edge_id(a, b)] = edge_id(c, d) as u8;
                            break;
                        }
                        j = (j + 3) % 4;
                    }
                }
            }
        }
    }
    let mut seen = [false; 12];
    let mut loops = Vec::new();
    for start in 0..12 {
        if next[start] == u8::MAX || seen[start] {
            continue;
        }
        let mut lp = Vec::new();
        let mut e = start;
        while !seen[e] {
            seen[e] = true;
            lp.push(e as u8);
            e = next[e] as usize;
        }
        loops.push(lp);
    }
    loops
}

fn share_face(e1: usize, e2: usize) -> bool {
    let (a1, _) = edge_corners(e1);
    let (a2, _) = edge_corners(e2);
    let (x1, x2) = (e1 / 4, e2 / 4);
    (0..3).any(|a| a != x1 && a != x2 && (a1 >> a) & 1 == (a2 >> a) & 1)
}

/// Triangles for every corner mask. Entries below 12 are crossed edges;
/// `12 + l` is a centre vertex added for loop `l` when no fan apex avoids
/// diagonals lying in a cube face (those would duplicate a neighbour's
/// boundary segment and make the edge non-manifold).
fn case_table() -> Vec<Vec<[u8; 3]>> {
    (0..=255u8)
        .map(|mask| {
            let mut tris = Vec::new();
            for (l, lp) in case_loops(mask).into_iter().enumerate() {
                let n = lp.len();
                let apex = (0..n).find(|&a| {
                    (2..n - 1).all(|d| !share_face(lp[a] as usize, lp[(a + d) % n] as usize))
                });
                match apex {
                    Some(a) => {
                        for i in 1..n - 1 {
                            // reversed fan: normals point from high to low values
                            tris.push([lp[a], lp[(a + i + 1) % n], lp[(a + i) % n]]);
                        }
                    }
                    None => {
                        for i in 0..n {
                            tris.push([12 + l as u8, lp[(i + 1) % n], lp[i]]);
                        }
                    }
                }
            }
            tris
        })
        .collect()
}

/// Extracts the `iso` level set. Vertices are placed by linear interpolation
/// along crossed lattice edges and shared between neighbouring cubes; face
/// normals point toward decreasing field values. A field that never crosses
/// `iso` yields an empty mesh.
pub fn marching_cubes(field: &ScalarField, iso: f64) -> Result<Mesh> {
    if field.values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("marching cubes field".into()));
    }
    let [nx, ny, nz] = field.dims;
    if nx < 2 || ny < 2 || nz < 2 {
        return Ok(Mesh::empty());
    }
    let table = case_table();
    let loops: Vec<Vec<Vec<u8>>> = (0..=255u8).map(case_loops).collect();
    let node = |i: usize, j: usize, k: usize| i + nx * (j + ny * k);
    let mut edge_vertex = vec![u32::MAX; nx * ny * nz * 3];
    let mut vertices: Vec<Vec3> = Vec::new();
    let mut faces: Vec<[u32; 3]> = Vec::new();

    for k in 0..nz - 1 {
        for j in 0..ny - 1 {
            for i in 0..nx - 1 {
                let mut mask = 0u8;
                let mut vals = [0.0; 8];
                for (c, val) in vals.iter_mut().enumerate() {
                    let o = corner_offset(c);
                    *val = field.at(i + o[0], j + o[1], k + o[2]);
                    if *val > iso {
                        mask |= 1 << c;
                    }
                }
                if mask == 0 || mask == 255 {
                    continue;
                }
                let mut local = [u32::MAX; 12];
                let mut centres = [u32::MAX; 4];
                for tri in &table[mask as usize] {
                    let mut ids = [0u32; 3];
                    for (slot, &e) in ids.iter_mut().zip(tri) {
                        let e = e as usize;
                        if e >= 12 {
                            if centres[e - 12] == u32::MAX {
                                // spokes follow every crossed edge of this loop
                                let lp = &loops[mask as usize][e - 12];
                                let mut c = Vec3::ZERO;
                                for &le in lp {
                                    let (a, b) = edge_corners(le as usize);
                                    let (oa, ob) = (corner_offset(a), corner_offset(b));
                                    let pa = field.node(i + oa[0], j + oa[1], k + oa[2]);
                                    let pb = field.node(i + ob[0], j + ob[1], k + ob[2]);
                                    let t = ((iso - vals[a]) / (vals[b] - vals[a])).clamp(0.0, 1.0);
                                    c += pa + (pb - pa) * t;
                                }
                                vertices.push(c / lp.len() as f64);
                                centres[e - 12] = (vertices.len() - 1) as u32;
                            }
                            *slot = centres[e - 12];
                            continue;
                        }
                        if local[e] == u32::MAX {
                            let (a, b) = edge_corners(e);
                            let oa = corner_offset(a);
                            let key = node(i + oa[0], j + oa[1], k + oa[2]) * 3 + e / 4;
                            if edge_vertex[key] == u32::MAX {
                                let ob = corner_offset(b);
                                let pa = field.node(i + oa[0], j + oa[1], k + oa[2]);
                                let pb = field.node(i + ob[0], j + ob[1], k + ob[2]);
                                let (va, vb) = (vals[a], vals[b]);
                                let t = ((iso - va) / (vb - va)).clamp(0.0, 1.0);
                                vertices.push(pa + (pb - pa) * t);
                                edge_vertex[key] = (vertices.len() - 1) as u32;
                            }
                            local[e] = edge_vertex[key];
                        }
                        *slot = local[e];
                    }
                    faces.push(ids);
                }
            }
        }
    }
    Mesh::from_triangles(vertices, faces)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;
    use rand::Rng;

    #[test]
    fn edge_numbering_round_trips() {
        for e in 0..12 {
            let (a, b) = edge_corners(e);
            assert_eq!(edge_id(a, b), e);
            assert_eq!(edge_id(b, a), e);
        }
    }

    #[test]
    fn every_case_has_consistent_loops() {
        let table = case_table();
        assert!(table[0].is_empty() && table[255].is_empty());
        for mask in 1..255u8 {
            let crossed = (0..12)
                .filter(|&e| {
                    let (a, b) = edge_corners(e);
                    ((mask >> a) & 1) != ((mask >> b) & 1)
                })
                .count();
            let used: usize = case_loops(mask).iter().map(|l| l.len()).sum();
            assert_eq!(crossed, used, "mask {mask}");
        }
    }

    #[test]
    fn sphere_sdf_vertices_near_sphere() {
        let n = 32;
        let h = 1.0 / n as f64;
        let origin = Vec3::splat(-0.5 + h / 2.0);
        let f = ScalarField::from_fn([n, n, n], origin, h, |p| p.norm() - 0.3);
        let m = marching_cubes(&f, 0.0).unwrap();
        assert!(m.is_watertight());
        let worst = m
            .faces()
            .iter()
            .flatten()
            .map(|&i| (m.vertices()[i as usize].norm() - 0.3).abs())
            .fold(0.0, f64::max);
        assert!(worst < h, "worst {worst}");
    }

    #[test]
    fn constant_field_is_empty() {
        let f = ScalarField::new([4, 4, 4], Vec3::ZERO, 1.0, vec![0.0; 64]).unwrap();
        assert!(marching_cubes(&f, 0.5).unwrap().is_empty());
    }

    #[test]
    fn isolated_voxel_gives_closed_polyhedron() {
        let mut v = vec![0.0; 27];
        v[13] = 1.0;
        let f = ScalarField::new([3, 3, 3], Vec3::ZERO, 1.0, v).unwrap();
        let m = marching_cubes(&f, 0.5).unwrap();
        assert_eq!(m.face_count(), 8);
        assert!(m.is_watertight());
        assert!(m.signed_volume() > 0.0);
    }

    #[test]
    fn random_fields_are_watertight_inside() {
        let mut rng = rng_from_seed(9);
        for _ in 0..200 {
            let n = 8;
            let mut v = vec![0.0; n * n * n];
            for k in 1..n - 1 {
                for j in 1..n - 1 {
                    for i in 1..n - 1 {
                        v[i + n * (j + n * k)] = rng.random::<f64>();
                    }
                }
            }
            let f = ScalarField::new([n, n, n], Vec3::ZERO, 1.0, v).unwrap();
            let m = marching_cubes(&f, 0.5).unwrap();
            assert!(m.is_watertight(), "{:?}", m.diagnostics());
            assert!(m.signed_volume() > 0.0);
        }
    }
}
