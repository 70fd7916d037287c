use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math::{Aabb, Vec3};

/// Counters collected while building a [`Mesh`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct MeshDiagnostics {
    pub removed_degenerate_faces: usize,
    /// Edges used by exactly one face.
    pub boundary_edges: usize,
    /// Edges used by three or more faces.
    pub non_manifold_edges: usize,
}

impl MeshDiagnostics {
    /// True when the mesh is not a closed 2-manifold (input is still accepted).
    pub fn warn_non_manifold(&self) -> bool {
        self.boundary_edges > 0 || self.non_manifold_edges > 0
    }
}

/// Triangle mesh with cached unit face normals.
///
/// Every face index is below the vertex count and every face has non-zero
/// area; both are enforced by [`Mesh::from_triangles`].
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Mesh {
    vertices: Vec<Vec3>,
    faces: Vec<[u32; 3]>,
    normals: Vec<Vec3>,
    diagnostics: MeshDiagnostics,
}

/// Relative area threshold below which a face counts as degenerate.
const DEGENERATE_REL: f64 = 1e-12;

fn face_cross(a: Vec3, b: Vec3, c: Vec3) -> Vec3 {
    (b - a).cross(c - a)
}

impl Mesh {
    pub fn empty() -> Mesh {
        Mesh::default()
    }

    /// Builds a mesh, rejecting out-of-range indices and dropping
    /// zero-area faces.
    pub fn from_triangles(vertices: Vec<Vec3>, faces: Vec<[u32; 3]>) -> Result<Mesh> {
        let n = vertices.len();
        for (fi, f) in faces.iter().enumerate() {
            for &idx in f {
                if idx as usize >= n {
                    return Err(Error::IndexOutOfRange {
                        face: fi,
                        index: idx as usize,
                        vertex_count: n,
                    });
                }
            }
        }
        if vertices.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("mesh vertex".into()));
        }
        let mut kept = Vec::with_capacity(faces.len());
        let mut normals = Vec::with_capacity(faces.len());
        let mut removed = 0;
        for f in faces {
            let [a, b, c] = f.map(|i| vertices[i as usize]);
            let cr = face_cross(a, b, c);
            let scale = (b - a)
                .norm_sq()
                .max((c - a).norm_sq())
                .max((c - b).norm_sq());
            let unit = if cr.norm() > DEGENERATE_REL * scale {
                cr.normalized()
            } else {
                None
            };
            match unit {
                Some(nrm) if f[0] != f[1] && f[1] != f[2] && f[0] != f[2] => {
                    kept.push(f);
                    normals.push(nrm);
                }
                _ => removed += 1,
            }
        }
        let mut mesh = Mesh {
            vertices,
            faces: kept,
            normals,
            diagnostics: MeshDiagnostics::default(),
        };
        let (boundary, non_manifold) = mesh.edge_counts();
        mesh.diagnostics = MeshDiagnostics {
            removed_degenerate_faces: removed,
            boundary_edges: boundary,
            non_manifold_edges: non_manifold,
        };
        Ok(mesh)
    }

    /// Triangulates polygons as fans around their first vertex.
    pub fn from_polygons(vertices: Vec<Vec3>, polygons: &[Vec<u32>]) -> Result<Mesh> {
        let mut faces = Vec::new();
        for poly in polygons {
            for i in 1..poly.len().saturating_sub(1) {
                faces.push([poly[0], poly[i], poly[i + 1]]);
            }
        }
        Mesh::from_triangles(vertices, faces)
    }

    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    pub fn faces(&self) -> &[[u32; 3]] {
        &self.faces
    }

    pub fn face_normals(&self) -> &[Vec3] {
        &self.normals
    }

    pub fn diagnostics(&self) -> MeshDiagnostics {
        self.diagnostics
    }

    pub fn is_empty(&self) -> bool {
        self.faces.is_empty()
    }

    pub fn face_count(&self) -> usize {
        self.faces.len()
    }

    pub fn triangle(&self, face: usize) -> [Vec3; 3] {
        self.faces[face].map(|i| self.vertices[i as usize])
    }

    pub fn face_area(&self, face: usize) -> f64 {
        let [a, b, c] = self.triangle(face);
        0.5 * face_cross(a, b, c).norm()
    }

    pub fn surface_area(&self) -> f64 {
        (0..self.faces.len()).map(|f| self.face_area(f)).sum()
    }

    /// Bounding box of the vertices referenced by faces.
    pub fn bounding_box(&self) -> Option<Aabb> {
        let mut it = self.faces.iter().flat_map(|f| f.iter());
        let first = self.vertices[*it.next()? as usize];
        let mut b = Aabb::new(first, first);
        for &i in it {
            let v = self.vertices[i as usize];
            b.min = b.min.min(v);
            b.max = b.max.max(v);
        }
        Some(b)
    }

    /// Signed volume via the divergence theorem (positive for outward winding).
    pub fn signed_volume(&self) -> f64 {
        self.faces
            .iter()
            .map(|f| {
                let [a, b, c] = f.map(|i| self.vertices[i as usize]);
                a.dot(b.cross(c)) / 6.0
            })
            .sum()
    }

    /// Applies a point map to every vertex; normals are recomputed.
    pub fn map_vertices(&self, f: impl Fn(Vec3) -> Vec3) -> Result<Mesh> {
        let vertices = self.vertices.iter().map(|&v| f(v)).collect();
        Mesh::from_triangles(vertices, self.faces.clone())
    }

    /// Concatenates two meshes without welding.
    pub fn concat(&self, other: &Mesh) -> Result<Mesh> {
        let offset = self.vertices.len() as u32;
        let mut vertices = self.vertices.clone();
        vertices.extend_from_slice(&other.vertices);
        let mut faces = self.faces.clone();
        faces.extend(other.faces.iter().map(|f| f.map(|i| i + offset)));
        Mesh::from_triangles(vertices, faces)
    }

    pub fn is_watertight(&self) -> bool {
        !self.faces.is_empty() && !self.diagnostics.warn_non_manifold()
    }

    /// (edges with one face, edges with >2 faces), undirected.
    fn edge_counts(&self) -> (usize, usize) {
        let mut edges: Vec<(u32, u32)> = Vec::with_capacity(self.faces.len() * 3);
        for f in &self.faces {
            for k in 0..3 {
                let (a, b) = (f[k], f[(k + 1) % 3]);
                edges.push((a.min(b), a.max(b)));
            }
        }
        edges.sort_unstable();
        let (mut boundary, mut non_manifold) = (0, 0);
        let mut i = 0;
        while i < edges.len() {
            let mut j = i + 1;
            while j < edges.len() && edges[j] == edges[i] {
                j += 1;
            }
            match j - i {
                1 => boundary += 1,
                2 => {}
                _ => non_manifold += 1,
            }
            i = j;
        }
        (boundary, non_manifold)
    }
}

/// Centers the mesh bounding box at the origin and scales it uniformly so
/// its volume is `1 / workspace_scale` of the unit workspace cube.
pub fn normalize_to_workspace(mesh: &Mesh, workspace_scale: f64) -> Result<Mesh> {
    if !(workspace_scale >= 1.0) || !workspace_scale.is_finite() {
        return Err(Error::InvalidArgument(alloc::format!(
            "workspace_scale must be >= 1, got {workspace_scale}"
        )));
    }
    let bbox = mesh.bounding_box().ok_or(Error::EmptyMesh)?;
    let ext = bbox.extent();
    let scale_ref = ext.max_elem();
    if ext.min_elem() <= 1e-12 * scale_ref.max(1e-300) {
        return Err(Error::DegenerateMesh("bounding box has zero extent".into()));
    }
    let target = 1.0 / workspace_scale;
    let s = crate::math::cbrt(target / bbox.volume());
    let c = bbox.center();
    mesh.map_vertices(|v| (v - c) * s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::primitives;
    use alloc::vec;

    #[test]
    fn rejects_out_of_range_index() {
        let verts = vec![Vec3::ZERO; 8];
        let err = Mesh::from_triangles(verts, vec![[0, 1, 99]]).unwrap_err();
        assert!(matches!(err, Error::IndexOutOfRange { index: 99, .. }));
    }

    #[test]
    fn drops_degenerate_faces() {
        let verts = vec![
            Vec3::ZERO,
            Vec3::X,
            Vec3::Y,
            Vec3::new(2.0, 0.0, 0.0),
        ];
        let m = Mesh::from_triangles(verts, vec![[0, 1, 2], [0, 1, 3], [1, 1, 2]]).unwrap();
        assert_eq!(m.face_count(), 1);
        assert_eq!(m.diagnostics().removed_degenerate_faces, 2);
        assert!((m.face_normals()[0].norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cube_is_watertight_with_outward_volume() {
        let cube = primitives::box_mesh(Vec3::splat(-0.5), Vec3::splat(0.5));
        assert_eq!(cube.face_count(), 12);
        assert!(cube.is_watertight());
        assert!((cube.signed_volume() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn normalize_scales_volume_to_one_eighth() {
        let b = primitives::box_mesh(Vec3::new(1.0, 2.0, 3.0), Vec3::new(3.0, 3.0, 4.0));
        let n = normalize_to_workspace(&b, 8.0).unwrap();
        let bb = n.bounding_box().unwrap();
        assert!((bb.volume() - 0.125).abs() < 1e-12);
        assert!(bb.center().norm() < 1e-12);
        // cube-shaped object -> max extent 0.5
        let c = primitives::box_mesh(Vec3::splat(2.0), Vec3::splat(5.0));
        let n = normalize_to_workspace(&c, 8.0).unwrap();
        assert!((n.bounding_box().unwrap().extent().max_elem() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn normalize_identity_on_centered_unit_cube() {
        let c = primitives::box_mesh(Vec3::splat(-0.5), Vec3::splat(0.5));
        let n = normalize_to_workspace(&c, 1.0).unwrap();
        for (a, b) in c.vertices().iter().zip(n.vertices()) {
            assert!(a.dist(*b) < 1e-14);
        }
    }

    #[test]
    fn normalize_rejects_flat_plane() {
        let verts = vec![
            Vec3::ZERO,
            Vec3::X,
            Vec3::new(1.0, 1.0, 0.0),
            Vec3::Y,
        ];
        let plane = Mesh::from_triangles(verts, vec![[0, 1, 2], [0, 2, 3]]).unwrap();
        assert!(matches!(
            normalize_to_workspace(&plane, 8.0),
            Err(Error::DegenerateMesh(_))
        ));
    }
}
