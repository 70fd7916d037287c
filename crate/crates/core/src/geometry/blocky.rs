use alloc::vec;
use alloc::vec::Vec;

use super::mesh::Mesh;
use super::voxel::VoxelGrid;
use crate::error::Result;
use crate::math::Vec3;

/// Boundary faces of the occupied cells, welded on lattice nodes, wound
/// outward. An empty grid gives an empty mesh.
pub fn grid_to_blocky_mesh(grid: &VoxelGrid) -> Result<Mesh> {
    let n = grid.resolution();
    let m = n + 1;
    let origin = grid.bbox_min();
    let e = grid.edge();
    let mut node_id = vec![u32::MAX; m * m * m];
    let mut vertices = Vec::new();
    let mut faces = Vec::new();
    let mut vid = |c: [usize; 3], vertices: &mut Vec<Vec3>| {
        let key = c[0] + m * (c[1] + m * c[2]);
        if node_id[key] == u32::MAX {
            node_id[key] = vertices.len() as u32;
            vertices.push(origin + Vec3::new(c[0] as f64, c[1] as f64, c[2] as f64) * e);
        }
        node_id[key]
    };
    for idx in grid.occupied() {
        let [i, j, k] = grid.coords(idx);
        for axis in 0..3 {
            for side in 0..2usize {
                let mut nb = [i as isize, j as isize, k as isize];
                nb[axis] += if side == 1 { 1 } else { -1 };
                if grid.get_signed(nb[0], nb[1], nb[2]) {
                    continue;
                }
                let (u, v) = ((axis + 1) % 3, (axis + 2) % 3);
                let corner = |du: usize, dv: usize| {
                    let mut c = [i, j, k];
                    c[axis] += side;
                    c[u] += du;
                    c[v] += dv;
                    c
                };
                // (u, v, axis) is right-handed, so this quad faces +axis
                let mut q = [corner(0, 0), corner(1, 0), corner(1, 1), corner(0, 1)];
                if side == 0 {
                    q.reverse();
                }
                let ids = q.map(|c| vid(c, &mut vertices));
                faces.push([ids[0], ids[1], ids[2]]);
                faces.push([ids[0], ids[2], ids[3]]);
            }
        }
    }
    Mesh::from_triangles(vertices, faces)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::voxelize::voxelize_solid;
    use crate::math::Aabb;

    #[test]
    fn single_cell_is_a_closed_cube() {
        let mut g = VoxelGrid::workspace(4);
        g.set(1, 2, 3, true);
        let m = grid_to_blocky_mesh(&g).unwrap();
        assert_eq!(m.face_count(), 12);
        assert_eq!(m.vertices().len(), 8);
        assert!(m.is_watertight());
        let e = g.edge();
        assert!((m.signed_volume() - e * e * e).abs() < 1e-12);
    }

    #[test]
    fn volume_matches_cell_count_and_revoxelizes() {
        let mut g = VoxelGrid::workspace(8);
        for (i, j, k) in [(1, 1, 1), (2, 1, 1), (2, 2, 1), (5, 5, 5), (5, 5, 6)] {
            g.set(i, j, k, true);
        }
        let m = grid_to_blocky_mesh(&g).unwrap();
        let e = g.edge();
        assert!((m.signed_volume() - 5.0 * e * e * e).abs() < 1e-12);
        let (back, _) = voxelize_solid(&m, 8, Aabb::unit_workspace());
        assert_eq!(back, g);
    }

    #[test]
    fn empty_grid_gives_empty_mesh() {
        assert!(grid_to_blocky_mesh(&VoxelGrid::workspace(4)).unwrap().is_empty());
    }
}
