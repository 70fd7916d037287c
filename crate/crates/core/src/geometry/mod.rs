//! Meshes, occupancy grids and the geometric queries shared by every module.

pub mod blocky;
pub mod hull;
pub mod knn;
pub mod marching_cubes;
pub mod mesh;
pub mod primitives;
pub mod sample;
pub mod voxel;
pub mod voxelize;

pub use blocky::grid_to_blocky_mesh;
pub use hull::{alpha_shape, convex_hull};
pub use knn::{brute_force_knn, nearest_neighbors, KdTree, Neighbor};
pub use marching_cubes::{marching_cubes, ScalarField};
pub use mesh::{normalize_to_workspace, Mesh, MeshDiagnostics};
pub use sample::{sample_surface, SurfaceSample};
pub use voxel::{CellIndex, VoxelGrid};
pub use voxelize::{voxelize_solid, InsideTester, VoxelizeStats};
