//! Mesh and voxel-grid ingestion, solid voxelization, and export of meshes
//! with per-vertex scalar channels.

mod grid;
mod mesh;
mod voxelize;

pub use grid::VoxelGrid;
pub use mesh::{export_mesh_scalars, load_mesh, TriangleMesh};
pub use voxelize::{voxelize, voxelize_union};
