//! Mesh ingestion, surface sampling, rotations, voxelization, and synthetic
//! shapes.

pub mod cloud;
pub mod mesh;
pub mod rotation;
pub mod sample;
pub mod synth;
pub mod voxel;

pub use cloud::{apply_rigid, PointCloud};
pub use mesh::{normalize_mesh, parse_off, parse_off_file, TriangleMesh};
pub use rotation::{random_rotation, RotationMode};
pub use sample::sample_surface;
pub use synth::{synth_shape, SynthKind};
pub use voxel::{voxelize_mesh, voxelize_points, VoxelGrid};
