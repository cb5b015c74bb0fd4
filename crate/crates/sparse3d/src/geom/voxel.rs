//! Voxel occupancy grids and the `SPV1` dump format.
//!
//! Grids discretize the canonical frame `[-0.5, 0.5]^3` into `R^3` half-open
//! cells `[lo, hi)`; points on the upper boundary clamp into the last cell,
//! so the mapping is total. Reconstruction targets are always computed in
//! canonical (un-rotated) pose.

use std::io::{Read, Write};
use std::path::Path;

use nalgebra::Vector3;
use rand::Rng;

use crate::error::{Error, Result};
use crate::geom::mesh::TriangleMesh;
use crate::geom::sample::sample_surface;

pub const SPV1_MAGIC: &[u8; 4] = b"SPV1";

/// `R^3` binary occupancy over the canonical unit cube.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VoxelGrid {
    resolution: usize,
    occupancy: Vec<bool>,
}

impl VoxelGrid {
    pub fn empty(resolution: usize) -> Result<Self> {
        if resolution < 2 {
            return Err(Error::Invalid("voxel resolution must be >= 2".into()));
        }
        Ok(Self {
            resolution,
            occupancy: vec![false; resolution.pow(3)],
        })
    }

    /// Build directly from a flat occupancy vector of length `R^3`
    /// (x-major, then y, then z).
    pub fn from_flat(resolution: usize, occupancy: Vec<bool>) -> Result<Self> {
        if occupancy.len() != resolution.pow(3) {
            return Err(Error::Invalid(format!(
                "occupancy length {} != {}^3",
                occupancy.len(),
                resolution
            )));
        }
        Ok(Self {
            resolution,
            occupancy,
        })
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn occupancy(&self) -> &[bool] {
        &self.occupancy
    }

    fn flat(&self, ix: usize, iy: usize, iz: usize) -> usize {
        (ix * self.resolution + iy) * self.resolution + iz
    }

    pub fn get(&self, ix: usize, iy: usize, iz: usize) -> bool {
        self.occupancy[self.flat(ix, iy, iz)]
    }

    pub fn occupied_count(&self) -> usize {
        self.occupancy.iter().filter(|&&o| o).count()
    }

    /// Map a canonical-frame coordinate to a cell index (clamped).
    pub fn cell_index(resolution: usize, coord: f64) -> usize {
        let idx = ((coord + 0.5) * resolution as f64).floor();
        (idx.max(0.0) as usize).min(resolution - 1)
    }

    /// Mark the cell containing `p`.
    pub fn insert(&mut self, p: &Vector3<f64>) {
        let r = self.resolution;
        let (ix, iy, iz) = (
            Self::cell_index(r, p.x),
            Self::cell_index(r, p.y),
            Self::cell_index(r, p.z),
        );
        let idx = self.flat(ix, iy, iz);
        self.occupancy[idx] = true;
    }

    /// Intersection-over-union against another grid of the same resolution.
    /// Two empty grids count as a perfect match.
    pub fn iou(&self, other: &VoxelGrid) -> Result<f64> {
        if self.resolution != other.resolution {
            return Err(Error::ShapeMismatch(format!(
                "voxel resolutions differ: {} vs {}",
                self.resolution, other.resolution
            )));
        }
        let mut inter = 0usize;
        let mut union = 0usize;
        for (a, b) in self.occupancy.iter().zip(&other.occupancy) {
            inter += (*a && *b) as usize;
            union += (*a || *b) as usize;
        }
        if union == 0 {
            return Ok(1.0);
        }
        Ok(inter as f64 / union as f64)
    }

    pub fn write_spv1<W: Write>(&self, w: &mut W) -> Result<()> {
        w.write_all(SPV1_MAGIC)?;
        w.write_all(&(self.resolution as u32).to_le_bytes())?;
        let bytes: Vec<u8> = self.occupancy.iter().map(|&o| o as u8).collect();
        w.write_all(&bytes)?;
        Ok(())
    }

    pub fn read_spv1<R: Read>(r: &mut R) -> Result<Self> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)
            .map_err(|_| Error::Format("SPV1: truncated magic".into()))?;
        if &magic != SPV1_MAGIC {
            return Err(Error::Format("SPV1: bad magic".into()));
        }
        let mut buf = [0u8; 4];
        r.read_exact(&mut buf)
            .map_err(|_| Error::Format("SPV1: truncated resolution".into()))?;
        let resolution = u32::from_le_bytes(buf) as usize;
        if resolution < 2 {
            return Err(Error::Format("SPV1: resolution must be >= 2".into()));
        }
        let mut bytes = vec![0u8; resolution.pow(3)];
        r.read_exact(&mut bytes)
            .map_err(|_| Error::Format("SPV1: truncated occupancy".into()))?;
        let occupancy = bytes
            .iter()
            .map(|&b| match b {
                0 => Ok(false),
                1 => Ok(true),
                other => Err(Error::Format(format!(
                    "SPV1: occupancy byte {other} not in {{0,1}}"
                ))),
            })
            .collect::<Result<_>>()?;
        Ok(Self {
            resolution,
            occupancy,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path)?;
        self.write_spv1(&mut f)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut f = std::fs::File::open(path)?;
        Self::read_spv1(&mut f)
    }
}

/// Number of dense surface samples used when voxelizing a mesh.
pub fn dense_sample_count(resolution: usize) -> usize {
    10_000usize.max(10 * resolution.pow(3))
}

/// Occupy every cell hit by a dense area-weighted sampling of the surface.
/// The mesh must already be normalized to canonical pose.
pub fn voxelize_mesh<R: Rng + ?Sized>(
    mesh: &TriangleMesh,
    resolution: usize,
    rng: &mut R,
) -> Result<VoxelGrid> {
    let cloud = sample_surface(mesh, dense_sample_count(resolution), rng)?;
    voxelize_points(&cloud.points, resolution)
}

/// Occupy every cell containing one of the given canonical-pose points.
pub fn voxelize_points(points: &[Vector3<f64>], resolution: usize) -> Result<VoxelGrid> {
    let mut grid = VoxelGrid::empty(resolution)?;
    for p in points {
        grid.insert(p);
    }
    Ok(grid)
}
