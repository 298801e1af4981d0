//! Sphere-envelope reconstruction from a skeletal point set and the mIoU
//! fidelity score between occupancy grids.

use crate::error::{Error, Result};
use crate::medial::SkeletalPointSet;
use crate::voxelio::VoxelGrid;

/// Union of the maximal inscribed spheres, with a per-voxel generator map
/// recording which skeletal point claims each occupied voxel.
#[derive(Debug, Clone)]
pub struct ReconGrid {
    pub grid: VoxelGrid,
    /// For occupied voxels, the skeletal point index whose ball claims the
    /// voxel (largest radius, then lowest index); `usize::MAX` elsewhere.
    pub generator: Vec<usize>,
}

impl ReconGrid {
    /// Indices of occupied voxels with at least one empty 6-neighbor.
    pub fn surface_indices(&self) -> Vec<usize> {
        let g = &self.grid;
        g.occupied_indices()
            .into_iter()
            .filter(|&idx| {
                let [x, y, z] = g.coords(idx);
                [
                    (1i64, 0i64, 0i64),
                    (-1, 0, 0),
                    (0, 1, 0),
                    (0, -1, 0),
                    (0, 0, 1),
                    (0, 0, -1),
                ]
                .iter()
                .any(|&(dx, dy, dz)| !g.get_i(x as i64 + dx, y as i64 + dy, z as i64 + dz))
            })
            .collect()
    }
}

/// Rasterize each skeletal ball (center-in-sphere test on voxel centers) and
/// take the union, keeping per voxel the generator with the largest radius,
/// ties to the lower skeletal index.
pub fn reconstruct(skel: &SkeletalPointSet) -> Result<ReconGrid> {
    if skel.points.is_empty() {
        return Err(Error::EmptyInput("skeletal point set is empty".into()));
    }
    let dims = skel.dims;
    let spacing = skel.spacing;
    let mut grid = VoxelGrid::new(dims, spacing, skel.origin);
    let mut generator = vec![usize::MAX; grid.len()];
    // best (r, index) claim per voxel; r stored directly, index negated via
    // comparison logic below.
    let mut best_r = vec![f64::NEG_INFINITY; grid.len()];
    for (i, p) in skel.points.iter().enumerate() {
        if !(p.r > 0.0) {
            return Err(Error::Validation {
                field: "r".into(),
                msg: format!("skeletal point {i} has non-positive radius {}", p.r),
            });
        }
        let rv = p.r / spacing; // radius in voxel units
        let r2 = rv * rv;
        let lo = |c: usize| c.saturating_sub(rv.ceil() as usize);
        let hi = |c: usize, n: usize| (c + rv.ceil() as usize).min(n - 1);
        for z in lo(p.z)..=hi(p.z, dims[2]) {
            let dz = z as f64 - p.z as f64;
            for y in lo(p.y)..=hi(p.y, dims[1]) {
                let dy = y as f64 - p.y as f64;
                for x in lo(p.x)..=hi(p.x, dims[0]) {
                    let dx = x as f64 - p.x as f64;
                    if dx * dx + dy * dy + dz * dz <= r2 {
                        let idx = grid.index(x, y, z);
                        grid.set_linear(idx, true);
                        let better = p.r > best_r[idx]
                            || (p.r == best_r[idx] && i < generator[idx]);
                        if better {
                            best_r[idx] = p.r;
                            generator[idx] = i;
                        }
                    }
                }
            }
        }
    }
    Ok(ReconGrid { grid, generator })
}

/// Intersection-over-union of two occupancy grids with identical geometry.
pub fn miou(a: &VoxelGrid, b: &VoxelGrid) -> Result<f64> {
    if !a.same_geometry(b) {
        return Err(Error::ShapeMismatch(
            "mIoU requires identical grid geometry".into(),
        ));
    }
    let mut inter = 0usize;
    let mut union = 0usize;
    for i in 0..a.len() {
        let (va, vb) = (a.get_linear(i), b.get_linear(i));
        if va && vb {
            inter += 1;
        }
        if va || vb {
            union += 1;
        }
    }
    if union == 0 {
        return Err(Error::EmptyInput("both grids are empty".into()));
    }
    Ok(inter as f64 / union as f64)
}
