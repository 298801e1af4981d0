use nalgebra::Point3;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::voxelio::{TriangleMesh, VoxelGrid};

// Sample rays are offset from voxel centers by these fractions of the
// spacing so columns never hit triangle edges of axis-aligned geometry
// exactly. The offsets shift all columns uniformly, so integer-voxel
// translation consistency is unaffected.
const JITTER_X: f64 = 1.2345678e-6;
const JITTER_Y: f64 = 2.4691357e-6;

/// Solid (filled-interior) voxelization of a watertight mesh by parity
/// counting of ray-triangle crossings along z per voxel column.
///
/// `resolution` is the voxel count along the longest bounding-box axis.
/// The grid is padded with 2 empty voxel layers on all sides.
pub fn voxelize(mesh: &TriangleMesh, resolution: usize) -> Result<VoxelGrid> {
    if !(8..=512).contains(&resolution) {
        return Err(Error::Domain(format!(
            "resolution {resolution} outside 8..=512"
        )));
    }
    if !mesh.watertight {
        return Err(Error::NotWatertight(
            "interior is undefined for an open mesh".into(),
        ));
    }
    let (lo, hi) = mesh.bounding_box();
    let extent = (hi - lo).amax();
    if extent <= 0.0 {
        return Err(Error::EmptyInput("mesh has zero extent".into()));
    }
    let spacing = extent / resolution as f64;
    let geometry = grid_geometry(lo, hi, spacing);
    let mut grid = VoxelGrid::new(geometry.0, spacing, geometry.1);
    rasterize_into(mesh, &mut grid)?;
    if grid.occupied_count() == 0 {
        return Err(Error::EmptyInput(
            "no voxel center falls inside the solid".into(),
        ));
    }
    Ok(grid)
}

/// Voxelizes several watertight meshes into one shared grid and unions the
/// occupancies. This is how composite solids (overlapping closed parts) are
/// rasterized, since parity counting over a concatenated surface would cancel
/// inside the overlap.
pub fn voxelize_union(meshes: &[&TriangleMesh], resolution: usize) -> Result<VoxelGrid> {
    if meshes.is_empty() {
        return Err(Error::EmptyInput("no meshes to voxelize".into()));
    }
    if !(8..=512).contains(&resolution) {
        return Err(Error::Domain(format!(
            "resolution {resolution} outside 8..=512"
        )));
    }
    let mut lo = Point3::new(f64::INFINITY, f64::INFINITY, f64::INFINITY);
    let mut hi = Point3::new(f64::NEG_INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
    for m in meshes {
        if !m.watertight {
            return Err(Error::NotWatertight("component mesh is open".into()));
        }
        let (l, h) = m.bounding_box();
        for k in 0..3 {
            lo[k] = lo[k].min(l[k]);
            hi[k] = hi[k].max(h[k]);
        }
    }
    let spacing = (hi - lo).amax() / resolution as f64;
    let geometry = grid_geometry(lo, hi, spacing);
    let mut grid = VoxelGrid::new(geometry.0, spacing, geometry.1);
    for m in meshes {
        let mut part = VoxelGrid::new(geometry.0, spacing, geometry.1);
        rasterize_into(m, &mut part)?;
        grid.union_with(&part)?;
    }
    if grid.occupied_count() == 0 {
        return Err(Error::EmptyInput(
            "no voxel center falls inside the solid".into(),
        ));
    }
    Ok(grid)
}

fn grid_geometry(lo: Point3<f64>, hi: Point3<f64>, spacing: f64) -> ([usize; 3], Point3<f64>) {
    let dims = [
        (((hi.x - lo.x) / spacing).ceil() as usize) + 4,
        (((hi.y - lo.y) / spacing).ceil() as usize) + 4,
        (((hi.z - lo.z) / spacing).ceil() as usize) + 4,
    ];
    // Voxel (0,0,0) center sits 1.5 spacings below the bounding box, giving
    // two fully empty layers on every side.
    let origin = Point3::new(
        lo.x - 1.5 * spacing,
        lo.y - 1.5 * spacing,
        lo.z - 1.5 * spacing,
    );
    (dims, origin)
}

fn rasterize_into(mesh: &TriangleMesh, grid: &mut VoxelGrid) -> Result<()> {
    let [nx, ny, nz] = grid.dims;
    let spacing = grid.spacing;
    let origin = grid.origin;
    let ox = origin.x + JITTER_X * spacing;
    let oy = origin.y + JITTER_Y * spacing;

    // Bin triangles by the columns their xy bounding box overlaps.
    let mut columns: Vec<Vec<u32>> = vec![Vec::new(); nx * ny];
    for (t, _) in mesh.triangles.iter().enumerate() {
        let [a, b, c] = mesh.triangle_points(t);
        let min_x = a.x.min(b.x).min(c.x);
        let max_x = a.x.max(b.x).max(c.x);
        let min_y = a.y.min(b.y).min(c.y);
        let max_y = a.y.max(b.y).max(c.y);
        let i0 = (((min_x - ox) / spacing).floor().max(0.0)) as usize;
        let i1 = ((((max_x - ox) / spacing).ceil()) as usize).min(nx - 1);
        let j0 = (((min_y - oy) / spacing).floor().max(0.0)) as usize;
        let j1 = ((((max_y - oy) / spacing).ceil()) as usize).min(ny - 1);
        for j in j0..=j1 {
            for i in i0..=i1 {
                columns[j * nx + i].push(t as u32);
            }
        }
    }

    let slabs: Vec<Result<Vec<(usize, usize)>>> = (0..nx * ny)
        .into_par_iter()
        .map(|col| {
            let i = col % nx;
            let j = col / nx;
            let px = ox + i as f64 * spacing;
            let py = oy + j as f64 * spacing;
            let mut crossings: Vec<f64> = Vec::new();
            for &t in &columns[col] {
                let [a, b, c] = mesh.triangle_points(t as usize);
                if let Some(z) = ray_z_crossing(px, py, &a, &b, &c) {
                    crossings.push(z);
                }
            }
            if crossings.len() % 2 != 0 {
                return Err(Error::Domain(format!(
                    "odd crossing parity in column ({i},{j}); mesh may self-intersect"
                )));
            }
            crossings.sort_by(|p, q| p.partial_cmp(q).unwrap());
            let mut runs = Vec::new();
            for pair in crossings.chunks(2) {
                // Voxels whose center z lies strictly inside (z0, z1).
                let k0 = ((pair[0] - origin.z) / spacing).ceil().max(0.0) as usize;
                let k1f = (pair[1] - origin.z) / spacing;
                if k1f < 0.0 {
                    continue;
                }
                let k1 = (k1f.floor() as usize).min(nz - 1);
                let k0 = k0.min(nz);
                if k0 <= k1 {
                    runs.push((k0, k1));
                }
            }
            Ok(runs)
        })
        .collect();

    for (col, slab) in slabs.into_iter().enumerate() {
        let i = col % nx;
        let j = col / nx;
        for (k0, k1) in slab? {
            for k in k0..=k1 {
                grid.set(i, j, k, true);
            }
        }
    }
    Ok(())
}

/// Intersection z of the vertical ray through (px, py) with the triangle, or
/// None when the ray misses or the triangle is vertical.
fn ray_z_crossing(
    px: f64,
    py: f64,
    a: &Point3<f64>,
    b: &Point3<f64>,
    c: &Point3<f64>,
) -> Option<f64> {
    let d1x = b.x - a.x;
    let d1y = b.y - a.y;
    let d2x = c.x - a.x;
    let d2y = c.y - a.y;
    let det = d1x * d2y - d1y * d2x;
    if det == 0.0 {
        return None;
    }
    let rx = px - a.x;
    let ry = py - a.y;
    let u = (rx * d2y - ry * d2x) / det;
    let v = (d1x * ry - d1y * rx) / det;
    if u < 0.0 || v < 0.0 || u + v > 1.0 {
        return None;
    }
    Some(a.z + u * (b.z - a.z) + v * (c.z - a.z))
}
