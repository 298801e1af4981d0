use nalgebra::Point3;

use crate::error::{Error, Result};
use crate::voxelio::VoxelGrid;

const INF: i64 = i64::MAX / 4;

/// Exact Euclidean distance field of a voxel grid: per-voxel squared
/// distance (in voxel units) from each voxel center to the nearest
/// non-object voxel center, plus the argmin feature voxel.
#[derive(Debug, Clone)]
pub struct DistanceField {
    pub dims: [usize; 3],
    pub spacing: f64,
    pub origin: Point3<f64>,
    sq: Vec<i64>,
    feature: Vec<[i32; 3]>,
}

impl DistanceField {
    /// Distance in object units; 0 on non-object voxels.
    #[inline]
    pub fn d(&self, x: usize, y: usize, z: usize) -> f64 {
        let idx = self.index(x, y, z);
        (self.sq[idx] as f64).sqrt() * self.spacing
    }

    #[inline]
    pub fn d_linear(&self, idx: usize) -> f64 {
        (self.sq[idx] as f64).sqrt() * self.spacing
    }

    /// Squared distance in voxel units.
    #[inline]
    pub fn squared(&self, x: usize, y: usize, z: usize) -> i64 {
        self.sq[self.index(x, y, z)]
    }

    /// Nearest non-object voxel (exact argmin up to ties).
    #[inline]
    pub fn feature(&self, x: usize, y: usize, z: usize) -> [i32; 3] {
        self.feature[self.index(x, y, z)]
    }

    #[inline]
    fn index(&self, x: usize, y: usize, z: usize) -> usize {
        (z * self.dims[1] + y) * self.dims[0] + x
    }
}

/// Separable exact squared Euclidean distance transform (lower envelope of
/// parabolas per axis), carrying feature voxels through each pass.
pub fn distance_transform(grid: &VoxelGrid) -> Result<DistanceField> {
    let [nx, ny, nz] = grid.dims;
    if grid.occupied_count() == 0 {
        return Err(Error::EmptyInput("grid has no occupied voxel".into()));
    }
    let n = grid.len();
    let mut sq = vec![INF; n];
    let mut feature = vec![[-1i32; 3]; n];

    // Pass 1 (x): nearest empty voxel within each x-row by two sweeps.
    for z in 0..nz {
        for y in 0..ny {
            let row = (z * ny + y) * nx;
            let mut last_empty: i64 = -1;
            for x in 0..nx {
                if !grid.get_linear(row + x) {
                    last_empty = x as i64;
                }
                if last_empty >= 0 {
                    let d = x as i64 - last_empty;
                    sq[row + x] = d * d;
                    feature[row + x] = [last_empty as i32, y as i32, z as i32];
                }
            }
            let mut next_empty: i64 = -1;
            for x in (0..nx).rev() {
                if !grid.get_linear(row + x) {
                    next_empty = x as i64;
                }
                if next_empty >= 0 {
                    let d = next_empty - x as i64;
                    if d * d < sq[row + x] {
                        sq[row + x] = d * d;
                        feature[row + x] = [next_empty as i32, y as i32, z as i32];
                    }
                }
            }
        }
    }

    // Passes 2 and 3 (y then z): 1D lower-envelope minimization of
    // f(q) + (p - q)^2 along the axis, propagating features.
    envelope_pass(&mut sq, &mut feature, [nx, ny, nz], 1);
    envelope_pass(&mut sq, &mut feature, [nx, ny, nz], 2);

    if sq.iter().any(|&v| v >= INF) {
        return Err(Error::Domain(
            "grid has no empty voxel; distance field undefined".into(),
        ));
    }
    Ok(DistanceField {
        dims: grid.dims,
        spacing: grid.spacing,
        origin: grid.origin,
        sq,
        feature,
    })
}

fn envelope_pass(sq: &mut [i64], feature: &mut [[i32; 3]], dims: [usize; 3], axis: usize) {
    let [nx, ny, nz] = dims;
    let (len, stride, outer1, outer2, stride1, stride2) = match axis {
        1 => (ny, nx, nx, nz, 1, nx * ny),
        2 => (nz, nx * ny, nx, ny, 1, nx),
        _ => unreachable!(),
    };
    let mut f = vec![0i64; len];
    let mut feat_in = vec![[0i32; 3]; len];
    let mut v = vec![0usize; len];
    let mut zb = vec![0f64; len + 1];
    for o2 in 0..outer2 {
        for o1 in 0..outer1 {
            let base = o1 * stride1 + o2 * stride2;
            for q in 0..len {
                f[q] = sq[base + q * stride];
                feat_in[q] = feature[base + q * stride];
            }
            // Felzenszwalb-Huttenlocher lower envelope over finite parabolas.
            let mut k = 0usize;
            let mut started = false;
            for q in 0..len {
                if f[q] >= INF {
                    continue;
                }
                if !started {
                    v[0] = q;
                    zb[0] = f64::NEG_INFINITY;
                    zb[1] = f64::INFINITY;
                    started = true;
                    continue;
                }
                loop {
                    let r = v[k];
                    let s = ((f[q] + (q * q) as i64) - (f[r] + (r * r) as i64)) as f64
                        / (2.0 * (q as f64 - r as f64));
                    if s <= zb[k] {
                        if k == 0 {
                            v[0] = q;
                            zb[0] = f64::NEG_INFINITY;
                            zb[1] = f64::INFINITY;
                            break;
                        }
                        k -= 1;
                    } else {
                        k += 1;
                        v[k] = q;
                        zb[k] = s;
                        zb[k + 1] = f64::INFINITY;
                        break;
                    }
                }
            }
            if !started {
                continue;
            }
            let mut k2 = 0usize;
            for p in 0..len {
                while zb[k2 + 1] < p as f64 {
                    k2 += 1;
                }
                let q = v[k2];
                let d = p as i64 - q as i64;
                let val = f[q] + d * d;
                let idx = base + p * stride;
                if val < sq[idx] {
                    sq[idx] = val;
                    feature[idx] = feat_in[q];
                }
            }
        }
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::synth;
    use nalgebra::Point3;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// O(n^2) brute force: squared distance to the nearest empty voxel.
    pub fn brute_force_sq(grid: &VoxelGrid) -> Vec<i64> {
        let [nx, ny, nz] = grid.dims;
        let empties: Vec<[i64; 3]> = (0..grid.len())
            .filter(|&i| !grid.get_linear(i))
            .map(|i| {
                let [x, y, z] = grid.coords(i);
                [x as i64, y as i64, z as i64]
            })
            .collect();
        let mut out = vec![0i64; grid.len()];
        for z in 0..nz {
            for y in 0..ny {
                for x in 0..nx {
                    let idx = grid.index(x, y, z);
                    if !grid.get_linear(idx) {
                        continue;
                    }
                    let mut best = i64::MAX;
                    for e in &empties {
                        let dx = x as i64 - e[0];
                        let dy = y as i64 - e[1];
                        let dz = z as i64 - e[2];
                        best = best.min(dx * dx + dy * dy + dz * dz);
                    }
                    out[idx] = best;
                }
            }
        }
        out
    }

    pub fn random_grid(rng: &mut ChaCha8Rng, max_dim: usize) -> VoxelGrid {
        let dims = [
            rng.gen_range(3..=max_dim),
            rng.gen_range(3..=max_dim),
            rng.gen_range(3..=max_dim),
        ];
        let mut g = VoxelGrid::new(dims, 1.0, Point3::origin());
        let fill = rng.gen_range(0.2..0.9);
        let mut any = false;
        for i in 0..g.len() {
            if rng.gen_bool(fill) {
                g.set_linear(i, true);
                any = true;
            }
        }
        if !any {
            g.set_linear(0, true);
        }
        // Keep at least one empty voxel.
        let last = g.len() - 1;
        g.set_linear(last, false);
        g
    }

    #[test]
    fn single_occupied_voxel() {
        let mut g = VoxelGrid::new([5, 5, 5], 0.25, Point3::origin());
        g.set(2, 2, 2, true);
        let df = distance_transform(&g).unwrap();
        assert_eq!(df.squared(2, 2, 2), 1);
        assert!((df.d(2, 2, 2) - 0.25).abs() < 1e-12);
        assert_eq!(df.d(0, 0, 0), 0.0);
    }

    #[test]
    fn solid_cube_max_distance() {
        let mut g = VoxelGrid::new([12, 12, 12], 1.0, Point3::origin());
        for z in 2..10 {
            for y in 2..10 {
                for x in 2..10 {
                    g.set(x, y, z, true);
                }
            }
        }
        let df = distance_transform(&g).unwrap();
        let mut max = 0.0f64;
        for z in 0..12 {
            for y in 0..12 {
                for x in 0..12 {
                    max = max.max(df.d(x, y, z));
                }
            }
        }
        assert_eq!(max, 4.0);
        assert_eq!(df.d(5, 5, 5), 4.0);
    }

    #[test]
    fn solid_ball_max_distance() {
        let g = synth::ball_grid(20);
        let df = distance_transform(&g).unwrap();
        let max = (0..g.len())
            .map(|i| df.d_linear(i))
            .fold(0.0f64, f64::max);
        assert!(
            (max - 1.0).abs() <= 1.5 * g.spacing,
            "max d {max} vs radius 1.0 (spacing {})",
            g.spacing
        );
    }

    #[test]
    fn matches_brute_force_on_random_grids() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..30 {
            let g = random_grid(&mut rng, 16);
            let df = distance_transform(&g).unwrap();
            let oracle = brute_force_sq(&g);
            for idx in 0..g.len() {
                let [x, y, z] = g.coords(idx);
                assert_eq!(df.squared(x, y, z), oracle[idx], "at ({x},{y},{z})");
            }
        }
    }

    #[test]
    fn feature_is_a_true_argmin() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10 {
            let g = random_grid(&mut rng, 12);
            let df = distance_transform(&g).unwrap();
            for idx in 0..g.len() {
                if !g.get_linear(idx) {
                    continue;
                }
                let [x, y, z] = g.coords(idx);
                let f = df.feature(x, y, z);
                assert!(!g.get_i(f[0] as i64, f[1] as i64, f[2] as i64));
                let dx = x as i64 - f[0] as i64;
                let dy = y as i64 - f[1] as i64;
                let dz = z as i64 - f[2] as i64;
                assert_eq!(dx * dx + dy * dy + dz * dz, df.squared(x, y, z));
            }
        }
    }

    #[test]
    fn all_empty_grid_is_error() {
        let g = VoxelGrid::new([4, 4, 4], 1.0, Point3::origin());
        assert!(matches!(
            distance_transform(&g),
            Err(Error::EmptyInput(_))
        ));
    }
}
