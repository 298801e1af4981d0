//! Digital topology on the 3x3x3 neighborhood, with the 26-object /
//! 6-background connectivity pair.

use crate::error::{Error, Result};
use crate::voxelio::VoxelGrid;

/// Bit index of offset (dx,dy,dz), each in -1..=1.
#[inline]
pub const fn offset_bit(dx: i32, dy: i32, dz: i32) -> u32 {
    ((dz + 1) * 9 + (dy + 1) * 3 + (dx + 1)) as u32
}

pub const CENTER_BIT: u32 = offset_bit(0, 0, 0);

#[inline]
fn bit_offset(bit: u32) -> (i32, i32, i32) {
    let dx = (bit % 3) as i32 - 1;
    let dy = ((bit / 3) % 3) as i32 - 1;
    let dz = (bit / 9) as i32 - 1;
    (dx, dy, dz)
}

/// 27-bit occupancy mask of the 3x3x3 neighborhood around (x,y,z);
/// out-of-bounds voxels read as empty.
pub fn neighborhood_mask(grid: &VoxelGrid, x: usize, y: usize, z: usize) -> u32 {
    let mut mask = 0u32;
    for dz in -1i64..=1 {
        for dy in -1i64..=1 {
            for dx in -1i64..=1 {
                if grid.get_i(x as i64 + dx, y as i64 + dy, z as i64 + dz) {
                    mask |= 1 << offset_bit(dx as i32, dy as i32, dz as i32);
                }
            }
        }
    }
    mask
}

/// Number of 26-connected components among the set bits (excluding the
/// center bit).
fn components_26(mut occ: u32) -> usize {
    occ &= !(1 << CENTER_BIT);
    let mut count = 0;
    while occ != 0 {
        count += 1;
        let seed = occ.trailing_zeros();
        let mut comp = 1u32 << seed;
        occ &= !comp;
        loop {
            let mut grown = comp;
            let mut rest = occ;
            while rest != 0 {
                let b = rest.trailing_zeros();
                rest &= !(1 << b);
                let (bx, by, bz) = bit_offset(b);
                let mut adjacent = false;
                let mut cm = comp;
                while cm != 0 {
                    let c = cm.trailing_zeros();
                    cm &= !(1 << c);
                    let (cx, cy, cz) = bit_offset(c);
                    if (bx - cx).abs() <= 1 && (by - cy).abs() <= 1 && (bz - cz).abs() <= 1 {
                        adjacent = true;
                        break;
                    }
                }
                if adjacent {
                    grown |= 1 << b;
                }
            }
            if grown == comp {
                break;
            }
            occ &= !grown;
            comp = grown;
        }
    }
    count
}

/// Number of 6-connected components of empty voxels within the
/// 18-neighborhood that are 6-adjacent to the center.
fn background_components_6(mask: u32) -> usize {
    let mut n18_empty = 0u32;
    for b in 0..27 {
        if b == CENTER_BIT {
            continue;
        }
        let (dx, dy, dz) = bit_offset(b);
        if dx * dx + dy * dy + dz * dz <= 2 && mask & (1 << b) == 0 {
            n18_empty |= 1 << b;
        }
    }
    let face_bits: u32 = [
        offset_bit(1, 0, 0),
        offset_bit(-1, 0, 0),
        offset_bit(0, 1, 0),
        offset_bit(0, -1, 0),
        offset_bit(0, 0, 1),
        offset_bit(0, 0, -1),
    ]
    .iter()
    .fold(0, |m, &b| m | (1 << b));

    let mut remaining = n18_empty;
    let mut count = 0;
    while remaining != 0 {
        let seed = remaining.trailing_zeros();
        let mut comp = 1u32 << seed;
        remaining &= !comp;
        loop {
            let mut grown = comp;
            let mut rest = remaining;
            while rest != 0 {
                let b = rest.trailing_zeros();
                rest &= !(1 << b);
                let (bx, by, bz) = bit_offset(b);
                let mut adjacent = false;
                let mut cm = comp;
                while cm != 0 {
                    let c = cm.trailing_zeros();
                    cm &= !(1 << c);
                    let (cx, cy, cz) = bit_offset(c);
                    if (bx - cx).abs() + (by - cy).abs() + (bz - cz).abs() == 1 {
                        adjacent = true;
                        break;
                    }
                }
                if adjacent {
                    grown |= 1 << b;
                }
            }
            if grown == comp {
                break;
            }
            remaining &= !grown;
            comp = grown;
        }
        if comp & face_bits != 0 {
            count += 1;
        }
    }
    count
}

/// Simple-point test on a neighborhood mask (center must be set): removal of
/// the center preserves topology iff there is exactly one 26-component of
/// occupied neighbors and exactly one 6-component of empty 18-neighbors
/// touching the center.
pub fn simple_mask(mask: u32) -> bool {
    debug_assert!(mask & (1 << CENTER_BIT) != 0);
    components_26(mask) == 1 && background_components_6(mask) == 1
}

pub fn is_simple(grid: &VoxelGrid, x: usize, y: usize, z: usize) -> Result<bool> {
    if !grid.get(x, y, z) {
        return Err(Error::Precondition(format!(
            "voxel ({x},{y},{z}) is not occupied"
        )));
    }
    Ok(simple_mask(neighborhood_mask(grid, x, y, z)))
}

/// The 9 planar cross-sections through the center of a 3x3x3 neighborhood:
/// 3 axis planes and 6 diagonal planes, each holding 8 non-center offsets.
fn cross_section_planes() -> [u32; 9] {
    let mut planes = [0u32; 9];
    let conds: [fn(i32, i32, i32) -> bool; 9] = [
        |dx, _, _| dx == 0,
        |_, dy, _| dy == 0,
        |_, _, dz| dz == 0,
        |dx, dy, _| dx == dy,
        |dx, dy, _| dx == -dy,
        |dx, _, dz| dx == dz,
        |dx, _, dz| dx == -dz,
        |_, dy, dz| dy == dz,
        |_, dy, dz| dy == -dz,
    ];
    for (p, cond) in planes.iter_mut().zip(conds) {
        for b in 0..27u32 {
            if b == CENTER_BIT {
                continue;
            }
            let (dx, dy, dz) = bit_offset(b);
            if cond(dx, dy, dz) {
                *p |= 1 << b;
            }
        }
    }
    planes
}

/// Endpoint test on a mask: a curve end (exactly one 26-neighbor) or a
/// surface rim/corner voxel, detected as an open curve terminating at the
/// center in one of the 9 planar cross-sections.
/// A voxel counts as an endpoint when its local structure is thin: it has at
/// most one occupied neighbor (curve tip), or every occupied neighbor lies
/// within a single cross-section plane (rim or interior of a one-voxel-thick
/// sheet). Voxels on the surface of a solid region never qualify, so erosion
/// cannot freeze bumps on thick bodies.
pub fn endpoint_mask(mask: u32) -> bool {
    let occ = mask & !(1 << CENTER_BIT);
    if occ.count_ones() <= 1 {
        return true;
    }
    for plane in cross_section_planes() {
        if occ & !plane == 0 {
            return true;
        }
    }
    false
}

pub fn is_endpoint(grid: &VoxelGrid, x: usize, y: usize, z: usize) -> Result<bool> {
    if !grid.get(x, y, z) {
        return Err(Error::Precondition(format!(
            "voxel ({x},{y},{z}) is not occupied"
        )));
    }
    Ok(endpoint_mask(neighborhood_mask(grid, x, y, z)))
}

/// Number of 26-connected components of the occupied set.
pub fn component_count_26(grid: &VoxelGrid) -> usize {
    let mut visited = vec![false; grid.len()];
    let mut count = 0;
    let mut stack = Vec::new();
    for idx in grid.occupied_indices() {
        if visited[idx] {
            continue;
        }
        count += 1;
        visited[idx] = true;
        stack.push(idx);
        while let Some(cur) = stack.pop() {
            let [x, y, z] = grid.coords(cur);
            for dz in -1i64..=1 {
                for dy in -1i64..=1 {
                    for dx in -1i64..=1 {
                        if dx == 0 && dy == 0 && dz == 0 {
                            continue;
                        }
                        let (nx, ny, nz) = (x as i64 + dx, y as i64 + dy, z as i64 + dz);
                        if grid.get_i(nx, ny, nz) {
                            let ni = grid.index(nx as usize, ny as usize, nz as usize);
                            if !visited[ni] {
                                visited[ni] = true;
                                stack.push(ni);
                            }
                        }
                    }
                }
            }
        }
    }
    count
}

/// Euler characteristic of the cubical complex spanned by the occupied
/// voxels (union of closed unit cubes): V - E + F - C.
pub fn euler_characteristic(grid: &VoxelGrid) -> i64 {
    let [nx, ny, nz] = grid.dims;
    let occ = |x: i64, y: i64, z: i64| grid.get_i(x, y, z);
    let cubes = grid.occupied_count() as i64;
    let mut faces = 0i64;
    let mut edges = 0i64;
    let mut verts = 0i64;
    for z in 0..=nz as i64 {
        for y in 0..=ny as i64 {
            for x in 0..=nx as i64 {
                // Faces with min corner at lattice point (x,y,z).
                if y < ny as i64 && z < nz as i64 && (occ(x - 1, y, z) || occ(x, y, z)) {
                    faces += 1; // perpendicular to x
                }
                if x < nx as i64 && z < nz as i64 && (occ(x, y - 1, z) || occ(x, y, z)) {
                    faces += 1;
                }
                if x < nx as i64 && y < ny as i64 && (occ(x, y, z - 1) || occ(x, y, z)) {
                    faces += 1;
                }
                // Edges along each axis from (x,y,z).
                if x < nx as i64
                    && (occ(x, y - 1, z - 1) || occ(x, y, z - 1) || occ(x, y - 1, z) || occ(x, y, z))
                {
                    edges += 1;
                }
                if y < ny as i64
                    && (occ(x - 1, y, z - 1) || occ(x, y, z - 1) || occ(x - 1, y, z) || occ(x, y, z))
                {
                    edges += 1;
                }
                if z < nz as i64
                    && (occ(x - 1, y - 1, z) || occ(x, y - 1, z) || occ(x - 1, y, z) || occ(x, y, z))
                {
                    edges += 1;
                }
                // Lattice vertex.
                let mut any = false;
                'v: for dz in -1..=0i64 {
                    for dy in -1..=0i64 {
                        for dx in -1..=0i64 {
                            if occ(x + dx, y + dy, z + dz) {
                                any = true;
                                break 'v;
                            }
                        }
                    }
                }
                if any {
                    verts += 1;
                }
            }
        }
    }
    verts - edges + faces - cubes
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Point3;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn grid_from_mask(mask: u32) -> VoxelGrid {
        // 5x5x5 grid with the 3x3x3 mask centered, so every neighborhood
        // read stays in-bounds.
        let mut g = VoxelGrid::new([5, 5, 5], 1.0, Point3::origin());
        for b in 0..27u32 {
            if mask & (1 << b) != 0 {
                let (dx, dy, dz) = bit_offset(b);
                g.set((2 + dx) as usize, (2 + dy) as usize, (2 + dz) as usize, true);
            }
        }
        g
    }

    fn background_count_6_full(grid: &VoxelGrid) -> usize {
        // 6-connected components of the empty set over the whole grid.
        let mut visited = vec![false; grid.len()];
        let mut count = 0;
        let mut stack = Vec::new();
        for idx in 0..grid.len() {
            if visited[idx] || grid.get_linear(idx) {
                continue;
            }
            count += 1;
            visited[idx] = true;
            stack.push(idx);
            while let Some(cur) = stack.pop() {
                let [x, y, z] = grid.coords(cur);
                for (dx, dy, dz) in [
                    (1i64, 0i64, 0i64),
                    (-1, 0, 0),
                    (0, 1, 0),
                    (0, -1, 0),
                    (0, 0, 1),
                    (0, 0, -1),
                ] {
                    let (nx, ny, nz) = (x as i64 + dx, y as i64 + dy, z as i64 + dz);
                    if nx < 0 || ny < 0 || nz < 0 || nx >= 5 || ny >= 5 || nz >= 5 {
                        continue;
                    }
                    if !grid.get_i(nx, ny, nz) {
                        let ni = grid.index(nx as usize, ny as usize, nz as usize);
                        if !visited[ni] {
                            visited[ni] = true;
                            stack.push(ni);
                        }
                    }
                }
            }
        }
        count
    }

    /// Brute-force simplicity oracle: removing the center must keep the
    /// object component count, the background component count, and the
    /// Euler characteristic of the local configuration unchanged.
    fn simple_oracle(mask: u32) -> bool {
        let before = grid_from_mask(mask);
        let after = grid_from_mask(mask & !(1 << CENTER_BIT));
        component_count_26(&before) == component_count_26(&after)
            && background_count_6_full(&before) == background_count_6_full(&after)
            && euler_characteristic(&before) == euler_characteristic(&after)
    }

    #[test]
    fn simple_matches_brute_force_on_random_configs() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..20000 {
            let mask: u32 = (rng.gen::<u32>() & ((1 << 27) - 1)) | (1 << CENTER_BIT);
            assert_eq!(
                simple_mask(mask),
                simple_oracle(mask),
                "disagreement on mask {mask:#029b}"
            );
        }
    }

    #[test]
    fn segment_end_is_simple_middle_is_not() {
        let mut g = VoxelGrid::new([7, 5, 5], 1.0, Point3::origin());
        for x in 1..6 {
            g.set(x, 2, 2, true);
        }
        assert!(is_simple(&g, 5, 2, 2).unwrap());
        assert!(is_simple(&g, 1, 2, 2).unwrap());
        assert!(!is_simple(&g, 3, 2, 2).unwrap());
    }

    #[test]
    fn tunnel_opening_voxel_is_not_simple() {
        // A 3x3 ring in the xy plane: removing any ring voxel would break
        // the loop; the oracle confirms via Euler characteristic.
        let mut g = VoxelGrid::new([5, 5, 5], 1.0, Point3::origin());
        for (x, y) in [(1, 1), (2, 1), (3, 1), (3, 2), (3, 3), (2, 3), (1, 3), (1, 2)] {
            g.set(x, y, 2, true);
        }
        let mask = neighborhood_mask(&g, 2, 1, 2) | (1 << CENTER_BIT);
        assert!(!simple_mask(mask));
        assert_eq!(simple_mask(mask), simple_oracle(mask));
    }

    #[test]
    fn unoccupied_voxel_is_precondition_error() {
        let mut g = VoxelGrid::new([3, 3, 3], 1.0, Point3::origin());
        g.set(1, 1, 1, true);
        assert!(is_simple(&g, 0, 0, 0).is_err());
        assert!(is_endpoint(&g, 0, 0, 0).is_err());
    }

    #[test]
    fn endpoint_classification() {
        // Tip of a digital line.
        let mut line = VoxelGrid::new([7, 5, 5], 1.0, Point3::origin());
        for x in 1..6 {
            line.set(x, 2, 2, true);
        }
        assert!(is_endpoint(&line, 1, 2, 2).unwrap());
        // Mid-line voxels are locally thin (all neighbors collinear).
        assert!(is_endpoint(&line, 3, 2, 2).unwrap());

        // 1-voxel-thick plate: every voxel is locally thin.
        let mut plate = VoxelGrid::new([9, 9, 5], 1.0, Point3::origin());
        for y in 1..8 {
            for x in 1..8 {
                plate.set(x, y, 2, true);
            }
        }
        assert!(is_endpoint(&plate, 4, 4, 2).unwrap());
        assert!(is_endpoint(&plate, 1, 4, 2).unwrap());
        assert!(is_endpoint(&plate, 1, 1, 2).unwrap());

        // Voxels on the surface of a solid block are not thin: bumps on
        // thick bodies must stay erodable.
        let mut block = VoxelGrid::new([8, 8, 8], 1.0, Point3::origin());
        for z in 1..7 {
            for y in 1..7 {
                for x in 1..7 {
                    block.set(x, y, z, true);
                }
            }
        }
        assert!(!is_endpoint(&block, 3, 3, 1).unwrap());
        assert!(!is_endpoint(&block, 1, 1, 1).unwrap());
        // An isolated bump on the block surface is still backed by solid.
        block.set(3, 3, 0, true);
        assert!(!is_endpoint(&block, 3, 3, 0).unwrap());
    }

    #[test]
    fn euler_characteristic_known_shapes() {
        // Solid block: contractible.
        let mut block = VoxelGrid::new([6, 6, 6], 1.0, Point3::origin());
        for z in 1..5 {
            for y in 1..5 {
                for x in 1..5 {
                    block.set(x, y, z, true);
                }
            }
        }
        assert_eq!(euler_characteristic(&block), 1);

        // Square ring: solid torus, chi = 0.
        let mut ring = VoxelGrid::new([7, 7, 4], 1.0, Point3::origin());
        for y in 1..6 {
            for x in 1..6 {
                if !(2..5).contains(&x) || !(2..5).contains(&y) {
                    ring.set(x, y, 1, true);
                }
            }
        }
        assert_eq!(euler_characteristic(&ring), 0);
        assert_eq!(component_count_26(&ring), 1);
    }
}
