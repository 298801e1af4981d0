use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use nalgebra::Point3;

use crate::error::{Error, Result};
use crate::medial::topology::{endpoint_mask, neighborhood_mask, simple_mask};
use crate::medial::{AofField, DistanceField};
use crate::voxelio::VoxelGrid;

/// One medial voxel: lattice position, inscribed-sphere radius in object
/// units, and the AOF value at the voxel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SkeletalPoint {
    pub x: usize,
    pub y: usize,
    pub z: usize,
    pub r: f64,
    pub lambda: f64,
}

/// The medial surface as a set of skeletal points, carrying the source grid
/// geometry so spheres can be placed back in object space.
#[derive(Debug, Clone)]
pub struct SkeletalPointSet {
    pub points: Vec<SkeletalPoint>,
    pub dims: [usize; 3],
    pub spacing: f64,
    pub origin: Point3<f64>,
}

impl SkeletalPointSet {
    pub fn center(&self, i: usize) -> Point3<f64> {
        let p = &self.points[i];
        Point3::new(
            self.origin.x + p.x as f64 * self.spacing,
            self.origin.y + p.y as f64 * self.spacing,
            self.origin.z + p.z as f64 * self.spacing,
        )
    }

    /// Occupancy grid of the skeletal voxels, same geometry as the source.
    pub fn to_grid(&self) -> VoxelGrid {
        let mut g = VoxelGrid::new(self.dims, self.spacing, self.origin);
        for p in &self.points {
            g.set(p.x, p.y, p.z, true);
        }
        g
    }

    /// 5-column ASCII table `x y z r lambda` with a geometry header.
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(std::fs::File::create(path)?);
        writeln!(w, "skeleton")?;
        writeln!(w, "dims {} {} {}", self.dims[0], self.dims[1], self.dims[2])?;
        writeln!(w, "spacing {:.12e}", self.spacing)?;
        writeln!(
            w,
            "origin {:.12e} {:.12e} {:.12e}",
            self.origin.x, self.origin.y, self.origin.z
        )?;
        writeln!(w, "points {}", self.points.len())?;
        for p in &self.points {
            writeln!(w, "{} {} {} {:.12e} {:.12e}", p.x, p.y, p.z, p.r, p.lambda)?;
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<SkeletalPointSet> {
        let r = BufReader::new(std::fs::File::open(path)?);
        let mut lines = r.lines().enumerate();
        let mut next = || -> Result<(usize, String)> {
            lines
                .next()
                .ok_or_else(|| Error::Parse {
                    line: 0,
                    msg: "unexpected end of skeleton file".into(),
                })
                .and_then(|(n, l)| Ok((n + 1, l?)))
        };
        let (ln, magic) = next()?;
        if magic.trim() != "skeleton" {
            return Err(Error::Parse {
                line: ln,
                msg: "expected `skeleton` header".into(),
            });
        }
        let grab = |line: usize, s: &str, key: &str| -> Result<Vec<f64>> {
            let mut it = s.split_whitespace();
            if it.next() != Some(key) {
                return Err(Error::Parse {
                    line,
                    msg: format!("expected `{key}` record"),
                });
            }
            it.map(|t| {
                t.parse().map_err(|e| Error::Parse {
                    line,
                    msg: format!("bad number `{t}`: {e}"),
                })
            })
            .collect()
        };
        let (ln, s) = next()?;
        let d = grab(ln, &s, "dims")?;
        let (ln, s) = next()?;
        let sp = grab(ln, &s, "spacing")?;
        let (ln, s) = next()?;
        let og = grab(ln, &s, "origin")?;
        let (ln, s) = next()?;
        let np = grab(ln, &s, "points")?;
        if d.len() != 3 || sp.len() != 1 || og.len() != 3 || np.len() != 1 {
            return Err(Error::Parse {
                line: ln,
                msg: "malformed skeleton header".into(),
            });
        }
        let mut points = Vec::with_capacity(np[0] as usize);
        for _ in 0..np[0] as usize {
            let (ln, s) = next()?;
            let t: Vec<&str> = s.split_whitespace().collect();
            if t.len() != 5 {
                return Err(Error::Parse {
                    line: ln,
                    msg: "skeletal point row needs 5 columns".into(),
                });
            }
            let num = |tok: &str| -> Result<f64> {
                tok.parse().map_err(|e| Error::Parse {
                    line: ln,
                    msg: format!("bad number `{tok}`: {e}"),
                })
            };
            points.push(SkeletalPoint {
                x: num(t[0])? as usize,
                y: num(t[1])? as usize,
                z: num(t[2])? as usize,
                r: num(t[3])?,
                lambda: num(t[4])?,
            });
        }
        Ok(SkeletalPointSet {
            points,
            dims: [d[0] as usize, d[1] as usize, d[2] as usize],
            spacing: sp[0],
            origin: Point3::new(og[0], og[1], og[2]),
        })
    }
}

/// Heap entry ordered so the least medial voxel (largest AOF) pops first;
/// ties prefer smaller distance, then smaller linear index.
#[derive(PartialEq)]
struct HeapEntry {
    aof: f64,
    d: f64,
    idx: usize,
}

impl Eq for HeapEntry {}

impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        self.aof
            .partial_cmp(&other.aof)
            .unwrap()
            .then_with(|| other.d.partial_cmp(&self.d).unwrap())
            .then_with(|| other.idx.cmp(&self.idx))
    }
}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// AOF topology-preserving thinning: iteratively erode simple voxels in
/// order of increasing medial strength, freezing endpoints whose medial
/// strength (-AOF) exceeds `tau`. The surviving voxel set is homotopic to
/// the input by construction.
pub fn thin(
    grid: &VoxelGrid,
    aof: &AofField,
    df: &DistanceField,
    tau: f64,
) -> Result<SkeletalPointSet> {
    if grid.occupied_count() == 0 {
        return Err(Error::EmptyInput("grid has no occupied voxel".into()));
    }
    let mut work = grid.clone();
    let n = work.len();
    let mut queued = vec![false; n];
    let mut frozen = vec![false; n];
    let mut heap: BinaryHeap<HeapEntry> = BinaryHeap::new();

    let push = |heap: &mut BinaryHeap<HeapEntry>, queued: &mut [bool], idx: usize, coords: [usize; 3]| {
        queued[idx] = true;
        heap.push(HeapEntry {
            aof: aof.get(coords[0], coords[1], coords[2]),
            d: df.d(coords[0], coords[1], coords[2]),
            idx,
        });
    };

    // Seed with simple voxels on the object boundary.
    for idx in grid.occupied_indices() {
        let [x, y, z] = grid.coords(idx);
        let on_boundary = [
            (1i64, 0i64, 0i64),
            (-1, 0, 0),
            (0, 1, 0),
            (0, -1, 0),
            (0, 0, 1),
            (0, 0, -1),
        ]
        .iter()
        .any(|&(dx, dy, dz)| !grid.get_i(x as i64 + dx, y as i64 + dy, z as i64 + dz));
        if on_boundary && simple_mask(neighborhood_mask(&work, x, y, z)) {
            push(&mut heap, &mut queued, idx, [x, y, z]);
        }
    }

    while let Some(entry) = heap.pop() {
        let idx = entry.idx;
        queued[idx] = false;
        if !work.get_linear(idx) || frozen[idx] {
            continue;
        }
        let [x, y, z] = work.coords(idx);
        let mask = neighborhood_mask(&work, x, y, z);
        if !simple_mask(mask) {
            continue;
        }
        let medial_strength = -entry.aof;
        if endpoint_mask(mask) && medial_strength > tau {
            frozen[idx] = true;
            continue;
        }
        work.set_linear(idx, false);
        for dz in -1i64..=1 {
            for dy in -1i64..=1 {
                for dx in -1i64..=1 {
                    if dx == 0 && dy == 0 && dz == 0 {
                        continue;
                    }
                    let (nx, ny, nz) = (x as i64 + dx, y as i64 + dy, z as i64 + dz);
                    if !work.get_i(nx, ny, nz) {
                        continue;
                    }
                    let (nx, ny, nz) = (nx as usize, ny as usize, nz as usize);
                    let ni = work.index(nx, ny, nz);
                    if frozen[ni] || queued[ni] {
                        continue;
                    }
                    if simple_mask(neighborhood_mask(&work, nx, ny, nz)) {
                        push(&mut heap, &mut queued, ni, [nx, ny, nz]);
                    }
                }
            }
        }
    }

    let mut points = Vec::new();
    for idx in work.occupied_indices() {
        let [x, y, z] = work.coords(idx);
        points.push(SkeletalPoint {
            x,
            y,
            z,
            r: df.d(x, y, z),
            lambda: aof.get(x, y, z),
        });
    }
    Ok(SkeletalPointSet {
        points,
        dims: grid.dims,
        spacing: grid.spacing,
        origin: grid.origin,
    })
}
