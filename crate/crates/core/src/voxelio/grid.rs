use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use nalgebra::Point3;

use crate::error::{Error, Result};

/// Dense 3D binary occupancy lattice with physical spacing.
///
/// `spacing` is the voxel edge length in object units; `origin` is the
/// position of the center of voxel (0,0,0).
#[derive(Debug, Clone, PartialEq)]
pub struct VoxelGrid {
    pub dims: [usize; 3],
    pub spacing: f64,
    pub origin: Point3<f64>,
    occupancy: Vec<bool>,
}

impl VoxelGrid {
    pub fn new(dims: [usize; 3], spacing: f64, origin: Point3<f64>) -> Self {
        assert!(spacing > 0.0, "spacing must be positive");
        assert!(dims.iter().all(|&d| d > 0), "dims must be positive");
        VoxelGrid {
            dims,
            spacing,
            origin,
            occupancy: vec![false; dims[0] * dims[1] * dims[2]],
        }
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.occupancy.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.occupancy.iter().all(|&o| !o)
    }

    #[inline]
    pub fn index(&self, x: usize, y: usize, z: usize) -> usize {
        debug_assert!(x < self.dims[0] && y < self.dims[1] && z < self.dims[2]);
        (z * self.dims[1] + y) * self.dims[0] + x
    }

    #[inline]
    pub fn coords(&self, idx: usize) -> [usize; 3] {
        let x = idx % self.dims[0];
        let y = (idx / self.dims[0]) % self.dims[1];
        let z = idx / (self.dims[0] * self.dims[1]);
        [x, y, z]
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, z: usize) -> bool {
        self.occupancy[self.index(x, y, z)]
    }

    /// Out-of-bounds coordinates read as empty.
    #[inline]
    pub fn get_i(&self, x: i64, y: i64, z: i64) -> bool {
        if x < 0
            || y < 0
            || z < 0
            || x >= self.dims[0] as i64
            || y >= self.dims[1] as i64
            || z >= self.dims[2] as i64
        {
            return false;
        }
        self.get(x as usize, y as usize, z as usize)
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, z: usize, v: bool) {
        let i = self.index(x, y, z);
        self.occupancy[i] = v;
    }

    #[inline]
    pub fn get_linear(&self, idx: usize) -> bool {
        self.occupancy[idx]
    }

    #[inline]
    pub fn set_linear(&mut self, idx: usize, v: bool) {
        self.occupancy[idx] = v;
    }

    pub fn occupied_count(&self) -> usize {
        self.occupancy.iter().filter(|&&o| o).count()
    }

    pub fn occupied_indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.occupancy
            .iter()
            .enumerate()
            .filter_map(|(i, &o)| o.then_some(i))
    }

    /// Center of voxel (x,y,z) in object units.
    #[inline]
    pub fn voxel_center(&self, x: usize, y: usize, z: usize) -> Point3<f64> {
        Point3::new(
            self.origin.x + x as f64 * self.spacing,
            self.origin.y + y as f64 * self.spacing,
            self.origin.z + z as f64 * self.spacing,
        )
    }

    pub fn same_geometry(&self, other: &VoxelGrid) -> bool {
        self.dims == other.dims
            && self.spacing == other.spacing
            && (self.origin - other.origin).norm() < 1e-12 * self.spacing
    }

    /// In-place union of two grids with identical geometry.
    pub fn union_with(&mut self, other: &VoxelGrid) -> Result<()> {
        if !self.same_geometry(other) {
            return Err(Error::ShapeMismatch("grid geometry differs in union".into()));
        }
        for (a, b) in self.occupancy.iter_mut().zip(&other.occupancy) {
            *a = *a || *b;
        }
        Ok(())
    }

    /// Textual persistence: `dims / spacing / origin / run-length-encoded occupancy`.
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(std::fs::File::create(path)?);
        writeln!(w, "voxelgrid")?;
        writeln!(w, "dims {} {} {}", self.dims[0], self.dims[1], self.dims[2])?;
        writeln!(w, "spacing {:.12e}", self.spacing)?;
        writeln!(
            w,
            "origin {:.12e} {:.12e} {:.12e}",
            self.origin.x, self.origin.y, self.origin.z
        )?;
        // RLE over the linear scan: alternating run lengths, starting with empty.
        write!(w, "rle")?;
        let mut current = false;
        let mut run = 0usize;
        for &o in &self.occupancy {
            if o == current {
                run += 1;
            } else {
                write!(w, " {run}")?;
                current = o;
                run = 1;
            }
        }
        write!(w, " {run}")?;
        writeln!(w)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<VoxelGrid> {
        let r = BufReader::new(std::fs::File::open(path)?);
        let mut lines = r.lines().enumerate();
        let mut next_line = || -> Result<(usize, String)> {
            lines
                .next()
                .ok_or_else(|| Error::Parse {
                    line: 0,
                    msg: "unexpected end of grid file".into(),
                })
                .and_then(|(n, l)| Ok((n + 1, l?)))
        };
        let (ln, magic) = next_line()?;
        if magic.trim() != "voxelgrid" {
            return Err(Error::Parse {
                line: ln,
                msg: "expected `voxelgrid` header".into(),
            });
        }
        let parse_fields = |line: usize, s: &str, key: &str| -> Result<Vec<f64>> {
            let mut it = s.split_whitespace();
            if it.next() != Some(key) {
                return Err(Error::Parse {
                    line,
                    msg: format!("expected `{key}` record"),
                });
            }
            it.map(|t| {
                t.parse::<f64>().map_err(|e| Error::Parse {
                    line,
                    msg: format!("bad number `{t}`: {e}"),
                })
            })
            .collect()
        };
        let (ln, s) = next_line()?;
        let d = parse_fields(ln, &s, "dims")?;
        if d.len() != 3 {
            return Err(Error::Parse {
                line: ln,
                msg: "dims needs 3 values".into(),
            });
        }
        let dims = [d[0] as usize, d[1] as usize, d[2] as usize];
        let (ln, s) = next_line()?;
        let sp = parse_fields(ln, &s, "spacing")?;
        let (ln, s) = next_line()?;
        let og = parse_fields(ln, &s, "origin")?;
        if sp.len() != 1 || og.len() != 3 {
            return Err(Error::Parse {
                line: ln,
                msg: "malformed spacing/origin".into(),
            });
        }
        let mut grid = VoxelGrid::new(dims, sp[0], Point3::new(og[0], og[1], og[2]));
        let (ln, s) = next_line()?;
        let mut it = s.split_whitespace();
        if it.next() != Some("rle") {
            return Err(Error::Parse {
                line: ln,
                msg: "expected `rle` record".into(),
            });
        }
        let mut pos = 0usize;
        let mut current = false;
        for tok in it {
            let run: usize = tok.parse().map_err(|e| Error::Parse {
                line: ln,
                msg: format!("bad run length `{tok}`: {e}"),
            })?;
            if pos + run > grid.occupancy.len() {
                return Err(Error::Parse {
                    line: ln,
                    msg: "RLE overruns grid size".into(),
                });
            }
            if current {
                for i in pos..pos + run {
                    grid.occupancy[i] = true;
                }
            }
            pos += run;
            current = !current;
        }
        if pos != grid.occupancy.len() {
            return Err(Error::Parse {
                line: ln,
                msg: format!("RLE covers {pos} of {} voxels", grid.occupancy.len()),
            });
        }
        Ok(grid)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rle_roundtrip() {
        let mut g = VoxelGrid::new([4, 3, 2], 0.5, Point3::new(-1.0, 0.0, 2.0));
        for i in [0usize, 1, 5, 6, 7, 23] {
            g.set_linear(i, true);
        }
        let dir = std::env::temp_dir().join("ms_grid_rt.txt");
        g.save(&dir).unwrap();
        let h = VoxelGrid::load(&dir).unwrap();
        assert_eq!(g, h);
    }

    #[test]
    fn indexing_roundtrip() {
        let g = VoxelGrid::new([5, 7, 3], 1.0, Point3::origin());
        for idx in 0..g.len() {
            let [x, y, z] = g.coords(idx);
            assert_eq!(g.index(x, y, z), idx);
        }
    }
}
