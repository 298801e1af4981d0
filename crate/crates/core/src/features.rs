//! Per-point geometry-similarity features: each point is described by its
//! own coordinates plus the mean and standard deviation of the positions of
//! its nearest neighbors in spectral-coordinate space. Because spectrally
//! close points can be spatially distant (e.g. opposite walls of a tube
//! coupled through shared medial spheres), the neighbor statistics encode
//! medial structure that plain positional k-NN statistics miss.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::Point3;
use rayon::prelude::*;

use crate::spectral::SpectralEmbedding;
use crate::{Error, Result};

/// Per-point feature rows `(x, y, z, mu_x, mu_y, mu_z, sigma_x, sigma_y,
/// sigma_z)`: the point, then the componentwise mean and population standard
/// deviation of its spectral-space nearest neighbors' positions.
#[derive(Debug, Clone, PartialEq)]
pub struct GscFeatures {
    pub n: usize,
    /// Row-major `n x 9`.
    pub data: Vec<f64>,
}

pub const GSC_DIM: usize = 9;

impl GscFeatures {
    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * GSC_DIM..(i + 1) * GSC_DIM]
    }
}

/// Compute the 9-dimensional feature rows for a point cloud whose rows align
/// with the spectral embedding. For each point, the `k` nearest other points
/// in spectral-coordinate space (ties broken toward the lower index) supply
/// the neighbor position statistics.
pub fn gsc(points: &[Point3<f64>], emb: &SpectralEmbedding, k: usize) -> Result<GscFeatures> {
    let n = points.len();
    if n == 0 {
        return Err(Error::EmptyInput("no points for feature computation".into()));
    }
    if emb.n != n {
        return Err(Error::ShapeMismatch(format!(
            "embedding has {} rows but the cloud has {n} points",
            emb.n
        )));
    }
    if k < 1 || k >= n {
        return Err(Error::Domain(format!(
            "neighbor count k = {k} must satisfy 1 <= k < n = {n}"
        )));
    }
    let dim = emb.k;
    let data: Vec<f64> = (0..n)
        .into_par_iter()
        .flat_map_iter(|i| {
            let pi = emb.phi(i);
            // Bounded selection of the k nearest by (distance, index).
            let mut best: Vec<(f64, usize)> = Vec::with_capacity(k + 1);
            for j in 0..n {
                if j == i {
                    continue;
                }
                let pj = emb.phi(j);
                let mut d2 = 0.0;
                for c in 0..dim {
                    let t = pi[c] - pj[c];
                    d2 += t * t;
                }
                let cand = (d2, j);
                // Insert keeping ascending (d2, index) order.
                let pos = best.partition_point(|a| *a < cand);
                if pos < k {
                    best.insert(pos, cand);
                    best.truncate(k);
                }
            }
            let mut mu = [0.0f64; 3];
            for &(_, j) in &best {
                mu[0] += points[j].x;
                mu[1] += points[j].y;
                mu[2] += points[j].z;
            }
            for m in &mut mu {
                *m /= k as f64;
            }
            let mut var = [0.0f64; 3];
            for &(_, j) in &best {
                var[0] += (points[j].x - mu[0]).powi(2);
                var[1] += (points[j].y - mu[1]).powi(2);
                var[2] += (points[j].z - mu[2]).powi(2);
            }
            let p = points[i];
            [
                p.x,
                p.y,
                p.z,
                mu[0],
                mu[1],
                mu[2],
                (var[0] / k as f64).sqrt(),
                (var[1] / k as f64).sqrt(),
                (var[2] / k as f64).sqrt(),
            ]
            .into_iter()
        })
        .collect();
    Ok(GscFeatures { n, data })
}

const COLUMN_NAMES: [&str; GSC_DIM] =
    ["x", "y", "z", "mu_x", "mu_y", "mu_z", "sigma_x", "sigma_y", "sigma_z"];

/// Write the feature table as ASCII with a header row; an optional class id
/// adds a trailing integer `label` column on every row.
pub fn export_features(f: &GscFeatures, label: Option<u32>, path: &Path) -> Result<()> {
    let mut out = String::new();
    out.push_str(&COLUMN_NAMES.join(" "));
    if label.is_some() {
        out.push_str(" label");
    }
    out.push('\n');
    for i in 0..f.n {
        let row = f.row(i);
        for (c, v) in row.iter().enumerate() {
            if c > 0 {
                out.push(' ');
            }
            let _ = write!(out, "{v:.8e}");
        }
        if let Some(l) = label {
            let _ = write!(out, " {l}");
        }
        out.push('\n');
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Read back a feature table written by [`export_features`]; returns the
/// rows and the per-file class id when a label column is present.
pub fn load_features(path: &Path) -> Result<(GscFeatures, Option<u32>)> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or_else(|| Error::Parse {
        line: 1,
        msg: "missing header row".into(),
    })?;
    let cols: Vec<&str> = header.split_whitespace().collect();
    let labeled = match cols.len() {
        GSC_DIM => false,
        n if n == GSC_DIM + 1 && cols[GSC_DIM] == "label" => true,
        _ => {
            return Err(Error::Parse {
                line: 1,
                msg: format!("expected {GSC_DIM} or {} columns", GSC_DIM + 1),
            })
        }
    };
    let mut data = Vec::new();
    let mut label = None;
    for (idx, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        let want = GSC_DIM + usize::from(labeled);
        if fields.len() != want {
            return Err(Error::Parse {
                line: idx + 1,
                msg: format!("expected {want} fields, found {}", fields.len()),
            });
        }
        for f in &fields[..GSC_DIM] {
            data.push(f.parse::<f64>().map_err(|e| Error::Parse {
                line: idx + 1,
                msg: format!("bad number {f:?}: {e}"),
            })?);
        }
        if labeled {
            let l = fields[GSC_DIM].parse::<u32>().map_err(|e| Error::Parse {
                line: idx + 1,
                msg: format!("bad label {:?}: {e}", fields[GSC_DIM]),
            })?;
            if let Some(prev) = label {
                if prev != l {
                    return Err(Error::Parse {
                        line: idx + 1,
                        msg: format!("label column changed from {prev} to {l}"),
                    });
                }
            }
            label = Some(l);
        }
    }
    if data.is_empty() {
        return Err(Error::EmptyInput(format!("{} has no feature rows", path.display())));
    }
    let n = data.len() / GSC_DIM;
    Ok((GscFeatures { n, data }, label))
}

/// Write one ASCII point per line (`x y z`).
pub fn save_points(points: &[Point3<f64>], path: &Path) -> Result<()> {
    let mut out = String::new();
    for p in points {
        let _ = writeln!(out, "{:.12e} {:.12e} {:.12e}", p.x, p.y, p.z);
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Read a cloud saved by [`save_points`].
pub fn load_points(path: &Path) -> Result<Vec<Point3<f64>>> {
    let text = std::fs::read_to_string(path)?;
    let mut points = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(Error::Parse {
                line: idx + 1,
                msg: format!("expected 3 coordinates, found {}", fields.len()),
            });
        }
        let mut v = [0.0; 3];
        for (c, f) in fields.iter().enumerate() {
            v[c] = f.parse::<f64>().map_err(|e| Error::Parse {
                line: idx + 1,
                msg: format!("bad number {f:?}: {e}"),
            })?;
        }
        points.push(Point3::new(v[0], v[1], v[2]));
    }
    if points.is_empty() {
        return Err(Error::EmptyInput(format!("{} has no points", path.display())));
    }
    Ok(points)
}
