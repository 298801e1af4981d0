//! Unsupervised part segmentation: medially augmented per-vertex features,
//! subspace-randomized spectral clustering, and Rand-Index scoring.

use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::medial::SkeletalPointSet;
use crate::spectral::{BoundaryMedialMap, SpectralEmbedding};
use crate::voxelio::TriangleMesh;

/// Standardized per-vertex feature matrix (row-major); zero-variance
/// columns are dropped at assembly.
#[derive(Debug, Clone)]
pub struct FeatureMatrix {
    pub n: usize,
    pub d: usize,
    pub data: Vec<f64>,
    /// Names of the retained columns, in order.
    pub columns: Vec<String>,
    /// Pre-standardization mean and standard deviation per retained column.
    pub scale: Vec<(f64, f64)>,
}

impl FeatureMatrix {
    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.d..(i + 1) * self.d]
    }

    /// Assemble from raw columns, standardizing each and dropping columns
    /// with zero variance.
    pub fn from_columns(raw: Vec<(String, Vec<f64>)>) -> Result<FeatureMatrix> {
        let n = raw.first().map(|c| c.1.len()).unwrap_or(0);
        if n == 0 {
            return Err(Error::EmptyInput("no feature rows".into()));
        }
        let mut kept: Vec<(String, Vec<f64>, f64, f64)> = Vec::new();
        for (name, col) in raw {
            if col.len() != n {
                return Err(Error::ShapeMismatch(format!(
                    "column {name} has {} rows, expected {n}",
                    col.len()
                )));
            }
            if col.iter().any(|v| !v.is_finite()) {
                return Err(Error::Data(format!("non-finite value in column {name}")));
            }
            let mean = col.iter().sum::<f64>() / n as f64;
            let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
            let sd = var.sqrt();
            if sd <= 1e-12 * (1.0 + mean.abs()) {
                continue; // degenerate column carries no information
            }
            kept.push((name, col, mean, sd));
        }
        if kept.is_empty() {
            return Err(Error::Data("all feature columns are constant".into()));
        }
        let d = kept.len();
        let mut data = vec![0.0; n * d];
        for (c, (_, col, mean, sd)) in kept.iter().enumerate() {
            for i in 0..n {
                data[i * d + c] = (col[i] - mean) / sd;
            }
        }
        Ok(FeatureMatrix {
            n,
            d,
            data,
            columns: kept.iter().map(|k| k.0.clone()).collect(),
            scale: kept.iter().map(|k| (k.2, k.3)).collect(),
        })
    }

    /// Write the table as ASCII with a header of column names; values are
    /// destandardized back to their original scale.
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut out = String::new();
        out.push_str(&self.columns.join(" "));
        out.push('\n');
        for i in 0..self.n {
            for c in 0..self.d {
                if c > 0 {
                    out.push(' ');
                }
                let (mean, sd) = self.scale[c];
                let _ = std::fmt::Write::write_fmt(
                    &mut out,
                    format_args!("{:.12e}", self.data[i * self.d + c] * sd + mean),
                );
            }
            out.push('\n');
        }
        std::fs::write(path, out)?;
        Ok(())
    }

    /// Read a table written by [`FeatureMatrix::save`], re-standardizing the
    /// columns.
    pub fn load(path: &Path) -> Result<FeatureMatrix> {
        let text = std::fs::read_to_string(path)?;
        let mut lines = text.lines().enumerate();
        let (_, header) = lines.next().ok_or_else(|| Error::Parse {
            line: 1,
            msg: "missing header row".into(),
        })?;
        let names: Vec<String> = header.split_whitespace().map(str::to_string).collect();
        if names.is_empty() {
            return Err(Error::Parse { line: 1, msg: "empty header row".into() });
        }
        let mut cols: Vec<Vec<f64>> = vec![Vec::new(); names.len()];
        for (idx, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != names.len() {
                return Err(Error::Parse {
                    line: idx + 1,
                    msg: format!("expected {} fields, found {}", names.len(), fields.len()),
                });
            }
            for (c, f) in fields.iter().enumerate() {
                cols[c].push(f.parse::<f64>().map_err(|e| Error::Parse {
                    line: idx + 1,
                    msg: format!("bad number {f:?}: {e}"),
                })?);
            }
        }
        FeatureMatrix::from_columns(names.into_iter().zip(cols).collect())
    }
}

/// Per-vertex part labels in 0..k_parts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SegmentLabels {
    pub labels: Vec<usize>,
}

impl SegmentLabels {
    /// One integer per line, index-aligned with the vertices.
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(std::fs::File::create(path)?);
        for l in &self.labels {
            writeln!(w, "{l}")?;
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<SegmentLabels> {
        let r = BufReader::new(std::fs::File::open(path)?);
        let mut labels = Vec::new();
        for (ln, line) in r.lines().enumerate() {
            let line = line?;
            let t = line.trim();
            if t.is_empty() {
                continue;
            }
            labels.push(t.parse().map_err(|e| Error::Parse {
                line: ln + 1,
                msg: format!("bad label: {e}"),
            })?);
        }
        Ok(SegmentLabels { labels })
    }
}

/// Per-vertex features [x, y, z, r] plus the spectral coordinates, each
/// spectral column optionally weighted by 1/sqrt(lambda) to emphasize the
/// smooth global modes. Columns are standardized; constant columns dropped.
pub fn augment_features(
    mesh: &TriangleMesh,
    map: &BoundaryMedialMap,
    skel: &SkeletalPointSet,
    emb: Option<&SpectralEmbedding>,
    eigen_weighting: bool,
) -> Result<FeatureMatrix> {
    let n = mesh.vertices.len();
    if map.skel_index.len() != n {
        return Err(Error::ShapeMismatch(format!(
            "map covers {} vertices, mesh has {n}",
            map.skel_index.len()
        )));
    }
    if let Some(e) = emb {
        if e.n != n {
            return Err(Error::ShapeMismatch(format!(
                "embedding has {} rows, mesh has {n} vertices",
                e.n
            )));
        }
    }
    let mut raw: Vec<(String, Vec<f64>)> = Vec::new();
    for (name, get) in [
        ("x", 0usize),
        ("y", 1),
        ("z", 2),
    ] {
        raw.push((
            name.to_string(),
            mesh.vertices.iter().map(|p| p[get]).collect(),
        ));
    }
    raw.push((
        "r".to_string(),
        map.skel_index.iter().map(|&s| skel.points[s].r).collect(),
    ));
    if let Some(e) = emb {
        for i in 0..e.k {
            raw.push((
                format!("phi{}", i + 1),
                (0..n).map(|j| e.coords[j * e.k + i]).collect(),
            ));
        }
    }
    let mut f = FeatureMatrix::from_columns(raw)?;
    // Weight the standardized spectral columns by 1/sqrt(lambda), relative
    // to the smoothest retained mode, so low-frequency structure dominates
    // the feature distances. Applied after standardization; a pre-scaling
    // would be cancelled by it.
    if eigen_weighting {
        if let Some(e) = emb {
            let base = e.eigenvalues.first().copied().unwrap_or(1.0).max(1e-300);
            for i in 0..e.k {
                let name = format!("phi{}", i + 1);
                if let Some(c) = f.columns.iter().position(|n| *n == name) {
                    let w = (base / e.eigenvalues[i].max(1e-300)).sqrt();
                    for row in 0..f.n {
                        f.data[row * f.d + c] *= w;
                    }
                }
            }
        }
    }
    Ok(f)
}

const KNN: usize = 15;

/// Symmetric k-NN Gaussian similarity over a column subset; bandwidth is
/// the median neighbor distance.
fn subspace_similarity(f: &FeatureMatrix, cols: &[usize]) -> DMatrix<f64> {
    let n = f.n;
    let knn = KNN.min(n - 1);
    let dist2 = |a: usize, b: usize| -> f64 {
        cols.iter()
            .map(|&c| {
                let t = f.data[a * f.d + c] - f.data[b * f.d + c];
                t * t
            })
            .sum()
    };
    // k nearest per row.
    let neighbors: Vec<Vec<(usize, f64)>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut all: Vec<(usize, f64)> = (0..n)
                .filter(|&j| j != i)
                .map(|j| (j, dist2(i, j)))
                .collect();
            all.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap().then(a.0.cmp(&b.0)));
            all.truncate(knn);
            all
        })
        .collect();
    // Per-point scale: median distance to the point's neighbors.
    let scales: Vec<f64> = neighbors
        .iter()
        .map(|r| {
            let mut ds: Vec<f64> = r.iter().map(|e| e.1.sqrt()).collect();
            ds.sort_by(|a, b| a.partial_cmp(b).unwrap());
            ds[ds.len() / 2].max(1e-12)
        })
        .collect();
    let mut s = DMatrix::zeros(n, n);
    for (i, row) in neighbors.iter().enumerate() {
        for &(j, d2) in row {
            let w = (-d2 / (2.0 * scales[i] * scales[j])).exp();
            if w > s[(i, j)] {
                s[(i, j)] = w;
                s[(j, i)] = w;
            }
        }
    }
    s
}

/// Seeded k-means++ with restarts: runs several initializations and keeps
/// the labeling with the lowest within-cluster sum of squares, which makes
/// the outcome stable across seeds.
fn kmeans(rows: &DMatrix<f64>, k: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    const RESTARTS: usize = 10;
    let mut best: Option<(f64, Vec<usize>)> = None;
    for _ in 0..RESTARTS {
        let labels = kmeans_once(rows, k, rng);
        let mut centers = vec![vec![0.0; rows.ncols()]; k];
        let mut counts = vec![0usize; k];
        for i in 0..rows.nrows() {
            counts[labels[i]] += 1;
            for c in 0..rows.ncols() {
                centers[labels[i]][c] += rows[(i, c)];
            }
        }
        for c in 0..k {
            for v in &mut centers[c] {
                *v /= counts[c].max(1) as f64;
            }
        }
        let sse: f64 = (0..rows.nrows())
            .map(|i| {
                (0..rows.ncols())
                    .map(|c| (rows[(i, c)] - centers[labels[i]][c]).powi(2))
                    .sum::<f64>()
            })
            .sum();
        if best.as_ref().map(|b| sse < b.0).unwrap_or(true) {
            best = Some((sse, labels));
        }
    }
    best.unwrap().1
}

fn kmeans_once(rows: &DMatrix<f64>, k: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let n = rows.nrows();
    let d = rows.ncols();
    let dist2 = |a: &[f64], b: &[f64]| -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
    };
    let row = |i: usize| -> Vec<f64> { (0..d).map(|c| rows[(i, c)]).collect() };
    // k-means++ seeding.
    let mut centers: Vec<Vec<f64>> = vec![row(rng.gen_range(0..n))];
    let mut best = vec![f64::INFINITY; n];
    while centers.len() < k {
        let last = centers.last().unwrap();
        let mut total = 0.0;
        for i in 0..n {
            let d2 = dist2(&row(i), last);
            if d2 < best[i] {
                best[i] = d2;
            }
            total += best[i];
        }
        let pick = if total > 0.0 {
            let mut target = rng.gen::<f64>() * total;
            let mut chosen = n - 1;
            for i in 0..n {
                target -= best[i];
                if target <= 0.0 {
                    chosen = i;
                    break;
                }
            }
            chosen
        } else {
            rng.gen_range(0..n)
        };
        centers.push(row(pick));
    }
    let mut labels = vec![0usize; n];
    for _ in 0..100 {
        let mut changed = false;
        for i in 0..n {
            let r = row(i);
            let mut bi = 0usize;
            let mut bd = f64::INFINITY;
            for (c, ctr) in centers.iter().enumerate() {
                let d2 = dist2(&r, ctr);
                if d2 < bd {
                    bd = d2;
                    bi = c;
                }
            }
            if labels[i] != bi {
                labels[i] = bi;
                changed = true;
            }
        }
        // Recompute centers; refill empty clusters with the farthest point.
        let mut sums = vec![vec![0.0; d]; k];
        let mut counts = vec![0usize; k];
        for i in 0..n {
            counts[labels[i]] += 1;
            for c in 0..d {
                sums[labels[i]][c] += rows[(i, c)];
            }
        }
        for c in 0..k {
            if counts[c] == 0 {
                let far = (0..n)
                    .max_by(|&a, &b| {
                        let da = dist2(&row(a), &centers[labels[a]]);
                        let db = dist2(&row(b), &centers[labels[b]]);
                        da.partial_cmp(&db).unwrap()
                    })
                    .unwrap();
                labels[far] = c;
                centers[c] = row(far);
                changed = true;
            } else {
                for j in 0..d {
                    centers[c][j] = sums[c][j] / counts[c] as f64;
                }
            }
        }
        if !changed {
            break;
        }
    }
    labels
}

/// Subspace-randomized spectral clustering: `subspaces` random column
/// subsets of size ceil(d/2) each build a k-NN Gaussian graph; the graphs
/// are averaged and the fused similarity is clustered with
/// normalized-Laplacian spectral embedding plus seeded k-means++.
pub fn cluster(
    features: &FeatureMatrix,
    k_parts: usize,
    subspaces: usize,
    seed: u64,
) -> Result<SegmentLabels> {
    let n = features.n;
    if k_parts < 2 {
        return Err(Error::Domain(format!("k_parts = {k_parts}, need at least 2")));
    }
    if k_parts > n {
        return Err(Error::Domain(format!(
            "k_parts = {k_parts} exceeds the {n} points"
        )));
    }
    if subspaces < 1 {
        return Err(Error::Domain("subspaces must be at least 1".into()));
    }
    let d = features.d;
    let take = d.div_ceil(2);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // The subspace ensemble is part of the estimator, not a stochastic
    // element: draws come from a fixed internal stream so the fused
    // similarity graph is identical across user seeds. The user seed only
    // drives the clustering initialization below.
    let mut subset_rng = ChaCha8Rng::seed_from_u64(0x5eed_5e75);
    // Deal columns from a reshuffling deck so every column appears equally
    // often across the ensemble.
    let mut deck: Vec<usize> = Vec::new();
    let subsets: Vec<Vec<usize>> = (0..subspaces)
        .map(|_| {
            let mut cols = Vec::with_capacity(take);
            while cols.len() < take {
                if deck.is_empty() {
                    deck = (0..d).collect();
                    deck.shuffle(&mut subset_rng);
                }
                let c = deck.pop().unwrap();
                if !cols.contains(&c) {
                    cols.push(c);
                }
            }
            cols.sort_unstable();
            cols
        })
        .collect();
    let sims: Vec<DMatrix<f64>> = subsets
        .par_iter()
        .map(|cols| subspace_similarity(features, cols))
        .collect();
    let mut fused = DMatrix::zeros(n, n);
    for s in &sims {
        fused += s;
    }
    fused /= subspaces as f64;

    // Normalized spectral embedding: k_parts smallest eigenvectors of
    // L_sym = I - D^{-1/2} S D^{-1/2}, rows renormalized.
    let deg: Vec<f64> = (0..n).map(|i| fused.row(i).sum().max(1e-12)).collect();
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            m[(i, j)] = fused[(i, j)] / (deg[i] * deg[j]).sqrt();
        }
    }
    let eig = m.symmetric_eigen();
    // Largest eigenvectors of D^{-1/2} S D^{-1/2} = smallest of L_sym.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].partial_cmp(&eig.eigenvalues[a]).unwrap());
    // When the fused graph is connected the top eigenvector is the trivial
    // D^{1/2} 1 and carries no partition information, so skip it. When the
    // top eigenvalue is (near-)degenerate the graph splits into groups and
    // the whole top block consists of component indicators, so keep it.
    let skip = if n > 1 {
        let top = eig.eigenvalues[order[0]];
        let second = eig.eigenvalues[order[1]];
        usize::from(top - second > 1e-9 * top.abs().max(1.0))
    } else {
        0
    };
    let mut rows = DMatrix::zeros(n, k_parts);
    for (c, &e) in order.iter().skip(skip).take(k_parts).enumerate() {
        let v = eig.eigenvectors.column(e);
        // Deterministic sign: largest-magnitude entry positive.
        let mut mi = 0usize;
        for i in 0..n {
            if v[i].abs() > v[mi].abs() {
                mi = i;
            }
        }
        let s = if v[mi] < 0.0 { -1.0 } else { 1.0 };
        for i in 0..n {
            rows[(i, c)] = s * v[i];
        }
    }
    for i in 0..n {
        let norm = rows.row(i).norm().max(1e-12);
        for c in 0..k_parts {
            rows[(i, c)] /= norm;
        }
    }
    let labels = kmeans(&rows, k_parts, &mut rng);
    Ok(SegmentLabels { labels })
}

/// 1 - RandIndex via the pair-count contingency formula.
pub fn rand_index_error(a: &SegmentLabels, b: &SegmentLabels) -> Result<f64> {
    let n = a.labels.len();
    if b.labels.len() != n {
        return Err(Error::ShapeMismatch(format!(
            "label vectors of length {n} and {}",
            b.labels.len()
        )));
    }
    if n < 2 {
        return Err(Error::Domain("need at least 2 points".into()));
    }
    use std::collections::HashMap;
    let mut cont: HashMap<(usize, usize), u64> = HashMap::new();
    let mut ra: HashMap<usize, u64> = HashMap::new();
    let mut rb: HashMap<usize, u64> = HashMap::new();
    for i in 0..n {
        *cont.entry((a.labels[i], b.labels[i])).or_default() += 1;
        *ra.entry(a.labels[i]).or_default() += 1;
        *rb.entry(b.labels[i]).or_default() += 1;
    }
    let c2 = |x: u64| (x * x.saturating_sub(1) / 2) as f64;
    let total = c2(n as u64);
    let sum_ij: f64 = cont.values().map(|&v| c2(v)).sum();
    let sum_a: f64 = ra.values().map(|&v| c2(v)).sum();
    let sum_b: f64 = rb.values().map(|&v| c2(v)).sum();
    // Agreements = pairs together in both + pairs apart in both.
    let agree = total + 2.0 * sum_ij - sum_a - sum_b;
    Ok(1.0 - agree / total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{build_graph, map_boundary_to_medial, solve_eigens, RhoMode};
    use crate::synth;

    fn pipeline_parts(
        mesh: &TriangleMesh,
        resolution: usize,
        k: usize,
    ) -> (BoundaryMedialMap, SkeletalPointSet, SpectralEmbedding) {
        use crate::medial::*;
        let grid = crate::voxelio::voxelize(mesh, resolution).unwrap();
        let df = distance_transform(&grid).unwrap();
        let vf = gradient_field(&df, &grid);
        let aof = average_outward_flux(&vf, &grid);
        let skel = thin(&grid, &aof, &df, 0.25).unwrap();
        let rec = crate::recon::reconstruct(&skel).unwrap();
        let map = map_boundary_to_medial(mesh, &skel, &rec).unwrap();
        let graph = build_graph(mesh, &map, &skel, 16, RhoMode::Radius).unwrap();
        let emb = solve_eigens(&graph, k, 42).unwrap();
        (map, skel, emb)
    }

    /// Ground-truth dumbbell partition: bulb above the neck, bulb below,
    /// bar between.
    fn dumbbell_gt(mesh: &TriangleMesh) -> SegmentLabels {
        let neck = synth::dumbbell_neck_z();
        SegmentLabels {
            labels: mesh
                .vertices
                .iter()
                .map(|p| {
                    if p.z > neck {
                        0
                    } else if p.z < -neck {
                        1
                    } else {
                        2
                    }
                })
                .collect(),
        }
    }


    #[test]
    fn two_blobs_separate_perfectly() {
        let mut cols = vec![("a".to_string(), Vec::new()), ("b".to_string(), Vec::new())];
        let mut gt = Vec::new();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for i in 0..80 {
            let c = if i < 40 { 0.0 } else { 10.0 };
            cols[0].1.push(c + rng.gen_range(-0.5..0.5));
            cols[1].1.push(c + rng.gen_range(-0.5..0.5));
            gt.push(if i < 40 { 0usize } else { 1 });
        }
        let f = FeatureMatrix::from_columns(cols).unwrap();
        let labels = cluster(&f, 2, 4, 7).unwrap();
        let err = rand_index_error(&labels, &SegmentLabels { labels: gt }).unwrap();
        assert_eq!(err, 0.0, "blobs not perfectly separated");
    }

    #[test]
    fn dumbbell_three_parts() {
        let mesh = synth::dumbbell(24, 48);
        let (map, skel, emb) = pipeline_parts(&mesh, 96, 5);
        let f = augment_features(&mesh, &map, &skel, Some(&emb), true).unwrap();
        let labels = cluster(&f, 3, 8, 7).unwrap();
        let gt = dumbbell_gt(&mesh);
        let err = rand_index_error(&labels, &gt).unwrap();
        assert!(err < 0.1, "dumbbell Rand error {err}");
        // Every part nonempty.
        for part in 0..3 {
            assert!(labels.labels.iter().any(|&l| l == part));
        }
    }

    #[test]
    fn medial_features_do_not_hurt_on_dumbbell() {
        let mesh = synth::dumbbell(24, 48);
        let (map, skel, emb) = pipeline_parts(&mesh, 96, 5);
        let gt = dumbbell_gt(&mesh);
        let with = augment_features(&mesh, &map, &skel, Some(&emb), true).unwrap();
        let without = augment_features(&mesh, &map, &skel, None, true).unwrap();
        let mut errs_with = Vec::new();
        let mut errs_without = Vec::new();
        for seed in 0..5u64 {
            let lw = cluster(&with, 3, 8, seed).unwrap();
            let lo = cluster(&without, 3, 8, seed).unwrap();
            errs_with.push(rand_index_error(&lw, &gt).unwrap());
            errs_without.push(rand_index_error(&lo, &gt).unwrap());
        }
        errs_with.sort_by(|a, b| a.partial_cmp(b).unwrap());
        errs_without.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!(
            errs_with[2] <= errs_without[2] + 1e-12,
            "median with {:?} vs without {:?}",
            errs_with,
            errs_without
        );
    }

    #[test]
    fn feature_matrix_contract() {
        let mesh = synth::cylinder(0.5, 2.0, 16, 10);
        let (map, skel, emb) = pipeline_parts(&mesh, 48, 5);
        let f = augment_features(&mesh, &map, &skel, Some(&emb), false).unwrap();
        assert_eq!(f.d, 9, "x,y,z,r + 5 spectral columns");
        // Standardized: mean 0, variance 1 per column.
        let col_stats = |f: &FeatureMatrix, c: usize| {
            let mean: f64 = (0..f.n).map(|i| f.data[i * f.d + c]).sum::<f64>() / f.n as f64;
            let var: f64 =
                (0..f.n).map(|i| (f.data[i * f.d + c] - mean).powi(2)).sum::<f64>() / f.n as f64;
            (mean, var)
        };
        for c in 0..f.d {
            let (mean, var) = col_stats(&f, c);
            assert!(mean.abs() < 1e-9, "column {c} mean {mean}");
            assert!((var - 1.0).abs() < 1e-9, "column {c} variance {var}");
        }
        // Eigen weighting rescales the standardized spectral columns by
        // sqrt(lambda_1 / lambda_i): the first keeps unit variance and the
        // rest shrink monotonically with eigenvalue.
        let fw = augment_features(&mesh, &map, &skel, Some(&emb), true).unwrap();
        assert_eq!(fw.d, 9);
        let (_, v1) = col_stats(&fw, 4);
        assert!((v1 - 1.0).abs() < 1e-9, "phi1 variance {v1}");
        let mut prev = v1 + 1e-12;
        for c in 5..9 {
            let (_, var) = col_stats(&fw, c);
            assert!(var <= prev, "column {c} variance {var} not decreasing");
            prev = var;
        }
        // Without the embedding: plain x,y,z,r.
        let plain = augment_features(&mesh, &map, &skel, None, true).unwrap();
        assert_eq!(plain.d, 4);
    }

    #[test]
    fn ball_radius_column_is_dropped() {
        let mesh = synth::icosphere(1.0, 2);
        let (map, skel, _) = pipeline_parts(&mesh, 48, 3);
        // Force a perfectly constant radius column to exercise the guard.
        let n = mesh.vertices.len();
        let _ = (map, skel);
        let cols = vec![
            ("x".to_string(), mesh.vertices.iter().map(|p| p.x).collect()),
            ("y".to_string(), mesh.vertices.iter().map(|p| p.y).collect()),
            ("z".to_string(), mesh.vertices.iter().map(|p| p.z).collect()),
            ("r".to_string(), vec![1.0; n]),
        ];
        let f = FeatureMatrix::from_columns(cols).unwrap();
        assert_eq!(f.d, 3);
        assert!(!f.columns.contains(&"r".to_string()));
    }

    #[test]
    fn nan_feature_is_data_error() {
        let cols = vec![("x".to_string(), vec![0.0, f64::NAN, 1.0])];
        assert!(matches!(
            FeatureMatrix::from_columns(cols),
            Err(Error::Data(_))
        ));
    }

    #[test]
    fn too_many_parts_is_domain_error() {
        let cols = vec![("x".to_string(), vec![0.0, 1.0, 2.0])];
        let f = FeatureMatrix::from_columns(cols).unwrap();
        assert!(matches!(cluster(&f, 5, 2, 0), Err(Error::Domain(_))));
    }

    #[test]
    fn rand_index_hand_case_and_invariances() {
        let gt = SegmentLabels {
            labels: vec![0, 0, 1, 1],
        };
        let lab = SegmentLabels {
            labels: vec![0, 1, 0, 1],
        };
        let err = rand_index_error(&lab, &gt).unwrap();
        assert!((err - 2.0 / 3.0).abs() < 1e-12, "hand case error {err}");
        // Identity and label renaming.
        assert_eq!(rand_index_error(&gt, &gt).unwrap(), 0.0);
        let renamed = SegmentLabels {
            labels: vec![7, 7, 3, 3],
        };
        assert_eq!(rand_index_error(&renamed, &gt).unwrap(), 0.0);
        // Symmetry on random pairs.
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let a = SegmentLabels {
                labels: (0..30).map(|_| rng.gen_range(0..4)).collect(),
            };
            let b = SegmentLabels {
                labels: (0..30).map(|_| rng.gen_range(0..4)).collect(),
            };
            let ab = rand_index_error(&a, &b).unwrap();
            let ba = rand_index_error(&b, &a).unwrap();
            assert!((ab - ba).abs() < 1e-15);
            assert!((0.0..=1.0).contains(&ab));
        }
    }

    #[test]
    fn clustering_is_deterministic_and_seed_stable() {
        let mesh = synth::dumbbell(20, 40);
        let (map, skel, emb) = pipeline_parts(&mesh, 80, 5);
        let f = augment_features(&mesh, &map, &skel, Some(&emb), true).unwrap();
        let a = cluster(&f, 3, 6, 11).unwrap();
        let b = cluster(&f, 3, 6, 11).unwrap();
        assert_eq!(a, b, "same seed must reproduce labels exactly");
        let gt = dumbbell_gt(&mesh);
        let errs: Vec<f64> = (0..10u64)
            .map(|s| rand_index_error(&cluster(&f, 3, 6, s).unwrap(), &gt).unwrap())
            .collect();
        let lo = errs.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = errs.iter().cloned().fold(0.0f64, f64::max);
        assert!(hi - lo < 0.05, "seed spread {lo}..{hi}");
    }

    #[test]
    fn labels_roundtrip() {
        let l = SegmentLabels {
            labels: vec![0, 2, 1, 2],
        };
        let path = std::env::temp_dir().join("ms_labels_rt.txt");
        l.save(&path).unwrap();
        assert_eq!(SegmentLabels::load(&path).unwrap(), l);
    }
}
