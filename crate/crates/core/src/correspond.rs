//! Spectral alignment of two embeddings (sign/order ambiguity), dense point
//! correspondence, and geodesic accuracy curves.

use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use nalgebra::{DMatrix, Point3};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::spatial::KdTree;
use crate::spectral::SpectralEmbedding;
use crate::voxelio::TriangleMesh;

/// Cost weights for eigenvalue similarity, value-histogram distance, and
/// downsampled spatial-distribution distance.
pub const ALIGN_ALPHA: f64 = 0.4;
pub const ALIGN_BETA: f64 = 0.3;
pub const ALIGN_GAMMA: f64 = 0.3;

const HIST_BINS: usize = 32;
const SPATIAL_SAMPLES: usize = 256;

/// Resolution of the eigenvector sign/order ambiguity between two
/// embeddings: a permutation over B's modes, a per-mode sign, and the cost
/// matrix the assignment minimized.
#[derive(Debug, Clone)]
pub struct SpectrumAlignment {
    pub k: usize,
    /// permutation[i] = the B mode matched to A's mode i.
    pub permutation: Vec<usize>,
    /// signs[i] = sign applied to B's matched mode.
    pub signs: Vec<f64>,
    /// Row-major k x k cost matrix (rows = A modes, columns = B modes).
    pub cost: Vec<f64>,
}

impl SpectrumAlignment {
    /// Reorder and flip B's coordinates so its mode i matches A's mode i.
    pub fn apply(&self, emb_b: &SpectralEmbedding) -> Result<SpectralEmbedding> {
        if emb_b.k != self.k {
            return Err(Error::ShapeMismatch(format!(
                "alignment is over k={} but embedding has k={}",
                self.k, emb_b.k
            )));
        }
        let mut coords = vec![0.0; emb_b.coords.len()];
        let mut eigenvalues = vec![0.0; self.k];
        for i in 0..self.k {
            let src = self.permutation[i];
            eigenvalues[i] = emb_b.eigenvalues[src];
            for j in 0..emb_b.n {
                coords[j * self.k + i] = self.signs[i] * emb_b.coords[j * self.k + src];
            }
        }
        Ok(SpectralEmbedding {
            n: emb_b.n,
            k: self.k,
            eigenvalues,
            coords,
            d_sym: emb_b.d_sym.clone(),
        })
    }
}

/// Dense map from every A vertex to a B vertex, with an optional
/// soft-assignment confidence from the drift refinement.
#[derive(Debug, Clone)]
pub struct CorrespondenceMap {
    pub target: Vec<usize>,
    pub confidence: Option<Vec<f64>>,
}

impl CorrespondenceMap {
    /// Two-column ASCII `srcIdx dstIdx`.
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(std::fs::File::create(path)?);
        for (i, &t) in self.target.iter().enumerate() {
            writeln!(w, "{i} {t}")?;
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<CorrespondenceMap> {
        let r = BufReader::new(std::fs::File::open(path)?);
        let mut target = Vec::new();
        for (ln, line) in r.lines().enumerate() {
            let line = line?;
            let toks: Vec<&str> = line.split_whitespace().collect();
            if toks.is_empty() {
                continue;
            }
            if toks.len() != 2 {
                return Err(Error::Parse {
                    line: ln + 1,
                    msg: "correspondence row needs 2 columns".into(),
                });
            }
            let src: usize = toks[0].parse().map_err(|e| Error::Parse {
                line: ln + 1,
                msg: format!("bad source index: {e}"),
            })?;
            if src != target.len() {
                return Err(Error::Parse {
                    line: ln + 1,
                    msg: format!("expected source index {}, found {src}", target.len()),
                });
            }
            target.push(toks[1].parse().map_err(|e| Error::Parse {
                line: ln + 1,
                msg: format!("bad target index: {e}"),
            })?);
        }
        Ok(CorrespondenceMap {
            target,
            confidence: None,
        })
    }
}

/// Point-matching strategy after alignment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatchMode {
    /// Nearest neighbor in aligned embedding space.
    Nearest,
    /// Coherent-drift refinement (Gaussian-mixture nonrigid registration in
    /// embedding space) before the nearest-neighbor read-out.
    Drift,
}

// ---------------------------------------------------------------------------
// Assignment
// ---------------------------------------------------------------------------

/// Optimal assignment on a square cost matrix (row-major, k x k), returning
/// for each row its assigned column. O(k^3) shortest-augmenting-path method.
pub(crate) fn hungarian(cost: &[f64], k: usize) -> Vec<usize> {
    let inf = f64::INFINITY;
    let mut u = vec![0.0f64; k + 1];
    let mut v = vec![0.0f64; k + 1];
    let mut p = vec![0usize; k + 1];
    let mut way = vec![0usize; k + 1];
    for i in 1..=k {
        p[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![inf; k + 1];
        let mut used = vec![false; k + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = inf;
            let mut j1 = 0usize;
            for j in 1..=k {
                if !used[j] {
                    let cur = cost[(i0 - 1) * k + (j - 1)] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=k {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut res = vec![0usize; k];
    for j in 1..=k {
        if p[j] > 0 {
            res[p[j] - 1] = j - 1;
        }
    }
    res
}

// ---------------------------------------------------------------------------
// Alignment
// ---------------------------------------------------------------------------

/// Farthest-point sampling over vertex positions, deterministic from vertex 0.
fn farthest_point_samples(points: &[Point3<f64>], count: usize) -> Vec<usize> {
    let n = points.len();
    let count = count.min(n);
    let mut chosen = Vec::with_capacity(count);
    let mut dist = vec![f64::INFINITY; n];
    let mut cur = 0usize;
    for _ in 0..count {
        chosen.push(cur);
        let mut best = (0usize, -1.0f64);
        for i in 0..n {
            let d = (points[i] - points[cur]).norm_squared();
            if d < dist[i] {
                dist[i] = d;
            }
            if dist[i] > best.1 {
                best = (i, dist[i]);
            }
        }
        cur = best.0;
    }
    chosen
}

/// Centroid-subtracted, RMS-normalized copies of the vertex positions.
fn normalize_positions(points: &[Point3<f64>]) -> Vec<Point3<f64>> {
    let n = points.len() as f64;
    let centroid = points
        .iter()
        .fold(nalgebra::Vector3::zeros(), |a, p| a + p.coords)
        / n;
    let rms = (points
        .iter()
        .map(|p| (p.coords - centroid).norm_squared())
        .sum::<f64>()
        / n)
        .sqrt()
        .max(1e-300);
    points
        .iter()
        .map(|p| Point3::from((p.coords - centroid) / rms))
        .collect()
}

/// Column i of the embedding, normalized to unit RMS.
fn unit_rms_column(emb: &SpectralEmbedding, i: usize) -> Vec<f64> {
    let mut col: Vec<f64> = (0..emb.n).map(|j| emb.coords[j * emb.k + i]).collect();
    let rms = (col.iter().map(|v| v * v).sum::<f64>() / emb.n as f64)
        .sqrt()
        .max(1e-300);
    for v in &mut col {
        *v /= rms;
    }
    col
}

/// 32-bin normalized histogram of values clipped to [-range, range].
fn histogram(values: &[f64], range: f64) -> [f64; HIST_BINS] {
    let mut h = [0.0f64; HIST_BINS];
    let inv = 1.0 / values.len() as f64;
    for &v in values {
        let t = ((v / range + 1.0) * 0.5).clamp(0.0, 1.0);
        let b = ((t * HIST_BINS as f64) as usize).min(HIST_BINS - 1);
        h[b] += inv;
    }
    h
}

fn hist_l1(a: &[f64; HIST_BINS], b: &[f64; HIST_BINS]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

/// Align B's eigenvectors to A's: cost combines eigenvalue similarity,
/// sign-minimized histogram distance and sign-minimized downsampled spatial
/// distribution distance; the permutation is the optimal assignment on the
/// k x k cost.
pub fn align_spectra(
    emb_a: &SpectralEmbedding,
    emb_b: &SpectralEmbedding,
    mesh_a: &TriangleMesh,
    mesh_b: &TriangleMesh,
) -> Result<SpectrumAlignment> {
    align_spectra_weighted(emb_a, emb_b, mesh_a, mesh_b, ALIGN_ALPHA, ALIGN_BETA, ALIGN_GAMMA)
}

/// [`align_spectra`] with explicit cost weights for the eigenvalue,
/// histogram, and spatial terms.
pub fn align_spectra_weighted(
    emb_a: &SpectralEmbedding,
    emb_b: &SpectralEmbedding,
    mesh_a: &TriangleMesh,
    mesh_b: &TriangleMesh,
    alpha: f64,
    beta: f64,
    gamma: f64,
) -> Result<SpectrumAlignment> {
    let k = emb_a.k;
    if emb_b.k != k {
        return Err(Error::ShapeMismatch(format!(
            "embeddings have k={} and k={}",
            k, emb_b.k
        )));
    }
    if mesh_a.vertices.len() != emb_a.n || mesh_b.vertices.len() != emb_b.n {
        return Err(Error::ShapeMismatch(
            "mesh vertex counts do not match the embeddings".into(),
        ));
    }

    // Spatial pairing: farthest-point samples on A matched to B vertices by
    // normalized position.
    let pos_a = normalize_positions(&mesh_a.vertices);
    let pos_b = normalize_positions(&mesh_b.vertices);
    let samples = farthest_point_samples(&pos_a, SPATIAL_SAMPLES);
    let tree_b = KdTree::build(&pos_b);
    let paired_b: Vec<usize> = samples
        .iter()
        .map(|&i| tree_b.nearest(&pos_a[i]).expect("nonempty mesh").0)
        .collect();

    let cols_a: Vec<Vec<f64>> = (0..k).map(|i| unit_rms_column(emb_a, i)).collect();
    let cols_b: Vec<Vec<f64>> = (0..k).map(|i| unit_rms_column(emb_b, i)).collect();
    // Shared histogram range so flips map bins onto reversed bins.
    let range = cols_a
        .iter()
        .chain(&cols_b)
        .flat_map(|c| c.iter())
        .fold(0.0f64, |m, v| m.max(v.abs()))
        .max(1e-300);
    let hists_a: Vec<[f64; HIST_BINS]> = cols_a.iter().map(|c| histogram(c, range)).collect();
    let hists_b: Vec<[f64; HIST_BINS]> = cols_b.iter().map(|c| histogram(c, range)).collect();

    let mut cost = vec![0.0f64; k * k];
    let mut best_sign = vec![1.0f64; k * k];
    for a in 0..k {
        for b in 0..k {
            let la = emb_a.eigenvalues[a];
            let lb = emb_b.eigenvalues[b];
            let e_term = (la - lb).abs() / (la + lb).max(1e-300);

            // Histogram distance per sign (flipping reverses the bins).
            let mut flipped = hists_b[b];
            flipped.reverse();
            let h_plus = hist_l1(&hists_a[a], &hists_b[b]);
            let h_minus = hist_l1(&hists_a[a], &flipped);

            // Spatial distribution distance per sign over the paired samples.
            let mut s_plus = 0.0;
            let mut s_minus = 0.0;
            for (&ia, &ib) in samples.iter().zip(&paired_b) {
                let va = cols_a[a][ia];
                let vb = cols_b[b][ib];
                s_plus += (va - vb).abs();
                s_minus += (va + vb).abs();
            }
            let norm = samples.len() as f64;
            s_plus /= norm;
            s_minus /= norm;

            let plus = beta * h_plus / 2.0 + gamma * s_plus / 2.0;
            let minus = beta * h_minus / 2.0 + gamma * s_minus / 2.0;
            let (flip_cost, sign) = if minus < plus {
                (minus, -1.0)
            } else {
                (plus, 1.0)
            };
            cost[a * k + b] = alpha * e_term + flip_cost;
            best_sign[a * k + b] = sign;
        }
    }

    let permutation = hungarian(&cost, k);
    let signs: Vec<f64> = (0..k).map(|a| best_sign[a * k + permutation[a]]).collect();
    Ok(SpectrumAlignment {
        k,
        permutation,
        signs,
        cost,
    })
}

// ---------------------------------------------------------------------------
// Matching
// ---------------------------------------------------------------------------

fn nearest_rows(query: &[f64], rows: &[f64], n_rows: usize, k: usize) -> usize {
    let mut best = (0usize, f64::INFINITY);
    for r in 0..n_rows {
        let mut d = 0.0;
        for c in 0..k {
            let t = query[c] - rows[r * k + c];
            d += t * t;
        }
        if d < best.1 {
            best = (r, d);
        }
    }
    best.0
}

/// Match every A vertex to a B vertex in aligned embedding space.
pub fn match_points(
    emb_a: &SpectralEmbedding,
    emb_b: &SpectralEmbedding,
    alignment: &SpectrumAlignment,
    mode: MatchMode,
) -> Result<CorrespondenceMap> {
    if emb_a.k != alignment.k {
        return Err(Error::Precondition(
            "embeddings must be aligned by align_spectra before matching".into(),
        ));
    }
    let aligned_b = alignment.apply(emb_b)?;
    let k = emb_a.k;
    match mode {
        MatchMode::Nearest => {
            let target: Vec<usize> = (0..emb_a.n)
                .into_par_iter()
                .map(|i| nearest_rows(emb_a.phi(i), &aligned_b.coords, aligned_b.n, k))
                .collect();
            Ok(CorrespondenceMap {
                target,
                confidence: None,
            })
        }
        MatchMode::Drift => drift_match(emb_a, &aligned_b),
    }
}

/// Coherent-drift refinement: A's embedded points move as Gaussian-mixture
/// centroids toward B's under a motion-coherence prior, then each moved
/// point reads out its nearest B vertex. Deterministic: identity
/// initialization, fixed iteration count, no outlier mass.
fn drift_match(emb_a: &SpectralEmbedding, emb_b: &SpectralEmbedding) -> Result<CorrespondenceMap> {
    const ITERS: usize = 50;
    const LAMBDA: f64 = 2.0;
    let m = emb_a.n; // moving points
    let n = emb_b.n; // fixed points
    let d = emb_a.k;
    let y = DMatrix::from_fn(m, d, |r, c| emb_a.coords[r * d + c]);
    let x = DMatrix::from_fn(n, d, |r, c| emb_b.coords[r * d + c]);

    // Mean nearest-neighbor distance of the moving set within the fixed set:
    // the initial variance and the kernel width scale.
    let nn: Vec<(usize, f64)> = (0..m)
        .into_par_iter()
        .map(|i| {
            let j = nearest_rows(emb_a.phi(i), &emb_b.coords, n, d);
            let dist = emb_a
                .phi(i)
                .iter()
                .zip(emb_b.phi(j))
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            (j, dist)
        })
        .collect();
    let mean_nn = nn.iter().map(|v| v.1).sum::<f64>() / m as f64;
    // Spread of the moving set, to keep the kernel meaningful when the two
    // clouds already coincide.
    let spread = {
        let c = y.row_mean();
        (0..m)
            .map(|i| (y.row(i) - &c).norm_squared())
            .sum::<f64>()
            / m as f64
    }
    .sqrt()
    .max(1e-12);
    let beta = (LAMBDA * mean_nn).max(0.05 * spread);
    let mut sigma2 = (mean_nn * mean_nn).max(1e-12 * spread * spread);

    // Motion-coherence kernel over the original moving points.
    let g = DMatrix::from_fn(m, m, |a, b| {
        (-(y.row(a) - y.row(b)).norm_squared() / (2.0 * beta * beta)).exp()
    });

    let mut w = DMatrix::zeros(m, d);
    for _ in 0..ITERS {
        let t = &y + &g * &w;
        // Posterior responsibilities, column-normalized over centroids.
        let mut p = DMatrix::from_fn(m, n, |a, b| {
            (-(t.row(a) - x.row(b)).norm_squared() / (2.0 * sigma2)).exp()
        });
        for c in 0..n {
            let s: f64 = p.column(c).sum();
            if s > 0.0 {
                let inv = 1.0 / s;
                for r in 0..m {
                    p[(r, c)] *= inv;
                }
            }
        }
        let p1: Vec<f64> = (0..m).map(|r| p.row(r).sum()).collect();
        let np: f64 = p1.iter().sum();
        if np <= 0.0 {
            break;
        }
        // (diag(P1) G + lambda sigma^2 I) W = P X - diag(P1) Y
        let mut lhs = DMatrix::zeros(m, m);
        for r in 0..m {
            for c in 0..m {
                lhs[(r, c)] = p1[r] * g[(r, c)];
            }
            lhs[(r, r)] += LAMBDA * sigma2;
        }
        let mut rhs = &p * &x;
        for r in 0..m {
            for c in 0..d {
                rhs[(r, c)] -= p1[r] * y[(r, c)];
            }
        }
        w = match lhs.lu().solve(&rhs) {
            Some(sol) => sol,
            None => break,
        };
        let t = &y + &g * &w;
        // Variance update from the weighted squared residuals.
        let ptx: Vec<f64> = (0..n).map(|c| p.column(c).sum()).collect();
        let mut s = 0.0;
        for c in 0..n {
            s += ptx[c] * x.row(c).norm_squared();
        }
        let px = &p * &x;
        for r in 0..m {
            s -= 2.0 * px.row(r).dot(&t.row(r));
            s += p1[r] * t.row(r).norm_squared();
        }
        sigma2 = (s / (np * d as f64)).max(1e-300);
        if sigma2 < 1e-14 * spread * spread {
            break;
        }
    }

    let t = &y + &g * &w;
    let mut moved = Vec::with_capacity(m * d);
    for r in 0..m {
        for c in 0..d {
            moved.push(t[(r, c)]);
        }
    }
    let results: Vec<(usize, f64)> = (0..m)
        .into_par_iter()
        .map(|i| {
            let row = &moved[i * d..(i + 1) * d];
            let mut j = nearest_rows(row, &emb_b.coords, n, d);
            let dist_to = |t: usize| -> f64 {
                (0..d)
                    .map(|c| (row[c] - emb_b.coords[t * d + c]).powi(2))
                    .sum::<f64>()
                    .sqrt()
            };
            let mut dist = dist_to(j);
            // The drift may perturb coincident embedding rows by rounding
            // noise; on a near-tie keep the pre-drift nearest neighbor so
            // refinement never loses an already-exact match.
            let pre = nn[i].0;
            if pre != j && dist_to(pre) <= dist + 1e-7 * spread {
                j = pre;
                dist = dist_to(pre);
            }
            (j, (-dist * dist / (2.0 * sigma2.max(1e-300))).exp())
        })
        .collect();
    Ok(CorrespondenceMap {
        target: results.iter().map(|r| r.0).collect(),
        confidence: Some(results.iter().map(|r| r.1).collect()),
    })
}

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

/// Edge adjacency with Euclidean lengths.
fn edge_graph(mesh: &TriangleMesh) -> Vec<Vec<(u32, f64)>> {
    let mut adj: Vec<Vec<(u32, f64)>> = vec![Vec::new(); mesh.vertices.len()];
    for (a, b) in mesh.edges() {
        let w = (mesh.vertices[a] - mesh.vertices[b]).norm();
        adj[a].push((b as u32, w));
        adj[b].push((a as u32, w));
    }
    adj
}

/// Single-source shortest path distances over mesh edges.
fn dijkstra(adj: &[Vec<(u32, f64)>], src: usize) -> Vec<f64> {
    use std::cmp::Reverse;
    use std::collections::BinaryHeap;
    #[derive(PartialEq)]
    struct Item(f64, usize);
    impl Eq for Item {}
    impl PartialOrd for Item {
        fn partial_cmp(&self, o: &Self) -> Option<std::cmp::Ordering> {
            Some(self.cmp(o))
        }
    }
    impl Ord for Item {
        fn cmp(&self, o: &Self) -> std::cmp::Ordering {
            self.0
                .partial_cmp(&o.0)
                .unwrap()
                .then(self.1.cmp(&o.1))
        }
    }
    let mut dist = vec![f64::INFINITY; adj.len()];
    dist[src] = 0.0;
    let mut heap = BinaryHeap::new();
    heap.push(Reverse(Item(0.0, src)));
    while let Some(Reverse(Item(d, v))) = heap.pop() {
        if d > dist[v] {
            continue;
        }
        for &(u, w) in &adj[v] {
            let nd = d + w;
            if nd < dist[u as usize] {
                dist[u as usize] = nd;
                heap.push(Reverse(Item(nd, u as usize)));
            }
        }
    }
    dist
}

/// Geodesic graph diameter estimated by a double sweep.
pub fn geodesic_diameter(mesh: &TriangleMesh) -> f64 {
    let adj = edge_graph(mesh);
    let d0 = dijkstra(&adj, 0);
    let far = (0..d0.len())
        .filter(|&i| d0[i].is_finite())
        .max_by(|&a, &b| d0[a].partial_cmp(&d0[b]).unwrap())
        .unwrap_or(0);
    let d1 = dijkstra(&adj, far);
    d1.iter().cloned().filter(|d| d.is_finite()).fold(0.0, f64::max)
}

/// Accuracy at thresholds {0, 0.01, ..., 0.25} of the geodesic diameter:
/// fraction of A vertices whose match lies within geodesic distance t of the
/// ground-truth vertex on B.
pub fn eval_correspondence(
    map: &CorrespondenceMap,
    gt: &[usize],
    mesh_b: &TriangleMesh,
) -> Result<Vec<(f64, f64)>> {
    let thresholds: Vec<f64> = (0..=25).map(|i| i as f64 / 100.0).collect();
    eval_correspondence_at(map, gt, mesh_b, &thresholds)
}

/// Accuracy curve at caller-supplied diameter fractions.
pub fn eval_correspondence_at(
    map: &CorrespondenceMap,
    gt: &[usize],
    mesh_b: &TriangleMesh,
    diameter_fractions: &[f64],
) -> Result<Vec<(f64, f64)>> {
    if map.target.len() != gt.len() {
        return Err(Error::ShapeMismatch(format!(
            "map covers {} vertices but ground truth covers {}",
            map.target.len(),
            gt.len()
        )));
    }
    let nb = mesh_b.vertices.len();
    for &t in map.target.iter().chain(gt) {
        if t >= nb {
            return Err(Error::IndexOutOfRange(format!(
                "vertex index {t} exceeds B's vertex count {nb}"
            )));
        }
    }
    let adj = edge_graph(mesh_b);
    let diameter = geodesic_diameter(mesh_b);

    // One Dijkstra per distinct ground-truth vertex.
    let mut uniq: Vec<usize> = gt.to_vec();
    uniq.sort_unstable();
    uniq.dedup();
    let dists: Vec<Vec<f64>> = uniq.par_iter().map(|&s| dijkstra(&adj, s)).collect();
    let pos: std::collections::HashMap<usize, usize> =
        uniq.iter().enumerate().map(|(i, &s)| (s, i)).collect();

    let errors: Vec<f64> = map
        .target
        .iter()
        .zip(gt)
        .map(|(&m, &g)| dists[pos[&g]][m])
        .collect();
    Ok(diameter_fractions
        .iter()
        .map(|&f| {
            let t = f * diameter;
            let hit = errors.iter().filter(|&&e| e <= t + 1e-12).count();
            (f, hit as f64 / errors.len() as f64)
        })
        .collect())
}

/// `threshold fraction` rows.
pub fn save_curve(curve: &[(f64, f64)], path: &Path) -> Result<()> {
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    for (t, f) in curve {
        writeln!(w, "{t:.12e} {f:.12e}")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{build_graph, map_boundary_to_medial, solve_eigens, RhoMode};
    use crate::synth;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn pipeline_embedding_k(
        mesh: &TriangleMesh,
        resolution: usize,
        big_k: usize,
        k: usize,
    ) -> SpectralEmbedding {
        use crate::medial::*;
        let grid = crate::voxelio::voxelize(mesh, resolution).unwrap();
        let df = distance_transform(&grid).unwrap();
        let vf = gradient_field(&df, &grid);
        let aof = average_outward_flux(&vf, &grid);
        let skel = thin(&grid, &aof, &df, 0.25).unwrap();
        let rec = crate::recon::reconstruct(&skel).unwrap();
        let map = map_boundary_to_medial(mesh, &skel, &rec).unwrap();
        let graph = build_graph(mesh, &map, &skel, big_k, RhoMode::Radius).unwrap();
        solve_eigens(&graph, k, 42).unwrap()
    }

    fn pipeline_embedding(
        mesh: &TriangleMesh,
        resolution: usize,
        k: usize,
    ) -> SpectralEmbedding {
        pipeline_embedding_k(mesh, resolution, 16, k)
    }

    fn brute_force_assignment(cost: &[f64], k: usize) -> (Vec<usize>, f64) {
        fn recurse(
            cost: &[f64],
            k: usize,
            row: usize,
            used: &mut Vec<bool>,
            cur: &mut Vec<usize>,
            acc: f64,
            best: &mut (Vec<usize>, f64),
        ) {
            if row == k {
                if acc < best.1 {
                    *best = (cur.clone(), acc);
                }
                return;
            }
            for c in 0..k {
                if !used[c] {
                    used[c] = true;
                    cur.push(c);
                    recurse(cost, k, row + 1, used, cur, acc + cost[row * k + c], best);
                    cur.pop();
                    used[c] = false;
                }
            }
        }
        let mut best = (Vec::new(), f64::INFINITY);
        recurse(
            cost,
            k,
            0,
            &mut vec![false; k],
            &mut Vec::new(),
            0.0,
            &mut best,
        );
        best
    }



    #[test]
    fn hungarian_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for trial in 0..20 {
            let k = rng.gen_range(2..=7);
            let cost: Vec<f64> = (0..k * k).map(|_| rng.gen_range(0.0..10.0)).collect();
            let perm = hungarian(&cost, k);
            let total: f64 = (0..k).map(|r| cost[r * k + perm[r]]).sum();
            let (_, best) = brute_force_assignment(&cost, k);
            assert!(
                (total - best).abs() < 1e-9,
                "trial {trial}: hungarian {total} vs brute force {best}"
            );
            let mut seen = vec![false; k];
            for &c in &perm {
                assert!(!seen[c], "column assigned twice");
                seen[c] = true;
            }
        }
    }

    #[test]
    fn self_alignment_is_identity() {
        let mesh = synth::cylinder(0.5, 2.0, 16, 10);
        let emb = pipeline_embedding(&mesh, 48, 5);
        let al = align_spectra(&emb, &emb, &mesh, &mesh).unwrap();
        for i in 0..al.k {
            assert_eq!(al.permutation[i], i);
            assert_eq!(al.signs[i], 1.0);
            assert!(al.cost[i * al.k + i] < 1e-9, "diagonal cost not zero");
        }
    }

    #[test]
    fn constructed_flip_and_swap_is_recovered() {
        let mesh = synth::cylinder(0.5, 2.0, 16, 10);
        let emb = pipeline_embedding(&mesh, 48, 5);
        let mut emb2 = emb.clone();
        // Negate mode 1, swap modes 2 and 3.
        for j in 0..emb2.n {
            emb2.coords[j * emb2.k + 1] = -emb.coords[j * emb.k + 1];
            emb2.coords[j * emb2.k + 2] = emb.coords[j * emb.k + 3];
            emb2.coords[j * emb2.k + 3] = emb.coords[j * emb.k + 2];
        }
        emb2.eigenvalues.swap(2, 3);
        let al = align_spectra(&emb, &emb2, &mesh, &mesh).unwrap();
        assert_eq!(al.permutation, vec![0, 1, 3, 2, 4]);
        assert_eq!(al.signs[1], -1.0);
        assert_eq!(al.signs[0], 1.0);
        // Applying the alignment restores the original embedding.
        let back = al.apply(&emb2).unwrap();
        for (a, b) in emb.coords.iter().zip(&back.coords) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn isometric_tube_poses_have_close_aligned_spectra() {
        // A thin tube bends nearly isometrically. The second pose is
        // voxelized at a resolution scaled by the bounding-box ratio so both
        // grids share the same world-unit voxel spacing; graph weights are
        // then directly comparable between the poses.
        let mesh_a = synth::bent_tube(0.35, 30, 10, 0.15);
        let mesh_b = synth::bent_tube(0.5, 30, 10, 0.15);
        let ext = |m: &TriangleMesh| {
            let (lo, hi) = m.bounding_box();
            (hi - lo).amax()
        };
        let res_a = 128usize;
        let res_b = ((res_a as f64) * ext(&mesh_b) / ext(&mesh_a)).round() as usize;
        let emb_a = pipeline_embedding_k(&mesh_a, res_a, 32, 4);
        let emb_b = pipeline_embedding_k(&mesh_b, res_b, 32, 4);
        let al = align_spectra(&emb_a, &emb_b, &mesh_a, &mesh_b).unwrap();
        for i in 0..al.k {
            let la = emb_a.eigenvalues[i];
            let lb = emb_b.eigenvalues[al.permutation[i]];
            let rel = (la - lb).abs() / la.max(lb);
            assert!(rel < 0.05, "mode {i}: eigenvalues {la} vs {lb} ({rel:.3})");
        }
    }

    #[test]
    fn alignment_involution() {
        let mesh_a = synth::bent_tube(0.3, 24, 8, 0.25);
        let mesh_b = synth::bent_tube(0.5, 24, 8, 0.25);
        let emb_a = pipeline_embedding(&mesh_a, 48, 5);
        let emb_b = pipeline_embedding(&mesh_b, 48, 5);
        let ab = align_spectra(&emb_a, &emb_b, &mesh_a, &mesh_b).unwrap();
        let ba = align_spectra(&emb_b, &emb_a, &mesh_b, &mesh_a).unwrap();
        for i in 0..ab.k {
            assert_eq!(ba.permutation[ab.permutation[i]], i, "not mutually inverse");
            assert_eq!(ab.signs[i], ba.signs[ab.permutation[i]]);
        }
    }

    #[test]
    fn nearest_self_match_is_identity_and_symmetric() {
        let mesh = synth::cylinder(0.5, 2.0, 16, 10);
        let emb = pipeline_embedding(&mesh, 48, 5);
        let al = align_spectra(&emb, &emb, &mesh, &mesh).unwrap();
        let fwd = match_points(&emb, &emb, &al, MatchMode::Nearest).unwrap();
        let bwd = match_points(&emb, &emb, &al, MatchMode::Nearest).unwrap();
        for i in 0..emb.n {
            assert_eq!(fwd.target[i], i, "vertex {i} not matched to itself");
            assert_eq!(bwd.target[fwd.target[i]], i);
        }
    }

    #[test]
    fn drift_never_reduces_exact_self_matches() {
        let mesh = synth::bent_tube(0.4, 20, 8, 0.25);
        let emb = pipeline_embedding(&mesh, 48, 5);
        let al = align_spectra(&emb, &emb, &mesh, &mesh).unwrap();
        let nearest = match_points(&emb, &emb, &al, MatchMode::Nearest).unwrap();
        let drift = match_points(&emb, &emb, &al, MatchMode::Drift).unwrap();
        let exact = |m: &CorrespondenceMap| {
            m.target
                .iter()
                .enumerate()
                .filter(|&(i, &t)| i == t)
                .count()
        };
        assert!(exact(&drift) >= exact(&nearest));
        assert!(drift.confidence.is_some());
    }

    #[test]
    fn mismatched_k_is_error() {
        let mesh = synth::cylinder(0.5, 2.0, 12, 8);
        let emb5 = pipeline_embedding(&mesh, 48, 5);
        let emb4 = pipeline_embedding(&mesh, 48, 4);
        assert!(matches!(
            align_spectra(&emb5, &emb4, &mesh, &mesh),
            Err(Error::ShapeMismatch(_))
        ));
        let al = align_spectra(&emb4, &emb4, &mesh, &mesh).unwrap();
        assert!(matches!(
            match_points(&emb5, &emb4, &al, MatchMode::Nearest),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn eval_ground_truth_and_constant_map() {
        let mesh = synth::cylinder(0.5, 2.0, 16, 10);
        let n = mesh.vertices.len();
        let gt: Vec<usize> = (0..n).collect();
        let perfect = CorrespondenceMap {
            target: gt.clone(),
            confidence: None,
        };
        let curve = eval_correspondence(&perfect, &gt, &mesh).unwrap();
        assert_eq!(curve.len(), 26);
        for &(_, f) in &curve {
            assert_eq!(f, 1.0);
        }
        let constant = CorrespondenceMap {
            target: vec![3; n],
            confidence: None,
        };
        let curve = eval_correspondence(&constant, &gt, &mesh).unwrap();
        assert!((curve[0].1 - 1.0 / n as f64).abs() < 1e-12);
        // Monotone nondecreasing, and 1 at the full diameter.
        for w in curve.windows(2) {
            assert!(w[1].1 >= w[0].1);
        }
        let full = eval_correspondence_at(&constant, &gt, &mesh, &[1.0]).unwrap();
        assert_eq!(full[0].1, 1.0);
    }

    #[test]
    fn random_map_matches_coverage_oracle() {
        let mesh = synth::bent_tube(0.4, 24, 8, 0.25);
        let n = mesh.vertices.len();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let gt: Vec<usize> = (0..n).collect();
        let map = CorrespondenceMap {
            target: (0..n).map(|_| rng.gen_range(0..n)).collect(),
            confidence: None,
        };
        let frac = 0.05;
        let curve = eval_correspondence_at(&map, &gt, &mesh, &[frac]).unwrap();
        // Oracle: expected covered fraction for a uniform random target,
        // estimated by sampling source vertices.
        let adj = edge_graph(&mesh);
        let diameter = geodesic_diameter(&mesh);
        let t = frac * diameter;
        let mut p = 0.0;
        let samples = 60usize;
        for s in 0..samples {
            let v = (s * n) / samples;
            let d = dijkstra(&adj, v);
            p += d.iter().filter(|&&x| x <= t).count() as f64 / n as f64;
        }
        p /= samples as f64;
        let sigma = (p * (1.0 - p) / n as f64).sqrt();
        assert!(
            (curve[0].1 - p).abs() <= 3.0 * sigma + 0.02,
            "random-map coverage {} vs oracle {p} (sigma {sigma})",
            curve[0].1
        );
    }

    #[test]
    fn correspondence_roundtrip_and_shape_errors() {
        let map = CorrespondenceMap {
            target: vec![2, 0, 1],
            confidence: None,
        };
        let path = std::env::temp_dir().join("ms_corr_rt.txt");
        map.save(&path).unwrap();
        let back = CorrespondenceMap::load(&path).unwrap();
        assert_eq!(back.target, map.target);

        let mesh = synth::cylinder(0.5, 2.0, 12, 8);
        let gt: Vec<usize> = (0..mesh.vertices.len()).collect();
        assert!(matches!(
            eval_correspondence(&map, &gt, &mesh),
            Err(Error::ShapeMismatch(_))
        ));
    }
}
