//! Per-vertex spectral embeddings, channel projections, the global
//! signature, and their ASCII persistence.

use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::medial::SkeletalPointSet;
use crate::spectral::eigen::solve_smallest;
use crate::spectral::{BoundaryMedialMap, MedialGraph};
use crate::voxelio::TriangleMesh;

/// k nonzero eigenpairs of the medially weighted generalized problem and
/// per-vertex spectral coordinates.
#[derive(Debug, Clone)]
pub struct SpectralEmbedding {
    pub n: usize,
    pub k: usize,
    /// Ascending nonzero eigenvalues, trivial mode removed.
    pub eigenvalues: Vec<f64>,
    /// Row-major n x k: coords[j*k + i] is vertex j's i-th coordinate.
    pub coords: Vec<f64>,
    /// Diagonal mass matrix of the source graph; empty when the embedding
    /// was loaded from disk (signatures need the in-memory pipeline).
    pub d_sym: Vec<f64>,
}

impl SpectralEmbedding {
    /// Spectral coordinates of vertex j.
    #[inline]
    pub fn phi(&self, j: usize) -> &[f64] {
        &self.coords[j * self.k..(j + 1) * self.k]
    }

    /// Euclidean distance between two vertices in embedding space.
    pub fn distance(&self, a: usize, b: usize) -> f64 {
        self.phi(a)
            .iter()
            .zip(self.phi(b))
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>()
            .sqrt()
    }

    /// ASCII table: header (n, k, eigenvalues), then n rows of k coordinates.
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(std::fs::File::create(path)?);
        writeln!(w, "embedding")?;
        writeln!(w, "n {}", self.n)?;
        writeln!(w, "k {}", self.k)?;
        write!(w, "eigenvalues")?;
        for v in &self.eigenvalues {
            write!(w, " {v:.12e}")?;
        }
        writeln!(w)?;
        for j in 0..self.n {
            let row = self.phi(j);
            for (i, v) in row.iter().enumerate() {
                if i > 0 {
                    write!(w, " ")?;
                }
                write!(w, "{v:.12e}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<SpectralEmbedding> {
        let r = BufReader::new(std::fs::File::open(path)?);
        let mut lines = r.lines().enumerate();
        let mut next = || -> Result<(usize, String)> {
            lines
                .next()
                .ok_or_else(|| Error::Parse {
                    line: 0,
                    msg: "unexpected end of embedding file".into(),
                })
                .and_then(|(i, l)| Ok((i + 1, l?)))
        };
        let (ln, magic) = next()?;
        if magic.trim() != "embedding" {
            return Err(Error::Parse {
                line: ln,
                msg: "expected `embedding` header".into(),
            });
        }
        let scalar = |line: usize, s: &str, key: &str| -> Result<usize> {
            let mut it = s.split_whitespace();
            if it.next() != Some(key) {
                return Err(Error::Parse {
                    line,
                    msg: format!("expected `{key}`"),
                });
            }
            it.next()
                .and_then(|t| t.parse().ok())
                .ok_or_else(|| Error::Parse {
                    line,
                    msg: format!("bad `{key}` value"),
                })
        };
        let (ln, s) = next()?;
        let n = scalar(ln, &s, "n")?;
        let (ln, s) = next()?;
        let k = scalar(ln, &s, "k")?;
        let (ln, s) = next()?;
        let mut it = s.split_whitespace();
        if it.next() != Some("eigenvalues") {
            return Err(Error::Parse {
                line: ln,
                msg: "expected `eigenvalues` record".into(),
            });
        }
        let eigenvalues: Vec<f64> = it
            .map(|t| {
                t.parse().map_err(|e| Error::Parse {
                    line: ln,
                    msg: format!("bad eigenvalue `{t}`: {e}"),
                })
            })
            .collect::<Result<_>>()?;
        if eigenvalues.len() != k {
            return Err(Error::Parse {
                line: ln,
                msg: format!("expected {k} eigenvalues, found {}", eigenvalues.len()),
            });
        }
        let mut coords = Vec::with_capacity(n * k);
        for _ in 0..n {
            let (ln, s) = next()?;
            let row: Vec<f64> = s
                .split_whitespace()
                .map(|t| {
                    t.parse().map_err(|e| Error::Parse {
                        line: ln,
                        msg: format!("bad coordinate `{t}`: {e}"),
                    })
                })
                .collect::<Result<_>>()?;
            if row.len() != k {
                return Err(Error::Parse {
                    line: ln,
                    msg: format!("expected {k} coordinates, found {}", row.len()),
                });
            }
            coords.extend(row);
        }
        Ok(SpectralEmbedding {
            n,
            k,
            eigenvalues,
            coords,
            d_sym: Vec::new(),
        })
    }
}

/// Channel projections m_ic for c in {x, y, z, r} and the global signature
/// S_C(i) = lambda_i * sum_c m_ic^2.
#[derive(Debug, Clone)]
pub struct SpectralSignature {
    pub eigenvalues: Vec<f64>,
    /// m[i] = [m_ix, m_iy, m_iz, m_ir].
    pub m: Vec<[f64; 4]>,
    pub s_c: Vec<f64>,
}

impl SpectralSignature {
    /// k rows of `lambda s_c`.
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(std::fs::File::create(path)?);
        for (l, s) in self.eigenvalues.iter().zip(&self.s_c) {
            writeln!(w, "{l:.12e} {s:.12e}")?;
        }
        Ok(())
    }
}

/// Solve the generalized eigenproblem on the medial graph and package the
/// k smallest nonzero eigenpairs as per-vertex coordinates.
pub fn solve_eigens(graph: &MedialGraph, k: usize, seed: u64) -> Result<SpectralEmbedding> {
    let res = solve_smallest(graph, k, seed)?;
    let n = graph.n;
    let mut coords = vec![0.0; n * k];
    for (i, vec) in res.vectors.iter().enumerate() {
        for j in 0..n {
            coords[j * k + i] = vec[j];
        }
    }
    Ok(SpectralEmbedding {
        n,
        k,
        eigenvalues: res.values,
        coords,
        d_sym: graph.d_sym.clone(),
    })
}

/// Project the channels {x, y, z, r} onto each retained eigenvector through
/// the mass matrix and collect the energy signature.
pub fn spectral_signature(
    mesh: &TriangleMesh,
    map: &BoundaryMedialMap,
    skel: &SkeletalPointSet,
    emb: &SpectralEmbedding,
) -> Result<SpectralSignature> {
    if mesh.vertices.len() != emb.n || map.skel_index.len() != emb.n {
        return Err(Error::ShapeMismatch(
            "mesh, map and embedding sizes disagree".into(),
        ));
    }
    if emb.d_sym.len() != emb.n {
        return Err(Error::Precondition(
            "embedding lacks the mass diagonal (loaded from disk?)".into(),
        ));
    }
    let channels: [Vec<f64>; 4] = [
        mesh.vertices.iter().map(|v| v.x).collect(),
        mesh.vertices.iter().map(|v| v.y).collect(),
        mesh.vertices.iter().map(|v| v.z).collect(),
        map.skel_index.iter().map(|&s| skel.points[s].r).collect(),
    ];
    let mut m = Vec::with_capacity(emb.k);
    let mut s_c = Vec::with_capacity(emb.k);
    for i in 0..emb.k {
        let mut row = [0.0f64; 4];
        for (ci, ch) in channels.iter().enumerate() {
            row[ci] = (0..emb.n)
                .map(|j| ch[j] * emb.d_sym[j] * emb.coords[j * emb.k + i])
                .sum();
        }
        let energy: f64 = row.iter().map(|v| v * v).sum();
        s_c.push(emb.eigenvalues[i] * energy);
        m.push(row);
    }
    Ok(SpectralSignature {
        eigenvalues: emb.eigenvalues.clone(),
        m,
        s_c,
    })
}
