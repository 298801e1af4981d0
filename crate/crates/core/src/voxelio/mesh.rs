use std::collections::BTreeMap;
use std::collections::HashMap;
use std::io::{BufWriter, Write};
use std::path::Path;

use nalgebra::{Point3, Vector3};

use crate::error::{Error, Result};

/// Vertex/triangle surface mesh with optional named per-vertex scalar channels.
///
/// Vertex order is preserved on load so external ground-truth label files
/// stay index-aligned.
#[derive(Debug, Clone)]
pub struct TriangleMesh {
    pub vertices: Vec<Point3<f64>>,
    pub triangles: Vec<[usize; 3]>,
    pub channels: BTreeMap<String, Vec<f64>>,
    pub watertight: bool,
}

impl TriangleMesh {
    pub fn new(vertices: Vec<Point3<f64>>, triangles: Vec<[usize; 3]>) -> Result<TriangleMesh> {
        let mut mesh = TriangleMesh {
            vertices,
            triangles,
            channels: BTreeMap::new(),
            watertight: false,
        };
        mesh.finalize()?;
        Ok(mesh)
    }

    /// Validates indices, drops degenerate faces, sets the watertight flag.
    fn finalize(&mut self) -> Result<()> {
        if self.vertices.is_empty() || self.triangles.is_empty() {
            return Err(Error::EmptyInput("mesh has no vertices or faces".into()));
        }
        let n = self.vertices.len();
        for t in &self.triangles {
            for &i in t {
                if i >= n {
                    return Err(Error::IndexOutOfRange(format!(
                        "face references vertex {i} of {n}"
                    )));
                }
            }
        }
        self.triangles.retain(|t| {
            let a = self.vertices[t[0]];
            let b = self.vertices[t[1]];
            let c = self.vertices[t[2]];
            (b - a).cross(&(c - a)).norm() > 1e-14
        });
        if self.triangles.is_empty() {
            return Err(Error::EmptyInput("all faces degenerate".into()));
        }
        let mut edge_count: HashMap<(usize, usize), usize> = HashMap::new();
        for t in &self.triangles {
            for e in [(t[0], t[1]), (t[1], t[2]), (t[2], t[0])] {
                let key = (e.0.min(e.1), e.0.max(e.1));
                *edge_count.entry(key).or_insert(0) += 1;
            }
        }
        self.watertight = edge_count.values().all(|&c| c == 2);
        Ok(())
    }

    pub fn triangle_points(&self, t: usize) -> [Point3<f64>; 3] {
        let [a, b, c] = self.triangles[t];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    pub fn bounding_box(&self) -> (Point3<f64>, Point3<f64>) {
        let mut lo = Point3::new(f64::INFINITY, f64::INFINITY, f64::INFINITY);
        let mut hi = Point3::new(f64::NEG_INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
        for v in &self.vertices {
            for k in 0..3 {
                lo[k] = lo[k].min(v[k]);
                hi[k] = hi[k].max(v[k]);
            }
        }
        (lo, hi)
    }

    /// Undirected edge list, each unordered pair once.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut set = std::collections::HashSet::new();
        for t in &self.triangles {
            for e in [(t[0], t[1]), (t[1], t[2]), (t[2], t[0])] {
                set.insert((e.0.min(e.1), e.0.max(e.1)));
            }
        }
        let mut edges: Vec<_> = set.into_iter().collect();
        edges.sort_unstable();
        edges
    }

    pub fn face_normal(&self, t: usize) -> Vector3<f64> {
        let [a, b, c] = self.triangle_points(t);
        (b - a).cross(&(c - a))
    }
}

/// Loads an ASCII OFF, OBJ, or PLY mesh, deciding the format by extension
/// (falling back to content sniffing).
pub fn load_mesh(path: &Path) -> Result<TriangleMesh> {
    let text = std::fs::read_to_string(path)?;
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .map(|e| e.to_ascii_lowercase());
    match ext.as_deref() {
        Some("off") => parse_off(&text),
        Some("obj") => parse_obj(&text),
        Some("ply") => parse_ply(&text),
        _ => {
            let head = text.trim_start();
            if head.starts_with("OFF") {
                parse_off(&text)
            } else if head.starts_with("ply") {
                parse_ply(&text)
            } else {
                parse_obj(&text)
            }
        }
    }
}

fn parse_f64(line: usize, tok: &str) -> Result<f64> {
    tok.parse::<f64>().map_err(|e| Error::Parse {
        line,
        msg: format!("bad number `{tok}`: {e}"),
    })
}

fn parse_usize(line: usize, tok: &str) -> Result<usize> {
    tok.parse::<usize>().map_err(|e| Error::Parse {
        line,
        msg: format!("bad index `{tok}`: {e}"),
    })
}

fn parse_off(text: &str) -> Result<TriangleMesh> {
    // Lines with content, keeping original line numbers for errors.
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());
    let (ln, first) = lines.next().ok_or(Error::EmptyInput("empty OFF file".into()))?;
    let counts_line = if first == "OFF" {
        lines.next().ok_or(Error::Parse {
            line: ln,
            msg: "missing OFF counts line".into(),
        })?
    } else if let Some(rest) = first.strip_prefix("OFF") {
        (ln, rest.trim())
    } else {
        (ln, first)
    };
    let toks: Vec<&str> = counts_line.1.split_whitespace().collect();
    if toks.len() < 2 {
        return Err(Error::Parse {
            line: counts_line.0,
            msg: "OFF counts line needs vertex and face counts".into(),
        });
    }
    let nv = parse_usize(counts_line.0, toks[0])?;
    let nf = parse_usize(counts_line.0, toks[1])?;
    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (ln, l) = lines.next().ok_or(Error::Parse {
            line: 0,
            msg: "OFF file truncated in vertex list".into(),
        })?;
        let t: Vec<&str> = l.split_whitespace().collect();
        if t.len() < 3 {
            return Err(Error::Parse {
                line: ln,
                msg: "vertex line needs 3 coordinates".into(),
            });
        }
        vertices.push(Point3::new(
            parse_f64(ln, t[0])?,
            parse_f64(ln, t[1])?,
            parse_f64(ln, t[2])?,
        ));
    }
    let mut triangles = Vec::with_capacity(nf);
    for _ in 0..nf {
        let (ln, l) = lines.next().ok_or(Error::Parse {
            line: 0,
            msg: "OFF file truncated in face list".into(),
        })?;
        let t: Vec<&str> = l.split_whitespace().collect();
        let k = parse_usize(ln, t[0])?;
        if t.len() < 1 + k || k < 3 {
            return Err(Error::Parse {
                line: ln,
                msg: format!("face with {k} vertices is malformed"),
            });
        }
        let idx: Vec<usize> = t[1..1 + k]
            .iter()
            .map(|s| parse_usize(ln, s))
            .collect::<Result<_>>()?;
        // Fan-triangulate polygons.
        for i in 1..k - 1 {
            triangles.push([idx[0], idx[i], idx[i + 1]]);
        }
    }
    TriangleMesh::new(vertices, triangles)
}

fn parse_obj(text: &str) -> Result<TriangleMesh> {
    let mut vertices = Vec::new();
    let mut triangles = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let ln = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut toks = line.split_whitespace();
        match toks.next() {
            Some("v") => {
                let t: Vec<&str> = toks.collect();
                if t.len() < 3 {
                    return Err(Error::Parse {
                        line: ln,
                        msg: "vertex line needs 3 coordinates".into(),
                    });
                }
                vertices.push(Point3::new(
                    parse_f64(ln, t[0])?,
                    parse_f64(ln, t[1])?,
                    parse_f64(ln, t[2])?,
                ));
            }
            Some("f") => {
                let idx: Vec<usize> = toks
                    .map(|t| {
                        let v = t.split('/').next().unwrap_or(t);
                        let i = parse_usize(ln, v)?;
                        if i == 0 {
                            return Err(Error::Parse {
                                line: ln,
                                msg: "OBJ indices are 1-based".into(),
                            });
                        }
                        Ok(i - 1)
                    })
                    .collect::<Result<_>>()?;
                if idx.len() < 3 {
                    return Err(Error::Parse {
                        line: ln,
                        msg: "face needs at least 3 vertices".into(),
                    });
                }
                for i in 1..idx.len() - 1 {
                    triangles.push([idx[0], idx[i], idx[i + 1]]);
                }
            }
            _ => {}
        }
    }
    TriangleMesh::new(vertices, triangles)
}

fn parse_ply(text: &str) -> Result<TriangleMesh> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
    let (_, magic) = lines.next().ok_or(Error::EmptyInput("empty PLY file".into()))?;
    if magic != "ply" {
        return Err(Error::Parse {
            line: 1,
            msg: "missing `ply` magic".into(),
        });
    }
    let mut nv = 0usize;
    let mut nf = 0usize;
    // (element, property name) in declaration order.
    let mut vertex_props: Vec<String> = Vec::new();
    let mut current_element = String::new();
    let mut header_end = 0usize;
    for (ln, l) in lines.by_ref() {
        let toks: Vec<&str> = l.split_whitespace().collect();
        match toks.first().copied() {
            Some("format") => {
                if toks.get(1) != Some(&"ascii") {
                    return Err(Error::Parse {
                        line: ln,
                        msg: "only ASCII PLY is supported".into(),
                    });
                }
            }
            Some("element") => {
                current_element = toks.get(1).unwrap_or(&"").to_string();
                let count = parse_usize(ln, toks.get(2).unwrap_or(&""))?;
                match current_element.as_str() {
                    "vertex" => nv = count,
                    "face" => nf = count,
                    _ => {}
                }
            }
            Some("property") => {
                if current_element == "vertex" && toks.first() == Some(&"property") {
                    if toks.get(1) == Some(&"list") {
                        return Err(Error::Parse {
                            line: ln,
                            msg: "list property on vertex element is unsupported".into(),
                        });
                    }
                    vertex_props.push(toks.last().unwrap_or(&"").to_string());
                }
            }
            Some("end_header") => {
                header_end = ln;
                break;
            }
            _ => {}
        }
    }
    if header_end == 0 {
        return Err(Error::Parse {
            line: 0,
            msg: "PLY header not terminated".into(),
        });
    }
    let xi = vertex_props.iter().position(|p| p == "x");
    let yi = vertex_props.iter().position(|p| p == "y");
    let zi = vertex_props.iter().position(|p| p == "z");
    let (xi, yi, zi) = match (xi, yi, zi) {
        (Some(a), Some(b), Some(c)) => (a, b, c),
        _ => {
            return Err(Error::Parse {
                line: header_end,
                msg: "PLY vertex element lacks x/y/z".into(),
            })
        }
    };
    let mut vertices = Vec::with_capacity(nv);
    let mut channels: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for (i, p) in vertex_props.iter().enumerate() {
        if i != xi && i != yi && i != zi {
            channels.insert(p.clone(), Vec::with_capacity(nv));
        }
    }
    let mut data = lines.filter(|(_, l)| !l.is_empty());
    for _ in 0..nv {
        let (ln, l) = data.next().ok_or(Error::Parse {
            line: 0,
            msg: "PLY truncated in vertex list".into(),
        })?;
        let t: Vec<&str> = l.split_whitespace().collect();
        if t.len() < vertex_props.len() {
            return Err(Error::Parse {
                line: ln,
                msg: "vertex row shorter than property list".into(),
            });
        }
        vertices.push(Point3::new(
            parse_f64(ln, t[xi])?,
            parse_f64(ln, t[yi])?,
            parse_f64(ln, t[zi])?,
        ));
        for (i, p) in vertex_props.iter().enumerate() {
            if i != xi && i != yi && i != zi {
                channels.get_mut(p).unwrap().push(parse_f64(ln, t[i])?);
            }
        }
    }
    let mut triangles = Vec::with_capacity(nf);
    for _ in 0..nf {
        let (ln, l) = data.next().ok_or(Error::Parse {
            line: 0,
            msg: "PLY truncated in face list".into(),
        })?;
        let t: Vec<&str> = l.split_whitespace().collect();
        let k = parse_usize(ln, t[0])?;
        if t.len() < 1 + k || k < 3 {
            return Err(Error::Parse {
                line: ln,
                msg: "malformed face row".into(),
            });
        }
        let idx: Vec<usize> = t[1..1 + k]
            .iter()
            .map(|s| parse_usize(ln, s))
            .collect::<Result<_>>()?;
        for i in 1..k - 1 {
            triangles.push([idx[0], idx[i], idx[i + 1]]);
        }
    }
    let mut mesh = TriangleMesh::new(vertices, triangles)?;
    mesh.channels = channels;
    Ok(mesh)
}

/// Writes an ASCII PLY carrying the mesh geometry plus one float property
/// per named channel. Coordinates and channel values are printed at 9
/// significant digits so a save/load/save cycle is byte-stable.
pub fn export_mesh_scalars(
    mesh: &TriangleMesh,
    channels: &BTreeMap<String, Vec<f64>>,
    path: &Path,
) -> Result<()> {
    for (name, vals) in channels {
        if vals.len() != mesh.vertices.len() {
            return Err(Error::ShapeMismatch(format!(
                "channel `{name}` has {} values for {} vertices",
                vals.len(),
                mesh.vertices.len()
            )));
        }
    }
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    writeln!(w, "ply")?;
    writeln!(w, "format ascii 1.0")?;
    writeln!(w, "element vertex {}", mesh.vertices.len())?;
    writeln!(w, "property double x")?;
    writeln!(w, "property double y")?;
    writeln!(w, "property double z")?;
    for name in channels.keys() {
        writeln!(w, "property double {name}")?;
    }
    writeln!(w, "element face {}", mesh.triangles.len())?;
    writeln!(w, "property list uchar int vertex_indices")?;
    writeln!(w, "end_header")?;
    for (i, v) in mesh.vertices.iter().enumerate() {
        write!(w, "{:.8e} {:.8e} {:.8e}", v.x, v.y, v.z)?;
        for vals in channels.values() {
            write!(w, " {:.8e}", vals[i])?;
        }
        writeln!(w)?;
    }
    for t in &mesh.triangles {
        writeln!(w, "3 {} {} {}", t[0], t[1], t[2])?;
    }
    Ok(())
}
