//! Boundary-to-medial association and the medially weighted graph over mesh
//! vertices.

use std::collections::BTreeMap;

use nalgebra::Point3;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::medial::SkeletalPointSet;
use crate::recon::ReconGrid;
use crate::spatial::KdTree;
use crate::spectral::overlap::lens_volume;
use crate::voxelio::TriangleMesh;

/// Interpretation of the mass term rho(p^sk): the sphere radius itself or
/// the full ball volume.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RhoMode {
    Radius,
    Volume,
}

/// Per boundary vertex: the associated skeletal point and the distance from
/// the vertex to the reconstruction surface voxel that provided it.
#[derive(Debug, Clone)]
pub struct BoundaryMedialMap {
    pub skel_index: Vec<usize>,
    pub distance: Vec<f64>,
}

/// Sparse symmetric medially weighted graph: adjacency lists (both
/// directions stored) and the diagonal mass matrix D^sym.
#[derive(Debug, Clone)]
pub struct MedialGraph {
    pub n: usize,
    pub adj: Vec<Vec<(u32, f64)>>,
    pub d_sym: Vec<f64>,
}

impl MedialGraph {
    /// Row sums of W^sym (the degree diagonal of the Laplacian).
    pub fn degrees(&self) -> Vec<f64> {
        self.adj
            .iter()
            .map(|row| row.iter().map(|e| e.1).sum())
            .collect()
    }

    /// y = (D_deg - W^sym) x, the graph Laplacian applied to x.
    pub fn laplacian_apply(&self, degrees: &[f64], x: &[f64], y: &mut [f64]) {
        for i in 0..self.n {
            let mut acc = degrees[i] * x[i];
            for &(j, w) in &self.adj[i] {
                acc -= w * x[j as usize];
            }
            y[i] = acc;
        }
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(|r| r.len()).sum::<usize>() / 2
    }
}

const FLOOR_EPS: f64 = 1e-6;

/// Associate every mesh vertex with the skeletal sphere that generates its
/// nearest reconstruction surface voxel.
pub fn map_boundary_to_medial(
    mesh: &TriangleMesh,
    skel: &SkeletalPointSet,
    recon: &ReconGrid,
) -> Result<BoundaryMedialMap> {
    let surface = recon.surface_indices();
    if surface.is_empty() {
        return Err(Error::Precondition(
            "reconstruction has no surface voxels".into(),
        ));
    }
    let centers: Vec<Point3<f64>> = surface
        .iter()
        .map(|&idx| {
            let [x, y, z] = recon.grid.coords(idx);
            recon.grid.voxel_center(x, y, z)
        })
        .collect();
    let tree = KdTree::build(&centers);
    let results: Vec<(usize, f64)> = mesh
        .vertices
        .par_iter()
        .map(|v| {
            let (si, d2) = tree.nearest(v).expect("nonempty surface");
            let gen = recon.generator[surface[si]];
            (gen, d2.sqrt())
        })
        .collect();
    let mut skel_index = Vec::with_capacity(results.len());
    let mut distance = Vec::with_capacity(results.len());
    for (g, d) in results {
        if g >= skel.points.len() {
            return Err(Error::Precondition(
                "reconstruction generator indices do not match skeleton".into(),
            ));
        }
        skel_index.push(g);
        distance.push(d);
    }
    Ok(BoundaryMedialMap {
        skel_index,
        distance,
    })
}

/// Assemble the medially weighted graph:
/// - mesh edges, weighted by the overlap volume of the endpoint spheres,
///   floored at eps * min ball volume when the spheres do not overlap;
/// - full coupling among vertices sharing one skeletal point;
/// - for each vertex, coupling to the <= K vertices with the largest
///   positive sphere overlap.
pub fn build_graph(
    mesh: &TriangleMesh,
    map: &BoundaryMedialMap,
    skel: &SkeletalPointSet,
    k_budget: usize,
    rho: RhoMode,
) -> Result<MedialGraph> {
    let n = mesh.vertices.len();
    if map.skel_index.len() != n {
        return Err(Error::ShapeMismatch(
            "boundary-medial map does not cover the mesh".into(),
        ));
    }
    let (vert_sk, centers, radii) = resolve_spheres(map, skel)?;
    build_graph_from_spheres(mesh, &vert_sk, &centers, &radii, k_budget, rho)
}

/// Resolve the sphere configuration referenced by a boundary-medial map:
/// compact per-vertex sphere ids (assigned in ascending skeletal-index
/// order) together with the sphere centers and radii.
pub fn resolve_spheres(
    map: &BoundaryMedialMap,
    skel: &SkeletalPointSet,
) -> Result<(Vec<u32>, Vec<Point3<f64>>, Vec<f64>)> {
    let uniq: Vec<usize> = map
        .skel_index
        .iter()
        .copied()
        .collect::<std::collections::BTreeSet<usize>>()
        .into_iter()
        .collect();
    let compact: BTreeMap<usize, u32> = uniq
        .iter()
        .enumerate()
        .map(|(k, &s)| (s, k as u32))
        .collect();
    let centers: Vec<Point3<f64>> = uniq
        .iter()
        .map(|&s| {
            let p = &skel.points[s];
            skel_center(skel, p.x, p.y, p.z)
        })
        .collect();
    let radii: Vec<f64> = uniq.iter().map(|&s| skel.points[s].r).collect();
    for (i, &r) in radii.iter().enumerate() {
        if !(r > 0.0) {
            return Err(Error::Validation {
                field: "r".into(),
                msg: format!("skeletal point {} has non-positive radius", uniq[i]),
            });
        }
    }
    let vert_sk: Vec<u32> = map.skel_index.iter().map(|s| compact[s]).collect();
    Ok((vert_sk, centers, radii))
}

/// Graph assembly on resolved sphere geometry: `vert_sk[i]` indexes the
/// sphere (center, radius) associated with vertex i. Weights depend only on
/// rigid invariants of the sphere configuration.
pub fn build_graph_from_spheres(
    mesh: &TriangleMesh,
    vert_sk: &[u32],
    centers: &[Point3<f64>],
    radii: &[f64],
    k_budget: usize,
    rho: RhoMode,
) -> Result<MedialGraph> {
    let n = mesh.vertices.len();
    let m = centers.len();

    // Pairwise overlaps between referenced skeletal spheres (m is small
    // compared to n: many vertices share a sphere).
    let overlaps: Vec<Vec<f64>> = (0..m)
        .into_par_iter()
        .map(|a| {
            (0..m)
                .map(|b| lens_volume((centers[a] - centers[b]).norm(), radii[a], radii[b]))
                .collect()
        })
        .collect();

    let mut weights: BTreeMap<(u32, u32), f64> = BTreeMap::new();
    let mut put = |i: u32, j: u32, w: f64| {
        if i == j {
            return;
        }
        let key = (i.min(j), i.max(j));
        let e = weights.entry(key).or_insert(0.0);
        if w > *e {
            *e = w;
        }
    };

    // Mesh edges with the connectivity floor.
    for t in &mesh.triangles {
        for e in 0..3 {
            let (i, j) = (t[e] as u32, t[(e + 1) % 3] as u32);
            let (a, b) = (vert_sk[i as usize] as usize, vert_sk[j as usize] as usize);
            let mut w = overlaps[a][b];
            if w <= 0.0 {
                let rmin = radii[a].min(radii[b]);
                w = FLOOR_EPS * 4.0 / 3.0 * std::f64::consts::PI * rmin * rmin * rmin;
            }
            put(i, j, w);
        }
    }

    // Vertices grouped by skeletal sphere: full mutual coupling.
    let mut groups: Vec<Vec<u32>> = vec![Vec::new(); m];
    for (v, &s) in vert_sk.iter().enumerate() {
        groups[s as usize].push(v as u32);
    }
    for (s, g) in groups.iter().enumerate() {
        let r = radii[s];
        let full = 4.0 / 3.0 * std::f64::consts::PI * r * r * r;
        for a in 0..g.len() {
            for b in a + 1..g.len() {
                put(g[a], g[b], full);
            }
        }
    }

    // Top-K positive-overlap couplings per vertex, computed at the skeletal
    // sphere level: take the K best distinct spheres by overlap and couple
    // to the lowest-index vertex group members until the budget is spent.
    if k_budget > 0 {
        let picks: Vec<Vec<(u32, f64)>> = (0..n)
            .into_par_iter()
            .map(|i| {
                let a = vert_sk[i] as usize;
                // Order candidate vertices by (overlap desc, index asc).
                let mut cand: Vec<(f64, u32)> = Vec::new();
                for (b, row) in overlaps[a].iter().enumerate() {
                    if *row <= 0.0 {
                        continue;
                    }
                    for &v in &groups[b] {
                        if v as usize != i {
                            cand.push((*row, v));
                        }
                    }
                }
                cand.sort_by(|x, y| y.0.partial_cmp(&x.0).unwrap().then(x.1.cmp(&y.1)));
                // Keep candidates tied with the K-th best (within relative
                // 1e-9) so the edge set is stable under rigid motion and
                // uniform scaling of the sphere configuration.
                if cand.len() > k_budget {
                    let cutoff = cand[k_budget - 1].0 * (1.0 - 1e-9);
                    let mut end = k_budget;
                    while end < cand.len() && cand[end].0 >= cutoff {
                        end += 1;
                    }
                    cand.truncate(end);
                }
                cand.into_iter().map(|(w, v)| (v, w)).collect()
            })
            .collect();
        for (i, row) in picks.iter().enumerate() {
            for &(v, w) in row {
                put(i as u32, v, w);
            }
        }
    }

    // Adjacency lists, symmetric by construction.
    let mut adj: Vec<Vec<(u32, f64)>> = vec![Vec::new(); n];
    for (&(i, j), &w) in &weights {
        adj[i as usize].push((j, w));
        adj[j as usize].push((i, w));
    }

    // Connectivity over the assembled edge set.
    let mut uf: Vec<u32> = (0..n as u32).collect();
    fn find(uf: &mut [u32], x: u32) -> u32 {
        let mut r = x;
        while uf[r as usize] != r {
            r = uf[r as usize];
        }
        let mut c = x;
        while uf[c as usize] != r {
            let nxt = uf[c as usize];
            uf[c as usize] = r;
            c = nxt;
        }
        r
    }
    for &(i, j) in weights.keys() {
        let (ri, rj) = (find(&mut uf, i), find(&mut uf, j));
        if ri != rj {
            uf[ri as usize] = rj;
        }
    }
    let root = find(&mut uf, 0);
    for v in 1..n as u32 {
        if find(&mut uf, v) != root {
            return Err(Error::Connectivity(
                "medial graph is disconnected; process components separately".into(),
            ));
        }
    }

    let d_sym: Vec<f64> = vert_sk
        .iter()
        .map(|&s| {
            let r = radii[s as usize];
            match rho {
                RhoMode::Radius => r,
                RhoMode::Volume => 4.0 / 3.0 * std::f64::consts::PI * r * r * r,
            }
        })
        .collect();

    Ok(MedialGraph { n, adj, d_sym })
}

pub(crate) fn skel_center(skel: &SkeletalPointSet, x: usize, y: usize, z: usize) -> Point3<f64> {
    Point3::new(
        skel.origin.x + x as f64 * skel.spacing,
        skel.origin.y + y as f64 * skel.spacing,
        skel.origin.z + z as f64 * skel.spacing,
    )
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::medial::{
        average_outward_flux, distance_transform, gradient_field, thin, SkeletalPoint,
    };
    use crate::recon::reconstruct;
    use crate::synth;
    use crate::voxelio::voxelize;

    /// Full front half of the pipeline on a mesh: voxelize, skeletonize,
    /// reconstruct, associate, and build the graph.
    pub fn graph_for_mesh(
        mesh: &TriangleMesh,
        resolution: usize,
        tau: f64,
        k_budget: usize,
    ) -> (SkeletalPointSet, BoundaryMedialMap, MedialGraph) {
        let grid = voxelize(mesh, resolution).unwrap();
        let df = distance_transform(&grid).unwrap();
        let vf = gradient_field(&df, &grid);
        let aof = average_outward_flux(&vf, &grid);
        let skel = thin(&grid, &aof, &df, tau).unwrap();
        let rec = reconstruct(&skel).unwrap();
        let map = map_boundary_to_medial(mesh, &skel, &rec).unwrap();
        let graph = build_graph(mesh, &map, &skel, k_budget, RhoMode::Radius).unwrap();
        (skel, map, graph)
    }

    #[test]
    fn cylinder_vertices_map_to_axis() {
        let mesh = synth::cylinder(0.5, 2.0, 24, 12);
        let grid = voxelize(&mesh, 64).unwrap();
        let df = distance_transform(&grid).unwrap();
        let vf = gradient_field(&df, &grid);
        let aof = average_outward_flux(&vf, &grid);
        let skel = thin(&grid, &aof, &df, 0.25).unwrap();
        let rec = reconstruct(&skel).unwrap();
        let map = map_boundary_to_medial(&mesh, &skel, &rec).unwrap();
        assert_eq!(map.skel_index.len(), mesh.vertices.len());
        // Wall vertices (away from the end caps) map to spheres on the axis
        // with radius near the cylinder radius.
        let mut checked = 0;
        for (vi, v) in mesh.vertices.iter().enumerate() {
            let rho = (v.x * v.x + v.y * v.y).sqrt();
            if v.z.abs() < 0.5 && rho > 0.45 {
                let p = &skel.points[map.skel_index[vi]];
                let c = skel_center(&skel, p.x, p.y, p.z);
                let axis_dist = (c.x * c.x + c.y * c.y).sqrt();
                assert!(
                    axis_dist <= 3.0 * skel.spacing,
                    "mapped sphere {axis_dist} off axis"
                );
                assert!(
                    (p.r - 0.5).abs() <= 3.0 * skel.spacing,
                    "mapped radius {} vs 0.5",
                    p.r
                );
                checked += 1;
            }
        }
        assert!(checked > 10);
    }

    #[test]
    fn vertex_on_surface_voxel_center_has_zero_distance() {
        // Build a tiny skeleton by hand and query its own surface centers.
        let skel = SkeletalPointSet {
            points: vec![SkeletalPoint { x: 8, y: 8, z: 8, r: 4.0, lambda: -1.0 }],
            dims: [16, 16, 16],
            spacing: 1.0,
            origin: Point3::origin(),
        };
        let rec = reconstruct(&skel).unwrap();
        let surf = rec.surface_indices();
        let [x, y, z] = rec.grid.coords(surf[0]);
        let c = rec.grid.voxel_center(x, y, z);
        let mesh = TriangleMesh::new(
            vec![
                c,
                Point3::new(c.x + 0.1, c.y, c.z),
                Point3::new(c.x, c.y + 0.1, c.z),
            ],
            vec![[0, 1, 2]],
        )
        .unwrap();
        let map = map_boundary_to_medial(&mesh, &skel, &rec).unwrap();
        assert_eq!(map.distance[0], 0.0);
        assert_eq!(map.skel_index[0], 0);
    }

    #[test]
    fn shared_sphere_weight_is_full_ball_volume() {
        let mesh = synth::cylinder(0.5, 2.0, 24, 12);
        let (skel, map, graph) = graph_for_mesh(&mesh, 64, 0.25, 8);
        let full = |r: f64| 4.0 / 3.0 * std::f64::consts::PI * r * r * r;
        // Find two vertices sharing a skeletal point and check the weight.
        let mut found = false;
        'outer: for i in 0..mesh.vertices.len() {
            for j in i + 1..mesh.vertices.len() {
                if map.skel_index[i] == map.skel_index[j] {
                    let r = skel.points[map.skel_index[i]].r;
                    let w = graph.adj[i]
                        .iter()
                        .find(|e| e.0 as usize == j)
                        .map(|e| e.1)
                        .unwrap_or(0.0);
                    assert!((w - full(r)).abs() < 1e-9 * full(r).max(1.0));
                    found = true;
                    break 'outer;
                }
            }
        }
        assert!(found, "no vertex pair shares a skeletal sphere");
    }

    #[test]
    fn graph_is_symmetric_nonnegative_connected() {
        let mesh = synth::torus(1.0, 0.35, 20, 12);
        let (_, _, graph) = graph_for_mesh(&mesh, 64, 0.25, 8);
        assert_eq!(graph.n, mesh.vertices.len());
        for i in 0..graph.n {
            for &(j, w) in &graph.adj[i] {
                assert!(w >= 0.0);
                assert_ne!(i as u32, j);
                let back = graph.adj[j as usize]
                    .iter()
                    .find(|e| e.0 as usize == i)
                    .expect("missing symmetric edge");
                assert_eq!(back.1, w);
            }
            assert!(graph.d_sym[i] > 0.0);
        }
    }

    #[test]
    fn opposite_cylinder_wall_vertices_couple_strongly() {
        let mesh = synth::cylinder(0.5, 2.0, 32, 16);
        let (_, map, graph) = graph_for_mesh(&mesh, 64, 0.25, 16);
        let w_of = |a: usize, b: usize| {
            graph.adj[a]
                .iter()
                .find(|e| e.0 as usize == b)
                .map(|e| e.1)
                .unwrap_or(0.0)
        };
        // Diametrically opposite mid-height wall vertices that share the
        // axis sphere: geodesically distant, yet coupled at full strength.
        let mut pair = None;
        'outer: for i in 0..mesh.vertices.len() {
            let vi = mesh.vertices[i];
            let ri = (vi.x * vi.x + vi.y * vi.y).sqrt();
            if ri < 0.45 || vi.z.abs() > 0.5 {
                continue;
            }
            for j in i + 1..mesh.vertices.len() {
                if map.skel_index[j] != map.skel_index[i] {
                    continue;
                }
                let vj = mesh.vertices[j];
                let rj = (vj.x * vj.x + vj.y * vj.y).sqrt();
                let cos = (vi.x * vj.x + vi.y * vj.y) / (ri * rj);
                if rj > 0.45 && cos < -0.9 {
                    pair = Some((i, j));
                    break 'outer;
                }
            }
        }
        let (i, opp) = pair.expect("no antipodal pair shares an axis sphere");
        let w_opp = w_of(i, opp);
        // Nearby same-side vertex mapped to a different sphere.
        let vi = mesh.vertices[i];
        let near = graph.adj[i]
            .iter()
            .map(|e| e.0 as usize)
            .filter(|&j| map.skel_index[j] != map.skel_index[i])
            .min_by(|&a, &b| {
                let da = (mesh.vertices[a] - vi).norm();
                let db = (mesh.vertices[b] - vi).norm();
                da.partial_cmp(&db).unwrap()
            })
            .expect("no neighbor on a different sphere");
        let w_near = w_of(i, near);
        assert!(
            w_opp > w_near,
            "opposite-wall weight {w_opp:.3e} not above same-side weight {w_near:.3e}"
        );
    }
}
