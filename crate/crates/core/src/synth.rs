//! Synthetic test solids: watertight meshes and analytic occupancy grids.

use nalgebra::{Point3, Vector3};

use crate::voxelio::{TriangleMesh, VoxelGrid};

/// Axis-aligned cube `[0, size]^3`.
pub fn cube(size: f64) -> TriangleMesh {
    let s = size;
    let vertices = vec![
        Point3::new(0.0, 0.0, 0.0),
        Point3::new(s, 0.0, 0.0),
        Point3::new(s, s, 0.0),
        Point3::new(0.0, s, 0.0),
        Point3::new(0.0, 0.0, s),
        Point3::new(s, 0.0, s),
        Point3::new(s, s, s),
        Point3::new(0.0, s, s),
    ];
    let triangles = vec![
        [0, 2, 1],
        [0, 3, 2],
        [4, 5, 6],
        [4, 6, 7],
        [0, 1, 5],
        [0, 5, 4],
        [1, 2, 6],
        [1, 6, 5],
        [2, 3, 7],
        [2, 7, 6],
        [3, 0, 4],
        [3, 4, 7],
    ];
    TriangleMesh::new(vertices, triangles).expect("cube construction")
}

/// Icosphere of the given radius centered at the origin.
pub fn icosphere(radius: f64, subdivisions: usize) -> TriangleMesh {
    let phi = (1.0 + 5.0f64.sqrt()) / 2.0;
    let mut vertices: Vec<Point3<f64>> = [
        (-1.0, phi, 0.0),
        (1.0, phi, 0.0),
        (-1.0, -phi, 0.0),
        (1.0, -phi, 0.0),
        (0.0, -1.0, phi),
        (0.0, 1.0, phi),
        (0.0, -1.0, -phi),
        (0.0, 1.0, -phi),
        (phi, 0.0, -1.0),
        (phi, 0.0, 1.0),
        (-phi, 0.0, -1.0),
        (-phi, 0.0, 1.0),
    ]
    .iter()
    .map(|&(x, y, z)| Point3::from(Vector3::new(x, y, z).normalize()))
    .collect();
    let mut faces: Vec<[usize; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    for _ in 0..subdivisions {
        let mut midpoint = std::collections::HashMap::new();
        let mut new_faces = Vec::with_capacity(faces.len() * 4);
        for f in &faces {
            let mut mid = [0usize; 3];
            for k in 0..3 {
                let (a, b) = (f[k], f[(k + 1) % 3]);
                let key = (a.min(b), a.max(b));
                mid[k] = *midpoint.entry(key).or_insert_with(|| {
                    let m = Point3::from(
                        ((vertices[a].coords + vertices[b].coords) / 2.0).normalize(),
                    );
                    vertices.push(m);
                    vertices.len() - 1
                });
            }
            new_faces.push([f[0], mid[0], mid[2]]);
            new_faces.push([f[1], mid[1], mid[0]]);
            new_faces.push([f[2], mid[2], mid[1]]);
            new_faces.push([mid[0], mid[1], mid[2]]);
        }
        faces = new_faces;
    }
    for v in &mut vertices {
        *v = Point3::from(v.coords * radius);
    }
    TriangleMesh::new(vertices, faces).expect("icosphere construction")
}

/// Closed surface of revolution around the z axis.
///
/// `profile` is a polyline of (z, r) pairs with strictly increasing z and
/// r > 0, except that the first/last entry may have r = 0 to close with a
/// pole. Ends with r > 0 are closed with flat fan caps.
pub fn revolve(profile: &[(f64, f64)], segments: usize) -> TriangleMesh {
    assert!(profile.len() >= 2 && segments >= 3);
    let mut vertices: Vec<Point3<f64>> = Vec::new();
    let mut triangles: Vec<[usize; 3]> = Vec::new();
    // ring_start[i] = Some(base index) for rings, None marks a pole vertex.
    let mut ring: Vec<Option<usize>> = Vec::new();
    let mut pole: Vec<Option<usize>> = Vec::new();
    for &(z, r) in profile {
        if r > 0.0 {
            let base = vertices.len();
            for j in 0..segments {
                let th = 2.0 * std::f64::consts::PI * j as f64 / segments as f64;
                vertices.push(Point3::new(r * th.cos(), r * th.sin(), z));
            }
            ring.push(Some(base));
            pole.push(None);
        } else {
            vertices.push(Point3::new(0.0, 0.0, z));
            ring.push(None);
            pole.push(Some(vertices.len() - 1));
        }
    }
    for i in 0..profile.len() - 1 {
        match (ring[i], ring[i + 1]) {
            (Some(a), Some(b)) => {
                for j in 0..segments {
                    let jn = (j + 1) % segments;
                    triangles.push([a + j, a + jn, b + j]);
                    triangles.push([a + jn, b + jn, b + j]);
                }
            }
            (None, Some(b)) => {
                let p = pole[i].unwrap();
                for j in 0..segments {
                    let jn = (j + 1) % segments;
                    triangles.push([p, b + jn, b + j]);
                }
            }
            (Some(a), None) => {
                let p = pole[i + 1].unwrap();
                for j in 0..segments {
                    let jn = (j + 1) % segments;
                    triangles.push([p, a + j, a + jn]);
                }
            }
            (None, None) => panic!("two consecutive poles in revolve profile"),
        }
    }
    // Flat caps for open ends.
    if let Some(a) = ring[0] {
        let c = vertices.len();
        vertices.push(Point3::new(0.0, 0.0, profile[0].0));
        for j in 0..segments {
            let jn = (j + 1) % segments;
            triangles.push([c, a + jn, a + j]);
        }
    }
    if let Some(a) = ring[profile.len() - 1] {
        let c = vertices.len();
        vertices.push(Point3::new(0.0, 0.0, profile[profile.len() - 1].0));
        for j in 0..segments {
            let jn = (j + 1) % segments;
            triangles.push([c, a + j, a + jn]);
        }
    }
    TriangleMesh::new(vertices, triangles).expect("revolve construction")
}

/// Capped cylinder of the given radius and length, axis along z, centered at
/// the origin.
pub fn cylinder(radius: f64, length: f64, segments: usize, rings: usize) -> TriangleMesh {
    let profile: Vec<(f64, f64)> = (0..=rings)
        .map(|i| (-length / 2.0 + length * i as f64 / rings as f64, radius))
        .collect();
    revolve(&profile, segments)
}

/// Torus with major radius `big_r` and tube radius `small_r`, axis along z.
pub fn torus(big_r: f64, small_r: f64, nu: usize, nv: usize) -> TriangleMesh {
    let mut vertices = Vec::with_capacity(nu * nv);
    for i in 0..nu {
        let u = 2.0 * std::f64::consts::PI * i as f64 / nu as f64;
        for j in 0..nv {
            let v = 2.0 * std::f64::consts::PI * j as f64 / nv as f64;
            let w = big_r + small_r * v.cos();
            vertices.push(Point3::new(w * u.cos(), w * u.sin(), small_r * v.sin()));
        }
    }
    let mut triangles = Vec::with_capacity(2 * nu * nv);
    for i in 0..nu {
        let i2 = (i + 1) % nu;
        for j in 0..nv {
            let j2 = (j + 1) % nv;
            let a = i * nv + j;
            let b = i2 * nv + j;
            let c = i2 * nv + j2;
            let d = i * nv + j2;
            triangles.push([a, b, c]);
            triangles.push([a, c, d]);
        }
    }
    TriangleMesh::new(vertices, triangles).expect("torus construction")
}

/// L-shaped prism: the L polygon with arms of length 2 and width 1 in the
/// xy plane, extruded to the given height along z, uniformly scaled.
pub fn l_solid(scale: f64, height: f64) -> TriangleMesh {
    // Boundary walk of the L outline, with the extra collinear vertices
    // needed so bottom/top triangulations and walls share edges exactly.
    let outline = [
        (0.0, 0.0),
        (1.0, 0.0),
        (2.0, 0.0),
        (2.0, 1.0),
        (1.0, 1.0),
        (1.0, 2.0),
        (0.0, 2.0),
        (0.0, 1.0),
    ];
    let n = outline.len();
    let mut vertices = Vec::with_capacity(2 * n);
    for &(x, y) in &outline {
        vertices.push(Point3::new(x * scale, y * scale, 0.0));
    }
    for &(x, y) in &outline {
        vertices.push(Point3::new(x * scale, y * scale, height));
    }
    // Three unit squares triangulated on matching vertices:
    // (0,0)-(1,1), (1,0)-(2,1), (0,1)-(1,2) in outline indices.
    let quads = [[0, 1, 4, 7], [1, 2, 3, 4], [7, 4, 5, 6]];
    let mut triangles = Vec::new();
    for q in quads {
        // bottom (normal -z) and top (normal +z)
        triangles.push([q[0], q[2], q[1]]);
        triangles.push([q[0], q[3], q[2]]);
        triangles.push([q[0] + n, q[1] + n, q[2] + n]);
        triangles.push([q[0] + n, q[2] + n, q[3] + n]);
    }
    for i in 0..n {
        let j = (i + 1) % n;
        triangles.push([i, j, j + n]);
        triangles.push([i, j + n, i + n]);
    }
    TriangleMesh::new(vertices, triangles).expect("l_solid construction")
}

/// Dumbbell profile shared by the mesh and grid generators: two bulbs of
/// radius 0.55 at z = ±0.95 joined by a bar of radius 0.18.
pub const DUMBBELL_BULB_R: f64 = 0.55;
pub const DUMBBELL_BULB_Z: f64 = 0.95;
pub const DUMBBELL_BAR_R: f64 = 0.18;

pub fn dumbbell_radius(z: f64) -> f64 {
    let bulb = |zc: f64| {
        let d2 = DUMBBELL_BULB_R * DUMBBELL_BULB_R - (z - zc) * (z - zc);
        if d2 > 0.0 {
            d2.sqrt()
        } else {
            0.0
        }
    };
    let bar = if z.abs() <= DUMBBELL_BULB_Z {
        DUMBBELL_BAR_R
    } else {
        0.0
    };
    bulb(-DUMBBELL_BULB_Z).max(bulb(DUMBBELL_BULB_Z)).max(bar)
}

/// The z at which each bulb surface meets the bar: the analytic boundary of
/// the three-part ground-truth segmentation.
pub fn dumbbell_neck_z() -> f64 {
    DUMBBELL_BULB_Z - (DUMBBELL_BULB_R * DUMBBELL_BULB_R - DUMBBELL_BAR_R * DUMBBELL_BAR_R).sqrt()
}

/// Dumbbell as a single watertight surface of revolution.
pub fn dumbbell(segments: usize, profile_samples: usize) -> TriangleMesh {
    let z0 = -DUMBBELL_BULB_Z - DUMBBELL_BULB_R;
    let z1 = DUMBBELL_BULB_Z + DUMBBELL_BULB_R;
    let mut profile = Vec::with_capacity(profile_samples + 2);
    profile.push((z0, 0.0));
    for i in 1..profile_samples {
        let z = z0 + (z1 - z0) * i as f64 / profile_samples as f64;
        profile.push((z, dumbbell_radius(z).max(1e-3)));
    }
    profile.push((z1, 0.0));
    revolve(&profile, segments)
}

/// Tube swept along a polyline with a circular cross-section, capped ends.
/// Frames are parallel-transported so two sweeps of equal-length polylines
/// with the same sampling are near-isometric.
pub fn tube(path: &[Point3<f64>], radius: f64, segments: usize) -> TriangleMesh {
    assert!(path.len() >= 2 && segments >= 3);
    let n = path.len();
    let mut tangents = Vec::with_capacity(n);
    for i in 0..n {
        let t = if i == 0 {
            path[1] - path[0]
        } else if i == n - 1 {
            path[n - 1] - path[n - 2]
        } else {
            path[i + 1] - path[i - 1]
        };
        tangents.push(t.normalize());
    }
    // Parallel transport an initial normal along the path.
    let mut normal = {
        let t = tangents[0];
        let trial = if t.x.abs() < 0.9 {
            Vector3::x()
        } else {
            Vector3::y()
        };
        (trial - t * trial.dot(&t)).normalize()
    };
    let mut vertices = Vec::with_capacity(n * segments + 2);
    let mut triangles = Vec::new();
    for i in 0..n {
        if i > 0 {
            let prev = tangents[i - 1];
            let cur = tangents[i];
            let axis = prev.cross(&cur);
            let s = axis.norm();
            if s > 1e-12 {
                let angle = s.atan2(prev.dot(&cur));
                let rot = nalgebra::Rotation3::from_axis_angle(
                    &nalgebra::Unit::new_normalize(axis),
                    angle,
                );
                normal = rot * normal;
            }
            normal = (normal - cur * normal.dot(&cur)).normalize();
        }
        let binormal = tangents[i].cross(&normal);
        for j in 0..segments {
            let th = 2.0 * std::f64::consts::PI * j as f64 / segments as f64;
            vertices.push(path[i] + normal * (radius * th.cos()) + binormal * (radius * th.sin()));
        }
    }
    for i in 0..n - 1 {
        let a = i * segments;
        let b = (i + 1) * segments;
        for j in 0..segments {
            let jn = (j + 1) % segments;
            triangles.push([a + j, a + jn, b + j]);
            triangles.push([a + jn, b + jn, b + j]);
        }
    }
    let c0 = vertices.len();
    vertices.push(path[0]);
    let c1 = vertices.len();
    vertices.push(path[n - 1]);
    let last = (n - 1) * segments;
    for j in 0..segments {
        let jn = (j + 1) % segments;
        triangles.push([c0, jn, j]);
        triangles.push([c1, last + j, last + jn]);
    }
    TriangleMesh::new(vertices, triangles).expect("tube construction")
}

/// One pose of the articulated tube family: a non-planar centerline bent by
/// `bend` (0 = straight), resampled at equal arc length so different poses
/// of the same family are near-isometric with identity vertex correspondence.
pub fn bent_tube(bend: f64, rings: usize, segments: usize, radius: f64) -> TriangleMesh {
    let raw = |t: f64| {
        Point3::new(
            4.0 * t,
            bend * (std::f64::consts::PI * t).sin(),
            0.6 * bend * (2.0 * std::f64::consts::PI * t).sin(),
        )
    };
    // Resample by arc length so total length is bend-independent after
    // normalization.
    let fine: Vec<Point3<f64>> = (0..=2048).map(|i| raw(i as f64 / 2048.0)).collect();
    let mut cum = vec![0.0];
    for w in fine.windows(2) {
        cum.push(cum.last().unwrap() + (w[1] - w[0]).norm());
    }
    let total = *cum.last().unwrap();
    let target_len = 4.0;
    let mut path = Vec::with_capacity(rings + 1);
    for i in 0..=rings {
        let s = total * i as f64 / rings as f64;
        let j = cum.partition_point(|&c| c < s).min(fine.len() - 1).max(1);
        let t = (s - cum[j - 1]) / (cum[j] - cum[j - 1]).max(1e-30);
        let p = fine[j - 1] + (fine[j] - fine[j - 1]) * t;
        path.push(Point3::from(p.coords * (target_len / total)));
    }
    tube(&path, radius, segments)
}

/// Cylinder body plus a handle: a tube swept along an arc whose capped ends
/// are buried inside the body. Returned as two closed meshes; rasterize with
/// `voxelize_union`.
pub fn cylinder_with_handle() -> (TriangleMesh, TriangleMesh) {
    let body = cylinder(0.5, 2.0, 32, 20);
    let arc: Vec<Point3<f64>> = (0..=24)
        .map(|i| {
            let th = std::f64::consts::PI * i as f64 / 24.0;
            Point3::new(0.25 + 0.75 * th.sin(), 0.0, -0.55 * th.cos())
        })
        .collect();
    let handle = tube(&arc, 0.16, 14);
    (body, handle)
}

// ---------------------------------------------------------------------------
// Analytic occupancy grids
// ---------------------------------------------------------------------------

/// Grid over the box [lo, hi] at `resolution` voxels along the longest axis,
/// with 2 empty padding layers, occupied where `inside(center)` holds.
pub fn grid_from_fn(
    lo: Point3<f64>,
    hi: Point3<f64>,
    resolution: usize,
    inside: impl Fn(&Point3<f64>) -> bool,
) -> VoxelGrid {
    let spacing = (hi - lo).amax() / resolution as f64;
    let dims = [
        (((hi.x - lo.x) / spacing).ceil() as usize) + 4,
        (((hi.y - lo.y) / spacing).ceil() as usize) + 4,
        (((hi.z - lo.z) / spacing).ceil() as usize) + 4,
    ];
    let origin = Point3::new(
        lo.x - 1.5 * spacing,
        lo.y - 1.5 * spacing,
        lo.z - 1.5 * spacing,
    );
    let mut grid = VoxelGrid::new(dims, spacing, origin);
    for z in 0..dims[2] {
        for y in 0..dims[1] {
            for x in 0..dims[0] {
                if inside(&grid.voxel_center(x, y, z)) {
                    grid.set(x, y, z, true);
                }
            }
        }
    }
    grid
}

pub fn ball_grid(resolution: usize) -> VoxelGrid {
    let r = 1.0;
    grid_from_fn(
        Point3::new(-r, -r, -r),
        Point3::new(r, r, r),
        resolution,
        |p| p.coords.norm_squared() <= r * r,
    )
}

pub fn cube_grid(resolution: usize) -> VoxelGrid {
    grid_from_fn(
        Point3::new(0.0, 0.0, 0.0),
        Point3::new(1.0, 1.0, 1.0),
        resolution,
        |p| (0.0..=1.0).contains(&p.x) && (0.0..=1.0).contains(&p.y) && (0.0..=1.0).contains(&p.z),
    )
}

pub fn cylinder_grid(resolution: usize, radius: f64, length: f64) -> VoxelGrid {
    grid_from_fn(
        Point3::new(-radius, -radius, -length / 2.0),
        Point3::new(radius, radius, length / 2.0),
        resolution,
        |p| p.x * p.x + p.y * p.y <= radius * radius && p.z.abs() <= length / 2.0,
    )
}

pub fn torus_grid(resolution: usize, big_r: f64, small_r: f64) -> VoxelGrid {
    let e = big_r + small_r;
    grid_from_fn(
        Point3::new(-e, -e, -small_r),
        Point3::new(e, e, small_r),
        resolution,
        |p| {
            let q = (p.x * p.x + p.y * p.y).sqrt() - big_r;
            q * q + p.z * p.z <= small_r * small_r
        },
    )
}

pub fn l_solid_grid(resolution: usize) -> VoxelGrid {
    grid_from_fn(
        Point3::new(0.0, 0.0, 0.0),
        Point3::new(2.0, 2.0, 1.0),
        resolution,
        |p| {
            let in_xy = (p.x >= 0.0 && p.x <= 2.0 && p.y >= 0.0 && p.y <= 1.0)
                || (p.x >= 0.0 && p.x <= 1.0 && p.y >= 0.0 && p.y <= 2.0);
            in_xy && p.z >= 0.0 && p.z <= 1.0
        },
    )
}

pub fn dumbbell_grid(resolution: usize) -> VoxelGrid {
    let e = DUMBBELL_BULB_Z + DUMBBELL_BULB_R;
    grid_from_fn(
        Point3::new(-DUMBBELL_BULB_R, -DUMBBELL_BULB_R, -e),
        Point3::new(DUMBBELL_BULB_R, DUMBBELL_BULB_R, e),
        resolution,
        |p| {
            let rr = (p.x * p.x + p.y * p.y).sqrt();
            rr <= dumbbell_radius(p.z)
        },
    )
}
