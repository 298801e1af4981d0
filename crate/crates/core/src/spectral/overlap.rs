//! Exact sphere-sphere intersection (lens) volume.

use nalgebra::Point3;

use crate::error::{Error, Result};

/// Volume of the intersection of two balls. Zero when disjoint, the smaller
/// ball's volume when one contains the other, otherwise the closed-form lens
/// volume
///   V = pi (r1 + r2 - d)^2 (d^2 + 2 d r2 - 3 r2^2 + 2 d r1 + 6 r1 r2 - 3 r1^2) / (12 d).
pub fn sphere_overlap_volume(
    c1: &Point3<f64>,
    r1: f64,
    c2: &Point3<f64>,
    r2: f64,
) -> Result<f64> {
    if !(r1 > 0.0) || !(r2 > 0.0) {
        return Err(Error::Domain(format!(
            "sphere radii must be positive (got {r1}, {r2})"
        )));
    }
    let d = (c1 - c2).norm();
    Ok(lens_volume(d, r1, r2))
}

pub(crate) fn lens_volume(d: f64, r1: f64, r2: f64) -> f64 {
    if d >= r1 + r2 {
        return 0.0;
    }
    if d <= (r1 - r2).abs() {
        let r = r1.min(r2);
        return 4.0 / 3.0 * std::f64::consts::PI * r * r * r;
    }
    let a = r1 + r2 - d;
    std::f64::consts::PI
        * a
        * a
        * (d * d + 2.0 * d * r2 - 3.0 * r2 * r2 + 2.0 * d * r1 + 6.0 * r1 * r2 - 3.0 * r1 * r1)
        / (12.0 * d)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rayon::prelude::*;

    /// Monte-Carlo lens volume: rejection sampling in the bounding box of
    /// the intersection region, spheres placed along the x axis.
    pub fn monte_carlo_lens(d: f64, r1: f64, r2: f64, samples: u64, seed: u64) -> f64 {
        // Intersection fits in [max(-r1, d-r2), min(r1, d+r2)] along x and
        // within radius min(r1, r2) transversally.
        let x_lo = (-r1).max(d - r2);
        let x_hi = r1.min(d + r2);
        if x_hi <= x_lo {
            return 0.0;
        }
        let t = r1.min(r2);
        let box_vol = (x_hi - x_lo) * (2.0 * t) * (2.0 * t);
        let chunks = 64u64;
        let per = samples / chunks;
        let hits: u64 = (0..chunks)
            .into_par_iter()
            .map(|c| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (c.wrapping_mul(0x9e3779b9)));
                let mut h = 0u64;
                for _ in 0..per {
                    let x = rng.gen_range(x_lo..x_hi);
                    let y = rng.gen_range(-t..t);
                    let z = rng.gen_range(-t..t);
                    let in1 = x * x + y * y + z * z <= r1 * r1;
                    let dx = x - d;
                    let in2 = dx * dx + y * y + z * z <= r2 * r2;
                    if in1 && in2 {
                        h += 1;
                    }
                }
                h
            })
            .sum();
        box_vol * hits as f64 / (per * chunks) as f64
    }

    #[test]
    fn coincident_and_disjoint_branches() {
        let o = Point3::origin();
        let v = sphere_overlap_volume(&o, 1.0, &o, 1.0).unwrap();
        assert!((v - 4.0 * std::f64::consts::PI / 3.0).abs() < 1e-12);
        let far = Point3::new(3.0, 0.0, 0.0);
        assert_eq!(sphere_overlap_volume(&o, 1.0, &far, 1.0).unwrap(), 0.0);
        // Touching exactly.
        let touch = Point3::new(2.0, 0.0, 0.0);
        assert_eq!(sphere_overlap_volume(&o, 1.0, &touch, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn containment_gives_smaller_ball() {
        let o = Point3::origin();
        let c = Point3::new(0.3, 0.0, 0.0);
        let v = sphere_overlap_volume(&o, 2.0, &c, 0.5).unwrap();
        assert!((v - 4.0 / 3.0 * std::f64::consts::PI * 0.125).abs() < 1e-12);
    }

    #[test]
    fn equal_spheres_half_overlap_matches_monte_carlo() {
        let v = lens_volume(1.0, 1.0, 1.0);
        let mc = monte_carlo_lens(1.0, 1.0, 1.0, 10_000_000, 99);
        assert!(
            (v - mc).abs() / v < 0.005,
            "closed form {v} vs Monte Carlo {mc}"
        );
        // Spherical-cap formula cross-check: two caps of height h = 1/2 on a
        // unit sphere, V = 2 * pi h^2 (3r - h)/3.
        let h: f64 = 0.5;
        let cap = std::f64::consts::PI * h * h * (3.0 - h) / 3.0;
        assert!((v - 2.0 * cap).abs() < 1e-12);
    }

    #[test]
    fn random_pairs_match_monte_carlo() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for trial in 0..5u64 {
            let r1 = rng.gen_range(0.3..1.5);
            let r2 = rng.gen_range(0.3..1.5);
            let d = rng.gen_range(((r1 - r2) as f64).abs() * 0.9..(r1 + r2) * 1.05);
            let v = lens_volume(d, r1, r2);
            let mc = monte_carlo_lens(d, r1, r2, 10_000_000, 1000 + trial);
            let ball = 4.0 / 3.0 * std::f64::consts::PI * (r1.min(r2) as f64).powi(3);
            assert!(
                (v - mc).abs() <= 0.005 * ball.max(v),
                "d={d} r1={r1} r2={r2}: closed {v} vs mc {mc}"
            );
        }
    }

    #[test]
    fn nonpositive_radius_is_error() {
        let o = Point3::origin();
        assert!(sphere_overlap_volume(&o, 0.0, &o, 1.0).is_err());
        assert!(sphere_overlap_volume(&o, 1.0, &o, -2.0).is_err());
    }

    #[test]
    fn symmetry_and_monotonicity() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..100 {
            let r1 = rng.gen_range(0.1..2.0);
            let r2 = rng.gen_range(0.1..2.0);
            let d = rng.gen_range(0.0..4.0);
            assert!((lens_volume(d, r1, r2) - lens_volume(d, r2, r1)).abs() < 1e-12);
        }
        // Volume decreases as centers separate.
        let mut prev = f64::INFINITY;
        for i in 0..40 {
            let d = i as f64 * 0.05;
            let v = lens_volume(d, 1.0, 0.8);
            assert!(v <= prev + 1e-12);
            prev = v;
        }
    }
}
