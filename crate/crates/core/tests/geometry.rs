mod common;

use common::{nearest_per_bucket, radial_scene, rand_point};
use cover_core::geometry::{
    convex_hull, mirror_points, select_visible_indices, select_visible_obstacles, HullDimension,
};
use cover_core::Point3;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Every input point lies on the inner side of every hull face.
fn assert_hull_sound(pts: &[Point3]) {
    let hull = convex_hull(pts).unwrap();
    assert_eq!(hull.dimension, HullDimension::Full);
    for f in &hull.faces {
        let (a, b, c) = (pts[f[0]], pts[f[1]], pts[f[2]]);
        let n = (b - a).cross(c - a);
        let n = n / n.norm();
        for &p in pts {
            assert!(n.dot(p - a) <= 1e-9, "point {:?} outside face", p.to_array());
        }
    }
    // every vertex is extreme: some face uses it
    for &v in &hull.vertex_indices {
        assert!(hull.faces.iter().any(|f| f.contains(&v)));
    }
}

#[test]
fn hull_is_sound_on_random_clouds() {
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    for _ in 0..40 {
        let n = rng.gen_range(4..=200);
        let pts: Vec<Point3> = (0..n).map(|_| rand_point(&mut rng, -3.0, 3.0)).collect();
        assert_hull_sound(&pts);
    }
}

#[test]
fn hull_of_ball_with_poles() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut pts: Vec<Point3> = Vec::new();
    while pts.len() < 100 {
        let p = rand_point(&mut rng, -1.0, 1.0);
        if p.norm() <= 1.0 {
            pts.push(p);
        }
    }
    for (k, s) in [(0, 2.0), (0, -2.0), (1, 2.0), (1, -2.0), (2, 2.0), (2, -2.0)] {
        let mut a = [0.0; 3];
        a[k] = s;
        pts.push(Point3::new(a[0], a[1], a[2]));
    }
    let hull = convex_hull(&pts).unwrap();
    assert_eq!(hull.vertex_indices, (100..106).collect::<Vec<_>>());
}

#[test]
fn hidden_point_removal_matches_nearest_per_direction() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for k in 0..50 {
        let scene = radial_scene(&mut rng, k % 2 == 0, 15.0);
        let got = select_visible_indices(&scene.points, scene.center, 15.0).unwrap();
        assert_eq!(got, nearest_per_bucket(&scene), "scene {k}");
    }
}

#[test]
fn cube_corner_directions() {
    let mut pts = Vec::new();
    for d in [3.0, 6.0] {
        for sx in [-1.0, 1.0] {
            for sy in [-1.0, 1.0] {
                for sz in [-1.0, 1.0] {
                    pts.push(Point3::new(sx, sy, sz) * (d / 3f64.sqrt()));
                }
            }
        }
    }
    let got = select_visible_obstacles(&pts, Point3::ORIGIN, 15.0).unwrap();
    assert_eq!(got, pts[..8].to_vec());
}

#[test]
fn selection_is_idempotent_and_in_range() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..30 {
        let c = rand_point(&mut rng, -2.0, 2.0);
        let pts: Vec<Point3> = (0..150).map(|_| c + common::rand_unit(&mut rng) * rng.gen_range(0.5..14.0)).collect();
        let once = select_visible_obstacles(&pts, c, 15.0).unwrap();
        assert!(once.iter().all(|q| q.distance(c) <= 15.0));
        let twice = select_visible_obstacles(&once, c, 15.0).unwrap();
        assert_eq!(once, twice);
    }
}

proptest! {
    #[test]
    fn mirror_norm_identity(
        c in prop::array::uniform3(-10.0f64..10.0),
        dir in prop::array::uniform3(-1.0f64..1.0),
        dist in 0.01f64..15.0,
    ) {
        let d = Point3::new(dir[0], dir[1], dir[2]);
        prop_assume!(d.norm() > 1e-3);
        let center = Point3::new(c[0], c[1], c[2]);
        let q = center + d * (dist / d.norm());
        let f = mirror_points(&[q], center, 15.0).unwrap()[0];
        prop_assert!((f.norm() - (30.0 - dist)).abs() <= 1e-9 * (30.0 - dist));
    }

    #[test]
    fn mirror_is_monotone_on_a_ray(a in 0.1f64..15.0, b in 0.1f64..15.0) {
        prop_assume!((a - b).abs() > 1e-6);
        let out = mirror_points(&[Point3::new(a, 0.0, 0.0), Point3::new(b, 0.0, 0.0)], Point3::ORIGIN, 15.0).unwrap();
        prop_assert_eq!(a < b, out[0].norm() > out[1].norm());
    }
}
