mod common;

use common::{check_bvc_properties, rand_point, random_config};
use cover_core::safe_region::{build_bvc, build_bvc_with, neighbor_halfspace, ObstacleSeparation, RobotDisk};
use cover_core::{CoverError, Point3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn random_configurations_satisfy_all_properties() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for k in 0..60 {
        let n = rng.gen_range(2..=8);
        let m = rng.gen_range(0..=60);
        let cfg = random_config(&mut rng, n, m, 4.0);
        check_bvc_properties(&cfg, &mut rng, 150, 1e-7).unwrap_or_else(|e| panic!("config {k}: {e}"));
    }
}

#[test]
fn tightly_packed_robots() {
    // touching disks leave a cell that is exactly the owner's position along the contact axis
    let a = RobotDisk::new(0, Point3::ORIGIN, 0.25).unwrap();
    let b = RobotDisk::new(1, Point3::new(0.5, 0.0, 0.0), 0.25).unwrap();
    let cell = build_bvc(&a, &[b], &[]).unwrap();
    assert!(cell.contains(a.position));
    assert!(!cell.contains(Point3::new(1e-6, 0.0, 0.0)));
    assert!(cell.contains(Point3::new(0.0, 3.0, 0.0)));
}

#[test]
fn overlap_and_coincidence_are_errors() {
    let a = RobotDisk::new(0, Point3::ORIGIN, 0.25).unwrap();
    let b = RobotDisk::new(1, Point3::new(0.3, 0.0, 0.0), 0.25).unwrap();
    assert_eq!(build_bvc(&a, &[b], &[]), Err(CoverError::RobotsOverlap(0, 1)));
    let c = RobotDisk::new(2, Point3::ORIGIN, 0.25).unwrap();
    assert_eq!(neighbor_halfspace(&a, &c), Err(CoverError::RobotsCoincide));
    assert_eq!(build_bvc(&a, &[], &[Point3::new(0.1, 0.0, 0.0)]), Err(CoverError::ObstacleInsideSafetyRadius));
}

#[test]
fn joint_separation_is_a_subset_of_safe_space() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for _ in 0..40 {
        let me = RobotDisk::new(0, Point3::ORIGIN, 0.25).unwrap();
        let dir = Point3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let center = dir * (3.0 / dir.norm().max(1e-3));
        let obs: Vec<Point3> = (0..rng.gen_range(1..20)).map(|_| center + rand_point(&mut rng, -1.0, 1.0)).collect();
        let Ok(cell) = build_bvc_with(&me, &[], &obs, ObstacleSeparation::Joint) else { continue };
        assert!(cell.contains(me.position));
        for _ in 0..300 {
            let q = rand_point(&mut rng, -5.0, 5.0);
            if cell.contains(q) {
                for &o in &obs {
                    assert!(q.distance(o) >= me.radius - 1e-7);
                }
            }
        }
    }
}

#[test]
fn cell_is_independent_of_neighbor_order() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let cfg = random_config(&mut rng, 6, 20, 3.0);
    let me = cfg.robots[0];
    let mut others: Vec<RobotDisk> = cfg.robots[1..].to_vec();
    let a = build_bvc(&me, &others, &cfg.obstacles).unwrap();
    others.reverse();
    let b = build_bvc(&me, &others, &cfg.obstacles).unwrap();
    for _ in 0..2000 {
        let q = me.position + rand_point(&mut rng, -3.0, 3.0);
        assert_eq!(a.contains(q), b.contains(q));
    }
}
