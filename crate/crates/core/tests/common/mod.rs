//! Independent oracles and fixtures shared by the integration tests.
#![allow(dead_code)]

use cover_core::coverage_control::CentroidDensity;
use cover_core::environment::{Aabb, GridSpec, SensorModel};
use cover_core::geometry::Point3;
use cover_core::guided_map::VoxelGrid;
use cover_core::minqp::SeparatorProblem;
use cover_core::safe_region::{build_bvc, BufferedCell, RobotDisk};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn rand_point<R: Rng>(rng: &mut R, lo: f64, hi: f64) -> Point3 {
    Point3::new(rng.gen_range(lo..hi), rng.gen_range(lo..hi), rng.gen_range(lo..hi))
}

pub fn rand_unit<R: Rng>(rng: &mut R) -> Point3 {
    loop {
        let p = rand_point(rng, -1.0, 1.0);
        let n = p.norm();
        if n > 0.1 && n <= 1.0 {
            return p / n;
        }
    }
}

#[allow(clippy::needless_range_loop)]
fn solve_small(m: &mut [Vec<f64>], rhs: &mut [f64]) -> Option<Vec<f64>> {
    let n = rhs.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs()))?;
        if m[piv][col].abs() < 1e-12 {
            return None;
        }
        m.swap(col, piv);
        rhs.swap(col, piv);
        for row in 0..n {
            if row != col {
                let f = m[row][col] / m[col][col];
                for c in col..n {
                    m[row][c] -= f * m[col][c];
                }
                rhs[row] -= f * rhs[col];
            }
        }
    }
    Some((0..n).map(|i| rhs[i] / m[i][i]).collect())
}

/// Euclidean distance from `p` to the convex hull of `pts` (≤ 8 points) by
/// enumerating every simplex of up to four points and keeping orthogonal
/// projections that land inside their simplex.
pub fn hull_distance(p: Point3, pts: &[Point3]) -> f64 {
    let n = pts.len();
    let mut best = f64::INFINITY;
    for mask in 1u32..(1 << n) {
        let idx: Vec<usize> = (0..n).filter(|&i| mask & (1 << i) != 0).collect();
        if idx.len() > 4 {
            continue;
        }
        let t0 = pts[idx[0]];
        let dirs: Vec<Point3> = idx[1..].iter().map(|&i| pts[i] - t0).collect();
        let k = dirs.len();
        let lambda = if k == 0 {
            Some(vec![])
        } else {
            let mut gram: Vec<Vec<f64>> = (0..k).map(|i| (0..k).map(|j| dirs[i].dot(dirs[j])).collect()).collect();
            let mut rhs: Vec<f64> = (0..k).map(|i| dirs[i].dot(p - t0)).collect();
            solve_small(&mut gram, &mut rhs)
        };
        let Some(lambda) = lambda else { continue };
        let sum: f64 = lambda.iter().sum();
        if lambda.iter().any(|&l| l < -1e-12) || sum > 1.0 + 1e-12 {
            continue;
        }
        let mut x = t0;
        for (l, d) in lambda.iter().zip(&dirs) {
            x += *d * *l;
        }
        best = best.min(x.distance(p));
    }
    best
}

/// Shortest-path costs by plain Bellman-Ford relaxation until nothing
/// changes; diagonal moves are allowed and blocked voxels are never entered.
pub fn bellman_ford(grid: &VoxelGrid, goal: [usize; 3]) -> Vec<f64> {
    let spec = *grid.spec();
    let dims = spec.dims;
    let zr: i64 = if dims[2] == 1 { 0 } else { 1 };
    let mut cost = vec![f64::INFINITY; spec.len()];
    cost[spec.linear(goal)] = 0.0;
    loop {
        let mut changed = false;
        for v in 0..spec.len() {
            if grid.is_blocked(v) {
                continue;
            }
            let [x, y, z] = spec.unlinear(v);
            for dz in -zr..=zr {
                for dy in -1i64..=1 {
                    for dx in -1i64..=1 {
                        if dx == 0 && dy == 0 && dz == 0 {
                            continue;
                        }
                        let (nx, ny, nz) = (x as i64 + dx, y as i64 + dy, z as i64 + dz);
                        if nx < 0
                            || ny < 0
                            || nz < 0
                            || nx >= dims[0] as i64
                            || ny >= dims[1] as i64
                            || nz >= dims[2] as i64
                        {
                            continue;
                        }
                        let u = spec.linear([nx as usize, ny as usize, nz as usize]);
                        let w = spec.resolution * ((dx * dx + dy * dy + dz * dz) as f64).sqrt();
                        let c = cost[u] + w;
                        if c < cost[v] {
                            cost[v] = c;
                            changed = true;
                        }
                    }
                }
            }
        }
        if !changed {
            return cost;
        }
    }
}

/// Weighted centroid by visiting every voxel of the grid.
pub fn brute_centroid(
    cell: &BufferedCell,
    weight: &dyn Fn(usize, Point3) -> f64,
    position: Point3,
    sensor: &SensorModel,
    spec: &GridSpec,
) -> Option<(Point3, f64, usize)> {
    let mut total = 0.0;
    let mut moment = Point3::ORIGIN;
    let mut second = 0.0;
    let mut count = 0;
    for lin in 0..spec.len() {
        let c = spec.center(spec.unlinear(lin));
        if c.distance(position) > sensor.range || !cell.contains(c) {
            continue;
        }
        let w = weight(lin, c);
        total += w;
        moment += c * w;
        second += c.distance_squared(position) * w;
        count += 1;
    }
    (count > 0 && total > 0.0).then(|| (moment / total, second * spec.resolution.powi(3), count))
}

pub fn custom(f: &(dyn Fn(usize, Point3) -> f64 + Sync)) -> CentroidDensity<'_> {
    CentroidDensity::Custom(f)
}

/// A random collision-free configuration: `n` robots of radius `r` in a box
/// of half-width `half`, and `m` obstacle points at least `r` from every robot.
pub struct Config {
    pub robots: Vec<RobotDisk>,
    pub obstacles: Vec<Point3>,
}

pub fn random_config(rng: &mut ChaCha8Rng, n: usize, m: usize, half: f64) -> Config {
    let r = 0.25;
    let mut robots: Vec<RobotDisk> = Vec::with_capacity(n);
    while robots.len() < n {
        let p = rand_point(rng, -half, half);
        if robots.iter().all(|o| o.position.distance(p) >= 2.0 * r + 1e-3) {
            robots.push(RobotDisk::new(robots.len(), p, r).unwrap());
        }
    }
    let mut obstacles = Vec::with_capacity(m);
    while obstacles.len() < m {
        let q = rand_point(rng, -half, half);
        if robots.iter().all(|o| o.position.distance(q) >= r + 1e-3) {
            obstacles.push(q);
        }
    }
    Config { robots, obstacles }
}

/// Six BVC properties over one configuration; `Err` names the first failure.
///
/// Every robot uses all obstacle points as its selected set. Sample points
/// are drawn in the cell by rejection from a box around the owner.
pub fn check_bvc_properties(cfg: &Config, rng: &mut ChaCha8Rng, samples: usize, tol: f64) -> Result<(), String> {
    let cells: Vec<BufferedCell> = cfg
        .robots
        .iter()
        .map(|me| {
            let others: Vec<RobotDisk> = cfg.robots.iter().filter(|o| o.id != me.id).copied().collect();
            build_bvc(me, &others, &cfg.obstacles).map_err(|e| e.to_string())
        })
        .collect::<Result<_, _>>()?;
    let mut inside: Vec<Vec<Point3>> = Vec::with_capacity(cells.len());
    for (cell, me) in cells.iter().zip(&cfg.robots) {
        // (1) non-empty: the owner is a member
        if !cell.contains(me.position) {
            return Err(format!("robot {} outside its own cell", me.id));
        }
        // (6) generating obstacle points are excluded
        if let Some(q) = cfg.obstacles.iter().find(|&&q| cell.contains(q)) {
            return Err(format!("obstacle {:?} inside cell {}", q.to_array(), me.id));
        }
        let mut pts = vec![me.position];
        let mut tries = 0;
        while pts.len() < samples && tries < samples * 50 {
            tries += 1;
            let q = me.position + rand_point(rng, -3.0, 3.0);
            if cell.contains(q) {
                pts.push(q);
            }
        }
        for &q in &pts {
            // (2) inside the unbuffered Voronoi cell
            for o in cfg.robots.iter().filter(|o| o.id != me.id) {
                if q.distance(me.position) > q.distance(o.position) + tol {
                    return Err(format!("sample of {} is closer to {}", me.id, o.id));
                }
            }
            // (5) obstacle margin
            for &ob in &cfg.obstacles {
                if q.distance(ob) < me.radius - tol {
                    return Err(format!("sample of {} within radius of obstacle", me.id));
                }
            }
        }
        inside.push(pts);
    }
    // (3)(4) disjoint with margin r_i + r_j
    for i in 0..cells.len() {
        for j in i + 1..cells.len() {
            let need = cfg.robots[i].radius + cfg.robots[j].radius;
            for a in &inside[i] {
                for b in &inside[j] {
                    if a.distance(*b) < need - tol {
                        return Err(format!("cells {i} and {j} closer than {need}"));
                    }
                }
            }
        }
    }
    Ok(())
}

/// Radial fixture for hidden-point removal: well separated directions, one
/// near point per direction and some farther points behind it.
pub struct RadialScene {
    pub center: Point3,
    pub points: Vec<Point3>,
    /// Direction bucket of each point.
    pub bucket: Vec<usize>,
}

pub fn radial_scene(rng: &mut ChaCha8Rng, planar: bool, radius: f64) -> RadialScene {
    let center = rand_point(rng, -5.0, 5.0);
    let center = if planar { Point3::new(center.x, center.y, 0.0) } else { center };
    let dirs: Vec<Point3> = if planar {
        let n = rng.gen_range(12..=24);
        let phase = rng.gen_range(0.0..std::f64::consts::TAU);
        (0..n)
            .map(|k| {
                let t = phase + std::f64::consts::TAU * k as f64 / n as f64;
                Point3::new(t.cos(), t.sin(), 0.0)
            })
            .collect()
    } else {
        // Fibonacci sphere with a random twist
        let n = rng.gen_range(20..=60);
        let twist = rng.gen_range(0.0..std::f64::consts::TAU);
        let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
        (0..n)
            .map(|k| {
                let z = 1.0 - 2.0 * (k as f64 + 0.5) / n as f64;
                let s = (1.0 - z * z).sqrt();
                let t = twist + golden * k as f64;
                Point3::new(s * t.cos(), s * t.sin(), z)
            })
            .collect()
    };
    let mut points = Vec::new();
    let mut bucket = Vec::new();
    for (k, &d) in dirs.iter().enumerate() {
        let near = rng.gen_range(3.0..3.05);
        points.push(center + d * near);
        bucket.push(k);
        for _ in 0..rng.gen_range(0..4) {
            let far = rng.gen_range(near + 0.5..radius - 1.0);
            points.push(center + d * far);
            bucket.push(k);
        }
    }
    // interleave buckets so input order carries no hint
    let mut order: Vec<usize> = (0..points.len()).collect();
    for i in (1..order.len()).rev() {
        order.swap(i, rng.gen_range(0..=i));
    }
    RadialScene {
        center,
        points: order.iter().map(|&i| points[i]).collect(),
        bucket: order.iter().map(|&i| bucket[i]).collect(),
    }
}

/// Nearest point per direction bucket, as sorted input indices.
pub fn nearest_per_bucket(scene: &RadialScene) -> Vec<usize> {
    let buckets = scene.bucket.iter().copied().max().map_or(0, |b| b + 1);
    let mut best: Vec<Option<usize>> = vec![None; buckets];
    for (i, (&p, &b)) in scene.points.iter().zip(&scene.bucket).enumerate() {
        let d = p.distance(scene.center);
        if best[b].is_none_or(|j| d < scene.points[j].distance(scene.center)) {
            best[b] = Some(i);
        }
    }
    let mut out: Vec<usize> = best.into_iter().flatten().collect();
    out.sort_unstable();
    out
}

pub fn planar_box(x: f64, y: f64) -> Aabb {
    Aabb::new(Point3::ORIGIN, Point3::new(x, y, 0.0)).unwrap()
}

/// Random grid with roughly `fill` of its voxels blocked and a free goal.
pub fn random_grid(rng: &mut ChaCha8Rng, planar: bool, max: usize, fill: f64) -> (VoxelGrid, [usize; 3]) {
    let nx = rng.gen_range(4..=max);
    let ny = rng.gen_range(4..=max);
    let nz = if planar { 1 } else { rng.gen_range(2..=max) };
    let res = 0.25;
    let ws =
        Aabb::new(Point3::ORIGIN, Point3::new((nx - 1) as f64 * res, (ny - 1) as f64 * res, (nz - 1) as f64 * res))
            .unwrap();
    let spec = GridSpec::covering(&ws, res).unwrap();
    assert_eq!(spec.dims, [nx, ny, nz]);
    let mut grid = VoxelGrid::open(spec);
    for lin in 0..spec.len() {
        if rng.gen_bool(fill) {
            grid.set_blocked(spec.unlinear(lin), true);
        }
    }
    let goal = [rng.gen_range(0..nx), rng.gen_range(0..ny), rng.gen_range(0..nz)];
    grid.set_blocked(goal, false);
    (grid, goal)
}

/// A problem whose anchor sits outside the hull of its targets.
pub fn random_problem(rng: &mut ChaCha8Rng, max_targets: usize) -> SeparatorProblem {
    loop {
        let n = rng.gen_range(1..=max_targets);
        let center = rand_point(rng, -4.0, 4.0);
        let targets: Vec<Point3> = (0..n).map(|_| center + rand_point(rng, -1.5, 1.5)).collect();
        let anchor = rand_point(rng, -4.0, 4.0);
        if hull_distance(anchor, &targets) > 0.05 {
            return SeparatorProblem::new(anchor, targets).unwrap();
        }
    }
}
