//! Seeded synthetic environments: cluttered pillars, a U-shaped trap, a
//! narrow corridor, and a forest of thin trunks with branches.
//!
//! Generated walls and pillars are sampled every [`WALL_SPACING`] meters so
//! a robot of the default radius cannot slip between neighbouring points.
//! A zero-height workspace yields a single planar layer of points.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::environment::{Aabb, GmmComponent, GmmDensity};
use crate::error::{CoverError, Result};
use crate::geometry::Point3;
use crate::sim_runtime::{CloudSource, Scenario, Spawn};

pub const WALL_SPACING: f64 = 0.25;
pub const CORRIDOR_WIDTH: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EnvKind {
    Cluttered,
    UTrap,
    Corridor,
    ForestLike,
}

impl EnvKind {
    pub const ALL: [EnvKind; 4] = [EnvKind::Cluttered, EnvKind::UTrap, EnvKind::Corridor, EnvKind::ForestLike];

    pub fn name(self) -> &'static str {
        match self {
            EnvKind::Cluttered => "cluttered",
            EnvKind::UTrap => "u-trap",
            EnvKind::Corridor => "corridor",
            EnvKind::ForestLike => "forest-like",
        }
    }
}

impl fmt::Display for EnvKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EnvKind {
    type Err = CoverError;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| CoverError::Config(format!("unknown environment kind `{s}`")))
    }
}

/// A generated point cloud with a suggested start region and target peaks.
#[derive(Debug, Clone, PartialEq)]
pub struct Environment {
    pub kind: EnvKind,
    pub workspace: Aabb,
    pub points: Vec<Point3>,
    pub spawn: Aabb,
    pub peaks: Vec<GmmComponent>,
}

/// Volume used to turn a per-m³ density into a point budget; a flat
/// workspace counts as a slab one meter thick.
pub fn effective_volume(ws: &Aabb) -> f64 {
    let e = ws.extent();
    [e.x, e.y, e.z].iter().map(|&v| if v > 0.0 { v } else { 1.0 }).product()
}

/// Guidance gain written into generated scenarios; sharper than the library
/// default so robots commit to narrow openings.
pub const GENERATED_GAMMA: f64 = 5.0;

impl Environment {
    /// A scenario over this environment: `robots` drawn from the spawn box,
    /// the generated peaks as density and [`GENERATED_GAMMA`].
    pub fn scenario(&self, robots: usize, cloud: CloudSource) -> Result<Scenario> {
        let density = GmmDensity::new(self.peaks.clone())?;
        let mut s = Scenario::new(self.workspace, Spawn::Random { count: robots, region: self.spawn }, density);
        s.cloud = cloud;
        s.gamma = GENERATED_GAMMA;
        s.validate()?;
        Ok(s)
    }
}

/// Heights at which vertical structures are sampled.
fn layers(ws: &Aabb) -> Vec<f64> {
    let h = ws.max.z - ws.min.z;
    let n = (h / WALL_SPACING + 1e-9).floor() as usize;
    (0..=n).map(|k| ws.min.z + k as f64 * WALL_SPACING).collect()
}

/// Points every `WALL_SPACING` along the segment, at every layer.
fn wall(out: &mut Vec<Point3>, a: (f64, f64), b: (f64, f64), zs: &[f64]) {
    let len = ((b.0 - a.0).powi(2) + (b.1 - a.1).powi(2)).sqrt();
    let n = (len / WALL_SPACING + 1e-9).round() as usize;
    for k in 0..=n {
        let t = if n == 0 { 0.0 } else { k as f64 / n as f64 };
        for &z in zs {
            out.push(Point3::new(a.0 + t * (b.0 - a.0), a.1 + t * (b.1 - a.1), z));
        }
    }
}

fn ring(center: (f64, f64), radius: f64, z: f64) -> Vec<Point3> {
    let n = ((std::f64::consts::TAU * radius / WALL_SPACING).ceil() as usize).max(3);
    (0..n)
        .map(|k| {
            let t = std::f64::consts::TAU * k as f64 / n as f64;
            Point3::new(center.0 + radius * t.cos(), center.1 + radius * t.sin(), z)
        })
        .collect()
}

fn inside(ws: &Aabb, pts: &[Point3]) -> bool {
    pts.iter().all(|p| ws.contains(*p, 1e-9))
}

fn check_density(density: f64) -> Result<()> {
    if !(density > 0.0 && density.is_finite()) {
        return Err(CoverError::Config(format!("density must be positive, got {density}")));
    }
    Ok(())
}

fn sub_box(ws: &Aabb, fx: (f64, f64), fy: (f64, f64)) -> Aabb {
    let e = ws.extent();
    Aabb {
        min: Point3::new(ws.min.x + fx.0 * e.x, ws.min.y + fy.0 * e.y, ws.min.z),
        max: Point3::new(ws.min.x + fx.1 * e.x, ws.min.y + fy.1 * e.y, ws.max.z),
    }
}

fn mid_z(ws: &Aabb) -> f64 {
    0.5 * (ws.min.z + ws.max.z)
}

/// Generates the environment for `kind`. `density` (points per m³) sets the
/// point budget of the cluttered and forest-like kinds and is only
/// validated for the structured ones.
pub fn generate(kind: EnvKind, workspace: Aabb, density: f64, seed: u64) -> Result<Environment> {
    check_density(density)?;
    let e = workspace.extent();
    if e.x < 8.0 || e.y < 8.0 {
        return Err(CoverError::Config("generated workspaces must span at least 8 m in x and y".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let zs = layers(&workspace);
    let env = match kind {
        EnvKind::Cluttered => cluttered(&workspace, density, &zs, &mut rng),
        EnvKind::ForestLike => forest(&workspace, density, &zs, &mut rng),
        EnvKind::UTrap => u_trap(&workspace, &zs, &mut rng),
        EnvKind::Corridor => corridor(&workspace, &zs),
    };
    Ok(Environment { kind, workspace, ..env })
}

/// Pillars of random radius in the middle band until the point budget is met.
fn cluttered(ws: &Aabb, density: f64, zs: &[f64], rng: &mut ChaCha8Rng) -> Environment {
    let budget = (density * effective_volume(ws)).round() as usize;
    let band = sub_box(ws, (0.05, 0.95), (0.25, 0.75));
    let mut points = Vec::with_capacity(budget);
    let mut guard = 0;
    while points.len() < budget && guard < 100_000 {
        guard += 1;
        let radius = rng.gen_range(0.3..1.2);
        let c = (rng.gen_range(band.min.x..band.max.x), rng.gen_range(band.min.y..band.max.y));
        let column: Vec<Point3> = zs.iter().flat_map(|&z| ring(c, radius, z)).collect();
        if !inside(ws, &column) {
            continue;
        }
        let room = budget - points.len();
        points.extend(column.into_iter().take(room));
    }
    let peak = Point3::new(ws.min.x + 0.5 * ws.extent().x, ws.min.y + 0.88 * ws.extent().y, mid_z(ws));
    Environment {
        kind: EnvKind::Cluttered,
        workspace: *ws,
        points,
        spawn: sub_box(ws, (0.15, 0.85), (0.04, 0.18)),
        peaks: vec![GmmComponent::new(peak, 1.0, 5.0)],
    }
}

/// Thin trunks with a few horizontal branches.
fn forest(ws: &Aabb, density: f64, zs: &[f64], rng: &mut ChaCha8Rng) -> Environment {
    let budget = (density * effective_volume(ws)).round() as usize;
    let band = sub_box(ws, (0.05, 0.95), (0.25, 0.75));
    let mut points = Vec::with_capacity(budget);
    let mut guard = 0;
    while points.len() < budget && guard < 100_000 {
        guard += 1;
        let radius = rng.gen_range(0.1..0.3);
        let c = (rng.gen_range(band.min.x..band.max.x), rng.gen_range(band.min.y..band.max.y));
        let mut tree: Vec<Point3> = zs.iter().flat_map(|&z| ring(c, radius, z)).collect();
        for _ in 0..rng.gen_range(0..4) {
            let z = zs[rng.gen_range(0..zs.len())];
            let heading = rng.gen_range(0.0..std::f64::consts::TAU);
            let len = rng.gen_range(0.5..2.0);
            let tip = (c.0 + len * heading.cos(), c.1 + len * heading.sin());
            wall(&mut tree, c, tip, &[z]);
        }
        if !inside(ws, &tree) {
            continue;
        }
        let room = budget - points.len();
        points.extend(tree.into_iter().take(room));
    }
    let peak = Point3::new(ws.min.x + 0.5 * ws.extent().x, ws.min.y + 0.88 * ws.extent().y, mid_z(ws));
    Environment {
        kind: EnvKind::ForestLike,
        workspace: *ws,
        points,
        spawn: sub_box(ws, (0.15, 0.85), (0.04, 0.18)),
        peaks: vec![GmmComponent::new(peak, 1.0, 5.0)],
    }
}

/// Geometry of the U: opening toward −y, closed side toward the peak.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UTrapLayout {
    pub center_x: f64,
    pub half_width: f64,
    /// y of the closed side.
    pub closed_y: f64,
    /// y of the open mouth.
    pub mouth_y: f64,
}

impl UTrapLayout {
    pub fn for_workspace(ws: &Aabb) -> Self {
        let e = ws.extent();
        let half_width = (0.1 * e.x).clamp(2.0, 4.0);
        let depth = 2.0 * half_width;
        let closed_y = ws.min.y + 0.55 * e.y;
        Self { center_x: ws.min.x + 0.5 * e.x, half_width, closed_y, mouth_y: closed_y - depth }
    }
}

fn u_trap(ws: &Aabb, zs: &[f64], rng: &mut ChaCha8Rng) -> Environment {
    let u = UTrapLayout::for_workspace(ws);
    let (l, r) = (u.center_x - u.half_width, u.center_x + u.half_width);
    let mut points = Vec::new();
    wall(&mut points, (l, u.mouth_y), (l, u.closed_y), zs);
    wall(&mut points, (l, u.closed_y), (r, u.closed_y), zs);
    wall(&mut points, (r, u.closed_y), (r, u.mouth_y), zs);
    dedup_exact(&mut points);
    // Start deep in the pocket, away from the walls.
    let inset = 0.75;
    let spawn = Aabb {
        min: Point3::new(l + inset, u.closed_y - u.half_width, ws.min.z),
        max: Point3::new(r - inset, u.closed_y - inset, ws.max.z),
    };
    // An exactly centred peak makes both ways around the U equally long and
    // parks the robot on the tie line, so the peak is offset to one side.
    let side = if rng.gen::<bool>() { 1.0 } else { -1.0 };
    let offset = side * rng.gen_range(0.3..0.8) * u.half_width;
    let peak = Point3::new(u.center_x + offset, u.closed_y + rng.gen_range(3.0..5.0), mid_z(ws));
    Environment { kind: EnvKind::UTrap, workspace: *ws, points, spawn, peaks: vec![GmmComponent::new(peak, 1.0, 5.0)] }
}

/// A dividing wall across x with a single passage of [`CORRIDOR_WIDTH`],
/// lengthened into a corridor by two side walls.
fn corridor(ws: &Aabb, zs: &[f64]) -> Environment {
    let e = ws.extent();
    let (xc, yc) = (ws.min.x + 0.5 * e.x, ws.min.y + 0.5 * e.y);
    let h = 0.5 * CORRIDOR_WIDTH;
    let len = 2.0;
    let mut points = Vec::new();
    wall(&mut points, (ws.min.x, yc), (xc - h, yc), zs);
    wall(&mut points, (xc + h, yc), (ws.max.x, yc), zs);
    wall(&mut points, (xc - h, yc - len), (xc - h, yc + len), zs);
    wall(&mut points, (xc + h, yc - len), (xc + h, yc + len), zs);
    dedup_exact(&mut points);
    let spawn = sub_box(ws, (0.3, 0.7), (0.05, 0.3));
    let peak = Point3::new(xc, ws.min.y + 0.85 * e.y, mid_z(ws));
    Environment {
        kind: EnvKind::Corridor,
        workspace: *ws,
        points,
        spawn,
        peaks: vec![GmmComponent::new(peak, 1.0, 5.0)],
    }
}

fn dedup_exact(points: &mut Vec<Point3>) {
    let mut seen = std::collections::HashSet::new();
    points.retain(|p| seen.insert(p.to_array().map(f64::to_bits)));
}
