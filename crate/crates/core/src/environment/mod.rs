//! Obstacle world: point-cloud index, per-robot known maps, and the
//! target-of-interest density.

mod cloud_io;

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{CoverError, Result};
use crate::geometry::{Point3, DEDUP_TOLERANCE};

pub use cloud_io::{load_point_cloud, parse_points, read_points_file, write_xyz, CloudFormat};

/// Default voxel edge length, meters.
pub const DEFAULT_RESOLUTION: f64 = 0.25;

/// Occupied cells are grouped into chunks of this many cells per side so a
/// range query only visits chunks that overlap the query box.
const CHUNK_CELLS: i64 = 16;

/// Axis-aligned box in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aabb {
    pub min: Point3,
    pub max: Point3,
}

impl Aabb {
    pub fn new(min: Point3, max: Point3) -> Result<Self> {
        if !(min.is_finite() && max.is_finite()) || min.x > max.x || min.y > max.y || min.z > max.z {
            return Err(CoverError::InvalidInput(format!("invalid box {:?}..{:?}", min.to_array(), max.to_array())));
        }
        Ok(Self { min, max })
    }

    pub fn bounding(points: &[Point3]) -> Option<Self> {
        let first = *points.first()?;
        let (mut min, mut max) = (first, first);
        for p in points {
            min = Point3::new(min.x.min(p.x), min.y.min(p.y), min.z.min(p.z));
            max = Point3::new(max.x.max(p.x), max.y.max(p.y), max.z.max(p.z));
        }
        Some(Self { min, max })
    }

    pub fn contains(&self, p: Point3, tol: f64) -> bool {
        p.x >= self.min.x - tol
            && p.y >= self.min.y - tol
            && p.z >= self.min.z - tol
            && p.x <= self.max.x + tol
            && p.y <= self.max.y + tol
            && p.z <= self.max.z + tol
    }

    pub fn clamp(&self, p: Point3) -> Point3 {
        Point3::new(
            p.x.clamp(self.min.x, self.max.x),
            p.y.clamp(self.min.y, self.max.y),
            p.z.clamp(self.min.z, self.max.z),
        )
    }

    pub fn extent(&self) -> Point3 {
        self.max - self.min
    }

    pub fn volume(&self) -> f64 {
        let e = self.extent();
        e.x * e.y * e.z
    }
}

/// Discretization of a workspace box into voxels whose centers sit at
/// `origin + index·resolution`; voxel `v` spans its center ± resolution/2.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub origin: Point3,
    pub resolution: f64,
    pub dims: [usize; 3],
}

impl GridSpec {
    pub fn covering(workspace: &Aabb, resolution: f64) -> Result<Self> {
        if !(resolution > 0.0) {
            return Err(CoverError::InvalidInput(format!("resolution must be positive, got {resolution}")));
        }
        let e = workspace.extent().to_array();
        let dims = e.map(|len| (len / resolution + 1e-9).floor() as usize + 1);
        Ok(Self { origin: workspace.min, resolution, dims })
    }

    pub fn len(&self) -> usize {
        self.dims[0] * self.dims[1] * self.dims[2]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// True when the grid is a single voxel layer in z.
    pub fn is_planar(&self) -> bool {
        self.dims[2] == 1
    }

    #[inline]
    pub fn linear(&self, idx: [usize; 3]) -> usize {
        (idx[2] * self.dims[1] + idx[1]) * self.dims[0] + idx[0]
    }

    #[inline]
    pub fn unlinear(&self, i: usize) -> [usize; 3] {
        let x = i % self.dims[0];
        let y = (i / self.dims[0]) % self.dims[1];
        let z = i / (self.dims[0] * self.dims[1]);
        [x, y, z]
    }

    #[inline]
    pub fn center(&self, idx: [usize; 3]) -> Point3 {
        Point3::new(
            self.origin.x + idx[0] as f64 * self.resolution,
            self.origin.y + idx[1] as f64 * self.resolution,
            self.origin.z + idx[2] as f64 * self.resolution,
        )
    }

    /// Unbounded voxel coordinates of `p`.
    #[inline]
    pub fn raw_index(&self, p: Point3) -> [i64; 3] {
        let r = (p - self.origin) / self.resolution;
        [r.x.round() as i64, r.y.round() as i64, r.z.round() as i64]
    }

    pub fn index_of(&self, p: Point3) -> Option<[usize; 3]> {
        let raw = self.raw_index(p);
        let mut out = [0usize; 3];
        for k in 0..3 {
            if raw[k] < 0 || raw[k] >= self.dims[k] as i64 {
                return None;
            }
            out[k] = raw[k] as usize;
        }
        Some(out)
    }

    pub fn clamped_index(&self, p: Point3) -> [usize; 3] {
        let raw = self.raw_index(p);
        let mut out = [0usize; 3];
        for k in 0..3 {
            out[k] = raw[k].clamp(0, self.dims[k] as i64 - 1) as usize;
        }
        out
    }
}

/// Range-limited sensing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensorModel {
    pub range: f64,
}

impl SensorModel {
    pub const DEFAULT_RANGE: f64 = 15.0;

    pub fn new(range: f64) -> Result<Self> {
        if !(range > 0.0) {
            return Err(CoverError::InvalidInput(format!("sensor range must be positive, got {range}")));
        }
        Ok(Self { range })
    }
}

impl Default for SensorModel {
    fn default() -> Self {
        Self { range: Self::DEFAULT_RANGE }
    }
}

/// Obstacle points with a voxel hash for radius queries.
#[derive(Debug, Clone)]
pub struct PointCloudIndex {
    points: Vec<Point3>,
    cell: f64,
    bounds: Aabb,
    cells: HashMap<[i64; 3], Vec<u32>>,
    chunks: HashMap<[i64; 3], Vec<[i64; 3]>>,
}

impl PointCloudIndex {
    /// Builds an index whose bounds are the bounding box of `points`.
    pub fn new(points: Vec<Point3>, cell: f64) -> Result<Self> {
        let bounds = Aabb::bounding(&points).unwrap_or(Aabb { min: Point3::ORIGIN, max: Point3::ORIGIN });
        Self::with_bounds(points, cell, bounds)
    }

    /// Builds an index over `bounds`; points outside are rejected.
    pub fn with_bounds(points: Vec<Point3>, cell: f64, bounds: Aabb) -> Result<Self> {
        if !(cell > 0.0) {
            return Err(CoverError::InvalidInput(format!("cell size must be positive, got {cell}")));
        }
        let mut index = Self {
            points: Vec::with_capacity(points.len()),
            cell,
            bounds,
            cells: HashMap::new(),
            chunks: HashMap::new(),
        };
        for p in points {
            if !p.is_finite() {
                return Err(CoverError::InvalidInput("non-finite obstacle point".into()));
            }
            if !bounds.contains(p, 1e-9) {
                return Err(CoverError::InvalidInput(format!(
                    "obstacle point {:?} lies outside the workspace",
                    p.to_array()
                )));
            }
            index.insert_unique(p);
        }
        Ok(index)
    }

    fn cell_key(&self, p: Point3) -> [i64; 3] {
        [(p.x / self.cell).floor() as i64, (p.y / self.cell).floor() as i64, (p.z / self.cell).floor() as i64]
    }

    fn chunk_key(key: [i64; 3]) -> [i64; 3] {
        key.map(|k| k.div_euclid(CHUNK_CELLS))
    }

    fn insert_unique(&mut self, p: Point3) {
        let key = self.cell_key(p);
        // A duplicate within the dedup tolerance can only sit in this or an adjacent cell.
        for dx in -1..=1 {
            for dy in -1..=1 {
                for dz in -1..=1 {
                    if let Some(bucket) = self.cells.get(&[key[0] + dx, key[1] + dy, key[2] + dz]) {
                        if bucket.iter().any(|&j| self.points[j as usize].distance(p) < DEDUP_TOLERANCE) {
                            return;
                        }
                    }
                }
            }
        }
        let id = self.points.len() as u32;
        self.points.push(p);
        let bucket = self.cells.entry(key).or_default();
        if bucket.is_empty() {
            self.chunks.entry(Self::chunk_key(key)).or_default().push(key);
        }
        bucket.push(id);
    }

    pub fn points(&self) -> &[Point3] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn bounds(&self) -> Aabb {
        self.bounds
    }

    pub fn cell_size(&self) -> f64 {
        self.cell
    }

    /// Indices of every point within `radius` of `center` (inclusive), ascending.
    pub fn query_indices(&self, center: Point3, radius: f64) -> Vec<usize> {
        let mut out = Vec::new();
        if self.points.is_empty() || !(radius >= 0.0) {
            return out;
        }
        let lo = self.cell_key(center - Point3::new(radius, radius, radius));
        let hi = self.cell_key(center + Point3::new(radius, radius, radius));
        let (clo, chi) = (Self::chunk_key(lo), Self::chunk_key(hi));
        let r2 = radius * radius;
        for cx in clo[0]..=chi[0] {
            for cy in clo[1]..=chi[1] {
                for cz in clo[2]..=chi[2] {
                    let Some(keys) = self.chunks.get(&[cx, cy, cz]) else { continue };
                    for key in keys {
                        if self.cell_box_distance_squared(*key, center) > r2 {
                            continue;
                        }
                        for &i in &self.cells[key] {
                            if self.points[i as usize].distance(center) <= radius {
                                out.push(i as usize);
                            }
                        }
                    }
                }
            }
        }
        out.sort_unstable();
        out
    }

    fn cell_box_distance_squared(&self, key: [i64; 3], p: Point3) -> f64 {
        let mut d2 = 0.0;
        for (k, c) in key.iter().zip(p.to_array()) {
            let lo = *k as f64 * self.cell;
            let hi = lo + self.cell;
            let d = if c < lo {
                lo - c
            } else if c > hi {
                c - hi
            } else {
                0.0
            };
            d2 += d * d;
        }
        // slack for the floor() rounding at cell borders
        (d2.sqrt() - 1e-9 * (1.0 + self.cell)).max(0.0).powi(2)
    }

    /// Points within the sensor range of `position`, in index order.
    pub fn sense(&self, sensor: &SensorModel, position: Point3) -> Vec<Point3> {
        self.query_indices(position, sensor.range).into_iter().map(|i| self.points[i]).collect()
    }

    /// Distance from `p` to the nearest point within `max_radius`, if any.
    pub fn nearest_within(&self, p: Point3, max_radius: f64) -> Option<f64> {
        self.query_indices(p, max_radius).into_iter().map(|i| self.points[i].distance(p)).min_by(f64::total_cmp)
    }
}

/// Free-function form of [`PointCloudIndex::sense`].
pub fn sense(index: &PointCloudIndex, sensor: &SensorModel, position: Point3) -> Vec<Point3> {
    index.sense(sensor, position)
}

/// One robot's accumulated obstacle knowledge. Voxels only ever move from
/// unknown-free to known-obstacle.
#[derive(Debug, Clone, PartialEq)]
pub struct KnownMap {
    grid: GridSpec,
    obstacles: BTreeSet<usize>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct MapUpdate {
    /// Linear voxel indices marked for the first time.
    pub newly_marked: Vec<usize>,
    /// Sensed points that fell outside the grid and were clamped onto it.
    pub clamped: usize,
}

impl KnownMap {
    pub fn new(grid: GridSpec) -> Self {
        Self { grid, obstacles: BTreeSet::new() }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn update(&mut self, sensed: &[Point3]) -> MapUpdate {
        let mut report = MapUpdate::default();
        for &p in sensed {
            let idx = match self.grid.index_of(p) {
                Some(idx) => idx,
                None => {
                    report.clamped += 1;
                    self.grid.clamped_index(p)
                }
            };
            let lin = self.grid.linear(idx);
            if self.obstacles.insert(lin) {
                report.newly_marked.push(lin);
            }
        }
        report
    }

    pub fn is_obstacle(&self, linear: usize) -> bool {
        self.obstacles.contains(&linear)
    }

    pub fn obstacle_voxels(&self) -> impl Iterator<Item = usize> + '_ {
        self.obstacles.iter().copied()
    }

    pub fn obstacle_count(&self) -> usize {
        self.obstacles.len()
    }
}

/// Functional form of [`KnownMap::update`].
pub fn update_known_map(mut map: KnownMap, sensed: &[Point3]) -> (KnownMap, MapUpdate) {
    let report = map.update(sensed);
    (map, report)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GmmComponent {
    pub center: Point3,
    #[serde(default = "GmmComponent::default_weight")]
    pub weight: f64,
    #[serde(default = "GmmComponent::default_sigma")]
    pub sigma: f64,
}

impl GmmComponent {
    fn default_weight() -> f64 {
        1.0
    }
    fn default_sigma() -> f64 {
        5.0
    }

    pub fn new(center: Point3, weight: f64, sigma: f64) -> Self {
        Self { center, weight, sigma }
    }
}

/// Isotropic Gaussian mixture over the workspace (unnormalized).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GmmDensity {
    components: Vec<GmmComponent>,
}

impl GmmDensity {
    pub fn new(components: Vec<GmmComponent>) -> Result<Self> {
        if components.is_empty() {
            return Err(CoverError::InvalidInput("density needs at least one component".into()));
        }
        for c in &components {
            if !(c.weight > 0.0 && c.weight.is_finite())
                || !(c.sigma > 0.0 && c.sigma.is_finite())
                || !c.center.is_finite()
            {
                return Err(CoverError::InvalidInput(format!("invalid density component {c:?}")));
            }
        }
        Ok(Self { components })
    }

    pub fn components(&self) -> &[GmmComponent] {
        &self.components
    }

    pub fn peaks(&self) -> impl Iterator<Item = Point3> + '_ {
        self.components.iter().map(|c| c.center)
    }

    pub fn density_at(&self, p: Point3) -> f64 {
        self.components
            .iter()
            .map(|c| c.weight * (-p.distance_squared(c.center) / (2.0 * c.sigma * c.sigma)).exp())
            .sum()
    }
}

pub fn density_at(gmm: &GmmDensity, p: Point3) -> f64 {
    gmm.density_at(p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn sense_boundary_is_inclusive() {
        let pts = [5.0, 14.9, 15.0, 15.1].map(|d| Point3::new(d, 0.0, 0.0)).to_vec();
        let index = PointCloudIndex::new(pts.clone(), DEFAULT_RESOLUTION).unwrap();
        let got = index.sense(&SensorModel::default(), Point3::ORIGIN);
        assert_eq!(got, pts[..3].to_vec());
    }

    #[test]
    fn sense_empty_index() {
        let index = PointCloudIndex::new(Vec::new(), DEFAULT_RESOLUTION).unwrap();
        assert!(index.sense(&SensorModel::default(), Point3::ORIGIN).is_empty());
    }

    #[test]
    fn sense_matches_linear_scan() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let pts: Vec<Point3> = (0..10_000)
            .map(|_| Point3::new(rng.gen_range(-40.0..40.0), rng.gen_range(-40.0..40.0), rng.gen_range(-8.0..8.0)))
            .collect();
        let index = PointCloudIndex::new(pts, DEFAULT_RESOLUTION).unwrap();
        let sensor = SensorModel::default();
        for _ in 0..100 {
            let q = Point3::new(rng.gen_range(-45.0..45.0), rng.gen_range(-45.0..45.0), rng.gen_range(-10.0..10.0));
            let brute: Vec<usize> =
                (0..index.len()).filter(|&i| index.points()[i].distance(q) <= sensor.range).collect();
            assert_eq!(index.query_indices(q, sensor.range), brute);
        }
    }

    #[test]
    fn duplicates_collapse() {
        let pts = vec![Point3::new(1.0, 1.0, 1.0), Point3::new(1.0, 1.0, 1.0 + 1e-8), Point3::new(2.0, 1.0, 1.0)];
        let index = PointCloudIndex::new(pts, DEFAULT_RESOLUTION).unwrap();
        assert_eq!(index.len(), 2);
    }

    #[test]
    fn points_outside_bounds_rejected() {
        let ws = Aabb::new(Point3::ORIGIN, Point3::new(1.0, 1.0, 1.0)).unwrap();
        assert!(PointCloudIndex::with_bounds(vec![Point3::new(2.0, 0.0, 0.0)], 0.25, ws).is_err());
    }

    fn small_grid() -> GridSpec {
        GridSpec::covering(&Aabb::new(Point3::ORIGIN, Point3::new(5.0, 5.0, 5.0)).unwrap(), 0.25).unwrap()
    }

    #[test]
    fn known_map_single_point() {
        let mut map = KnownMap::new(small_grid());
        let up = map.update(&[Point3::new(1.0, 1.0, 1.0)]);
        assert_eq!(map.obstacle_count(), 1);
        assert_eq!(up.newly_marked.len(), 1);
        let again = map.update(&[Point3::new(1.0, 1.0, 1.0)]);
        assert!(again.newly_marked.is_empty());
        assert_eq!(map.obstacle_count(), 1);
    }

    #[test]
    fn known_map_same_voxel() {
        let mut map = KnownMap::new(small_grid());
        map.update(&[Point3::new(1.0, 1.0, 1.0), Point3::new(1.05, 0.95, 1.1)]);
        assert_eq!(map.obstacle_count(), 1);
    }

    #[test]
    fn known_map_clamps_outside_points() {
        let mut map = KnownMap::new(small_grid());
        let up = map.update(&[Point3::new(-3.0, 1.0, 1.0)]);
        assert_eq!(up.clamped, 1);
        assert_eq!(map.obstacle_count(), 1);
    }

    #[test]
    fn density_values() {
        let gmm = GmmDensity::new(vec![GmmComponent::new(Point3::ORIGIN, 1.0, 1.0)]).unwrap();
        assert!((gmm.density_at(Point3::ORIGIN) - 1.0).abs() < 1e-15);
        assert!((gmm.density_at(Point3::new(0.0, 1.0, 0.0)) - 0.6065306597126334).abs() < 1e-12);
        assert!(GmmDensity::new(vec![]).is_err());
    }

    #[test]
    fn grid_dims_cover_workspace() {
        let g = small_grid();
        assert_eq!(g.dims, [21, 21, 21]);
        let planar =
            GridSpec::covering(&Aabb::new(Point3::ORIGIN, Point3::new(10.0, 4.0, 0.0)).unwrap(), 0.25).unwrap();
        assert!(planar.is_planar());
        assert_eq!(planar.dims, [41, 17, 1]);
        let idx = [3, 4, 5];
        assert_eq!(g.unlinear(g.linear(idx)), idx);
        assert_eq!(g.index_of(g.center(idx)), Some(idx));
    }
}
