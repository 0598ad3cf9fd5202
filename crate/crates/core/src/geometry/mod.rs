//! Geometric primitives, convex hulls, and hidden-point selection by
//! spherical mirroring.

mod hull;

use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{CoverError, Result};

pub use hull::{convex_hull, HullDimension, HullResult, DEDUP_TOLERANCE};

/// A point (or free vector) in 3D, in meters.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 3]", into = "[f64; 3]")]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Point3 {
    pub const ORIGIN: Point3 = Point3 { x: 0.0, y: 0.0, z: 0.0 };

    #[inline]
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    #[inline]
    pub fn dot(self, other: Point3) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    #[inline]
    pub fn cross(self, other: Point3) -> Point3 {
        Point3::new(
            self.y * other.z - self.z * other.y,
            self.z * other.x - self.x * other.z,
            self.x * other.y - self.y * other.x,
        )
    }

    #[inline]
    pub fn norm_squared(self) -> f64 {
        self.dot(self)
    }

    #[inline]
    pub fn norm(self) -> f64 {
        self.norm_squared().sqrt()
    }

    #[inline]
    pub fn distance(self, other: Point3) -> f64 {
        (self - other).norm()
    }

    #[inline]
    pub fn distance_squared(self, other: Point3) -> f64 {
        (self - other).norm_squared()
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn max_abs(self) -> f64 {
        self.x.abs().max(self.y.abs()).max(self.z.abs())
    }
}

impl From<[f64; 3]> for Point3 {
    fn from(a: [f64; 3]) -> Self {
        Point3::new(a[0], a[1], a[2])
    }
}

impl From<Point3> for [f64; 3] {
    fn from(p: Point3) -> Self {
        p.to_array()
    }
}

impl Add for Point3 {
    type Output = Point3;
    #[inline]
    fn add(self, o: Point3) -> Point3 {
        Point3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl AddAssign for Point3 {
    #[inline]
    fn add_assign(&mut self, o: Point3) {
        self.x += o.x;
        self.y += o.y;
        self.z += o.z;
    }
}

impl Sub for Point3 {
    type Output = Point3;
    #[inline]
    fn sub(self, o: Point3) -> Point3 {
        Point3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Mul<f64> for Point3 {
    type Output = Point3;
    #[inline]
    fn mul(self, s: f64) -> Point3 {
        Point3::new(self.x * s, self.y * s, self.z * s)
    }
}

impl Div<f64> for Point3 {
    type Output = Point3;
    #[inline]
    fn div(self, s: f64) -> Point3 {
        Point3::new(self.x / s, self.y / s, self.z / s)
    }
}

impl Neg for Point3 {
    type Output = Point3;
    #[inline]
    fn neg(self) -> Point3 {
        Point3::new(-self.x, -self.y, -self.z)
    }
}

/// Closed half-space `{ p : normal·p <= offset }`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HalfSpace {
    pub normal: Point3,
    pub offset: f64,
}

impl HalfSpace {
    pub fn new(normal: Point3, offset: f64) -> Result<Self> {
        if !(normal.norm() > 0.0) || !normal.is_finite() || !offset.is_finite() {
            return Err(CoverError::InvalidInput("half-space normal must be finite and non-zero".into()));
        }
        Ok(Self { normal, offset })
    }

    /// Signed distance of `p` past the boundary, in meters; positive means outside.
    #[inline]
    pub fn signed_distance(&self, p: Point3) -> f64 {
        (self.normal.dot(p) - self.offset) / self.normal.norm()
    }

    /// Membership with a tolerance measured in meters.
    #[inline]
    pub fn contains(&self, p: Point3, tol: f64) -> bool {
        self.signed_distance(p) <= tol
    }
}

/// Intersection of half-spaces. An empty list is all of space.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ConvexRegion {
    pub halfspaces: Vec<HalfSpace>,
}

impl ConvexRegion {
    pub fn new(halfspaces: Vec<HalfSpace>) -> Self {
        Self { halfspaces }
    }

    pub fn contains(&self, p: Point3, tol: f64) -> bool {
        self.halfspaces.iter().all(|h| h.contains(p, tol))
    }

    /// Parameter interval `[lo, hi]` of the line `origin + t·dir` inside the
    /// region (unbounded ends are infinite). `None` when the line misses it.
    pub fn clip_line(&self, origin: Point3, dir: Point3) -> Option<(f64, f64)> {
        let mut lo = f64::NEG_INFINITY;
        let mut hi = f64::INFINITY;
        for h in &self.halfspaces {
            let slope = h.normal.dot(dir);
            let rest = h.offset - h.normal.dot(origin);
            if slope.abs() < 1e-300 {
                if rest < 0.0 {
                    return None;
                }
                continue;
            }
            let t = rest / slope;
            if slope > 0.0 {
                hi = hi.min(t);
            } else {
                lo = lo.max(t);
            }
            if lo > hi {
                return None;
            }
        }
        Some((lo, hi))
    }
}

/// Tolerance below which a point is considered coincident with the mirror center.
pub const DEGENERATE_MIRROR_TOLERANCE: f64 = 1e-9;

/// Spherical mirroring about `center` with sphere radius `radius`.
///
/// Each point `q` maps to `d·(2R/‖d‖ − 1)` with `d = q − center`; results are
/// in the center-origin frame and keep the input order.
pub fn mirror_points(points: &[Point3], center: Point3, radius: f64) -> Result<Vec<Point3>> {
    if !(radius > 0.0) {
        return Err(CoverError::InvalidInput(format!("mirror radius must be positive, got {radius}")));
    }
    points
        .iter()
        .map(|&q| {
            let d = q - center;
            let n = d.norm();
            if n < DEGENERATE_MIRROR_TOLERANCE {
                return Err(CoverError::DegenerateMirrorPoint);
            }
            Ok(d * (2.0 * radius / n - 1.0))
        })
        .collect()
}

/// Picks the obstacle points that matter for separating hyperplanes.
///
/// Points are mirrored about `center`, the frame origin is appended, and the
/// originals whose images are hull vertices are returned in input order.
pub fn select_visible_obstacles(local_points: &[Point3], center: Point3, radius: f64) -> Result<Vec<Point3>> {
    Ok(select_visible_indices(local_points, center, radius)?.into_iter().map(|i| local_points[i]).collect())
}

/// Index form of [`select_visible_obstacles`].
pub fn select_visible_indices(local_points: &[Point3], center: Point3, radius: f64) -> Result<Vec<usize>> {
    if local_points.is_empty() {
        return Ok(Vec::new());
    }
    let mut mirrored = mirror_points(local_points, center, radius)?;
    let origin_index = mirrored.len();
    mirrored.push(Point3::ORIGIN);
    let hull = convex_hull(&mirrored)?;
    Ok(hull.vertex_indices.into_iter().filter(|&i| i != origin_index).collect())
}
