//! QuickHull in 3D with planar/linear fallbacks.
//!
//! Ties are broken towards the lowest input index so that the output is a
//! pure function of the input order.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::Point3;
use crate::error::{CoverError, Result};

/// Points closer than this (meters) are collapsed onto the lowest index.
pub const DEDUP_TOLERANCE: f64 = 1e-6;

/// Dimension the hull was actually computed in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum HullDimension {
    /// Every input point is (numerically) the same point.
    Point,
    /// All points are collinear; the hull is a segment.
    Linear,
    /// All points are coplanar; the hull is a polygon.
    Planar,
    Full,
}

impl HullDimension {
    pub fn is_degenerate(self) -> bool {
        self != HullDimension::Full
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HullResult {
    /// Indices into the input slice, ascending.
    pub vertex_indices: Vec<usize>,
    pub dimension: HullDimension,
    /// Outward-oriented triangles (input indices); empty unless `dimension == Full`.
    pub faces: Vec<[usize; 3]>,
}

impl HullResult {
    pub fn vertex_count(&self) -> usize {
        self.vertex_indices.len()
    }
}

pub fn convex_hull(points: &[Point3]) -> Result<HullResult> {
    if points.is_empty() {
        return Err(CoverError::InvalidInput("convex hull of an empty point set".into()));
    }
    if let Some(i) = points.iter().position(|p| !p.is_finite()) {
        return Err(CoverError::InvalidInput(format!("non-finite hull input at index {i}")));
    }
    let unique = dedup(points);
    let scale = {
        let mut m = [0.0f64; 3];
        for &i in &unique {
            let p = points[i];
            m[0] = m[0].max(p.x.abs());
            m[1] = m[1].max(p.y.abs());
            m[2] = m[2].max(p.z.abs());
        }
        m[0] + m[1] + m[2]
    };
    let eps = (scale * 1e-12).max(1e-13);
    let degenerate_tol = 1e-9 * (1.0 + scale);

    // Initial segment: farthest pair among the axis extremes.
    let extremes = axis_extremes(points, &unique);
    let mut best = (extremes[0], extremes[0], -1.0);
    for (k, &a) in extremes.iter().enumerate() {
        for &b in &extremes[k + 1..] {
            let d = points[a].distance_squared(points[b]);
            if d > best.2 {
                best = (a.min(b), a.max(b), d);
            }
        }
    }
    let (ia, ib, d2) = best;
    if d2.sqrt() < degenerate_tol {
        return Ok(HullResult { vertex_indices: vec![unique[0]], dimension: HullDimension::Point, faces: Vec::new() });
    }
    let a = points[ia];
    let dir = (points[ib] - a) / d2.sqrt();

    let mut ic = usize::MAX;
    let mut best_line = -1.0;
    for &i in &unique {
        let d = (points[i] - a).cross(dir).norm();
        if d > best_line {
            best_line = d;
            ic = i;
        }
    }
    if best_line < degenerate_tol {
        return Ok(linear_hull(points, &unique, a, dir));
    }

    let normal = (points[ib] - a).cross(points[ic] - a);
    let normal = normal / normal.norm();
    let mut id = usize::MAX;
    let mut best_plane = -1.0;
    for &i in &unique {
        let d = normal.dot(points[i] - a).abs();
        if d > best_plane {
            best_plane = d;
            id = i;
        }
    }
    if best_plane < degenerate_tol {
        return Ok(planar_hull(points, &unique, a, dir, normal, degenerate_tol));
    }

    Ok(QuickHull::new(points, eps).run(&unique, [ia, ib, ic, id]))
}

fn dedup(points: &[Point3]) -> Vec<usize> {
    let key = |p: Point3| {
        (
            (p.x / DEDUP_TOLERANCE).floor() as i64,
            (p.y / DEDUP_TOLERANCE).floor() as i64,
            (p.z / DEDUP_TOLERANCE).floor() as i64,
        )
    };
    let mut cells: HashMap<(i64, i64, i64), Vec<usize>> = HashMap::with_capacity(points.len());
    let mut unique = Vec::with_capacity(points.len());
    'outer: for (i, &p) in points.iter().enumerate() {
        let (kx, ky, kz) = key(p);
        for dx in -1..=1 {
            for dy in -1..=1 {
                for dz in -1..=1 {
                    if let Some(bucket) = cells.get(&(kx + dx, ky + dy, kz + dz)) {
                        if bucket.iter().any(|&j| points[j].distance(p) < DEDUP_TOLERANCE) {
                            continue 'outer;
                        }
                    }
                }
            }
        }
        cells.entry((kx, ky, kz)).or_default().push(i);
        unique.push(i);
    }
    unique
}

fn axis_extremes(points: &[Point3], unique: &[usize]) -> Vec<usize> {
    let mut out = Vec::with_capacity(6);
    for axis in 0..3 {
        let coord = |i: usize| points[i].to_array()[axis];
        let mut lo = unique[0];
        let mut hi = unique[0];
        for &i in unique {
            if coord(i) < coord(lo) {
                lo = i;
            }
            if coord(i) > coord(hi) {
                hi = i;
            }
        }
        out.push(lo);
        out.push(hi);
    }
    out
}

fn linear_hull(points: &[Point3], unique: &[usize], a: Point3, dir: Point3) -> HullResult {
    let mut lo = (f64::INFINITY, usize::MAX);
    let mut hi = (f64::NEG_INFINITY, usize::MAX);
    for &i in unique {
        let t = dir.dot(points[i] - a);
        if t < lo.0 {
            lo = (t, i);
        }
        if t > hi.0 {
            hi = (t, i);
        }
    }
    let mut vertex_indices = vec![lo.1, hi.1];
    vertex_indices.sort_unstable();
    HullResult { vertex_indices, dimension: HullDimension::Linear, faces: Vec::new() }
}

fn planar_hull(points: &[Point3], unique: &[usize], a: Point3, e1: Point3, normal: Point3, tol: f64) -> HullResult {
    let e2 = normal.cross(e1);
    let mut pts: Vec<(f64, f64, usize)> = unique
        .iter()
        .map(|&i| {
            let d = points[i] - a;
            (e1.dot(d), e2.dot(d), i)
        })
        .collect();
    pts.sort_by(|p, q| p.0.total_cmp(&q.0).then(p.1.total_cmp(&q.1)).then(p.2.cmp(&q.2)));

    // Andrew's monotone chain; collinear boundary points are dropped.
    let cross = |o: &(f64, f64, usize), p: &(f64, f64, usize), q: &(f64, f64, usize)| {
        (p.0 - o.0) * (q.1 - o.1) - (p.1 - o.1) * (q.0 - o.0)
    };
    let mut extent = 0.0f64;
    for p in &pts {
        extent = extent.max(p.0.abs()).max(p.1.abs());
    }
    let area_tol = tol * extent.max(1.0);
    let mut chain: Vec<(f64, f64, usize)> = Vec::with_capacity(2 * pts.len());
    for p in &pts {
        while chain.len() >= 2 && cross(&chain[chain.len() - 2], &chain[chain.len() - 1], p) <= area_tol {
            chain.pop();
        }
        chain.push(*p);
    }
    // the upper pass must never pop into the finished lower chain
    let floor = chain.len() + 1;
    for p in pts.iter().rev().skip(1) {
        while chain.len() >= floor && cross(&chain[chain.len() - 2], &chain[chain.len() - 1], p) <= area_tol {
            chain.pop();
        }
        chain.push(*p);
    }
    chain.pop();
    let mut vertex_indices: Vec<usize> = chain.into_iter().map(|p| p.2).collect();
    vertex_indices.sort_unstable();
    vertex_indices.dedup();
    HullResult { vertex_indices, dimension: HullDimension::Planar, faces: Vec::new() }
}

struct Face {
    v: [usize; 3],
    normal: Point3,
    offset: f64,
    outside: Vec<usize>,
    alive: bool,
}

struct QuickHull<'a> {
    points: &'a [Point3],
    eps: f64,
    faces: Vec<Face>,
    edges: HashMap<(usize, usize), usize>,
}

impl<'a> QuickHull<'a> {
    fn new(points: &'a [Point3], eps: f64) -> Self {
        Self { points, eps, faces: Vec::new(), edges: HashMap::new() }
    }

    fn distance(&self, face: usize, i: usize) -> f64 {
        let f = &self.faces[face];
        f.normal.dot(self.points[i]) - f.offset
    }

    fn add_face(&mut self, v: [usize; 3], fallback_normal: Point3) -> usize {
        let [a, b, c] = v.map(|i| self.points[i]);
        let n = (b - a).cross(c - a);
        let len = n.norm();
        let normal = if len > 1e-300 { n / len } else { fallback_normal };
        let id = self.faces.len();
        self.faces.push(Face { v, normal, offset: normal.dot(a), outside: Vec::new(), alive: true });
        for k in 0..3 {
            self.edges.insert((v[k], v[(k + 1) % 3]), id);
        }
        id
    }

    fn kill_face(&mut self, id: usize) {
        let v = self.faces[id].v;
        self.faces[id].alive = false;
        for k in 0..3 {
            let key = (v[k], v[(k + 1) % 3]);
            if self.edges.get(&key) == Some(&id) {
                self.edges.remove(&key);
            }
        }
    }

    /// Puts `i` in the outside set of the candidate face it is farthest above.
    fn assign(&mut self, i: usize, candidates: &[usize]) {
        let mut best: Option<(usize, f64)> = None;
        for &f in candidates {
            let d = self.distance(f, i);
            if d > self.eps && best.is_none_or(|(_, bd)| d > bd) {
                best = Some((f, d));
            }
        }
        if let Some((f, _)) = best {
            self.faces[f].outside.push(i);
        }
    }

    fn run(mut self, unique: &[usize], simplex: [usize; 4]) -> HullResult {
        let [i0, i1, i2, i3] = simplex;
        let p = self.points;
        let centroid = (p[i0] + p[i1] + p[i2] + p[i3]) / 4.0;
        for tri in [[i0, i1, i2], [i0, i3, i1], [i1, i3, i2], [i2, i3, i0]] {
            let [a, b, c] = tri.map(|i| p[i]);
            let n = (b - a).cross(c - a);
            let oriented = if n.dot(centroid - a) > 0.0 { [tri[0], tri[2], tri[1]] } else { tri };
            self.add_face(oriented, Point3::ORIGIN);
        }
        let initial: Vec<usize> = (0..4).collect();
        for &i in unique {
            if !simplex.contains(&i) {
                self.assign(i, &initial);
            }
        }

        let mut stack: Vec<usize> = (0..4).rev().collect();
        while let Some(f) = stack.pop() {
            if !self.faces[f].alive || self.faces[f].outside.is_empty() {
                continue;
            }
            let eye = {
                let mut best = (f64::NEG_INFINITY, usize::MAX);
                for &i in &self.faces[f].outside {
                    let d = self.distance(f, i);
                    if d > best.0 || (d == best.0 && i < best.1) {
                        best = (d, i);
                    }
                }
                best.1
            };

            // Visible region, grown across shared edges.
            let mut visible = vec![f];
            let mut is_visible: HashMap<usize, bool> = HashMap::new();
            is_visible.insert(f, true);
            let mut k = 0;
            while k < visible.len() {
                let g = visible[k];
                k += 1;
                let v = self.faces[g].v;
                for e in 0..3 {
                    let Some(&h) = self.edges.get(&(v[(e + 1) % 3], v[e])) else { continue };
                    if is_visible.contains_key(&h) {
                        continue;
                    }
                    let vis = self.distance(h, eye) > self.eps;
                    is_visible.insert(h, vis);
                    if vis {
                        visible.push(h);
                    }
                }
            }

            let mut horizon: Vec<((usize, usize), Point3)> = Vec::new();
            for &g in &visible {
                let v = self.faces[g].v;
                for e in 0..3 {
                    let (a, b) = (v[e], v[(e + 1) % 3]);
                    let across = self.edges.get(&(b, a)).copied();
                    if across.is_none_or(|h| !is_visible[&h]) {
                        horizon.push(((a, b), self.faces[g].normal));
                    }
                }
            }

            let mut orphans = Vec::new();
            for &g in &visible {
                orphans.extend(self.faces[g].outside.drain(..).filter(|&i| i != eye));
                self.kill_face(g);
            }
            let new_faces: Vec<usize> =
                horizon.into_iter().map(|((a, b), fallback)| self.add_face([a, b, eye], fallback)).collect();
            orphans.sort_unstable();
            for i in orphans {
                self.assign(i, &new_faces);
            }
            for &g in new_faces.iter().rev() {
                if !self.faces[g].outside.is_empty() {
                    stack.push(g);
                }
            }
        }

        let faces: Vec<[usize; 3]> = self.faces.iter().filter(|f| f.alive).map(|f| f.v).collect();
        let mut vertex_indices: Vec<usize> = faces.iter().flatten().copied().collect();
        vertex_indices.sort_unstable();
        vertex_indices.dedup();
        HullResult { vertex_indices, dimension: HullDimension::Full, faces }
    }
}
