//! Minimum-norm separating hyperplanes.
//!
//! Solves `min ‖a‖²  s.t. (q_o − p)ᵀa ≥ 1` for a handful of targets `q_o`
//! with a dual active-set method (Goldfarb–Idnani with identity Hessian).
//! At the optimum `1/‖a‖` equals the distance from `p` to the convex hull of
//! the targets, and the hyperplane is then shifted to touch the nearest one.

use serde::{Deserialize, Serialize};

use crate::error::{CoverError, Result};
use crate::geometry::Point3;

/// Minimum distance between the anchor and any target, in meters.
pub const MIN_TARGET_DISTANCE: f64 = 1e-9;

const MAX_ITERATIONS: usize = 500;

#[derive(Debug, Clone, PartialEq)]
pub struct SeparatorProblem {
    anchor: Point3,
    targets: Vec<Point3>,
}

impl SeparatorProblem {
    pub fn new(anchor: Point3, targets: Vec<Point3>) -> Result<Self> {
        if targets.is_empty() {
            return Err(CoverError::InvalidInput("separator problem has no targets".into()));
        }
        if targets.iter().any(|q| q.distance(anchor) < MIN_TARGET_DISTANCE) {
            return Err(CoverError::InvalidInput("target coincides with anchor".into()));
        }
        Ok(Self { anchor, targets })
    }

    pub fn anchor(&self) -> Point3 {
        self.anchor
    }

    pub fn targets(&self) -> &[Point3] {
        &self.targets
    }

    fn normals(&self) -> Vec<Point3> {
        self.targets.iter().map(|&q| q - self.anchor).collect()
    }
}

/// Hyperplane `aᵀx = b` touching the nearest target; `margin = 1/‖a‖`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Separator {
    pub a: Point3,
    pub b: f64,
    pub margin: f64,
}

impl Separator {
    fn from_normal(a: Point3, targets: &[Point3]) -> Self {
        let b = targets.iter().map(|&q| a.dot(q)).fold(f64::INFINITY, f64::min);
        Self { a, b, margin: 1.0 / a.norm() }
    }
}

/// Closed form for one target: `a = (q − p)/‖q − p‖²`, `b = aᵀq`.
pub fn solve_single(anchor: Point3, target: Point3) -> Result<Separator> {
    let d = target - anchor;
    let n2 = d.norm_squared();
    if n2.sqrt() < MIN_TARGET_DISTANCE {
        return Err(CoverError::InvalidInput("target coincides with anchor".into()));
    }
    let a = d / n2;
    Ok(Separator { a, b: a.dot(target), margin: n2.sqrt() })
}

/// Minimum-norm separator; single-target problems take the closed form.
pub fn solve_min_norm(problem: &SeparatorProblem) -> Result<Separator> {
    match problem.targets.as_slice() {
        [q] => solve_single(problem.anchor, *q),
        _ => solve_active_set(problem),
    }
}

/// Active-set solve regardless of target count.
pub fn solve_active_set(problem: &SeparatorProblem) -> Result<Separator> {
    let normals = problem.normals();
    let a = dual_active_set(&normals)?;
    Ok(Separator::from_normal(a, &problem.targets))
}

fn dual_active_set(normals: &[Point3]) -> Result<Point3> {
    let mut a = Point3::ORIGIN;
    let mut active: Vec<usize> = Vec::with_capacity(3);
    let mut lambda: Vec<f64> = Vec::with_capacity(3);

    for _ in 0..MAX_ITERATIONS {
        // Most violated constraint; ties go to the lowest index.
        let mut p = None;
        let mut worst = -1e-12;
        for (k, n) in normals.iter().enumerate() {
            let s = n.dot(a) - 1.0;
            if s < worst && !active.contains(&k) {
                worst = s;
                p = Some(k);
            }
        }
        let Some(p) = p else { return Ok(a) };
        let np = normals[p];
        let mut lambda_p = 0.0;

        loop {
            let (z, r) = project_out(&active, normals, np);
            let zz = z.norm_squared();
            let full_step = if zz > 1e-14 * np.norm_squared() { Some(-(np.dot(a) - 1.0) / zz) } else { None };
            let mut partial: Option<(usize, f64)> = None;
            for (j, &rj) in r.iter().enumerate() {
                if rj > 1e-12 {
                    let t = lambda[j] / rj;
                    if partial.is_none_or(|(_, bt)| t < bt) {
                        partial = Some((j, t));
                    }
                }
            }
            match (full_step, partial) {
                (None, None) => return Err(CoverError::NoSeparatingHyperplane),
                (None, Some((l, t))) => {
                    for (lj, rj) in lambda.iter_mut().zip(&r) {
                        *lj -= t * rj;
                    }
                    lambda_p += t;
                    active.remove(l);
                    lambda.remove(l);
                }
                (Some(t2), partial) => {
                    let (t, drop) = match partial {
                        Some((l, t1)) if t1 < t2 => (t1, Some(l)),
                        _ => (t2, None),
                    };
                    a += z * t;
                    for (lj, rj) in lambda.iter_mut().zip(&r) {
                        *lj -= t * rj;
                    }
                    lambda_p += t;
                    match drop {
                        None => {
                            active.push(p);
                            lambda.push(lambda_p);
                            break;
                        }
                        Some(l) => {
                            active.remove(l);
                            lambda.remove(l);
                        }
                    }
                }
            }
        }
    }
    Err(CoverError::NoSeparatingHyperplane)
}

/// Splits `n` into the part orthogonal to the active normals (`z`) and the
/// coefficients `r` of its projection onto their span.
fn project_out(active: &[usize], normals: &[Point3], n: Point3) -> (Point3, Vec<f64>) {
    if active.is_empty() {
        return (n, Vec::new());
    }
    let cols: Vec<Point3> = active.iter().map(|&k| normals[k]).collect();
    let r = least_squares(&cols, n).unwrap_or_else(|| vec![0.0; cols.len()]);
    let mut proj = Point3::ORIGIN;
    for (c, rj) in cols.iter().zip(&r) {
        proj += *c * *rj;
    }
    (n - proj, r)
}

/// Solves the normal equations `(NᵀN) x = Nᵀv` for at most 3 columns.
#[allow(clippy::needless_range_loop)] // row and column indices are both live
fn least_squares(cols: &[Point3], v: Point3) -> Option<Vec<f64>> {
    let k = cols.len();
    let mut m = [[0.0f64; 4]; 3];
    for i in 0..k {
        for j in 0..k {
            m[i][j] = cols[i].dot(cols[j]);
        }
        m[i][k] = cols[i].dot(v);
    }
    let scale = (0..k).map(|i| m[i][i]).fold(0.0, f64::max);
    for col in 0..k {
        let piv = (col..k).max_by(|&x, &y| m[x][col].abs().total_cmp(&m[y][col].abs()))?;
        if m[piv][col].abs() <= 1e-13 * scale {
            return None;
        }
        m.swap(col, piv);
        for row in 0..k {
            if row != col {
                let f = m[row][col] / m[col][col];
                for c in col..=k {
                    m[row][c] -= f * m[col][c];
                }
            }
        }
    }
    Some((0..k).map(|i| m[i][k] / m[i][i]).collect())
}

/// KKT check: feasibility, `a` in the cone of active normals, and the tight shift.
pub fn verify_kkt(problem: &SeparatorProblem, candidate: &Separator) -> bool {
    const TOL: f64 = 1e-6;
    let normals = problem.normals();
    let a = candidate.a;
    let values: Vec<f64> = normals.iter().map(|n| n.dot(a)).collect();
    if values.iter().any(|&v| v < 1.0 - TOL) {
        return false;
    }
    let expected_b = problem.targets.iter().map(|&q| a.dot(q)).fold(f64::INFINITY, f64::min);
    if (expected_b - candidate.b).abs() > TOL * (1.0 + expected_b.abs()) {
        return false;
    }
    let active: Vec<usize> = (0..normals.len()).filter(|&k| values[k] <= 1.0 + TOL).collect();
    let residual_tol = TOL * a.norm().max(1.0);
    // Carathéodory: a cone combination needs at most 3 independent generators.
    let mut subset = Vec::with_capacity(3);
    for size in 1..=active.len().min(3) {
        if cone_subset(&active, &normals, a, size, 0, &mut subset, residual_tol) {
            return true;
        }
    }
    false
}

fn cone_subset(
    active: &[usize],
    normals: &[Point3],
    a: Point3,
    size: usize,
    start: usize,
    subset: &mut Vec<usize>,
    tol: f64,
) -> bool {
    if subset.len() == size {
        let cols: Vec<Point3> = subset.iter().map(|&k| normals[k]).collect();
        let Some(lam) = least_squares(&cols, a) else { return false };
        if lam.iter().any(|&l| l < -1e-9) {
            return false;
        }
        let mut recon = Point3::ORIGIN;
        for (c, l) in cols.iter().zip(&lam) {
            recon += *c * *l;
        }
        return recon.distance(a) <= tol;
    }
    for i in start..active.len() {
        subset.push(active[i]);
        if cone_subset(active, normals, a, size, i + 1, subset, tol) {
            return true;
        }
        subset.pop();
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn p(x: f64, y: f64, z: f64) -> Point3 {
        Point3::new(x, y, z)
    }

    #[test]
    fn single_target_closed_form() {
        let prob = SeparatorProblem::new(Point3::ORIGIN, vec![p(2.0, 0.0, 0.0)]).unwrap();
        let s = solve_min_norm(&prob).unwrap();
        assert_eq!(s.a, p(0.5, 0.0, 0.0));
        assert_eq!(s.b, 1.0);
        assert_eq!(s.margin, 2.0);
        let qp = solve_active_set(&prob).unwrap();
        assert!(qp.a.distance(s.a) < 1e-7 && (qp.b - s.b).abs() < 1e-7);
        assert!(verify_kkt(&prob, &s));
    }

    #[test]
    fn inactive_second_constraint() {
        let prob = SeparatorProblem::new(Point3::ORIGIN, vec![p(2.0, 0.0, 0.0), p(2.0, 1.0, 0.0)]).unwrap();
        let s = solve_min_norm(&prob).unwrap();
        assert!(s.a.distance(p(0.5, 0.0, 0.0)) < 1e-12);
        assert!((s.b - 1.0).abs() < 1e-12);
        assert!(verify_kkt(&prob, &s));
    }

    #[test]
    fn symmetric_pair_matches_grid_search() {
        let prob = SeparatorProblem::new(Point3::ORIGIN, vec![p(1.0, 1.0, 0.0), p(1.0, -1.0, 0.0)]).unwrap();
        let s = solve_min_norm(&prob).unwrap();
        assert!(s.a.distance(p(1.0, 0.0, 0.0)) < 1e-12);
        assert!((s.b - 1.0).abs() < 1e-12);
        // dense grid over (ax, ay) with az = 0
        let mut best = (f64::INFINITY, 0.0, 0.0);
        for i in 0..=400 {
            for j in 0..=400 {
                let ax = -2.0 + 4.0 * i as f64 / 400.0;
                let ay = -2.0 + 4.0 * j as f64 / 400.0;
                if ax + ay >= 1.0 - 1e-12 && ax - ay >= 1.0 - 1e-12 {
                    let n = ax * ax + ay * ay;
                    if n < best.0 {
                        best = (n, ax, ay);
                    }
                }
            }
        }
        assert!((best.1 - s.a.x).abs() <= 0.01 && (best.2 - s.a.y).abs() <= 0.01);
    }

    #[test]
    fn anchor_inside_hull_is_infeasible() {
        let prob =
            SeparatorProblem::new(Point3::ORIGIN, vec![p(1.0, 0.0, 0.0), p(-1.0, 0.0, 0.0), p(0.0, 1.0, 0.0)]).unwrap();
        assert_eq!(solve_min_norm(&prob).unwrap_err(), CoverError::NoSeparatingHyperplane);
        let tet = SeparatorProblem::new(
            Point3::ORIGIN,
            vec![p(1.0, 1.0, 1.0), p(-1.0, -1.0, 1.0), p(-1.0, 1.0, -1.0), p(1.0, -1.0, -1.0)],
        )
        .unwrap();
        assert_eq!(solve_min_norm(&tet).unwrap_err(), CoverError::NoSeparatingHyperplane);
    }

    #[test]
    fn scaled_solution_fails_kkt() {
        let prob = SeparatorProblem::new(Point3::ORIGIN, vec![p(2.0, 0.0, 0.0)]).unwrap();
        let s = solve_min_norm(&prob).unwrap();
        let a = s.a * 2.0;
        let scaled = Separator { a, b: a.dot(p(2.0, 0.0, 0.0)), margin: 1.0 / a.norm() };
        assert!(!verify_kkt(&prob, &scaled));
    }

    #[test]
    fn rejects_bad_problems() {
        assert!(SeparatorProblem::new(Point3::ORIGIN, vec![]).is_err());
        assert!(SeparatorProblem::new(Point3::ORIGIN, vec![Point3::ORIGIN]).is_err());
    }

    #[test]
    fn random_five_target_problems_pass_kkt() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut solved = 0;
        for _ in 0..100 {
            // targets in a half-space so the anchor stays outside their hull
            let dir = p(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            let dir = dir / dir.norm();
            let targets: Vec<Point3> = (0..5)
                .map(|_| {
                    let q = p(rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0));
                    q - dir * q.dot(dir) + dir * rng.gen_range(0.5..4.0)
                })
                .collect();
            let prob = SeparatorProblem::new(Point3::ORIGIN, targets).unwrap();
            let s = solve_min_norm(&prob).unwrap();
            assert!(verify_kkt(&prob, &s));
            assert_eq!(s, solve_min_norm(&prob).unwrap());
            solved += 1;
        }
        assert_eq!(solved, 100);
    }
}
