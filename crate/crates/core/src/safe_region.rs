//! Buffered Voronoi cells built from neighbour positions and selected
//! obstacle points.
//!
//! Every face is stored with its raw separator `aᵀp ≤ b` and its buffer
//! `β = r·‖a‖`; the cell itself is `{ p : aᵀp ≤ b − β }` for all faces.

use serde::{Deserialize, Serialize};

use crate::error::{CoverError, Result};
use crate::geometry::{ConvexRegion, HalfSpace, Point3};
use crate::minqp::{self, SeparatorProblem};

/// Membership tolerance, meters.
pub const MEMBERSHIP_TOLERANCE: f64 = 1e-9;
/// Clearance slack used when checking the collision-free precondition.
pub const CLEARANCE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RobotDisk {
    pub id: usize,
    pub position: Point3,
    pub radius: f64,
}

impl RobotDisk {
    pub const DEFAULT_RADIUS: f64 = 0.25;

    pub fn new(id: usize, position: Point3, radius: f64) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(CoverError::InvalidInput(format!("robot radius must be positive, got {radius}")));
        }
        Ok(Self { id, position, radius })
    }
}

/// What generated a cell face.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum FaceSource {
    Neighbor(usize),
    /// Index into the selected obstacle list.
    Obstacle(usize),
    /// One hyperplane separating all selected obstacle points at once.
    ObstacleCluster,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellFace {
    /// Unbuffered separator `aᵀp ≤ b`.
    pub separator: HalfSpace,
    pub buffer: f64,
    pub source: FaceSource,
}

/// How obstacle points become hyperplanes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ObstacleSeparation {
    /// One closed-form separator per selected point.
    #[default]
    PerPoint,
    /// A single minimum-norm separator for all selected points.
    Joint,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BufferedCell {
    pub owner: RobotDisk,
    pub region: ConvexRegion,
    pub faces: Vec<CellFace>,
}

impl BufferedCell {
    fn from_faces(owner: RobotDisk, faces: Vec<CellFace>) -> Self {
        let region = ConvexRegion::new(
            faces
                .iter()
                .map(|f| HalfSpace { normal: f.separator.normal, offset: f.separator.offset - f.buffer })
                .collect(),
        );
        Self { owner, region, faces }
    }

    pub fn contains(&self, p: Point3) -> bool {
        self.region.contains(p, MEMBERSHIP_TOLERANCE)
    }
}

pub fn contains(cell: &BufferedCell, p: Point3) -> bool {
    cell.contains(p)
}

fn neighbor_face(me: &RobotDisk, other: &RobotDisk) -> Result<CellFace> {
    let a = other.position - me.position;
    if a.norm() < 1e-9 {
        return Err(CoverError::RobotsCoincide);
    }
    let b = a.dot((me.position + other.position) * 0.5);
    Ok(CellFace {
        separator: HalfSpace { normal: a, offset: b },
        buffer: me.radius * a.norm(),
        source: FaceSource::Neighbor(other.id),
    })
}

/// Bisector between two robots, oriented `a = p_other − p_self` and shrunk by
/// `β = r_self·‖a‖`, so the result holds `self` and excludes `other`.
pub fn neighbor_halfspace(me: &RobotDisk, other: &RobotDisk) -> Result<HalfSpace> {
    let f = neighbor_face(me, other)?;
    Ok(HalfSpace { normal: f.separator.normal, offset: f.separator.offset - f.buffer })
}

fn obstacle_faces(me: &RobotDisk, selected: &[Point3], mode: ObstacleSeparation) -> Result<Vec<CellFace>> {
    for q in selected {
        if q.distance(me.position) < me.radius - CLEARANCE_TOLERANCE {
            return Err(CoverError::ObstacleInsideSafetyRadius);
        }
    }
    match mode {
        ObstacleSeparation::PerPoint => selected
            .iter()
            .enumerate()
            .map(|(o, &q)| {
                let s = minqp::solve_single(me.position, q)?;
                Ok(CellFace {
                    separator: HalfSpace { normal: s.a, offset: s.b },
                    buffer: me.radius * s.a.norm(),
                    source: FaceSource::Obstacle(o),
                })
            })
            .collect(),
        ObstacleSeparation::Joint => {
            if selected.is_empty() {
                return Ok(Vec::new());
            }
            let s = minqp::solve_min_norm(&SeparatorProblem::new(me.position, selected.to_vec())?)?;
            Ok(vec![CellFace {
                separator: HalfSpace { normal: s.a, offset: s.b },
                buffer: me.radius * s.a.norm(),
                source: FaceSource::ObstacleCluster,
            }])
        }
    }
}

/// One buffered half-space per selected obstacle point.
pub fn obstacle_halfspaces(me: &RobotDisk, selected: &[Point3]) -> Result<Vec<HalfSpace>> {
    Ok(obstacle_faces(me, selected, ObstacleSeparation::PerPoint)?
        .into_iter()
        .map(|f| HalfSpace { normal: f.separator.normal, offset: f.separator.offset - f.buffer })
        .collect())
}

pub fn build_bvc(me: &RobotDisk, neighbors: &[RobotDisk], selected_obstacles: &[Point3]) -> Result<BufferedCell> {
    build_bvc_with(me, neighbors, selected_obstacles, ObstacleSeparation::PerPoint)
}

pub fn build_bvc_with(
    me: &RobotDisk,
    neighbors: &[RobotDisk],
    selected_obstacles: &[Point3],
    mode: ObstacleSeparation,
) -> Result<BufferedCell> {
    let mut faces = Vec::with_capacity(neighbors.len() + selected_obstacles.len());
    for other in neighbors {
        let face = neighbor_face(me, other)?;
        if me.position.distance(other.position) < me.radius + other.radius - CLEARANCE_TOLERANCE {
            return Err(CoverError::RobotsOverlap(me.id, other.id));
        }
        faces.push(face);
    }
    faces.extend(obstacle_faces(me, selected_obstacles, mode)?);
    Ok(BufferedCell::from_faces(*me, faces))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn robot(id: usize, x: f64, y: f64, z: f64) -> RobotDisk {
        RobotDisk::new(id, Point3::new(x, y, z), 0.25).unwrap()
    }

    fn boundary_along(h: &HalfSpace, axis: Point3) -> f64 {
        // offset / (normal · axis) for an axis-aligned normal
        h.offset / h.normal.dot(axis)
    }

    #[test]
    fn bisector_on_x() {
        let (i, j) = (robot(0, 0.0, 0.0, 0.0), robot(1, 2.0, 0.0, 0.0));
        let f = neighbor_face(&i, &j).unwrap();
        assert_eq!(f.separator.normal, Point3::new(2.0, 0.0, 0.0));
        assert_eq!(f.separator.offset, 2.0);
        assert_eq!(f.buffer, 0.5);
        let h = neighbor_halfspace(&i, &j).unwrap();
        assert!((boundary_along(&h, Point3::new(1.0, 0.0, 0.0)) - 0.75).abs() < 1e-12);
        assert!(h.contains(i.position, 0.0) && !h.contains(j.position, 0.0));
        // swapped: x >= 1.25
        let k = neighbor_halfspace(&j, &i).unwrap();
        assert!(k.contains(Point3::new(1.25, 0.0, 0.0), 1e-12));
        assert!(!k.contains(Point3::new(1.24, 0.0, 0.0), 0.0));
    }

    #[test]
    fn bisector_on_z() {
        let h = neighbor_halfspace(&robot(0, 0.0, 0.0, 0.0), &robot(1, 0.0, 0.0, 4.0)).unwrap();
        assert!((boundary_along(&h, Point3::new(0.0, 0.0, 1.0)) - 1.75).abs() < 1e-12);
    }

    #[test]
    fn coincident_robots() {
        let err = neighbor_halfspace(&robot(0, 1.0, 1.0, 1.0), &robot(1, 1.0, 1.0, 1.0)).unwrap_err();
        assert_eq!(err.to_string(), "robots coincide");
    }

    #[test]
    fn obstacle_face_closed_form() {
        let me = robot(0, 0.0, 0.0, 0.0);
        let f = obstacle_faces(&me, &[Point3::new(2.0, 0.0, 0.0)], ObstacleSeparation::PerPoint).unwrap();
        assert_eq!(f[0].separator.normal, Point3::new(0.5, 0.0, 0.0));
        assert_eq!(f[0].separator.offset, 1.0);
        assert_eq!(f[0].buffer, 0.125);
        let h = obstacle_halfspaces(&me, &[Point3::new(2.0, 0.0, 0.0), Point3::new(0.0, 3.0, 0.0)]).unwrap();
        assert!((boundary_along(&h[0], Point3::new(1.0, 0.0, 0.0)) - 1.75).abs() < 1e-12);
        assert!((boundary_along(&h[1], Point3::new(0.0, 1.0, 0.0)) - 2.75).abs() < 1e-12);
    }

    #[test]
    fn six_axis_points_give_box() {
        let me = robot(0, 0.0, 0.0, 0.0);
        let mut pts = Vec::new();
        for axis in [Point3::new(1.0, 0.0, 0.0), Point3::new(0.0, 1.0, 0.0), Point3::new(0.0, 0.0, 1.0)] {
            pts.push(axis * 3.0);
            pts.push(axis * -3.0);
        }
        let cell = build_bvc(&me, &[], &pts).unwrap();
        assert_eq!(cell.region.halfspaces.len(), 6);
        assert!(cell.contains(Point3::ORIGIN));
        assert!(cell.contains(Point3::new(2.75, 2.75, -2.75)));
        assert!(!cell.contains(Point3::new(2.76, 0.0, 0.0)));
        assert!(!cell.contains(Point3::new(0.0, 0.0, -2.76)));
    }

    #[test]
    fn obstacle_too_close() {
        let err = build_bvc(&robot(0, 0.0, 0.0, 0.0), &[], &[Point3::new(0.1, 0.0, 0.0)]).unwrap_err();
        assert_eq!(err.to_string(), "obstacle inside safety radius");
    }

    #[test]
    fn empty_cell_is_everything() {
        let cell = build_bvc(&robot(0, 0.0, 0.0, 0.0), &[], &[]).unwrap();
        assert!(cell.region.halfspaces.is_empty());
        assert!(cell.contains(Point3::new(1e3, 1e3, 1e3)));
    }

    #[test]
    fn two_robot_gap() {
        let (a, b) = (robot(0, 0.0, 0.0, 0.0), robot(1, 2.0, 0.0, 0.0));
        let ca = build_bvc(&a, &[b], &[]).unwrap();
        let cb = build_bvc(&b, &[a], &[]).unwrap();
        let mid = Point3::new(1.0, 0.0, 0.0);
        assert!(!ca.contains(mid) && !cb.contains(mid));
        assert!(ca.contains(Point3::new(0.75, 5.0, 0.0)) && !ca.contains(Point3::new(0.76, 0.0, 0.0)));
        assert!(cb.contains(Point3::new(1.25, -5.0, 0.0)) && !cb.contains(Point3::new(1.24, 0.0, 0.0)));
    }

    #[test]
    fn overlapping_robots_rejected() {
        let err = build_bvc(&robot(0, 0.0, 0.0, 0.0), &[robot(1, 0.4, 0.0, 0.0)], &[]).unwrap_err();
        assert_eq!(err, CoverError::RobotsOverlap(0, 1));
    }

    #[test]
    fn ring_of_obstacles() {
        let me = robot(0, 0.0, 0.0, 0.0);
        let ring: Vec<Point3> = (0..8)
            .map(|k| {
                let t = k as f64 * std::f64::consts::FRAC_PI_4;
                Point3::new(3.0 * t.cos(), 3.0 * t.sin(), 0.0)
            })
            .collect();
        let cell = build_bvc(&me, &[], &ring).unwrap();
        assert!(cell.contains(me.position));
        for q in &ring {
            assert!(!cell.contains(*q));
        }
    }

    #[test]
    fn joint_separator_excludes_all_points() {
        let me = robot(0, 0.0, 0.0, 0.0);
        let pts = [Point3::new(2.0, 0.0, 0.0), Point3::new(2.0, 1.0, 0.0), Point3::new(3.0, -1.0, 0.5)];
        let cell = build_bvc_with(&me, &[], &pts, ObstacleSeparation::Joint).unwrap();
        assert_eq!(cell.faces.len(), 1);
        assert!(cell.contains(me.position));
        assert!(pts.iter().all(|q| !cell.contains(*q)));
    }
}
