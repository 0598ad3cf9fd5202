//! Weighted centroid of a buffered cell and the move-to-centroid law.

use serde::{Deserialize, Serialize};

use crate::environment::{GmmDensity, GridSpec, SensorModel};
use crate::geometry::Point3;
use crate::guided_map::{phi_from_cost, GuidanceDensity};
use crate::safe_region::BufferedCell;

/// Density integrated over the cell.
#[derive(Clone, Copy)]
pub enum CentroidDensity<'a> {
    /// `exp(−γ·M_go)` from a navigation field.
    Guidance(&'a GuidanceDensity),
    /// The target-of-interest mixture itself.
    Gmm(&'a GmmDensity),
    Uniform,
    /// Arbitrary weight by linear voxel index and voxel center.
    Custom(&'a (dyn Fn(usize, Point3) -> f64 + Sync)),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CentroidResult {
    pub centroid: Point3,
    /// Discretized `Σ ‖c − p‖²·φ(c)·res³` over the domain.
    pub cost: f64,
    pub voxels: usize,
    /// Set when no voxel center lies in the domain; `centroid` is then the robot position.
    pub degenerate: bool,
}

/// Visits the voxels whose centers lie in `cell ∩ ball(position, range)`,
/// column by column, in ascending (x, y, z) index order within each column.
pub fn for_each_domain_voxel(
    cell: &BufferedCell,
    position: Point3,
    sensor: &SensorModel,
    spec: &GridSpec,
    mut visit: impl FnMut(usize, Point3),
) {
    let r = sensor.range;
    let lo = spec.clamped_index(position - Point3::new(r, r, r));
    let hi = spec.clamped_index(position + Point3::new(r, r, r));
    let res = spec.resolution;
    let up = Point3::new(0.0, 0.0, 1.0);
    let member = |c: Point3| c.distance(position) <= r && cell.contains(c);
    for y in lo[1]..=hi[1] {
        for x in lo[0]..=hi[0] {
            let base = spec.center([x, y, 0]);
            let dx = base.x - position.x;
            let dy = base.y - position.y;
            let rem = r * r - dx * dx - dy * dy;
            if rem < 0.0 {
                continue;
            }
            let Some((tlo, thi)) = cell.region.clip_line(base, up) else { continue };
            // clip parameters are offsets from the column base
            let half = rem.sqrt();
            let zlo = (base.z + tlo).max(position.z - half);
            let zhi = (base.z + thi).min(position.z + half);
            let last = spec.dims[2] as i64 - 1;
            let mut klo = (((zlo - base.z) / res).ceil() as i64).clamp(0, last + 1);
            let mut khi = (((zhi - base.z) / res).floor() as i64).clamp(-1, last);
            let at = |k: i64| Point3::new(base.x, base.y, base.z + k as f64 * res);
            // reconcile the analytic interval with the exact membership test
            while klo <= khi && !member(at(klo)) {
                klo += 1;
            }
            while khi >= klo && !member(at(khi)) {
                khi -= 1;
            }
            if klo > khi {
                // the analytic interval may be empty by rounding alone
                let k = ((zlo - base.z) / res).round() as i64;
                if (0..=last).contains(&k) && member(at(k)) {
                    klo = k;
                    khi = k;
                } else {
                    continue;
                }
            }
            while klo > 0 && member(at(klo - 1)) {
                klo -= 1;
            }
            while khi < last && member(at(khi + 1)) {
                khi += 1;
            }
            for k in klo..=khi {
                let idx = [x, y, k as usize];
                visit(spec.linear(idx), at(k));
            }
        }
    }
}

/// Weighted centroid over `cell ∩ ball(position, sensor.range)`.
///
/// Falls back to the unweighted centroid when every weight is zero and to
/// the robot's own position when the domain holds no voxel center.
pub fn weighted_centroid(
    cell: &BufferedCell,
    density: CentroidDensity<'_>,
    position: Point3,
    sensor: &SensorModel,
    spec: &GridSpec,
) -> CentroidResult {
    let mut domain: Vec<(usize, Point3)> = Vec::new();
    for_each_domain_voxel(cell, position, sensor, spec, |lin, c| domain.push((lin, c)));
    if domain.is_empty() {
        return CentroidResult { centroid: position, cost: 0.0, voxels: 0, degenerate: true };
    }

    // Guidance weights are shifted by the smallest cost in the domain so the
    // centroid survives exp() underflow; the reported cost is unshifted.
    let (weights, scale): (Vec<f64>, f64) = match density {
        CentroidDensity::Guidance(g) => {
            let costs: Vec<f64> = domain.iter().map(|&(lin, _)| g.nav.cost_at_index(lin)).collect();
            let min = costs.iter().copied().filter(|c| c.is_finite()).fold(f64::INFINITY, f64::min);
            if min.is_finite() {
                let w = costs.iter().map(|&c| phi_from_cost(c - min, g.gamma)).collect();
                (w, (-g.gamma * min).exp())
            } else {
                (vec![0.0; costs.len()], 1.0)
            }
        }
        CentroidDensity::Gmm(gmm) => (domain.iter().map(|&(_, c)| gmm.density_at(c)).collect(), 1.0),
        CentroidDensity::Uniform => (vec![1.0; domain.len()], 1.0),
        CentroidDensity::Custom(f) => (domain.iter().map(|&(lin, c)| f(lin, c).max(0.0)).collect(), 1.0),
    };

    let mut total = 0.0;
    let mut moment = Point3::ORIGIN;
    let mut second = 0.0;
    for (&(_, c), &w) in domain.iter().zip(&weights) {
        total += w;
        moment += c * w;
        second += c.distance_squared(position) * w;
    }
    let vol = spec.resolution.powi(3);
    if total > 0.0 {
        CentroidResult { centroid: moment / total, cost: second * scale * vol, voxels: domain.len(), degenerate: false }
    } else {
        let mut sum = Point3::ORIGIN;
        for &(_, c) in &domain {
            sum += c;
        }
        CentroidResult { centroid: sum / domain.len() as f64, cost: 0.0, voxels: domain.len(), degenerate: false }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControlParams {
    pub u_max: f64,
    pub dt: f64,
    /// Speed below which a robot counts as converged, m/s.
    pub tol: f64,
}

impl Default for ControlParams {
    fn default() -> Self {
        Self { u_max: 2.5, dt: 0.1, tol: 0.01 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControlOutput {
    pub velocity: Point3,
    pub centroid: Point3,
    pub converged: bool,
    pub cell_cost: f64,
}

/// Heads straight for the centroid at `min(u_max, ‖C − p‖/dt)`.
pub fn control_law(position: Point3, centroid: Point3, params: &ControlParams) -> ControlOutput {
    let d = centroid - position;
    let dist = d.norm();
    let velocity = if dist > 0.0 { d * (params.u_max.min(dist / params.dt) / dist) } else { Point3::ORIGIN };
    ControlOutput { velocity, centroid, converged: velocity.norm() < params.tol, cell_cost: 0.0 }
}

/// Centroid plus control in one call.
pub fn coverage_step(
    cell: &BufferedCell,
    density: CentroidDensity<'_>,
    position: Point3,
    sensor: &SensorModel,
    spec: &GridSpec,
    params: &ControlParams,
) -> (ControlOutput, CentroidResult) {
    let c = weighted_centroid(cell, density, position, sensor, spec);
    let mut out = control_law(position, c.centroid, params);
    if c.degenerate {
        out.converged = true;
    }
    out.cell_cost = c.cost;
    (out, c)
}
