//! Deadlock-aware guidance: local goal selection, grid cost-to-go
//! (navigation function), and the density `φ = exp(−γ·M_go)`.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::environment::{GmmDensity, GridSpec, KnownMap, SensorModel};
use crate::error::{CoverError, Result};
use crate::geometry::Point3;

/// Voxel traversability over a workspace grid.
#[derive(Debug, Clone, PartialEq)]
pub struct VoxelGrid {
    spec: GridSpec,
    blocked: Vec<bool>,
}

impl VoxelGrid {
    /// Every voxel traversable.
    pub fn open(spec: GridSpec) -> Self {
        Self { blocked: vec![false; spec.len()], spec }
    }

    /// Known-obstacle voxels dilated by `inflation` meters (center to center).
    pub fn from_known_map(map: &KnownMap, inflation: f64) -> Self {
        let mut grid = Self::open(*map.grid());
        let offsets = dilation_offsets(grid.spec.resolution, inflation, grid.spec.is_planar());
        for lin in map.obstacle_voxels() {
            grid.stamp(lin, &offsets);
        }
        grid
    }

    /// Marks additional obstacle voxels (linear indices), dilated like
    /// [`VoxelGrid::from_known_map`]. Returns how many voxels became blocked.
    pub fn add_obstacles(&mut self, voxels: &[usize], inflation: f64) -> usize {
        let offsets = dilation_offsets(self.spec.resolution, inflation, self.spec.is_planar());
        voxels.iter().map(|&lin| self.stamp(lin, &offsets)).sum()
    }

    fn stamp(&mut self, lin: usize, offsets: &[[i64; 3]]) -> usize {
        let base = self.spec.unlinear(lin);
        let mut changed = 0;
        for off in offsets {
            if let Some(idx) = self.offset(base, *off) {
                let l = self.spec.linear(idx);
                if !self.blocked[l] {
                    self.blocked[l] = true;
                    changed += 1;
                }
            }
        }
        changed
    }

    #[inline]
    fn offset(&self, base: [usize; 3], off: [i64; 3]) -> Option<[usize; 3]> {
        let mut out = [0usize; 3];
        for k in 0..3 {
            let v = base[k] as i64 + off[k];
            if v < 0 || v >= self.spec.dims[k] as i64 {
                return None;
            }
            out[k] = v as usize;
        }
        Some(out)
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn set_blocked(&mut self, idx: [usize; 3], blocked: bool) {
        let l = self.spec.linear(idx);
        self.blocked[l] = blocked;
    }

    #[inline]
    pub fn is_blocked(&self, lin: usize) -> bool {
        self.blocked[lin]
    }

    pub fn blocked_count(&self) -> usize {
        self.blocked.iter().filter(|&&b| b).count()
    }
}

fn dilation_offsets(resolution: f64, radius: f64, planar: bool) -> Vec<[i64; 3]> {
    let reach = (radius / resolution + 1e-9).floor() as i64;
    let zr = if planar { 0 } else { reach };
    let mut out = Vec::new();
    for dz in -zr..=zr {
        for dy in -reach..=reach {
            for dx in -reach..=reach {
                let d = ((dx * dx + dy * dy + dz * dz) as f64).sqrt() * resolution;
                if d <= radius + 1e-9 {
                    out.push([dx, dy, dz]);
                }
            }
        }
    }
    out
}

/// Neighbour offsets with their Euclidean lengths in voxel units: 26 in 3D,
/// 8 when the grid is a single layer.
pub fn neighbor_offsets(planar: bool) -> Vec<([i64; 3], f64)> {
    let mut out = Vec::with_capacity(26);
    let zr = if planar { 0 } else { 1 };
    for dz in -zr..=zr {
        for dy in -1i64..=1 {
            for dx in -1i64..=1 {
                if dx == 0 && dy == 0 && dz == 0 {
                    continue;
                }
                out.push(([dx, dy, dz], ((dx * dx + dy * dy + dz * dz) as f64).sqrt()));
            }
        }
    }
    out
}

/// Highest-density traversable voxel center within sensor range.
///
/// Densities within a relative 1e-12 count as ties; ties go to the voxel
/// nearer `position`, then to the lexicographically smaller `[x, y, z]` index.
pub fn select_goal(gmm: &GmmDensity, position: Point3, sensor: &SensorModel, grid: &VoxelGrid) -> Result<Point3> {
    const REL: f64 = 1e-12;
    let spec = grid.spec;
    let r = sensor.range;
    let lo = spec.clamped_index(position - Point3::new(r, r, r));
    let hi = spec.clamped_index(position + Point3::new(r, r, r));
    let mut best: Option<(f64, f64, [usize; 3])> = None;
    for z in lo[2]..=hi[2] {
        for y in lo[1]..=hi[1] {
            for x in lo[0]..=hi[0] {
                let idx = [x, y, z];
                let c = spec.center(idx);
                let dist = c.distance(position);
                if dist > r || grid.is_blocked(spec.linear(idx)) {
                    continue;
                }
                let value = gmm.density_at(c);
                let better = match best {
                    None => true,
                    Some((bv, bd, bidx)) => {
                        let scale = value.abs().max(bv.abs());
                        if value > bv + REL * scale {
                            true
                        } else if value < bv - REL * scale {
                            false
                        } else if dist < bd - REL * bd.max(1.0) {
                            true
                        } else if dist > bd + REL * bd.max(1.0) {
                            false
                        } else {
                            idx < bidx
                        }
                    }
                };
                if better {
                    best = Some((value, dist, idx));
                }
            }
        }
    }
    best.map(|(_, _, idx)| spec.center(idx)).ok_or(CoverError::SensorRegionBlocked)
}

/// Cost-to-go to a goal voxel; unreachable voxels hold `f64::INFINITY`.
#[derive(Debug, Clone, PartialEq)]
pub struct NavField {
    spec: GridSpec,
    cost: Vec<f64>,
    goal: [usize; 3],
}

impl NavField {
    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn goal(&self) -> [usize; 3] {
        self.goal
    }

    pub fn goal_point(&self) -> Point3 {
        self.spec.center(self.goal)
    }

    pub fn costs(&self) -> &[f64] {
        &self.cost
    }

    #[inline]
    pub fn cost_at_index(&self, lin: usize) -> f64 {
        self.cost[lin]
    }

    pub fn cost_at(&self, p: Point3) -> Result<f64> {
        let idx = self.spec.index_of(p).ok_or(CoverError::OutOfBounds(p.to_array()))?;
        Ok(self.cost[self.spec.linear(idx)])
    }
}

#[derive(Clone, Copy, PartialEq)]
struct Entry {
    cost: f64,
    voxel: u32,
}

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        // min-heap on cost, then on voxel index for a fixed pop order
        other.cost.total_cmp(&self.cost).then_with(|| other.voxel.cmp(&self.voxel))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Single backward Dijkstra sweep from the goal over traversable voxels.
pub fn compute_nav_field(grid: &VoxelGrid, goal: Point3) -> Result<NavField> {
    let spec = grid.spec;
    let goal_idx = spec.index_of(goal).ok_or(CoverError::OutOfBounds(goal.to_array()))?;
    let goal_lin = spec.linear(goal_idx);
    if grid.is_blocked(goal_lin) {
        return Err(CoverError::GoalBlocked);
    }
    let steps: Vec<([i64; 3], f64)> =
        neighbor_offsets(spec.is_planar()).into_iter().map(|(o, len)| (o, len * spec.resolution)).collect();
    let mut cost = vec![f64::INFINITY; spec.len()];
    let mut done = vec![false; spec.len()];
    let mut heap = BinaryHeap::new();
    cost[goal_lin] = 0.0;
    heap.push(Entry { cost: 0.0, voxel: goal_lin as u32 });
    while let Some(Entry { cost: c, voxel }) = heap.pop() {
        let u = voxel as usize;
        if done[u] {
            continue;
        }
        done[u] = true;
        let base = spec.unlinear(u);
        for (off, w) in &steps {
            let Some(idx) = grid.offset(base, *off) else { continue };
            let v = spec.linear(idx);
            if done[v] || grid.is_blocked(v) {
                continue;
            }
            let nc = c + w;
            if nc < cost[v] {
                cost[v] = nc;
                heap.push(Entry { cost: nc, voxel: v as u32 });
            }
        }
    }
    Ok(NavField { spec, cost, goal: goal_idx })
}

/// `exp(−γ·M_go(p))`, zero where the goal is unreachable.
pub fn guidance_phi(nav: &NavField, gamma: f64, p: Point3) -> Result<f64> {
    Ok(phi_from_cost(nav.cost_at(p)?, gamma))
}

#[inline]
pub fn phi_from_cost(cost: f64, gamma: f64) -> f64 {
    if cost.is_finite() {
        (-gamma * cost).exp()
    } else {
        0.0
    }
}

/// A navigation field paired with its gain.
#[derive(Debug, Clone, PartialEq)]
pub struct GuidanceDensity {
    pub nav: NavField,
    pub gamma: f64,
}

impl GuidanceDensity {
    pub const DEFAULT_GAMMA: f64 = 1.0;

    pub fn new(nav: NavField, gamma: f64) -> Result<Self> {
        if !(gamma >= 0.0) {
            return Err(CoverError::InvalidInput(format!("gamma must be non-negative, got {gamma}")));
        }
        Ok(Self { nav, gamma })
    }

    pub fn phi(&self, p: Point3) -> Result<f64> {
        guidance_phi(&self.nav, self.gamma, p)
    }
}
