//! Discrete-time decentralized simulation.
//!
//! Every step runs, per robot and from one shared position snapshot:
//! sense, known-map update, visible-obstacle selection, buffered cell,
//! goal and navigation field, weighted centroid and the control law. The
//! Euler update is applied to all robots together afterwards.

use std::collections::HashSet;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::coverage_control::{coverage_step, CentroidDensity, ControlParams};
use crate::environment::{read_points_file, CloudFormat};
use crate::environment::{Aabb, GmmDensity, GridSpec, KnownMap, PointCloudIndex, SensorModel, DEFAULT_RESOLUTION};
use crate::error::{CoverError, Result};
use crate::exec::Execution;
use crate::geometry::{select_visible_indices, Point3};
use crate::guided_map::{compute_nav_field, select_goal, GuidanceDensity, VoxelGrid};
use crate::safe_region::{build_bvc_with, ObstacleSeparation, RobotDisk};

/// Surface distances below `-COLLISION_TOLERANCE` count as collisions.
pub const COLLISION_TOLERANCE: f64 = 1e-6;
/// Extra clearance required of randomly spawned robots, meters.
pub const SPAWN_MARGIN: f64 = 0.05;
const SPAWN_ATTEMPTS: usize = 10_000;
/// Slack added to the one-step reach when guarding the selection, meters.
pub const SAFETY_SHELL: f64 = 0.25;

/// Which density feeds the weighted centroid. The safety machinery is the
/// same for all three.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Policy {
    /// Guidance density `exp(−γ·M_go)` from the navigation field.
    #[default]
    Proposed,
    /// The target mixture itself, blind to obstacles.
    GreedyDensity,
    /// Uniform weight.
    PureCvt,
}

impl Policy {
    pub const ALL: [Policy; 3] = [Policy::Proposed, Policy::GreedyDensity, Policy::PureCvt];

    pub fn name(self) -> &'static str {
        match self {
            Policy::Proposed => "proposed",
            Policy::GreedyDensity => "greedy-density",
            Policy::PureCvt => "pure-cvt",
        }
    }
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Policy {
    type Err = CoverError;

    fn from_str(s: &str) -> Result<Self> {
        policy_variant(s)
    }
}

pub fn policy_variant(name: &str) -> Result<Policy> {
    Policy::ALL.into_iter().find(|p| p.name() == name.trim()).ok_or_else(|| CoverError::UnknownPolicy(name.to_string()))
}

/// Where the obstacle points come from.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CloudSource {
    #[default]
    Empty,
    File {
        path: PathBuf,
        format: Option<CloudFormat>,
    },
    Points(Vec<Point3>),
}

/// Initial robot placement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Spawn {
    Fixed(Vec<Point3>),
    /// `count` robots drawn uniformly from `region` with rejection.
    Random {
        count: usize,
        region: Aabb,
    },
}

impl Spawn {
    pub fn count(&self) -> usize {
        match self {
            Spawn::Fixed(p) => p.len(),
            Spawn::Random { count, .. } => *count,
        }
    }
}

/// Everything a trial needs, in meters, seconds and m/s.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub workspace: Aabb,
    pub resolution: f64,
    pub cloud: CloudSource,
    pub spawn: Spawn,
    pub robot_radius: f64,
    pub sensor: SensorModel,
    pub control: ControlParams,
    pub t_max: f64,
    pub gamma: f64,
    pub density: GmmDensity,
    /// Peak-detection radius.
    pub d_cov: f64,
    pub policy: Policy,
    pub seed: u64,
    /// Deadlock window in steps.
    pub deadlock_window: usize,
    pub separation: ObstacleSeparation,
    /// Neighbours farther than this are ignored when building cells.
    pub neighbor_cutoff: Option<f64>,
}

impl Scenario {
    pub const DEFAULT_T_MAX: f64 = 30.0;
    pub const DEFAULT_D_COV: f64 = 1.0;
    pub const DEFAULT_WINDOW: usize = 50;

    /// A scenario with every tunable at its default.
    pub fn new(workspace: Aabb, spawn: Spawn, density: GmmDensity) -> Self {
        Self {
            workspace,
            resolution: DEFAULT_RESOLUTION,
            cloud: CloudSource::Empty,
            spawn,
            robot_radius: RobotDisk::DEFAULT_RADIUS,
            sensor: SensorModel::default(),
            control: ControlParams::default(),
            t_max: Self::DEFAULT_T_MAX,
            gamma: GuidanceDensity::DEFAULT_GAMMA,
            density,
            d_cov: Self::DEFAULT_D_COV,
            policy: Policy::Proposed,
            seed: 0,
            deadlock_window: Self::DEFAULT_WINDOW,
            separation: ObstacleSeparation::PerPoint,
            neighbor_cutoff: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(CoverError::Config(m));
        if !(self.resolution > 0.0) {
            return bad(format!("resolution must be positive, got {}", self.resolution));
        }
        if !(self.robot_radius > 0.0) {
            return bad(format!("robot radius must be positive, got {}", self.robot_radius));
        }
        if !(self.sensor.range > 0.0) {
            return bad(format!("sensor range must be positive, got {}", self.sensor.range));
        }
        let c = &self.control;
        if !(c.u_max > 0.0 && c.dt > 0.0 && c.tol >= 0.0) {
            return bad("control needs u_max > 0, dt > 0 and tol >= 0".into());
        }
        if !(self.t_max > 0.0) {
            return bad(format!("t_max must be positive, got {}", self.t_max));
        }
        if !(self.gamma >= 0.0 && self.gamma.is_finite()) {
            return bad(format!("gamma must be nonnegative, got {}", self.gamma));
        }
        if !(self.d_cov > 0.0) {
            return bad(format!("d_cov must be positive, got {}", self.d_cov));
        }
        if self.deadlock_window == 0 {
            return bad("deadlock window must be at least one step".into());
        }
        if self.spawn.count() == 0 {
            return bad("at least one robot is required".into());
        }
        if let Spawn::Random { region, .. } = &self.spawn {
            if !(self.workspace.contains(region.min, 1e-9) && self.workspace.contains(region.max, 1e-9)) {
                return bad("spawn region must lie inside the workspace".into());
            }
        }
        Ok(())
    }

    pub fn steps_limit(&self) -> usize {
        (self.t_max / self.control.dt + 1e-9).floor() as usize
    }
}

/// Loaded environment shared by every robot.
#[derive(Debug, Clone)]
pub struct World {
    pub scenario: Scenario,
    pub cloud: PointCloudIndex,
    pub grid: GridSpec,
    pub peaks: Vec<Point3>,
}

impl World {
    /// Loads the cloud and builds the grid. Errors are configuration errors.
    pub fn new(scenario: &Scenario) -> Result<Self> {
        scenario.validate()?;
        let points = match &scenario.cloud {
            CloudSource::Empty => Vec::new(),
            CloudSource::Points(p) => p.clone(),
            CloudSource::File { path, format } => {
                let format = match format {
                    Some(f) => *f,
                    None => CloudFormat::from_path(path).ok_or_else(|| {
                        CoverError::Config(format!("cannot infer cloud format of {}", path.display()))
                    })?,
                };
                read_points_file(path, format)?
            }
        };
        let cloud = PointCloudIndex::with_bounds(points, DEFAULT_RESOLUTION, scenario.workspace)
            .map_err(|e| CoverError::Config(e.to_string()))?;
        let grid = GridSpec::covering(&scenario.workspace, scenario.resolution)?;
        let peaks = scenario.density.peaks().collect();
        Ok(Self { scenario: scenario.clone(), cloud, grid, peaks })
    }

    /// Initial positions: fixed ones are checked, random ones are drawn with
    /// rejection so the start is collision free with a small margin.
    pub fn initial_positions(&self) -> Result<Vec<Point3>> {
        let s = &self.scenario;
        let r = s.robot_radius;
        let clear = |p: Point3, placed: &[Point3], margin: f64| {
            s.workspace.contains(p, 1e-9)
                && self.cloud.nearest_within(p, r + margin).is_none_or(|d| d >= r + margin)
                && placed.iter().all(|q| q.distance(p) >= 2.0 * r + margin)
        };
        match &s.spawn {
            Spawn::Fixed(points) => {
                for (i, &p) in points.iter().enumerate() {
                    if !clear(p, &points[..i], 0.0) {
                        return Err(CoverError::Config(format!("robot {i} starts in collision at {:?}", p.to_array())));
                    }
                }
                Ok(points.clone())
            }
            Spawn::Random { count, region } => {
                let mut rng = ChaCha8Rng::seed_from_u64(s.seed);
                let mut placed = Vec::with_capacity(*count);
                let lerp = |lo: f64, hi: f64, t: f64| lo + (hi - lo) * t;
                for i in 0..*count {
                    let mut found = None;
                    for _ in 0..SPAWN_ATTEMPTS {
                        let p = Point3::new(
                            lerp(region.min.x, region.max.x, rng.gen()),
                            lerp(region.min.y, region.max.y, rng.gen()),
                            lerp(region.min.z, region.max.z, rng.gen()),
                        );
                        if clear(p, &placed, SPAWN_MARGIN) {
                            found = Some(p);
                            break;
                        }
                    }
                    placed.push(
                        found.ok_or_else(|| CoverError::Config(format!("could not place robot {i} collision free")))?,
                    );
                }
                Ok(placed)
            }
        }
    }

    pub fn nearest_peak_distance(&self, p: Point3) -> f64 {
        self.peaks.iter().map(|c| c.distance(p)).fold(f64::INFINITY, f64::min)
    }
}

/// One logged control step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySample {
    pub t: f64,
    pub position: Point3,
    pub velocity: Point3,
}

#[derive(Debug, Clone)]
pub struct RobotState {
    pub disk: RobotDisk,
    pub known: KnownMap,
    /// Inflated traversability; only kept by the proposed policy.
    pub traversable: Option<VoxelGrid>,
    pub guidance: Option<GuidanceDensity>,
    pub converged: bool,
    pub deadlocked: bool,
    pub trajectory: Vec<TrajectorySample>,
}

impl RobotState {
    pub fn new(id: usize, position: Point3, radius: f64, grid: GridSpec) -> Result<Self> {
        Ok(Self {
            disk: RobotDisk::new(id, position, radius)?,
            known: KnownMap::new(grid),
            traversable: None,
            guidance: None,
            converged: false,
            deadlocked: false,
            trajectory: Vec::new(),
        })
    }

    pub fn position(&self) -> Point3 {
        self.disk.position
    }
}

/// Per-robot result of one step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    pub velocity: Point3,
    pub centroid: Point3,
    pub converged: bool,
    pub cell_cost: f64,
    pub degenerate: bool,
    pub sensed: usize,
    pub selected: usize,
    /// The next position left the buffered cell (never expected).
    pub left_cell: bool,
    pub map_ms: f64,
    pub cell_ms: f64,
}

fn elapsed_ms(since: Instant) -> f64 {
    since.elapsed().as_secs_f64() * 1e3
}

/// Visible points plus every sensed point within `guard` of `p`.
///
/// Hidden-point removal may drop a point that is reachable within one step;
/// the guard ring restores the clearance guarantee for those.
pub fn guarded_selection(sensed: &[Point3], p: Point3, mirror_radius: f64, guard: f64) -> Result<Vec<Point3>> {
    let visible = select_visible_indices(sensed, p, mirror_radius)?;
    let mut keep = vec![false; sensed.len()];
    for i in visible {
        keep[i] = true;
    }
    for (k, q) in sensed.iter().enumerate() {
        if q.distance(p) <= guard {
            keep[k] = true;
        }
    }
    Ok(sensed.iter().zip(keep).filter(|(_, k)| *k).map(|(q, _)| *q).collect())
}

fn plan_robot(world: &World, state: &mut RobotState, snapshot: &[RobotDisk]) -> Result<StepOutcome> {
    let s = &world.scenario;
    let me = state.disk;
    let p = me.position;

    let t_map = Instant::now();
    let sensed = world.cloud.sense(&s.sensor, p);
    let update = state.known.update(&sensed);
    let mut map_ms = elapsed_ms(t_map);

    let t_cell = Instant::now();
    let selected =
        guarded_selection(&sensed, p, s.sensor.range, me.radius + s.control.u_max * s.control.dt + SAFETY_SHELL)?;
    let neighbors: Vec<RobotDisk> = snapshot
        .iter()
        .filter(|o| o.id != me.id && s.neighbor_cutoff.is_none_or(|c| o.position.distance(p) <= c))
        .copied()
        .collect();
    let cell = build_bvc_with(&me, &neighbors, &selected, s.separation)?;
    let cell_ms = elapsed_ms(t_cell);

    let t_guide = Instant::now();
    if s.policy == Policy::Proposed {
        let fresh = state.traversable.is_none();
        let grid = state.traversable.get_or_insert_with(|| VoxelGrid::from_known_map(&state.known, me.radius));
        let changed = if fresh { 0 } else { grid.add_obstacles(&update.newly_marked, me.radius) };
        match select_goal(&s.density, p, &s.sensor, grid) {
            Ok(goal) => {
                let goal_idx = grid.spec().clamped_index(goal);
                let stale = match &state.guidance {
                    Some(g) => g.nav.goal() != goal_idx || changed > 0,
                    None => true,
                };
                if stale {
                    state.guidance = Some(GuidanceDensity::new(compute_nav_field(grid, goal)?, s.gamma)?);
                }
            }
            // Nothing traversable in range: fall back to uniform weights.
            Err(CoverError::SensorRegionBlocked) => state.guidance = None,
            Err(e) => return Err(e),
        }
    }
    map_ms += elapsed_ms(t_guide);

    let density = match (s.policy, &state.guidance) {
        (Policy::Proposed, Some(g)) => CentroidDensity::Guidance(g),
        (Policy::Proposed, None) | (Policy::PureCvt, _) => CentroidDensity::Uniform,
        (Policy::GreedyDensity, _) => CentroidDensity::Gmm(&s.density),
    };
    let (out, c) = coverage_step(&cell, density, p, &s.sensor, &world.grid, &s.control);
    let next = p + out.velocity * s.control.dt;
    Ok(StepOutcome {
        velocity: out.velocity,
        centroid: out.centroid,
        converged: out.converged,
        cell_cost: out.cell_cost,
        degenerate: c.degenerate,
        sensed: sensed.len(),
        selected: selected.len(),
        left_cell: !cell.contains(next),
        map_ms,
        cell_ms,
    })
}

/// One synchronous round at time `t`: every robot plans from the same
/// snapshot, then all positions advance by `u·dt`.
///
/// On error no state is moved.
pub fn step(world: &World, states: &mut [RobotState], t: f64, exec: Execution) -> Result<Vec<StepOutcome>> {
    let snapshot: Vec<RobotDisk> = states.iter().map(|s| s.disk).collect();
    let planned = exec.map_mut(states, |state| plan_robot(world, state, &snapshot));
    let outcomes = planned.into_iter().collect::<Result<Vec<_>>>()?;
    let dt = world.scenario.control.dt;
    for (state, out) in states.iter_mut().zip(&outcomes) {
        state.trajectory.push(TrajectorySample { t, position: state.disk.position, velocity: out.velocity });
        state.disk.position += out.velocity * dt;
        state.converged = out.converged;
    }
    Ok(outcomes)
}

/// Thresholds for [`detect_deadlock`].
#[derive(Debug, Clone, Copy)]
pub struct DeadlockCriteria<'a> {
    pub peaks: &'a [Point3],
    pub d_cov: f64,
    /// Displacement bound over the window, meters.
    pub min_progress: f64,
}

/// True when the robot stayed within `min_progress` of its current position
/// for the last `window` steps, is not converged and sees no peak within
/// `d_cov`.
pub fn detect_deadlock(state: &RobotState, window: usize, criteria: &DeadlockCriteria<'_>) -> bool {
    let window = window.max(1);
    let p = state.position();
    if state.converged || state.trajectory.len() < window {
        return false;
    }
    if criteria.peaks.iter().any(|c| c.distance(p) <= criteria.d_cov) {
        return false;
    }
    let recent = &state.trajectory[state.trajectory.len() - window..];
    recent.iter().all(|s| s.position.distance(p) < criteria.min_progress)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Termination {
    AllPeaksDetected,
    /// Every robot converged or deadlocked.
    Settled,
    TimeLimit,
    /// A safety precondition failed mid-run.
    Aborted,
}

/// Summary of a list of timings, milliseconds.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct TimingSummary {
    pub samples: usize,
    pub mean: f64,
    pub median: f64,
    pub max: f64,
}

impl TimingSummary {
    pub fn from_samples(samples: &[f64]) -> Self {
        if samples.is_empty() {
            return Self::default();
        }
        let mut sorted = samples.to_vec();
        sorted.sort_by(f64::total_cmp);
        let n = sorted.len();
        let median = if n % 2 == 1 { sorted[n / 2] } else { 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]) };
        Self { samples: n, mean: sorted.iter().sum::<f64>() / n as f64, median, max: sorted[n - 1] }
    }
}

/// Wall-clock measurements; excluded from [`TrialMetrics`] equality.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct TrialTiming {
    /// Known-map update, goal selection and navigation field, per robot-step.
    pub map_ms: TimingSummary,
    /// Obstacle selection and cell construction, per robot-step.
    pub cell_ms: TimingSummary,
    pub wall_ms: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrialMetrics {
    pub policy: Policy,
    pub seed: u64,
    pub robots: usize,
    pub peaks_detected: usize,
    pub peaks_total: usize,
    pub coverage_ratio: f64,
    pub success: bool,
    /// Simulated seconds.
    pub elapsed: f64,
    pub steps: usize,
    pub termination: Termination,
    pub collisions: usize,
    /// Smallest center distance minus radii over all robot pairs and steps.
    pub min_robot_distance: Option<f64>,
    /// Smallest robot to obstacle-point distance minus radius, within sensor range.
    pub min_obstacle_distance: Option<f64>,
    pub deadlocked: Vec<bool>,
    pub converged: Vec<bool>,
    /// Steps whose next position left the buffered cell.
    pub cell_exits: usize,
    pub diagnostic: Option<String>,
    pub timing: TrialTiming,
}

impl PartialEq for TrialMetrics {
    fn eq(&self, o: &Self) -> bool {
        // timing is wall-clock and never reproducible
        self.policy == o.policy
            && self.seed == o.seed
            && self.robots == o.robots
            && self.peaks_detected == o.peaks_detected
            && self.peaks_total == o.peaks_total
            && self.coverage_ratio.to_bits() == o.coverage_ratio.to_bits()
            && self.success == o.success
            && self.elapsed.to_bits() == o.elapsed.to_bits()
            && self.steps == o.steps
            && self.termination == o.termination
            && self.collisions == o.collisions
            && self.min_robot_distance.map(f64::to_bits) == o.min_robot_distance.map(f64::to_bits)
            && self.min_obstacle_distance.map(f64::to_bits) == o.min_obstacle_distance.map(f64::to_bits)
            && self.deadlocked == o.deadlocked
            && self.converged == o.converged
            && self.cell_exits == o.cell_exits
            && self.diagnostic == o.diagnostic
    }
}

/// Metrics plus the per-robot logs of a finished trial.
#[derive(Debug, Clone)]
pub struct TrialRecord {
    pub metrics: TrialMetrics,
    pub trajectories: Vec<Vec<TrajectorySample>>,
    /// Per-step team-total cell cost, one entry per executed step.
    pub team_cost: Vec<f64>,
    /// Per-step, per-robot cell cost.
    pub robot_cost: Vec<Vec<f64>>,
}

fn fold_min(acc: &mut Option<f64>, v: f64) {
    *acc = Some(acc.map_or(v, |a| a.min(v)));
}

/// Minimal surface distances at the current configuration.
fn clearance(world: &World, states: &[RobotState]) -> (Option<f64>, Option<f64>) {
    let mut robot = None;
    let mut obstacle = None;
    for (i, a) in states.iter().enumerate() {
        for b in &states[i + 1..] {
            fold_min(&mut robot, a.position().distance(b.position()) - a.disk.radius - b.disk.radius);
        }
        if let Some(d) = world.cloud.nearest_within(a.position(), world.scenario.sensor.range) {
            fold_min(&mut obstacle, d - a.disk.radius);
        }
    }
    (robot, obstacle)
}

/// Runs one trial, keeping trajectories and cost histories.
pub fn simulate(scenario: &Scenario, exec: Execution) -> Result<TrialRecord> {
    let wall = Instant::now();
    let world = World::new(scenario)?;
    let s = &world.scenario;
    let mut states = world
        .initial_positions()?
        .into_iter()
        .enumerate()
        .map(|(i, p)| RobotState::new(i, p, s.robot_radius, world.grid))
        .collect::<Result<Vec<_>>>()?;
    let n = states.len();
    let criteria = DeadlockCriteria { peaks: &world.peaks, d_cov: s.d_cov, min_progress: 0.5 * s.resolution };

    let mut detected: HashSet<usize> = HashSet::new();
    let mark_detected = |states: &[RobotState], detected: &mut HashSet<usize>| {
        for (k, c) in world.peaks.iter().enumerate() {
            if states.iter().any(|st| st.position().distance(*c) <= s.d_cov) {
                detected.insert(k);
            }
        }
    };
    mark_detected(&states, &mut detected);

    let (mut min_robot, mut min_obstacle) = clearance(&world, &states);
    let mut collisions = 0usize;
    let mut cell_exits = 0usize;
    let mut map_samples = Vec::new();
    let mut cell_samples = Vec::new();
    let mut team_cost = Vec::new();
    let mut robot_cost = Vec::new();
    let mut diagnostic = None;
    let limit = s.steps_limit();
    let mut steps = 0usize;

    let termination = loop {
        if detected.len() == world.peaks.len() {
            break Termination::AllPeaksDetected;
        }
        if steps > 0 && states.iter().all(|st| st.converged || st.deadlocked) {
            break Termination::Settled;
        }
        if steps >= limit {
            break Termination::TimeLimit;
        }
        let t = steps as f64 * s.control.dt;
        let outcomes = match step(&world, &mut states, t, exec) {
            Ok(o) => o,
            Err(e) => {
                diagnostic = Some(format!("step {steps}: {e}"));
                break Termination::Aborted;
            }
        };
        steps += 1;
        for o in &outcomes {
            map_samples.push(o.map_ms);
            cell_samples.push(o.cell_ms);
            cell_exits += usize::from(o.left_cell);
        }
        robot_cost.push(outcomes.iter().map(|o| o.cell_cost).collect::<Vec<_>>());
        team_cost.push(outcomes.iter().map(|o| o.cell_cost).sum());

        let (r, o) = clearance(&world, &states);
        if let Some(r) = r {
            fold_min(&mut min_robot, r);
            collisions += usize::from(r < -COLLISION_TOLERANCE);
        }
        if let Some(o) = o {
            fold_min(&mut min_obstacle, o);
            collisions += usize::from(o < -COLLISION_TOLERANCE);
        }
        mark_detected(&states, &mut detected);
        for st in states.iter_mut() {
            if !st.deadlocked && detect_deadlock(st, s.deadlock_window, &criteria) {
                st.deadlocked = true;
            }
        }
    };

    // A robot parked away from every peak while peaks remain uncovered is stuck.
    if detected.len() < world.peaks.len() {
        for st in states.iter_mut() {
            if st.converged && world.nearest_peak_distance(st.position()) > s.d_cov {
                st.deadlocked = true;
            }
        }
    }

    let deadlocked: Vec<bool> = states.iter().map(|st| st.deadlocked).collect();
    let peaks_total = world.peaks.len();
    let success = termination != Termination::Aborted
        && collisions == 0
        && !deadlocked.iter().any(|&d| d)
        && detected.len() == peaks_total;
    let metrics = TrialMetrics {
        policy: s.policy,
        seed: s.seed,
        robots: n,
        peaks_detected: detected.len(),
        peaks_total,
        coverage_ratio: detected.len() as f64 / peaks_total as f64,
        success,
        elapsed: steps as f64 * s.control.dt,
        steps,
        termination,
        collisions,
        min_robot_distance: min_robot,
        min_obstacle_distance: min_obstacle,
        deadlocked,
        converged: states.iter().map(|st| st.converged).collect(),
        cell_exits,
        diagnostic,
        timing: TrialTiming {
            map_ms: TimingSummary::from_samples(&map_samples),
            cell_ms: TimingSummary::from_samples(&cell_samples),
            wall_ms: elapsed_ms(wall),
        },
    };
    Ok(TrialRecord {
        metrics,
        trajectories: states.into_iter().map(|st| st.trajectory).collect(),
        team_cost,
        robot_cost,
    })
}

pub fn run_trial(scenario: &Scenario) -> Result<TrialMetrics> {
    run_trial_with(scenario, Execution::default())
}

pub fn run_trial_with(scenario: &Scenario, exec: Execution) -> Result<TrialMetrics> {
    simulate(scenario, exec).map(|r| r.metrics)
}
