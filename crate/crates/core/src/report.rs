//! Trial outputs: trajectory CSV, metrics JSON lines, batch reports and a
//! plain-text summary table.

use std::fmt::Write as _;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{CoverError, Result};
use crate::exec::Execution;
use crate::sim_runtime::{simulate, Policy, Scenario, TrialMetrics, TrialRecord};

pub const TRAJECTORY_HEADER: &str = "t,robot_id,x,y,z,ux,uy,uz";

/// One row per executed step per robot, step-major.
pub fn write_trajectory_csv<W: Write>(mut w: W, record: &TrialRecord) -> Result<()> {
    writeln!(w, "{TRAJECTORY_HEADER}")?;
    let steps = record.trajectories.iter().map(Vec::len).max().unwrap_or(0);
    for k in 0..steps {
        for (id, path) in record.trajectories.iter().enumerate() {
            if let Some(s) = path.get(k) {
                let (p, u) = (s.position, s.velocity);
                writeln!(w, "{},{id},{},{},{},{},{},{}", s.t, p.x, p.y, p.z, u.x, u.y, u.z)?;
            }
        }
    }
    Ok(())
}

/// Single-line JSON for one trial.
pub fn metrics_json_line(m: &TrialMetrics) -> Result<String> {
    serde_json::to_string(m).map_err(|e| CoverError::Io(e.to_string()))
}

pub fn write_metrics_jsonl<'a, W: Write>(mut w: W, trials: impl IntoIterator<Item = &'a TrialMetrics>) -> Result<()> {
    for m in trials {
        writeln!(w, "{}", metrics_json_line(m)?)?;
    }
    Ok(())
}

/// Reads metrics written by [`write_metrics_jsonl`]; blank lines are skipped.
pub fn read_metrics_jsonl(text: &str) -> Result<Vec<TrialMetrics>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| CoverError::Parse { line: i + 1, message: e.to_string() }))
        .collect()
}

/// Per-policy aggregate row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyAggregate {
    pub policy: Policy,
    pub trials: usize,
    pub successes: usize,
    pub success_rate: f64,
    pub mean_coverage_ratio: f64,
    /// Mean simulated seconds over successful trials only.
    pub mean_time_success: Option<f64>,
    pub collisions: usize,
    pub deadlocked_trials: usize,
    /// Smallest observed surface distances across all trials.
    pub min_robot_distance: Option<f64>,
    pub min_obstacle_distance: Option<f64>,
}

impl PolicyAggregate {
    /// Aggregates `trials` in order; every trial must use `policy`.
    pub fn from_trials(policy: Policy, trials: &[&TrialMetrics]) -> Self {
        let n = trials.len();
        let successes = trials.iter().filter(|m| m.success).count();
        let coverage: f64 = trials.iter().map(|m| m.coverage_ratio).sum();
        let times: Vec<f64> = trials.iter().filter(|m| m.success).map(|m| m.elapsed).collect();
        let fold =
            |it: &mut dyn Iterator<Item = f64>| it.fold(None, |a: Option<f64>, v| Some(a.map_or(v, |a| a.min(v))));
        Self {
            policy,
            trials: n,
            successes,
            success_rate: if n == 0 { 0.0 } else { successes as f64 / n as f64 },
            mean_coverage_ratio: if n == 0 { 0.0 } else { coverage / n as f64 },
            mean_time_success: if times.is_empty() {
                None
            } else {
                Some(times.iter().sum::<f64>() / times.len() as f64)
            },
            collisions: trials.iter().map(|m| m.collisions).sum(),
            deadlocked_trials: trials.iter().filter(|m| m.deadlocked.iter().any(|&d| d)).count(),
            min_robot_distance: fold(&mut trials.iter().filter_map(|m| m.min_robot_distance)),
            min_obstacle_distance: fold(&mut trials.iter().filter_map(|m| m.min_obstacle_distance)),
        }
    }
}

/// Per-trial rows plus one aggregate per policy, in first-seen order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub trials: Vec<TrialMetrics>,
    pub aggregates: Vec<PolicyAggregate>,
}

impl RunReport {
    pub fn from_trials(trials: Vec<TrialMetrics>) -> Self {
        let mut policies: Vec<Policy> = Vec::new();
        for m in &trials {
            if !policies.contains(&m.policy) {
                policies.push(m.policy);
            }
        }
        let aggregates = policies
            .into_iter()
            .map(|p| {
                let rows: Vec<&TrialMetrics> = trials.iter().filter(|m| m.policy == p).collect();
                PolicyAggregate::from_trials(p, &rows)
            })
            .collect();
        Self { trials, aggregates }
    }

    pub fn aggregate(&self, policy: Policy) -> Option<&PolicyAggregate> {
        self.aggregates.iter().find(|a| a.policy == policy)
    }

    /// Aligned text table in the shape of a method comparison.
    pub fn summary_table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "{:<16} {:>7} {:>13} {:>15} {:>14} {:>11}",
            "policy", "trials", "success rate", "coverage ratio", "avg time (s)", "collisions"
        );
        for a in &self.aggregates {
            let time = a.mean_time_success.map_or_else(|| "-".to_string(), |t| format!("{t:.2}"));
            let _ = writeln!(
                s,
                "{:<16} {:>7} {:>12.2}% {:>14.2}% {:>14} {:>11}",
                a.policy.name(),
                a.trials,
                100.0 * a.success_rate,
                100.0 * a.mean_coverage_ratio,
                time,
                a.collisions
            );
        }
        s
    }
}

/// Batch settings: `trials` seeds starting at `base_seed`, each run once per policy.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchSpec {
    pub trials: usize,
    pub base_seed: u64,
    pub policies: Vec<Policy>,
}

/// Runs every (seed, policy) pair on the same base scenario so policies see
/// identical starts. Trials are spread over `exec`; robots inside a trial
/// run sequentially. Rows are ordered policy-major, then by seed.
pub fn run_batch(base: &Scenario, spec: &BatchSpec, exec: Execution) -> Result<RunReport> {
    if spec.trials == 0 {
        return Err(CoverError::Config("a batch needs at least one trial".into()));
    }
    if spec.policies.is_empty() {
        return Err(CoverError::Config("a batch needs at least one policy".into()));
    }
    base.validate()?;
    let jobs: Vec<Scenario> = spec
        .policies
        .iter()
        .flat_map(|&p| {
            (0..spec.trials as u64).map(move |k| {
                let mut s = base.clone();
                s.policy = p;
                s.seed = spec.base_seed.wrapping_add(k);
                s
            })
        })
        .collect();
    let results = exec.map(&jobs, |s| simulate(s, Execution::Sequential).map(|r| r.metrics));
    Ok(RunReport::from_trials(results.into_iter().collect::<Result<Vec<_>>>()?))
}
