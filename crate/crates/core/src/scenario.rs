//! TOML scenario files.
//!
//! Sections: `workspace`, `robots`, `sensor`, `control`, `density`,
//! `policy` and `output`. Unknown keys are rejected. Lengths are meters,
//! times seconds and speeds m/s. A relative cloud path is resolved against
//! the directory holding the scenario file.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::coverage_control::ControlParams;
use crate::environment::{Aabb, CloudFormat, GmmComponent, GmmDensity, SensorModel, DEFAULT_RESOLUTION};
use crate::error::{CoverError, Result};
use crate::geometry::Point3;
use crate::guided_map::GuidanceDensity;
use crate::plot::Plane;
use crate::safe_region::{ObstacleSeparation, RobotDisk};
use crate::sim_runtime::{CloudSource, Policy, Scenario, Spawn};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorkspaceSection {
    pub min: Point3,
    pub max: Point3,
    #[serde(default = "default_resolution")]
    pub resolution: f64,
    /// Obstacle point cloud file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cloud: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cloud_format: Option<CloudFormat>,
    /// Inline obstacle points, an alternative to `cloud`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<Vec<Point3>>,
}

/// Either explicit `positions` or `count` robots drawn from
/// `[spawn_min, spawn_max]` with `seed`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RobotsSection {
    #[serde(default = "default_radius")]
    pub radius: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub positions: Option<Vec<Point3>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub count: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spawn_min: Option<Point3>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spawn_max: Option<Point3>,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SensorSection {
    #[serde(default = "default_range")]
    pub range: f64,
}

impl Default for SensorSection {
    fn default() -> Self {
        Self { range: default_range() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControlSection {
    #[serde(default = "default_u_max")]
    pub u_max: f64,
    #[serde(default = "default_dt")]
    pub dt: f64,
    /// Convergence speed threshold.
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_t_max")]
    pub t_max: f64,
}

impl Default for ControlSection {
    fn default() -> Self {
        Self { u_max: default_u_max(), dt: default_dt(), tol: default_tol(), t_max: default_t_max() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DensitySection {
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    /// Peak-detection radius.
    #[serde(default = "default_d_cov")]
    pub d_cov: f64,
    pub components: Vec<GmmComponent>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicySection {
    #[serde(default)]
    pub name: Policy,
    /// Steps without progress before a robot counts as deadlocked.
    #[serde(default = "default_window")]
    pub deadlock_window: usize,
    #[serde(default)]
    pub separation: ObstacleSeparation,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub neighbor_cutoff: Option<f64>,
}

impl Default for PolicySection {
    fn default() -> Self {
        Self {
            name: Policy::default(),
            deadlock_window: default_window(),
            separation: ObstacleSeparation::default(),
            neighbor_cutoff: None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    /// Default output directory for `run` and `batch`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
    #[serde(default)]
    pub plane: Plane,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub workspace: WorkspaceSection,
    pub robots: RobotsSection,
    #[serde(default)]
    pub sensor: SensorSection,
    #[serde(default)]
    pub control: ControlSection,
    pub density: DensitySection,
    #[serde(default)]
    pub policy: PolicySection,
    #[serde(default)]
    pub output: OutputSection,
}

fn default_resolution() -> f64 {
    DEFAULT_RESOLUTION
}
fn default_radius() -> f64 {
    RobotDisk::DEFAULT_RADIUS
}
fn default_range() -> f64 {
    SensorModel::DEFAULT_RANGE
}
fn default_u_max() -> f64 {
    ControlParams::default().u_max
}
fn default_dt() -> f64 {
    ControlParams::default().dt
}
fn default_tol() -> f64 {
    ControlParams::default().tol
}
fn default_t_max() -> f64 {
    Scenario::DEFAULT_T_MAX
}
fn default_gamma() -> f64 {
    GuidanceDensity::DEFAULT_GAMMA
}
fn default_d_cov() -> f64 {
    Scenario::DEFAULT_D_COV
}
fn default_window() -> usize {
    Scenario::DEFAULT_WINDOW
}

fn config<E: std::fmt::Display>(e: E) -> CoverError {
    CoverError::Config(e.to_string())
}

impl ScenarioFile {
    /// Parses TOML text. Relative paths stay relative.
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(config)
    }

    /// Reads a file and resolves a relative cloud path against its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CoverError::Config(format!("{}: {e}", path.display())))?;
        let mut file = Self::parse(&text).map_err(|e| CoverError::Config(format!("{}: {e}", path.display())))?;
        if let Some(cloud) = &mut file.workspace.cloud {
            if cloud.is_relative() {
                *cloud = path.parent().unwrap_or(Path::new("")).join(&*cloud);
            }
        }
        Ok(file)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(config)
    }

    /// Writes the file; a cloud path under the target directory is stored
    /// relative to it.
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut copy = self.clone();
        if let (Some(cloud), Some(dir)) = (&mut copy.workspace.cloud, path.parent()) {
            if let Ok(rel) = cloud.strip_prefix(dir) {
                *cloud = rel.to_path_buf();
            }
        }
        std::fs::write(path, copy.to_toml()?).map_err(|e| CoverError::Io(format!("{}: {e}", path.display())))
    }

    pub fn to_scenario(&self) -> Result<Scenario> {
        let w = &self.workspace;
        let workspace = Aabb::new(w.min, w.max).map_err(config)?;
        let cloud = match (&w.cloud, &w.points) {
            (Some(_), Some(_)) => return Err(config("workspace: give either `cloud` or `points`, not both")),
            (Some(path), None) => CloudSource::File { path: path.clone(), format: w.cloud_format },
            (None, Some(points)) => CloudSource::Points(points.clone()),
            (None, None) => CloudSource::Empty,
        };
        let r = &self.robots;
        let spawn = match (&r.positions, r.count, r.spawn_min, r.spawn_max) {
            (Some(p), None, None, None) => Spawn::Fixed(p.clone()),
            (None, Some(count), Some(lo), Some(hi)) => {
                Spawn::Random { count, region: Aabb::new(lo, hi).map_err(config)? }
            }
            _ => return Err(config("robots: give either `positions` or all of `count`, `spawn_min` and `spawn_max`")),
        };
        let density = GmmDensity::new(self.density.components.clone()).map_err(config)?;
        let scenario = Scenario {
            workspace,
            resolution: w.resolution,
            cloud,
            spawn,
            robot_radius: r.radius,
            sensor: SensorModel { range: self.sensor.range },
            control: ControlParams { u_max: self.control.u_max, dt: self.control.dt, tol: self.control.tol },
            t_max: self.control.t_max,
            gamma: self.density.gamma,
            density,
            d_cov: self.density.d_cov,
            policy: self.policy.name,
            seed: r.seed,
            deadlock_window: self.policy.deadlock_window,
            separation: self.policy.separation,
            neighbor_cutoff: self.policy.neighbor_cutoff,
        };
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn from_scenario(s: &Scenario, output: OutputSection) -> Self {
        let (cloud, cloud_format, points) = match &s.cloud {
            CloudSource::Empty => (None, None, None),
            CloudSource::File { path, format } => (Some(path.clone()), *format, None),
            CloudSource::Points(p) => (None, None, Some(p.clone())),
        };
        let robots = match &s.spawn {
            Spawn::Fixed(p) => RobotsSection {
                radius: s.robot_radius,
                positions: Some(p.clone()),
                count: None,
                spawn_min: None,
                spawn_max: None,
                seed: s.seed,
            },
            Spawn::Random { count, region } => RobotsSection {
                radius: s.robot_radius,
                positions: None,
                count: Some(*count),
                spawn_min: Some(region.min),
                spawn_max: Some(region.max),
                seed: s.seed,
            },
        };
        Self {
            workspace: WorkspaceSection {
                min: s.workspace.min,
                max: s.workspace.max,
                resolution: s.resolution,
                cloud,
                cloud_format,
                points,
            },
            robots,
            sensor: SensorSection { range: s.sensor.range },
            control: ControlSection { u_max: s.control.u_max, dt: s.control.dt, tol: s.control.tol, t_max: s.t_max },
            density: DensitySection { gamma: s.gamma, d_cov: s.d_cov, components: s.density.components().to_vec() },
            policy: PolicySection {
                name: s.policy,
                deadlock_window: s.deadlock_window,
                separation: s.separation,
                neighbor_cutoff: s.neighbor_cutoff,
            },
            output,
        }
    }
}

/// Loads a scenario file straight into a [`Scenario`] plus its output settings.
pub fn load_scenario(path: &Path) -> Result<(Scenario, OutputSection)> {
    let file = ScenarioFile::load(path)?;
    Ok((file.to_scenario()?, file.output))
}
