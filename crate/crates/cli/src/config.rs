//! Scenario files.
//!
//! Scenarios are JSON documents. Every field is optional: omitted fields
//! fall back to the benchmark defaults documented on each struct field
//! below, so `{}` is a valid (if empty) scenario. Unknown fields are
//! rejected, which catches typos before they silently become defaults.

use std::fs;
use std::path::Path;

use nalgebra::Point2;
use satrack_core::{
    AgentKinematics, AgentStart, KinematicState, MotionModel, OverlapConfig, PlannerConfig, Rect,
    RenyiConfig, Scenario, SensorModel, SimError, TargetScript,
};
use serde::Deserialize;

/// Loading a scenario distinguishes three failures: the file cannot be
/// read, the JSON does not parse, or the parsed values break a model
/// invariant. The last carries one message per violation, each prefixed
/// with the offending field's path.
#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}")]
    Unreadable {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot parse {path}")]
    Malformed {
        path: String,
        #[source]
        source: serde_json::Error,
    },
    #[error("invalid scenario: {}", .0.join("; "))]
    Invalid(Vec<String>),
}

/// Reads, parses and validates a scenario file.
pub fn load_scenario(path: &Path) -> Result<Scenario, ConfigError> {
    let text = fs::read_to_string(path).map_err(|source| ConfigError::Unreadable {
        path: path.display().to_string(),
        source,
    })?;
    let file: ScenarioFile =
        serde_json::from_str(&text).map_err(|source| ConfigError::Malformed {
            path: path.display().to_string(),
            source,
        })?;
    file.into_scenario().map_err(ConfigError::Invalid)
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    /// Surveillance area size in meters. Default 100 x 100.
    #[serde(default)]
    pub area: AreaSection,
    /// Search cell side in meters; must tile the area evenly. Default 20.
    #[serde(default = "d_cell_side")]
    pub cell_side: f64,
    /// Round count. Default 200.
    #[serde(default = "d_steps")]
    pub steps: usize,
    /// Agents entering at round 1. Default none.
    #[serde(default)]
    pub agents: Vec<AgentSection>,
    /// Scripted targets. Default none.
    #[serde(default)]
    pub targets: Vec<TargetSection>,
    #[serde(default)]
    pub motion: MotionSection,
    #[serde(default)]
    pub sensor: SensorSection,
    #[serde(default)]
    pub filter: FilterSection,
    #[serde(default)]
    pub planner: PlannerSection,
    #[serde(default)]
    pub renyi: RenyiSection,
    #[serde(default)]
    pub overlap: OverlapSection,
    #[serde(default)]
    pub kinematics: KinematicsSection,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AreaSection {
    #[serde(default = "d_area_side")]
    pub width: f64,
    #[serde(default = "d_area_side")]
    pub height: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentSection {
    pub id: usize,
    /// Entry position [x, y] in meters.
    pub start: [f64; 2],
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetSection {
    pub id: usize,
    /// First round the target exists.
    pub birth_step: usize,
    /// First round the target no longer exists.
    pub death_step: usize,
    /// [px, vx, py, vy] at birth.
    pub birth_state: [f64; 4],
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MotionSection {
    /// Sampling interval T in seconds. Default 1.
    #[serde(default = "d_sampling_interval")]
    pub sampling_interval: f64,
    /// Process noise intensity sigma_w^2 in m^2/s^3. Default 1.
    #[serde(default = "d_process_noise")]
    pub process_noise: f64,
    /// Per-step survival probability p_S. Default 0.99.
    #[serde(default = "d_survival_prob")]
    pub survival_prob: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SensorSection {
    /// Detection probability inside the footprint. Default 0.99.
    #[serde(default = "d_detection_prob_max")]
    pub detection_prob_max: f64,
    /// Square footprint side in meters. Default 10.
    #[serde(default = "d_sensing_side")]
    pub sensing_side: f64,
    /// Range noise floor in meters. Default 1.
    #[serde(default = "d_range_noise_floor")]
    pub range_noise_floor: f64,
    /// Range noise growth per squared meter. Default 5e-3.
    #[serde(default = "d_range_noise_slope")]
    pub range_noise_slope: f64,
    /// Bearing noise floor in radians. Default pi/180.
    #[serde(default = "d_bearing_noise_floor")]
    pub bearing_noise_floor: f64,
    /// Bearing noise growth per meter. Default 1e-5.
    #[serde(default = "d_bearing_noise_slope")]
    pub bearing_noise_slope: f64,
    /// Mean clutter measurements per round. Default 10.
    #[serde(default = "d_clutter_rate")]
    pub clutter_rate: f64,
    /// Upper range bound of the measurement space in meters. Default: the
    /// area diagonal.
    #[serde(default)]
    pub max_range: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FilterSection {
    /// Birth intensity mass added per round. Default 0.1.
    #[serde(default = "d_birth_mass")]
    pub birth_mass: f64,
    /// Per-round decay of unseen search cells. Default 0.999.
    #[serde(default = "d_search_decay")]
    pub search_decay: f64,
    /// Std dev of birth particle velocities in m/s. Default 1.
    #[serde(default = "d_birth_velocity_std")]
    pub birth_velocity_std: f64,
    /// Particles kept per unit of estimated mass. Default 1000.
    #[serde(default = "d_particles_per_target")]
    pub particles_per_target: usize,
    /// Fresh birth particles per round. Default 200.
    #[serde(default = "d_birth_particles_per_step")]
    pub birth_particles_per_step: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlannerSection {
    /// Revisit threshold: a cell is searched again once its value decays
    /// to beta or below. Default 0.9.
    #[serde(default = "d_beta")]
    pub beta: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RenyiSection {
    /// Divergence order in (0, 1). Default 0.5.
    #[serde(default = "d_alpha")]
    pub alpha: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OverlapSection {
    /// OSPA cutoff c in meters. Default 10.
    #[serde(default = "d_cutoff")]
    pub cutoff: f64,
    /// Consecutive intersecting rounds before judging overlap. Default 5.
    #[serde(default = "d_window")]
    pub window: usize,
    /// Maximum windowed score sum that still reads as the same targets.
    /// Default 25.
    #[serde(default = "d_threshold")]
    pub threshold: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KinematicsSection {
    /// Radial displacement per ring in meters. Default 2.
    #[serde(default = "d_radial_step")]
    pub radial_step: f64,
    /// Ring count. Default 2.
    #[serde(default = "d_radial_levels")]
    pub radial_levels: u32,
    /// Positions per ring. Default 8.
    #[serde(default = "d_angular_sectors")]
    pub angular_sectors: u32,
    /// Communication range in meters. Default 50.
    #[serde(default = "d_comm_range")]
    pub comm_range: f64,
}

fn d_area_side() -> f64 {
    100.0
}
fn d_cell_side() -> f64 {
    20.0
}
fn d_steps() -> usize {
    200
}
fn d_sampling_interval() -> f64 {
    1.0
}
fn d_process_noise() -> f64 {
    1.0
}
fn d_survival_prob() -> f64 {
    0.99
}
fn d_detection_prob_max() -> f64 {
    0.99
}
fn d_sensing_side() -> f64 {
    10.0
}
fn d_range_noise_floor() -> f64 {
    1.0
}
fn d_range_noise_slope() -> f64 {
    5e-3
}
fn d_bearing_noise_floor() -> f64 {
    core::f64::consts::PI / 180.0
}
fn d_bearing_noise_slope() -> f64 {
    1e-5
}
fn d_clutter_rate() -> f64 {
    10.0
}
fn d_birth_mass() -> f64 {
    0.1
}
fn d_search_decay() -> f64 {
    0.999
}
fn d_birth_velocity_std() -> f64 {
    1.0
}
fn d_particles_per_target() -> usize {
    1000
}
fn d_birth_particles_per_step() -> usize {
    200
}
fn d_beta() -> f64 {
    0.9
}
fn d_alpha() -> f64 {
    0.5
}
fn d_cutoff() -> f64 {
    10.0
}
fn d_window() -> usize {
    5
}
fn d_threshold() -> f64 {
    25.0
}
fn d_radial_step() -> f64 {
    2.0
}
fn d_radial_levels() -> u32 {
    2
}
fn d_angular_sectors() -> u32 {
    8
}
fn d_comm_range() -> f64 {
    50.0
}

impl Default for AreaSection {
    fn default() -> Self {
        Self {
            width: d_area_side(),
            height: d_area_side(),
        }
    }
}

impl Default for MotionSection {
    fn default() -> Self {
        Self {
            sampling_interval: d_sampling_interval(),
            process_noise: d_process_noise(),
            survival_prob: d_survival_prob(),
        }
    }
}

impl Default for SensorSection {
    fn default() -> Self {
        Self {
            detection_prob_max: d_detection_prob_max(),
            sensing_side: d_sensing_side(),
            range_noise_floor: d_range_noise_floor(),
            range_noise_slope: d_range_noise_slope(),
            bearing_noise_floor: d_bearing_noise_floor(),
            bearing_noise_slope: d_bearing_noise_slope(),
            clutter_rate: d_clutter_rate(),
            max_range: None,
        }
    }
}

impl Default for FilterSection {
    fn default() -> Self {
        Self {
            birth_mass: d_birth_mass(),
            search_decay: d_search_decay(),
            birth_velocity_std: d_birth_velocity_std(),
            particles_per_target: d_particles_per_target(),
            birth_particles_per_step: d_birth_particles_per_step(),
        }
    }
}

impl Default for PlannerSection {
    fn default() -> Self {
        Self { beta: d_beta() }
    }
}

impl Default for RenyiSection {
    fn default() -> Self {
        Self { alpha: d_alpha() }
    }
}

impl Default for OverlapSection {
    fn default() -> Self {
        Self {
            cutoff: d_cutoff(),
            window: d_window(),
            threshold: d_threshold(),
        }
    }
}

impl Default for KinematicsSection {
    fn default() -> Self {
        Self {
            radial_step: d_radial_step(),
            radial_levels: d_radial_levels(),
            angular_sectors: d_angular_sectors(),
            comm_range: d_comm_range(),
        }
    }
}

impl Default for ScenarioFile {
    fn default() -> Self {
        Self {
            area: AreaSection::default(),
            cell_side: d_cell_side(),
            steps: d_steps(),
            agents: Vec::new(),
            targets: Vec::new(),
            motion: MotionSection::default(),
            sensor: SensorSection::default(),
            filter: FilterSection::default(),
            planner: PlannerSection::default(),
            renyi: RenyiSection::default(),
            overlap: OverlapSection::default(),
            kinematics: KinematicsSection::default(),
        }
    }
}

impl ScenarioFile {
    /// Builds the validated scenario, collecting every violation instead
    /// of stopping at the first. The checks duplicated here guard the
    /// config constructors; everything else is left to the scenario's own
    /// validation so messages come from a single place.
    pub fn into_scenario(self) -> Result<Scenario, Vec<String>> {
        let mut violations = Vec::new();

        let area = Rect::from_size(self.area.width, self.area.height);
        if area.is_none() {
            violations.push("area.width, area.height: must be positive and finite".to_string());
        }
        if !(self.motion.sampling_interval > 0.0) || !self.motion.sampling_interval.is_finite() {
            violations.push("motion.sampling_interval: must be positive and finite".to_string());
        }
        if !(self.motion.process_noise >= 0.0) || !self.motion.process_noise.is_finite() {
            violations.push("motion.process_noise: must be nonnegative and finite".to_string());
        }
        if !(self.planner.beta > 0.0 && self.planner.beta < 1.0) {
            violations.push("planner.beta: must lie strictly between 0 and 1".to_string());
        }
        if !(self.renyi.alpha > 0.0 && self.renyi.alpha < 1.0) {
            violations.push("renyi.alpha: must lie strictly between 0 and 1".to_string());
        }
        if !(self.overlap.cutoff > 0.0) || !self.overlap.cutoff.is_finite() {
            violations.push("overlap.cutoff: must be positive and finite".to_string());
        }
        if self.overlap.window == 0 {
            violations.push("overlap.window: must be at least 1".to_string());
        }
        if !(self.overlap.threshold > 0.0) || !self.overlap.threshold.is_finite() {
            violations.push("overlap.threshold: must be positive and finite".to_string());
        }
        if let Some(r) = self.sensor.max_range {
            if !(r > 0.0) || !r.is_finite() {
                violations.push("sensor.max_range: must be positive and finite".to_string());
            }
        }
        if !violations.is_empty() {
            return Err(violations);
        }

        let area = area.expect("checked above");
        let motion = match MotionModel::nearly_constant_velocity(
            self.motion.sampling_interval,
            self.motion.process_noise,
            self.motion.survival_prob,
        ) {
            Ok(m) => m,
            Err(e) => return Err(vec![format!("motion: {e}")]),
        };
        let sensor = SensorModel {
            detection_prob_max: self.sensor.detection_prob_max,
            sensing_side: self.sensor.sensing_side,
            range_noise_floor: self.sensor.range_noise_floor,
            range_noise_slope: self.sensor.range_noise_slope,
            bearing_noise_floor: self.sensor.bearing_noise_floor,
            bearing_noise_slope: self.sensor.bearing_noise_slope,
            clutter_rate: self.sensor.clutter_rate,
            max_range: self.sensor.max_range.unwrap_or_else(|| area.diagonal()),
        };
        let scenario = Scenario {
            area,
            cell_side: self.cell_side,
            steps: self.steps,
            agents: self
                .agents
                .iter()
                .map(|a| AgentStart {
                    id: a.id,
                    start: Point2::new(a.start[0], a.start[1]),
                })
                .collect(),
            targets: self
                .targets
                .iter()
                .map(|t| TargetScript {
                    id: t.id,
                    birth_step: t.birth_step,
                    death_step: t.death_step,
                    birth_state: KinematicState::new(
                        t.birth_state[0],
                        t.birth_state[1],
                        t.birth_state[2],
                        t.birth_state[3],
                    ),
                })
                .collect(),
            motion,
            sensor,
            birth_mass: self.filter.birth_mass,
            search_decay: self.filter.search_decay,
            birth_velocity_std: self.filter.birth_velocity_std,
            particles_per_target: self.filter.particles_per_target,
            birth_particles_per_step: self.filter.birth_particles_per_step,
            planner: PlannerConfig::new(self.planner.beta).expect("checked above"),
            renyi: RenyiConfig::new(self.renyi.alpha).expect("checked above"),
            overlap: OverlapConfig::new(
                self.overlap.cutoff,
                self.overlap.window,
                self.overlap.threshold,
            )
            .expect("checked above"),
            kinematics: AgentKinematics {
                radial_step: self.kinematics.radial_step,
                radial_levels: self.kinematics.radial_levels,
                angular_sectors: self.kinematics.angular_sectors,
                comm_range: self.kinematics.comm_range,
            },
        };
        match scenario.validate() {
            Ok(()) => Ok(scenario),
            Err(SimError::InvalidScenario(list)) => Err(list),
        }
    }
}
