//! Scenario configuration: one structured-text (TOML) document holding
//! every knob a run needs. Validation is total: a config either fully
//! validates or reports every violated invariant at once.

use crate::error::{Error, Result};
use crate::heightfield::{generate_value_noise, HeightField, KernelKind};
use crate::locomotion::{Chaperone, PointOfInterest};
use crate::rig::GroundModel;
use serde::Deserialize;
use std::collections::BTreeMap;
use std::path::Path;

pub const CONFIG_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub schema_version: u32,
    pub scenario_id: String,
    pub heightfield: HeightfieldSource,
    pub chaperone: ChaperoneConfig,
    #[serde(default)]
    pub poi: Vec<PoiConfig>,
    /// game state name -> GM scale
    #[serde(default)]
    pub scales: BTreeMap<String, f64>,
    pub transition: TransitionConfig,
    pub teleport: TeleportConfig,
    pub agent: AgentConfig,
    #[serde(default)]
    pub targets: TargetsConfig,
    #[serde(default)]
    pub sim: SimConfig,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum HeightfieldSource {
    File {
        file: String,
    },
    Flat {
        height: f64,
        origin: [f64; 2],
        cell_size: f64,
        nx: usize,
        nz: usize,
    },
    Procedural {
        seed: u64,
        amplitude: f64,
        wavelength: f64,
        origin: [f64; 2],
        cell_size: f64,
        nx: usize,
        nz: usize,
    },
}

#[derive(Debug, Clone, Deserialize)]
pub struct ChaperoneConfig {
    pub half_extents: [f64; 2],
}

#[derive(Debug, Clone, Deserialize)]
pub struct PoiConfig {
    pub id: String,
    pub aabb_min: [f64; 3],
    pub aabb_max: [f64; 3],
    pub anchor: [f64; 3],
    #[serde(default)]
    pub facing: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TargetAcquisition {
    Pulling,
    Aiming,
}

#[derive(Debug, Clone, Deserialize)]
pub struct TransitionConfig {
    /// requested duration; clamped by the timing rule at run time
    pub duration: f64,
    #[serde(default)]
    pub instant: bool,
    pub mode: TargetAcquisition,
    pub max_pitch_deg: f64,
    /// rotate toward the most open physical heading on NM->GM transitions
    #[serde(default = "default_true")]
    pub reset_rotation: bool,
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, Deserialize)]
pub struct TeleportConfig {
    pub launch_speed: f64,
    pub gravity: f64,
}

#[derive(Debug, Clone, Deserialize)]
pub struct WaypointConfig {
    pub pos: [f64; 2],
    #[serde(default = "default_action")]
    pub action: WaypointAction,
    /// game state controlling the GM scale for the leg toward this
    /// waypoint; falls back to `agent.default_state`
    #[serde(default)]
    pub state: Option<String>,
}

fn default_action() -> WaypointAction {
    WaypointAction::Visit
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WaypointAction {
    Visit,
    Grab,
    Drop,
    TriggerNav,
}

#[derive(Debug, Clone, Deserialize)]
pub struct AgentConfig {
    pub walk_speed: f64,
    #[serde(default)]
    pub aim_noise_sigma: f64,
    /// seconds spent standing at each reached waypoint
    #[serde(default)]
    pub dwell_s: f64,
    /// distance under which the teleport agent walks instead of beaming
    #[serde(default = "default_step_threshold")]
    pub step_threshold: f64,
    pub default_state: String,
    #[serde(default)]
    pub waypoints: Vec<WaypointConfig>,
}

fn default_step_threshold() -> f64 {
    0.5
}

#[derive(Debug, Clone, Deserialize, Default)]
pub struct TargetsConfig {
    #[serde(default = "default_attempts")]
    pub max_attempts: u32,
    #[serde(default)]
    pub list: Vec<TargetSpecConfig>,
}

fn default_attempts() -> u32 {
    2
}

#[derive(Debug, Clone, Deserialize)]
pub struct TargetSpecConfig {
    pub center: [f64; 2],
    pub radius: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default)]
pub struct SimConfig {
    pub dt: f64,
    pub ticks_cap: u64,
    pub physical_ipd: f64,
    pub foot_smooth_coeff: f64,
    pub smoothing_kernel: KernelKind,
    pub head_height: f64,
    pub start_virtual: [f64; 2],
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            dt: 1.0 / 90.0,
            ticks_cap: 500_000,
            physical_ipd: 0.064,
            foot_smooth_coeff: 0.003,
            smoothing_kernel: KernelKind::Gaussian,
            head_height: 1.7,
            start_virtual: [0.0, 0.0],
        }
    }
}

/// Fully validated, resolved scenario ready to run.
#[derive(Debug)]
pub struct Scenario {
    pub id: String,
    pub ground: GroundModel,
    pub chaperone: Chaperone,
    pub pois: Vec<PointOfInterest>,
    pub scales: BTreeMap<String, f64>,
    pub transition: TransitionConfig,
    pub teleport: TeleportConfig,
    pub agent: AgentConfig,
    pub targets: TargetsConfig,
    pub sim: SimConfig,
}

impl ScenarioConfig {
    pub fn parse(text: &str, path: &str) -> Result<ScenarioConfig> {
        toml::from_str(text).map_err(|e| Error::Parse {
            path: path.to_string(),
            message: e.to_string(),
        })
    }

    pub fn load(path: &Path) -> Result<ScenarioConfig> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        Self::parse(&text, &path.display().to_string())
    }

    /// Resolves the heightfield source. Relative file paths are resolved
    /// against `base_dir`.
    pub fn build_field(&self, base_dir: &Path) -> Result<HeightField> {
        match &self.heightfield {
            HeightfieldSource::File { file } => {
                let p = Path::new(file);
                let p = if p.is_absolute() {
                    p.to_path_buf()
                } else {
                    base_dir.join(p)
                };
                HeightField::load(&p)
            }
            HeightfieldSource::Flat {
                height,
                origin,
                cell_size,
                nx,
                nz,
            } => HeightField::flat(*origin, *cell_size, *nx, *nz, *height),
            HeightfieldSource::Procedural {
                seed,
                amplitude,
                wavelength,
                origin,
                cell_size,
                nx,
                nz,
            } => generate_value_noise(
                *origin,
                *cell_size,
                *nx,
                *nz,
                *seed,
                *amplitude,
                *wavelength,
            ),
        }
    }

    /// Validates every invariant and either returns a runnable scenario
    /// or the complete list of violations.
    pub fn build(&self, base_dir: &Path) -> Result<Scenario> {
        let mut violations: Vec<String> = Vec::new();
        if self.schema_version != CONFIG_SCHEMA_VERSION {
            violations.push(format!(
                "schema_version {} is not supported (expected {CONFIG_SCHEMA_VERSION})",
                self.schema_version
            ));
        }
        let field = match self.build_field(base_dir) {
            Ok(f) => Some(f),
            Err(e) => {
                violations.push(format!("heightfield: {e}"));
                None
            }
        };
        if !(self.chaperone.half_extents[0] > 0.0 && self.chaperone.half_extents[1] > 0.0) {
            violations.push(format!(
                "chaperone half_extents must be > 0, got {:?}",
                self.chaperone.half_extents
            ));
        }
        let mut pois = Vec::new();
        for p in &self.poi {
            let poi = PointOfInterest {
                id: p.id.clone(),
                aabb_min: p.aabb_min,
                aabb_max: p.aabb_max,
                anchor: p.anchor,
                facing: p.facing,
            };
            if let Err(e) = poi.validate() {
                violations.push(e.to_string());
            }
            if let Some(f) = &field {
                if !f.contains(p.anchor[0], p.anchor[2]) {
                    violations.push(format!(
                        "POI '{}': anchor lies outside the heightfield",
                        p.id
                    ));
                }
            }
            pois.push(poi);
        }
        for (name, scale) in &self.scales {
            if !(*scale > 0.0) {
                violations.push(format!("scale for state '{name}' must be > 0, got {scale}"));
            }
        }
        if !self.scales.contains_key(&self.agent.default_state) {
            violations.push(format!(
                "default_state '{}' has no entry in the scale table",
                self.agent.default_state
            ));
        }
        for (i, wp) in self.agent.waypoints.iter().enumerate() {
            if let Some(f) = &field {
                if !f.contains(wp.pos[0], wp.pos[1]) {
                    violations.push(format!(
                        "waypoint {i} at {:?} lies outside the heightfield",
                        wp.pos
                    ));
                }
            }
            if let Some(state) = &wp.state {
                if !self.scales.contains_key(state) {
                    violations.push(format!(
                        "waypoint {i}: game state '{state}' has no entry in the scale table"
                    ));
                }
            }
        }
        if !(self.transition.duration > 0.0) && !self.transition.instant {
            violations.push(format!(
                "transition duration must be > 0 (or instant), got {}",
                self.transition.duration
            ));
        }
        if !(self.transition.max_pitch_deg > 0.0 && self.transition.max_pitch_deg < 90.0) {
            violations.push(format!(
                "max_pitch_deg must be in (0, 90), got {}",
                self.transition.max_pitch_deg
            ));
        }
        if !(self.teleport.launch_speed > 0.0) {
            violations.push(format!(
                "teleport launch_speed must be > 0, got {}",
                self.teleport.launch_speed
            ));
        }
        if !(self.teleport.gravity > 0.0) {
            violations.push(format!(
                "teleport gravity must be > 0, got {}",
                self.teleport.gravity
            ));
        }
        if !(self.agent.walk_speed > 0.0) {
            violations.push(format!(
                "agent walk_speed must be > 0, got {}",
                self.agent.walk_speed
            ));
        }
        if self.agent.aim_noise_sigma < 0.0 {
            violations.push(format!(
                "agent aim_noise_sigma must be >= 0, got {}",
                self.agent.aim_noise_sigma
            ));
        }
        if self.agent.dwell_s < 0.0 {
            violations.push(format!(
                "agent dwell_s must be >= 0, got {}",
                self.agent.dwell_s
            ));
        }
        for (i, t) in self.targets.list.iter().enumerate() {
            if !(t.radius > 0.0) {
                violations.push(format!("target {i}: radius must be > 0, got {}", t.radius));
            }
            if let Some(f) = &field {
                if !f.contains(t.center[0], t.center[1]) {
                    violations.push(format!(
                        "target {i} at {:?} lies outside the heightfield",
                        t.center
                    ));
                }
            }
        }
        if !(self.sim.dt > 0.0) {
            violations.push(format!("sim dt must be > 0, got {}", self.sim.dt));
        }
        if !(self.sim.physical_ipd > 0.0) {
            violations.push(format!(
                "physical_ipd must be > 0, got {}",
                self.sim.physical_ipd
            ));
        }
        if self.sim.foot_smooth_coeff < 0.0 {
            violations.push(format!(
                "foot_smooth_coeff must be >= 0, got {}",
                self.sim.foot_smooth_coeff
            ));
        }
        if let Some(f) = &field {
            if !f.contains(self.sim.start_virtual[0], self.sim.start_virtual[1]) {
                violations.push(format!(
                    "start_virtual {:?} lies outside the heightfield",
                    self.sim.start_virtual
                ));
            }
        }
        if !violations.is_empty() {
            return Err(Error::Validation(violations));
        }
        Ok(Scenario {
            id: self.scenario_id.clone(),
            ground: GroundModel::new(field.unwrap(), self.sim.smoothing_kernel),
            chaperone: Chaperone::new(self.chaperone.half_extents)?,
            pois,
            scales: self.scales.clone(),
            transition: self.transition.clone(),
            teleport: self.teleport.clone(),
            agent: self.agent.clone(),
            targets: self.targets.clone(),
            sim: self.sim.clone(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub const MINIMAL: &str = r#"
schema_version = 1
scenario_id = "unit"

[heightfield]
height = 0.0
origin = [-500.0, -500.0]
cell_size = 10.0
nx = 101
nz = 101

[chaperone]
half_extents = [2.0, 2.0]

[scales]
default = 100.0

[transition]
duration = 0.5
mode = "aiming"
max_pitch_deg = 20.0

[teleport]
launch_speed = 15.0
gravity = 9.81

[agent]
walk_speed = 1.0
default_state = "default"
waypoints = [{ pos = [60.0, 0.0] }]
"#;

    #[test]
    fn minimal_config_builds() {
        let cfg = ScenarioConfig::parse(MINIMAL, "mem").unwrap();
        let scn = cfg.build(Path::new(".")).unwrap();
        assert_eq!(scn.id, "unit");
        assert_eq!(scn.agent.waypoints.len(), 1);
        assert_eq!(scn.sim.dt, 1.0 / 90.0);
    }

    #[test]
    fn validation_collects_every_violation() {
        let mut cfg = ScenarioConfig::parse(MINIMAL, "mem").unwrap();
        cfg.chaperone.half_extents = [0.0, 2.0];
        cfg.teleport.launch_speed = -3.0;
        cfg.agent.walk_speed = 0.0;
        cfg.agent.waypoints.push(WaypointConfig {
            pos: [9999.0, 0.0],
            action: WaypointAction::Visit,
            state: None,
        });
        let err = cfg.build(Path::new(".")).unwrap_err();
        match err {
            Error::Validation(v) => {
                assert!(v.len() >= 4, "expected >= 4 violations, got {v:?}");
                assert!(v.iter().any(|m| m.contains("half_extents")));
                assert!(v.iter().any(|m| m.contains("launch_speed")));
                assert!(v.iter().any(|m| m.contains("walk_speed")));
                assert!(v.iter().any(|m| m.contains("waypoint 1")));
            }
            other => panic!("expected validation error, got {other}"),
        }
    }

    #[test]
    fn poi_outside_field_names_the_poi() {
        let mut cfg = ScenarioConfig::parse(MINIMAL, "mem").unwrap();
        cfg.poi.push(PoiConfig {
            id: "castle".into(),
            aabb_min: [9000.0, 0.0, 9000.0],
            aabb_max: [9010.0, 10.0, 9010.0],
            anchor: [9005.0, 0.0, 9005.0],
            facing: 0.0,
        });
        let err = cfg.build(Path::new(".")).unwrap_err();
        assert!(err.to_string().contains("castle"), "{err}");
    }

    #[test]
    fn unknown_game_state_rejected() {
        let mut cfg = ScenarioConfig::parse(MINIMAL, "mem").unwrap();
        cfg.agent.waypoints[0].state = Some("Q9".into());
        let err = cfg.build(Path::new(".")).unwrap_err();
        assert!(err.to_string().contains("Q9"), "{err}");
    }
}
