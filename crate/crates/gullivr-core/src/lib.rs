//! Engine-agnostic kernel and headless simulator for the GulliVR
//! body-resizing locomotion technique: on-demand giant mode over a
//! room-scale tracked space, proportionally scaled modeled eye
//! separation, smoothed walking ground, passive pulling / active aiming
//! target acquisition, reset rotation, and an arc-teleportation baseline,
//! exercised by deterministic scripted agents with telemetry.

pub mod agent;
pub mod error;
pub mod heightfield;
pub mod locomotion;
pub mod rig;
pub mod scenario;
pub mod telemetry;

pub use agent::{run_scenario, targeting_trial, Policy, Simulation};
pub use error::{Error, Result};
pub use heightfield::{generate_value_noise, HeightField, KernelKind};
pub use locomotion::{Chaperone, Mode, ModeState, PointOfInterest, TransitionSpec};
pub use rig::{EyePoses, GroundModel, PhysicalPose, RigMapping};
pub use scenario::{Scenario, ScenarioConfig};
pub use telemetry::TelemetryLog;
