//! NM/GM scale state machine, transition kinematics with pulling and
//! aiming, reset rotation against the chaperone, held-object scaling,
//! and the arc-teleportation baseline.

use crate::error::{Error, Result};
use crate::heightfield::HeightField;
use crate::rig::{gaze_direction, GroundModel, PhysicalPose, RigMapping};
use std::collections::BTreeMap;

pub const NM_SCALE: f64 = 1.0;
/// Transitions must finish within 0.005 * Scale_GM seconds.
pub const TRANSITION_SECONDS_PER_SCALE: f64 = 0.005;
/// ... and never take longer than one second.
pub const TRANSITION_MAX_SECONDS: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Normal,
    Giant,
    InTransition,
}

impl Mode {
    pub fn label(&self) -> &'static str {
        match self {
            Mode::Normal => "NM",
            Mode::Giant => "GM",
            Mode::InTransition => "T",
        }
    }
}

/// An in-flight scale change. The player's ground-projected virtual
/// position is pinned to `anchor_fixpoint + u * pull_offset` throughout,
/// where `u` is the normalized transition progress.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransitionSpec {
    pub scale_from: f64,
    pub scale_to: f64,
    pub start_time: f64,
    pub duration: f64,
    pub pull_offset: [f64; 2],
    pub anchor_fixpoint: [f64; 2],
    /// Physical xz at transition start; the re-anchoring reference.
    pub start_physical_xz: [f64; 2],
}

impl TransitionSpec {
    pub fn progress(&self, now: f64) -> f64 {
        if self.duration == 0.0 {
            return if now >= self.start_time { 1.0 } else { 0.0 };
        }
        ((now - self.start_time) / self.duration).clamp(0.0, 1.0)
    }

    pub fn scale_at(&self, u: f64) -> f64 {
        self.scale_from + u * (self.scale_to - self.scale_from)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModeState {
    pub mode: Mode,
    pub current_scale: f64,
    pub transition: Option<TransitionSpec>,
    pub holding: bool,
    pub held_object_scale: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ObjectEvent {
    Grab,
    Drop,
    TransitionComplete,
}

impl ModeState {
    pub fn normal() -> Self {
        Self {
            mode: Mode::Normal,
            current_scale: NM_SCALE,
            transition: None,
            holding: false,
            held_object_scale: NM_SCALE,
        }
    }

    /// Starts an NM<->GM scale change. The configured duration is clamped
    /// to `0.005 * max(scale_from, scale_to)` and to one second; the
    /// instant flag forces duration 0.
    #[allow(clippy::too_many_arguments)]
    pub fn begin_transition(
        &self,
        target_scale: f64,
        now: f64,
        pull: Option<[f64; 2]>,
        instant: bool,
        configured_duration: f64,
        anchor_fixpoint: [f64; 2],
        physical_xz: [f64; 2],
    ) -> Result<ModeState> {
        if self.mode == Mode::InTransition {
            return Err(Error::State("transition already in flight".into()));
        }
        if !(target_scale > 0.0) {
            return Err(Error::Domain(format!(
                "target scale must be > 0, got {target_scale}"
            )));
        }
        if target_scale == self.current_scale {
            return Err(Error::Domain(format!(
                "target scale {target_scale} equals the current scale"
            )));
        }
        let duration = if instant {
            0.0
        } else {
            configured_duration
                .min(TRANSITION_SECONDS_PER_SCALE * self.current_scale.max(target_scale))
                .min(TRANSITION_MAX_SECONDS)
        };
        Ok(ModeState {
            mode: Mode::InTransition,
            current_scale: self.current_scale,
            transition: Some(TransitionSpec {
                scale_from: self.current_scale,
                scale_to: target_scale,
                start_time: now,
                duration,
                pull_offset: pull.unwrap_or([0.0, 0.0]),
                anchor_fixpoint,
                start_physical_xz: physical_xz,
            }),
            holding: self.holding,
            held_object_scale: self.held_object_scale,
        })
    }

    /// Finalizes a completed transition.
    pub fn complete_transition(&self) -> Result<ModeState> {
        let spec = self
            .transition
            .ok_or_else(|| Error::State("no transition to complete".into()))?;
        let mut next = self.clone();
        next.mode = if spec.scale_to == NM_SCALE {
            Mode::Normal
        } else {
            Mode::Giant
        };
        next.current_scale = spec.scale_to;
        next.transition = None;
        if next.holding {
            next.held_object_scale = next.current_scale;
        }
        Ok(next)
    }

    /// Held-object scale rule: while held the object tracks the body
    /// scale; on drop it freezes at the scale it had at drop time.
    pub fn held_object_event(&self, event: ObjectEvent) -> Result<ModeState> {
        let mut next = self.clone();
        match event {
            ObjectEvent::Grab => {
                if self.holding {
                    return Err(Error::State("already holding an object".into()));
                }
                next.holding = true;
                next.held_object_scale = self.current_scale;
            }
            ObjectEvent::Drop => {
                if !self.holding {
                    return Err(Error::State("drop without a held object".into()));
                }
                next.holding = false;
                // held_object_scale stays frozen
            }
            ObjectEvent::TransitionComplete => {
                if self.holding {
                    next.held_object_scale = self.current_scale;
                }
            }
        }
        Ok(next)
    }
}

/// Evaluates the transition at `now`: interpolated scale plus a mapping
/// re-anchored so the player's virtual ground point sits at
/// `anchor_fixpoint + u * pull_offset`. Depends only on `u`, never on the
/// step partition.
pub fn step_transition(spec: &TransitionSpec, mapping: &RigMapping, now: f64) -> (f64, RigMapping) {
    let u = spec.progress(now);
    let scale = spec.scale_at(u);
    let mut m = *mapping;
    m.scale = scale;
    let target = [
        spec.anchor_fixpoint[0] + u * spec.pull_offset[0],
        spec.anchor_fixpoint[1] + u * spec.pull_offset[1],
    ];
    (scale, m.re_anchored(spec.start_physical_xz, target))
}

/// Quest point of interest with an invisible bounding box for pulling.
#[derive(Debug, Clone, PartialEq)]
pub struct PointOfInterest {
    pub id: String,
    pub aabb_min: [f64; 3],
    pub aabb_max: [f64; 3],
    pub anchor: [f64; 3],
    pub facing: f64,
}

impl PointOfInterest {
    pub fn validate(&self) -> Result<()> {
        for i in 0..3 {
            if !(self.aabb_min[i] < self.aabb_max[i]) {
                return Err(Error::Domain(format!("POI '{}': degenerate aabb", self.id)));
            }
        }
        if self.anchor[0] < self.aabb_min[0]
            || self.anchor[0] > self.aabb_max[0]
            || self.anchor[2] < self.aabb_min[2]
            || self.anchor[2] > self.aabb_max[2]
        {
            return Err(Error::Domain(format!(
                "POI '{}': anchor outside aabb horizontal extent",
                self.id
            )));
        }
        Ok(())
    }

    pub fn contains_xz(&self, p: [f64; 2]) -> bool {
        p[0] >= self.aabb_min[0]
            && p[0] <= self.aabb_max[0]
            && p[1] >= self.aabb_min[2]
            && p[1] <= self.aabb_max[2]
    }

    pub fn anchor_xz(&self) -> [f64; 2] {
        [self.anchor[0], self.anchor[2]]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PullTarget {
    pub poi_id: String,
    pub anchor: [f64; 2],
    pub offset: [f64; 2],
}

/// Passive pulling: a GM->NM transition started inside a POI box gets a
/// horizontal pull toward the POI anchor; outside every box there is no
/// pull. Overlapping boxes resolve to the nearest anchor, ties to the
/// lexicographically smallest id.
pub fn resolve_pull(pois: &[PointOfInterest], player_xz: [f64; 2]) -> Option<PullTarget> {
    let mut best: Option<(&PointOfInterest, f64)> = None;
    for poi in pois.iter().filter(|p| p.contains_xz(player_xz)) {
        let a = poi.anchor_xz();
        let d = ((a[0] - player_xz[0]).powi(2) + (a[1] - player_xz[1]).powi(2)).sqrt();
        let better = match best {
            None => true,
            Some((b, bd)) => d < bd || (d == bd && poi.id < b.id),
        };
        if better {
            best = Some((poi, d));
        }
    }
    best.map(|(poi, _)| {
        let a = poi.anchor_xz();
        PullTarget {
            poi_id: poi.id.clone(),
            anchor: a,
            offset: [a[0] - player_xz[0], a[1] - player_xz[1]],
        }
    })
}

/// Active aiming: when the head pitch dips below `-max_pitch`, projects
/// the gaze ray onto the terrain and returns the crosshair point.
pub fn resolve_aim(
    pose: &PhysicalPose,
    mapping: &RigMapping,
    ground: &GroundModel,
    max_pitch: f64,
) -> Option<[f64; 2]> {
    if pose.head_pitch >= -max_pitch {
        return None;
    }
    let head = mapping.map_pose(ground, pose).ok()?;
    let dir = gaze_direction(head.yaw, head.pitch);
    ground
        .base()
        .raycast(head.pos, dir)
        .map(|hit| [hit[0], hit[2]])
}

/// Rectangular play-area bounds centered on the tracked-space origin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Chaperone {
    pub half_extents: [f64; 2],
}

impl Chaperone {
    pub fn new(half_extents: [f64; 2]) -> Result<Self> {
        if !(half_extents[0] > 0.0 && half_extents[1] > 0.0) {
            return Err(Error::Domain(format!(
                "chaperone half-extents must be > 0, got {half_extents:?}"
            )));
        }
        Ok(Self { half_extents })
    }

    pub fn contains(&self, p: [f64; 2]) -> bool {
        p[0].abs() <= self.half_extents[0] && p[1].abs() <= self.half_extents[1]
    }

    /// Distance from an interior point to the boundary along a heading.
    pub fn distance_to_boundary(&self, p: [f64; 2], heading: f64) -> f64 {
        let (s, c) = heading.sin_cos();
        let dir = [c, s];
        let mut t = f64::INFINITY;
        for axis in 0..2 {
            if dir[axis].abs() > 1e-12 {
                let wall = if dir[axis] > 0.0 {
                    self.half_extents[axis]
                } else {
                    -self.half_extents[axis]
                };
                t = t.min((wall - p[axis]) / dir[axis]);
            }
        }
        t.max(0.0)
    }
}

/// Reset rotation: scans 360 headings at one-degree steps for the one
/// with the most remaining walking room (ties to the smallest angle) and
/// returns the yaw-offset delta that makes `desired_virtual_heading`
/// correspond to that physical heading.
pub fn compute_reset_rotation(
    physical_xz: [f64; 2],
    chaperone: &Chaperone,
    desired_virtual_heading: f64,
    mapping: &RigMapping,
) -> Result<f64> {
    if !chaperone.contains(physical_xz) {
        return Err(Error::Domain(format!(
            "physical point {physical_xz:?} is outside the chaperone"
        )));
    }
    let mut best_heading = 0.0;
    let mut best_dist = f64::NEG_INFINITY;
    for deg in 0..360 {
        let heading = (deg as f64).to_radians();
        let d = chaperone.distance_to_boundary(physical_xz, heading);
        if d > best_dist {
            best_dist = d;
            best_heading = heading;
        }
    }
    // A physical heading h maps to virtual heading h + yaw_offset; pick
    // the new offset so best_heading maps to the desired virtual heading.
    let new_offset = desired_virtual_heading - best_heading;
    Ok(wrap_angle(new_offset - mapping.yaw_offset))
}

pub fn wrap_angle(a: f64) -> f64 {
    let mut a = a % std::f64::consts::TAU;
    if a > std::f64::consts::PI {
        a -= std::f64::consts::TAU;
    } else if a < -std::f64::consts::PI {
        a += std::f64::consts::TAU;
    }
    a
}

/// Ballistic pointer arc: integrates
/// `p(t) = origin + v * dir * t - (0, g t^2 / 2, 0)` in steps of at most
/// 10 ms of arc time and bisects the terrain crossing. `None` when the
/// arc leaves the field.
pub fn teleport_arc(
    origin: [f64; 3],
    dir: [f64; 3],
    launch_speed: f64,
    gravity: f64,
    field: &HeightField,
) -> Option<[f64; 3]> {
    assert!(launch_speed > 0.0, "launch_speed must be > 0");
    assert!(gravity > 0.0, "gravity must be > 0");
    let v = [
        dir[0] * launch_speed,
        dir[1] * launch_speed,
        dir[2] * launch_speed,
    ];
    let at = |t: f64| {
        [
            origin[0] + v[0] * t,
            origin[1] + v[1] * t - 0.5 * gravity * t * t,
            origin[2] + v[2] * t,
        ]
    };
    let above = |t: f64| -> Option<f64> {
        let p = at(t);
        field.sample_height(p[0], p[2]).ok().map(|h| p[1] - h)
    };
    // Descending below the minimum height ends the arc; solve the
    // quadratic for a conservative time bound.
    let y_floor = field.min_height() - 1.0;
    let disc = v[1] * v[1] + 2.0 * gravity * (origin[1] - y_floor);
    let t_max = (v[1] + disc.max(0.0).sqrt()) / gravity;
    let step = 0.01;
    let mut t_prev = 0.0;
    let mut f_prev = above(0.0);
    let mut t = 0.0;
    while t < t_max {
        t = (t + step).min(t_max);
        let f = above(t);
        match (f_prev, f) {
            (Some(fp), Some(fc)) if fp > 0.0 && fc <= 0.0 => {
                let mut lo = t_prev;
                let mut hi = t;
                for _ in 0..80 {
                    if hi - lo <= 1e-9 {
                        break;
                    }
                    let mid = 0.5 * (lo + hi);
                    match above(mid) {
                        Some(fm) if fm > 0.0 => lo = mid,
                        _ => hi = mid,
                    }
                }
                return Some(at(hi));
            }
            (Some(fp), Some(fc)) if fp <= 0.0 && fc <= 0.0 && t_prev == 0.0 => {
                // launched from at or below the surface
                return Some(at(0.0));
            }
            _ => {}
        }
        t_prev = t;
        f_prev = f;
    }
    None
}

/// Instantaneous re-anchor to an arc landing point; the teleport baseline
/// is an NM-only technique.
pub fn apply_teleport(
    mapping: &RigMapping,
    pose: &PhysicalPose,
    landing: [f64; 3],
) -> Result<RigMapping> {
    if mapping.scale != NM_SCALE {
        return Err(Error::State(format!(
            "teleport is only available at scale 1, current scale is {}",
            mapping.scale
        )));
    }
    Ok(mapping.re_anchored(pose.xz(), [landing[0], landing[2]]))
}

/// GM scale for a named game state.
pub fn scale_for_state(game_state: &str, table: &BTreeMap<String, f64>) -> Result<f64> {
    table.get(game_state).copied().ok_or_else(|| {
        Error::Config(format!(
            "no GM scale configured for game state '{game_state}'"
        ))
    })
}
