//! Deterministic scripted agent: walks a physical body inside the
//! chaperone while pursuing virtual waypoints, deciding when to grow,
//! shrink, teleport, and reset. One seeded generator drives all
//! randomness, so identical (scenario, seed, policy) runs are
//! bit-identical.

use crate::error::{Error, Result};
use crate::locomotion::{
    apply_teleport, compute_reset_rotation, resolve_aim, resolve_pull, scale_for_state,
    step_transition, teleport_arc, wrap_angle, Mode, ModeState, ObjectEvent, NM_SCALE,
};
use crate::rig::{PhysicalPose, RigMapping};
use crate::scenario::{Scenario, TargetAcquisition, WaypointAction};
use crate::telemetry::{EventKind, Frame, Meta, TelemetryLog};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Policy {
    Gullivr,
    Teleport,
}

impl Policy {
    pub fn label(&self) -> &'static str {
        match self {
            Policy::Gullivr => "gullivr",
            Policy::Teleport => "teleport",
        }
    }

    pub fn from_label(s: &str) -> Option<Policy> {
        match s {
            "gullivr" => Some(Policy::Gullivr),
            "teleport" => Some(Policy::Teleport),
            _ => None,
        }
    }
}

/// Navigation decision taken in a tick.
#[derive(Debug, Clone, PartialEq)]
pub enum NavEvent {
    TransitionBegin { from: f64, to: f64 },
    TransitionEnd { scale: f64 },
    Teleport { landing: [f64; 3] },
    Reset { yaw_delta: f64 },
    WaypointReached { index: usize },
}

/// One simulation in flight. `step` advances a single fixed tick.
pub struct Simulation<'a> {
    scn: &'a Scenario,
    policy: Policy,
    rng: ChaCha8Rng,
    pub mapping: RigMapping,
    pub mode: ModeState,
    phys: [f64; 2],
    head_yaw: f64,
    head_pitch: f64,
    t: f64,
    wp_index: usize,
    dwell_until: f64,
    force_gm: bool,
    pub log: TelemetryLog,
    done: bool,
}

impl<'a> Simulation<'a> {
    pub fn new(scn: &'a Scenario, policy: Policy, seed: u64) -> Result<Self> {
        let mapping = RigMapping::identity(scn.sim.foot_smooth_coeff)
            .re_anchored([0.0, 0.0], scn.sim.start_virtual);
        let mut sim = Self {
            scn,
            policy,
            rng: ChaCha8Rng::seed_from_u64(seed),
            mapping,
            mode: ModeState::normal(),
            phys: [0.0, 0.0],
            head_yaw: 0.0,
            head_pitch: 0.0,
            t: 0.0,
            wp_index: 0,
            dwell_until: 0.0,
            force_gm: false,
            log: TelemetryLog::new(Meta {
                scenario_id: scn.id.clone(),
                seed,
                policy: policy.label().to_string(),
            }),
            done: scn.agent.waypoints.is_empty(),
        };
        sim.record_frame()?;
        Ok(sim)
    }

    pub fn is_done(&self) -> bool {
        self.done
    }

    fn pose(&self) -> PhysicalPose {
        PhysicalPose {
            t: self.t,
            head_pos: [self.phys[0], self.scn.sim.head_height, self.phys[1]],
            head_yaw: self.head_yaw,
            head_pitch: self.head_pitch,
        }
    }

    fn virtual_xz(&self) -> [f64; 2] {
        self.mapping.map_xz(self.phys)
    }

    fn record_frame(&mut self) -> Result<()> {
        let head = self.mapping.map_pose(&self.scn.ground, &self.pose())?;
        self.log.push_frame(Frame {
            t: self.t,
            physical: [self.phys[0], self.scn.sim.head_height, self.phys[1]],
            virtual_pos: head.pos,
            scale: self.mode.current_scale,
            mode: self.mode.mode.label(),
        });
        Ok(())
    }

    fn gm_scale_for(&self, wp_index: usize) -> Result<f64> {
        let state = self.scn.agent.waypoints[wp_index]
            .state
            .as_deref()
            .unwrap_or(&self.scn.agent.default_state);
        scale_for_state(state, &self.scn.scales)
    }

    /// Advances one fixed tick; returns the nav event taken, if any.
    pub fn step(&mut self) -> Result<Option<NavEvent>> {
        let dt = self.scn.sim.dt;
        self.t += dt;
        if self.done {
            self.record_frame()?;
            return Ok(None);
        }
        let event = self.plan_and_act(dt)?;
        debug_assert!(
            self.scn.chaperone.contains(self.phys),
            "agent left the chaperone at {:?}",
            self.phys
        );
        self.record_frame()?;
        Ok(event)
    }

    fn plan_and_act(&mut self, dt: f64) -> Result<Option<NavEvent>> {
        // finish an in-flight transition first
        if let Some(spec) = self.mode.transition {
            let (scale, mapping) = step_transition(&spec, &self.mapping, self.t);
            self.mapping = mapping;
            self.mode.current_scale = scale;
            if spec.progress(self.t) >= 1.0 {
                self.mode = self.mode.complete_transition()?;
                self.log
                    .push_event(self.t, EventKind::TransitionEnd, format!("scale={scale}"));
                return Ok(Some(NavEvent::TransitionEnd { scale }));
            }
            return Ok(None);
        }
        if self.t < self.dwell_until {
            return Ok(None);
        }
        let wp = &self.scn.agent.waypoints[self.wp_index];
        let wp_pos = wp.pos;
        let v = self.virtual_xz();
        let dist_virt = dist(v, wp_pos);
        let scale = self.mode.current_scale;
        let step_virt = self.scn.agent.walk_speed * dt * scale;

        if self.mode.mode == Mode::Normal {
            if dist_virt <= step_virt.max(1e-9) {
                return self.arrive();
            }
            match self.policy {
                Policy::Gullivr => {
                    let needed_phys = dist_virt / scale;
                    let heading = self.physical_heading_to(wp_pos);
                    let remaining = self.scn.chaperone.distance_to_boundary(self.phys, heading);
                    if self.force_gm || needed_phys > 0.8 * remaining {
                        self.force_gm = false;
                        let gm = self.gm_scale_for(self.wp_index)?;
                        return self.begin_transition_to(gm, None);
                    }
                    self.walk_toward(wp_pos, dt)?;
                    Ok(None)
                }
                Policy::Teleport => {
                    if dist_virt > self.scn.agent.step_threshold {
                        return self.teleport_toward(wp_pos);
                    }
                    self.walk_toward(wp_pos, dt)?;
                    Ok(None)
                }
            }
        } else {
            // giant mode: arrive over the waypoint, then shrink onto it
            if dist_virt <= step_virt {
                let pull = self.acquisition_pull(wp_pos, v)?;
                return self.begin_transition_to(NM_SCALE, Some(pull));
            }
            self.walk_toward(wp_pos, dt)?;
            Ok(None)
        }
    }

    /// Horizontal pull for the GM->NM transition: passive pulling toward
    /// a POI anchor when inside a box, otherwise active aiming at the
    /// waypoint through the gaze-ray crosshair (with isotropic gaussian
    /// aim noise); plain shrink-in-place as the last resort.
    fn acquisition_pull(&mut self, wp_pos: [f64; 2], v: [f64; 2]) -> Result<[f64; 2]> {
        if self.scn.transition.mode == TargetAcquisition::Pulling {
            if let Some(pull) = resolve_pull(&self.scn.pois, v) {
                return Ok(pull.offset);
            }
            return Ok([0.0, 0.0]); // outside every box: shrink in place
        }
        // aiming: look down at the waypoint and project the crosshair
        let head = self.mapping.map_pose(&self.scn.ground, &self.pose())?;
        let wp_ground = self.scn.ground.base().sample_height(wp_pos[0], wp_pos[1])?;
        let dx = wp_pos[0] - head.pos[0];
        let dz = wp_pos[1] - head.pos[2];
        let dy = wp_ground - head.pos[1];
        let horiz = (dx * dx + dz * dz).sqrt();
        // aim the head; the virtual yaw is head_yaw + yaw_offset
        self.head_yaw = wrap_angle(dz.atan2(dx) - self.mapping.yaw_offset);
        self.head_pitch = dy.atan2(horiz);
        let max_pitch = self.scn.transition.max_pitch_deg.to_radians();
        let crosshair =
            resolve_aim(&self.pose(), &self.mapping, &self.scn.ground, max_pitch).unwrap_or(wp_pos);
        let noisy = self.noisy_point(crosshair);
        Ok([noisy[0] - v[0], noisy[1] - v[1]])
    }

    fn noisy_point(&mut self, p: [f64; 2]) -> [f64; 2] {
        let sigma = self.scn.agent.aim_noise_sigma;
        if sigma == 0.0 {
            return p;
        }
        let normal = Normal::new(0.0, sigma).expect("sigma validated >= 0");
        [
            p[0] + normal.sample(&mut self.rng),
            p[1] + normal.sample(&mut self.rng),
        ]
    }

    fn begin_transition_to(
        &mut self,
        target: f64,
        pull: Option<[f64; 2]>,
    ) -> Result<Option<NavEvent>> {
        let v = self.virtual_xz();
        // rotate the world toward the most open physical heading while
        // the scale changes
        if self.scn.transition.reset_rotation && self.policy == Policy::Gullivr {
            let wp = self.scn.agent.waypoints[self.wp_index].pos;
            if dist(v, wp) > 1e-9 {
                let desired = (wp[1] - v[1]).atan2(wp[0] - v[0]);
                let delta =
                    compute_reset_rotation(self.phys, &self.scn.chaperone, desired, &self.mapping)?;
                self.rotate_world(delta);
            }
        }
        let from = self.mode.current_scale;
        self.mode = self.mode.begin_transition(
            target,
            self.t,
            pull,
            self.scn.transition.instant,
            self.scn.transition.duration,
            self.virtual_xz(),
            self.phys,
        )?;
        self.log.push_event(
            self.t,
            EventKind::TransitionBegin,
            format!("from={from} to={target}"),
        );
        if self.scn.transition.instant {
            let spec = self.mode.transition.unwrap();
            let (scale, mapping) = step_transition(&spec, &self.mapping, self.t);
            self.mapping = mapping;
            self.mode.current_scale = scale;
            self.mode = self.mode.complete_transition()?;
            self.log
                .push_event(self.t, EventKind::TransitionEnd, format!("scale={scale}"));
        }
        Ok(Some(NavEvent::TransitionBegin { from, to: target }))
    }

    /// Rotates the mapping about the player: yaw_offset changes, the
    /// player's virtual position does not.
    fn rotate_world(&mut self, yaw_delta: f64) {
        let v = self.virtual_xz();
        let mut m = self.mapping;
        m.yaw_offset = wrap_angle(m.yaw_offset + yaw_delta);
        self.mapping = m.re_anchored(self.phys, v);
    }

    fn physical_heading_to(&self, wp_pos: [f64; 2]) -> f64 {
        let target_phys = self.mapping.unmap_xz(wp_pos);
        (target_phys[1] - self.phys[1]).atan2(target_phys[0] - self.phys[0])
    }

    fn walk_toward(&mut self, wp_pos: [f64; 2], dt: f64) -> Result<()> {
        let target_phys = self.mapping.unmap_xz(wp_pos);
        let d = dist(self.phys, target_phys);
        if d < 1e-12 {
            return Ok(());
        }
        let step = (self.scn.agent.walk_speed * dt).min(d);
        let dir = [
            (target_phys[0] - self.phys[0]) / d,
            (target_phys[1] - self.phys[1]) / d,
        ];
        let next = [self.phys[0] + dir[0] * step, self.phys[1] + dir[1] * step];
        if !self.scn.chaperone.contains(next) {
            self.reset()?;
            // walk along the re-oriented preimage direction instead
            let target_phys = self.mapping.unmap_xz(wp_pos);
            let d = dist(self.phys, target_phys);
            if d < 1e-12 {
                return Ok(());
            }
            let step = (self.scn.agent.walk_speed * dt).min(d);
            let dir = [
                (target_phys[0] - self.phys[0]) / d,
                (target_phys[1] - self.phys[1]) / d,
            ];
            let next = [self.phys[0] + dir[0] * step, self.phys[1] + dir[1] * step];
            if self.scn.chaperone.contains(next) {
                self.phys = next;
                self.head_yaw = wrap_angle(dir[1].atan2(dir[0]));
            }
            return Ok(());
        }
        self.phys = next;
        self.head_yaw = wrap_angle(dir[1].atan2(dir[0]));
        Ok(())
    }

    /// Boundary reset. GulliVR: an instant NM/GM round-trip carrying a
    /// reset rotation toward the most open heading. Teleport baseline: an
    /// in-place re-anchor that turns the physical walking direction
    /// around.
    fn reset(&mut self) -> Result<()> {
        let wp = self.scn.agent.waypoints[self.wp_index].pos;
        let v = self.virtual_xz();
        match self.policy {
            Policy::Gullivr => {
                let desired = (wp[1] - v[1]).atan2(wp[0] - v[0]);
                let delta =
                    compute_reset_rotation(self.phys, &self.scn.chaperone, desired, &self.mapping)?;
                let here = self.mode.current_scale;
                let other = if here == NM_SCALE {
                    self.gm_scale_for(self.wp_index)?
                } else {
                    NM_SCALE
                };
                // instant round-trip: scale away and back with the
                // rotation applied in between
                self.instant_round_trip_leg(other)?;
                self.rotate_world(delta);
                self.instant_round_trip_leg(here)?;
                self.log
                    .push_event(self.t, EventKind::Reset, format!("yaw_delta={delta}"));
            }
            Policy::Teleport => {
                self.rotate_world(std::f64::consts::PI);
                self.log.push_event(self.t, EventKind::Reset, "turnaround");
            }
        }
        Ok(())
    }

    /// One leg of the reset round-trip. Logged under the single reset
    /// event, not as a transition pair.
    fn instant_round_trip_leg(&mut self, target: f64) -> Result<()> {
        self.mode = self.mode.begin_transition(
            target,
            self.t,
            None,
            true,
            self.scn.transition.duration,
            self.virtual_xz(),
            self.phys,
        )?;
        let spec = self.mode.transition.unwrap();
        let (scale, mapping) = step_transition(&spec, &self.mapping, self.t);
        self.mapping = mapping;
        self.mode.current_scale = scale;
        self.mode = self.mode.complete_transition()?;
        Ok(())
    }

    fn teleport_toward(&mut self, wp_pos: [f64; 2]) -> Result<Option<NavEvent>> {
        let head = self.mapping.map_pose(&self.scn.ground, &self.pose())?;
        let ground = &self.scn.ground;
        let wp_h = ground.base().sample_height(wp_pos[0], wp_pos[1])?;
        let dir = match launch_direction(
            head.pos,
            [wp_pos[0], wp_h, wp_pos[1]],
            self.scn.teleport.launch_speed,
            self.scn.teleport.gravity,
        ) {
            Some(d) => d,
            None => {
                // out of range: maximum-range hop toward the waypoint
                let az = (wp_pos[1] - head.pos[2]).atan2(wp_pos[0] - head.pos[0]);
                let e = std::f64::consts::FRAC_PI_4;
                [e.cos() * az.cos(), e.sin(), e.cos() * az.sin()]
            }
        };
        let landing = teleport_arc(
            head.pos,
            dir,
            self.scn.teleport.launch_speed,
            self.scn.teleport.gravity,
            ground.base(),
        );
        let landing = match landing {
            Some(l) => l,
            None => return Ok(None), // arc left the field; stand still
        };
        self.mapping = apply_teleport(&self.mapping, &self.pose(), landing)?;
        self.log.push_event(
            self.t,
            EventKind::Teleport,
            format!("landing=({},{},{})", landing[0], landing[1], landing[2]),
        );
        Ok(Some(NavEvent::Teleport { landing }))
    }

    fn arrive(&mut self) -> Result<Option<NavEvent>> {
        let wp = self.scn.agent.waypoints[self.wp_index].clone();
        // final partial step lands exactly on the waypoint
        let target_phys = self.mapping.unmap_xz(wp.pos);
        if self.scn.chaperone.contains(target_phys) {
            let d = dist(self.phys, target_phys);
            if d > 1e-12 {
                let dir = [
                    (target_phys[0] - self.phys[0]) / d,
                    (target_phys[1] - self.phys[1]) / d,
                ];
                self.head_yaw = wrap_angle(dir[1].atan2(dir[0]));
            }
            self.phys = target_phys;
        }
        let index = self.wp_index;
        self.log
            .push_event(self.t, EventKind::WaypointReached, format!("index={index}"));
        match wp.action {
            WaypointAction::Visit => {}
            WaypointAction::Grab => {
                self.mode = self.mode.held_object_event(ObjectEvent::Grab)?;
                self.log.push_event(
                    self.t,
                    EventKind::Grab,
                    format!("scale={}", self.mode.held_object_scale),
                );
            }
            WaypointAction::Drop => {
                self.mode = self.mode.held_object_event(ObjectEvent::Drop)?;
                self.log.push_event(
                    self.t,
                    EventKind::Drop,
                    format!("scale={}", self.mode.held_object_scale),
                );
            }
            WaypointAction::TriggerNav => {
                self.force_gm = true;
            }
        }
        self.wp_index += 1;
        if self.wp_index >= self.scn.agent.waypoints.len() {
            self.done = true;
        }
        self.dwell_until = self.t + self.scn.agent.dwell_s;
        Ok(Some(NavEvent::WaypointReached { index }))
    }
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt()
}

/// Launch direction that lands a projectile of the given speed on the
/// target over flat ground (low solution), or `None` when out of range.
fn launch_direction(
    origin: [f64; 3],
    target: [f64; 3],
    speed: f64,
    gravity: f64,
) -> Option<[f64; 3]> {
    let dx = target[0] - origin[0];
    let dz = target[2] - origin[2];
    let dy = target[1] - origin[1];
    let horiz = (dx * dx + dz * dz).sqrt();
    if horiz < 1e-9 {
        return Some([0.0, -1.0, 0.0]);
    }
    let v2 = speed * speed;
    let disc = v2 * v2 - gravity * (gravity * horiz * horiz + 2.0 * dy * v2);
    if disc < 0.0 {
        return None;
    }
    let pitch = ((v2 - disc.sqrt()) / (gravity * horiz)).atan();
    let (ax, az) = (dx / horiz, dz / horiz);
    Some([pitch.cos() * ax, pitch.sin(), pitch.cos() * az])
}

/// Runs the whole scenario at the fixed tick until every waypoint is
/// visited or the tick cap trips. Identical (scenario, policy, seed)
/// inputs yield bit-identical logs.
pub fn run_scenario(scn: &Scenario, policy: Policy, seed: u64) -> Result<TelemetryLog> {
    let mut sim = Simulation::new(scn, policy, seed)?;
    let mut ticks = 0u64;
    while !sim.is_done() {
        sim.step()?;
        ticks += 1;
        if ticks > scn.sim.ticks_cap {
            return Err(Error::Scenario(format!(
                "tick cap {} exceeded at t={:.3}s with waypoint {} of {} pending (physical {:?})",
                scn.sim.ticks_cap,
                sim.t,
                sim.wp_index,
                scn.agent.waypoints.len(),
                sim.phys,
            )));
        }
    }
    // drain the trailing dwell so duration covers the final visit
    while sim.t < sim.dwell_until {
        sim.step()?;
    }
    Ok(sim.log)
}

/// One targeting attempt record.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetingRecord {
    pub target_index: usize,
    pub attempt: u32,
    pub miss_distance: f64,
}

/// Targeting protocol: the agent stands in GM over each target, aims with
/// isotropic gaussian noise, transitions to NM through the full transition
/// pipeline, and records the radial landing error. Each target gets at
/// most `max_attempts` attempts.
pub fn targeting_trial(
    scn: &Scenario,
    gm_scale: f64,
    aim_noise_sigma: f64,
    seed: u64,
) -> Result<Vec<TargetingRecord>> {
    if !(gm_scale > 1.0) {
        return Err(Error::Domain(format!(
            "gm_scale must be > 1, got {gm_scale}"
        )));
    }
    if aim_noise_sigma < 0.0 {
        return Err(Error::Domain(format!(
            "sigma must be >= 0, got {aim_noise_sigma}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = if aim_noise_sigma > 0.0 {
        Some(Normal::new(0.0, aim_noise_sigma).expect("validated sigma"))
    } else {
        None
    };
    let dt = scn.sim.dt;
    let mut records = Vec::new();
    for (target_index, target) in scn.targets.list.iter().enumerate() {
        for attempt in 0..scn.targets.max_attempts {
            // giant standing over the target center
            let mapping = RigMapping::new([0.0, 0.0], 0.0, gm_scale, scn.sim.foot_smooth_coeff)?
                .re_anchored([0.0, 0.0], target.center);
            let mut state = ModeState {
                mode: Mode::Giant,
                current_scale: gm_scale,
                transition: None,
                holding: false,
                held_object_scale: gm_scale,
            };
            let crosshair = match &normal {
                Some(n) => [
                    target.center[0] + n.sample(&mut rng),
                    target.center[1] + n.sample(&mut rng),
                ],
                None => target.center,
            };
            let v = mapping.map_xz([0.0, 0.0]);
            let pull = [crosshair[0] - v[0], crosshair[1] - v[1]];
            state = state.begin_transition(
                NM_SCALE,
                0.0,
                Some(pull),
                scn.transition.instant,
                scn.transition.duration,
                v,
                [0.0, 0.0],
            )?;
            let spec = state.transition.unwrap();
            let mut m = mapping;
            let mut now = 0.0;
            loop {
                now += dt;
                let (_, next) = step_transition(&spec, &m, now);
                m = next;
                if spec.progress(now) >= 1.0 {
                    break;
                }
            }
            let landed = m.map_xz([0.0, 0.0]);
            records.push(TargetingRecord {
                target_index,
                attempt,
                miss_distance: dist(landed, target.center),
            });
        }
    }
    Ok(records)
}
