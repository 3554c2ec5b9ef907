//! Physical-to-virtual rig mapping: horizontal similarity transform,
//! ground-relative vertical rule over smoothed terrain, and stereo eye
//! placement with proportionally scaled modeled eye separation.

use crate::error::{Error, Result};
use crate::heightfield::{HeightField, KernelKind};
use std::cell::RefCell;
use std::collections::BTreeMap;
use std::rc::Rc;

/// Timestamped head pose in tracked (room) space. `head_pos.y` is height
/// above the physical floor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalPose {
    pub t: f64,
    pub head_pos: [f64; 3],
    pub head_yaw: f64,
    pub head_pitch: f64,
}

impl PhysicalPose {
    pub fn new(t: f64, head_pos: [f64; 3], head_yaw: f64, head_pitch: f64) -> Result<Self> {
        if head_pos[1] < 0.0 {
            return Err(Error::Domain(format!(
                "head below physical floor: y = {}",
                head_pos[1]
            )));
        }
        Ok(Self {
            t,
            head_pos,
            head_yaw,
            head_pitch,
        })
    }

    pub fn xz(&self) -> [f64; 2] {
        [self.head_pos[0], self.head_pos[2]]
    }
}

/// Virtual head pose produced by the mapping.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VirtualHeadPose {
    pub pos: [f64; 3],
    pub yaw: f64,
    pub pitch: f64,
}

/// Stereo eye points in virtual space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EyePoses {
    pub left_eye: [f64; 3],
    pub right_eye: [f64; 3],
    pub modeled_eye_sep: f64,
}

/// Smoothed-ground provider. Smoothed copies of the base field are
/// memoized per distinct smoothing radius, so each scale level used by a
/// scenario pays for one convolution.
#[derive(Debug)]
pub struct GroundModel {
    base: HeightField,
    kind: KernelKind,
    cache: RefCell<BTreeMap<u64, Rc<HeightField>>>,
}

impl GroundModel {
    pub fn new(base: HeightField, kind: KernelKind) -> Self {
        Self {
            base,
            kind,
            cache: RefCell::new(BTreeMap::new()),
        }
    }

    pub fn base(&self) -> &HeightField {
        &self.base
    }

    /// Smoothed field for a given radius. Radii under a quarter cell
    /// collapse to the raw field.
    pub fn field_for_radius(&self, radius: f64) -> Result<Rc<HeightField>> {
        if radius < 0.0 {
            return Err(Error::Domain(format!(
                "smoothing radius must be >= 0, got {radius}"
            )));
        }
        let radius = if radius < self.base.cell_size() / 4.0 {
            0.0
        } else {
            radius
        };
        let key = radius.to_bits();
        if let Some(f) = self.cache.borrow().get(&key) {
            return Ok(Rc::clone(f));
        }
        let smoothed = Rc::new(self.base.smooth(radius, self.kind)?);
        self.cache.borrow_mut().insert(key, Rc::clone(&smoothed));
        Ok(smoothed)
    }

    pub fn height(&self, radius: f64, x: f64, z: f64) -> Result<f64> {
        self.field_for_radius(radius)?.sample_height(x, z)
    }
}

/// Similarity transform (translation, yaw, uniform scale) from tracked
/// space to virtual space, plus the ground-relative vertical rule.
///
/// Horizontal: `virtual_xz = anchor + scale * R(yaw_offset) * physical_xz`.
/// Vertical: `virtual_y = scale * physical_y + G_s(virtual_xz)` where
/// `G_s` is the terrain smoothed with radius `foot_smooth_coeff * scale`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigMapping {
    pub anchor: [f64; 2],
    pub yaw_offset: f64,
    pub scale: f64,
    pub foot_smooth_coeff: f64,
}

impl RigMapping {
    pub fn new(
        anchor: [f64; 2],
        yaw_offset: f64,
        scale: f64,
        foot_smooth_coeff: f64,
    ) -> Result<Self> {
        if !(scale > 0.0) {
            return Err(Error::Domain(format!("scale must be > 0, got {scale}")));
        }
        if foot_smooth_coeff < 0.0 {
            return Err(Error::Domain(format!(
                "foot_smooth_coeff must be >= 0, got {foot_smooth_coeff}"
            )));
        }
        Ok(Self {
            anchor,
            yaw_offset,
            scale,
            foot_smooth_coeff,
        })
    }

    /// Identity mapping at normal-mode scale.
    pub fn identity(foot_smooth_coeff: f64) -> Self {
        Self {
            anchor: [0.0, 0.0],
            yaw_offset: 0.0,
            scale: 1.0,
            foot_smooth_coeff,
        }
    }

    pub fn smoothing_radius(&self) -> f64 {
        self.foot_smooth_coeff * self.scale
    }

    /// Horizontal similarity transform.
    pub fn map_xz(&self, p: [f64; 2]) -> [f64; 2] {
        let (s, c) = self.yaw_offset.sin_cos();
        [
            self.anchor[0] + self.scale * (c * p[0] - s * p[1]),
            self.anchor[1] + self.scale * (s * p[0] + c * p[1]),
        ]
    }

    /// Physical preimage of a virtual horizontal point.
    pub fn unmap_xz(&self, v: [f64; 2]) -> [f64; 2] {
        let (s, c) = self.yaw_offset.sin_cos();
        let dx = (v[0] - self.anchor[0]) / self.scale;
        let dz = (v[1] - self.anchor[1]) / self.scale;
        [c * dx + s * dz, -s * dx + c * dz]
    }

    /// Returns a mapping with the anchor shifted so `physical_xz` maps to
    /// `virtual_xz`; yaw and scale unchanged.
    pub fn re_anchored(&self, physical_xz: [f64; 2], virtual_xz: [f64; 2]) -> RigMapping {
        let mut m = *self;
        m.anchor = [0.0, 0.0];
        let img = m.map_xz(physical_xz);
        m.anchor = [virtual_xz[0] - img[0], virtual_xz[1] - img[1]];
        m
    }

    /// Smoothed ground elevation under the mapped horizontal point.
    pub fn ground_height_under(&self, ground: &GroundModel, pose: &PhysicalPose) -> Result<f64> {
        let v = self.map_xz(pose.xz());
        ground.height(self.smoothing_radius(), v[0], v[1])
    }

    /// Full physical-to-virtual head pose mapping.
    pub fn map_pose(&self, ground: &GroundModel, pose: &PhysicalPose) -> Result<VirtualHeadPose> {
        let v = self.map_xz(pose.xz());
        if !ground.base().contains(v[0], v[1]) {
            return Err(Error::Domain(format!(
                "mapped point ({}, {}) is outside the heightfield",
                v[0], v[1]
            )));
        }
        let g = ground.height(self.smoothing_radius(), v[0], v[1])?;
        Ok(VirtualHeadPose {
            pos: [v[0], self.scale * pose.head_pos[1] + g, v[1]],
            yaw: pose.head_yaw + self.yaw_offset,
            pitch: pose.head_pitch,
        })
    }

    /// Eyes placed symmetrically about the mapped head point along the
    /// head's right axis; separation is `scale * physical_ipd` exactly.
    pub fn eye_poses(
        &self,
        ground: &GroundModel,
        pose: &PhysicalPose,
        physical_ipd: f64,
    ) -> Result<EyePoses> {
        if !(physical_ipd > 0.0) {
            return Err(Error::Domain(format!(
                "physical_ipd must be > 0, got {physical_ipd}"
            )));
        }
        let head = self.map_pose(ground, pose)?;
        let sep = self.scale * physical_ipd;
        // yaw-only eye axis: right = forward rotated -90 degrees about +y
        let (s, c) = head.yaw.sin_cos();
        let right = [s, -c];
        let half = sep / 2.0;
        Ok(EyePoses {
            left_eye: [
                head.pos[0] - right[0] * half,
                head.pos[1],
                head.pos[2] - right[1] * half,
            ],
            right_eye: [
                head.pos[0] + right[0] * half,
                head.pos[1],
                head.pos[2] + right[1] * half,
            ],
            modeled_eye_sep: sep,
        })
    }
}

/// Unit forward direction for a yaw/pitch gaze, y-up.
pub fn gaze_direction(yaw: f64, pitch: f64) -> [f64; 3] {
    let (sy, cy) = yaw.sin_cos();
    let (sp, cp) = pitch.sin_cos();
    [cp * cy, sp, cp * sy]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::heightfield::generate_value_noise;

    fn flat_ground(h: f64) -> GroundModel {
        let f = HeightField::flat([-500.0, -500.0], 10.0, 101, 101, h).unwrap();
        GroundModel::new(f, KernelKind::Gaussian)
    }

    fn pose(xz: [f64; 2], height: f64) -> PhysicalPose {
        PhysicalPose::new(0.0, [xz[0], height, xz[1]], 0.0, 0.0).unwrap()
    }

    #[test]
    fn identity_mapping_on_flat_ground() {
        let ground = flat_ground(0.0);
        let m = RigMapping::identity(0.0);
        let v = m.map_pose(&ground, &pose([1.0, 2.0], 1.7)).unwrap();
        assert_eq!(v.pos, [1.0, 1.7, 2.0]);
        assert_eq!(v.yaw, 0.0);
    }

    #[test]
    fn scale_30_multiplies_steps() {
        let ground = flat_ground(0.0);
        let m = RigMapping::new([0.0, 0.0], 0.0, 30.0, 0.0).unwrap();
        let a = m.map_pose(&ground, &pose([0.0, 0.0], 1.7)).unwrap();
        let b = m.map_pose(&ground, &pose([0.5, 0.0], 1.7)).unwrap();
        assert!((b.pos[0] - a.pos[0] - 15.0).abs() < 1e-12);
        assert!((b.pos[2] - a.pos[2]).abs() < 1e-12);
    }

    #[test]
    fn vertical_rule_at_scale_100() {
        let ground = flat_ground(12.0);
        let m = RigMapping::new([0.0, 0.0], 0.0, 100.0, 0.0).unwrap();
        let v = m.map_pose(&ground, &pose([0.0, 0.0], 1.7)).unwrap();
        assert!((v.pos[1] - 182.0).abs() < 1e-9);
    }

    #[test]
    fn mapped_point_outside_field_is_domain_error() {
        let ground = flat_ground(0.0);
        let m = RigMapping::new([0.0, 0.0], 0.0, 10_000.0, 0.0).unwrap();
        let err = m.map_pose(&ground, &pose([1.0, 1.0], 1.7)).unwrap_err();
        assert!(matches!(err, Error::Domain(_)));
    }

    #[test]
    fn eye_separation_is_proportional() {
        let ground = flat_ground(0.0);
        let p = pose([0.0, 0.0], 1.7);
        for (scale, ipd, want) in [(1.0, 0.064, 0.064), (100.0, 0.064, 6.4), (30.0, 0.06, 1.8)] {
            let m = RigMapping::new([0.0, 0.0], 0.0, scale, 0.0).unwrap();
            let eyes = m.eye_poses(&ground, &p, ipd).unwrap();
            assert_eq!(eyes.modeled_eye_sep, scale * ipd);
            let d = [
                eyes.right_eye[0] - eyes.left_eye[0],
                eyes.right_eye[1] - eyes.left_eye[1],
                eyes.right_eye[2] - eyes.left_eye[2],
            ];
            let len = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
            assert!((len - want).abs() < 1e-12);
        }
    }

    #[test]
    fn eye_axis_rotates_with_yaw() {
        let ground = flat_ground(0.0);
        let p = PhysicalPose::new(0.0, [0.0, 1.7, 0.0], std::f64::consts::FRAC_PI_2, 0.0).unwrap();
        let m = RigMapping::new([0.0, 0.0], 0.0, 30.0, 0.0).unwrap();
        let eyes = m.eye_poses(&ground, &p, 0.06).unwrap();
        // yaw 90 deg: forward = +z, right = +x... right = (sin yaw, -cos yaw) = (1, 0)
        assert!((eyes.right_eye[0] - 0.9).abs() < 1e-12);
        assert!((eyes.left_eye[0] + 0.9).abs() < 1e-12);
        assert!((eyes.right_eye[2]).abs() < 1e-12);
    }

    #[test]
    fn nonpositive_ipd_rejected() {
        let ground = flat_ground(0.0);
        let m = RigMapping::identity(0.0);
        assert!(m.eye_poses(&ground, &pose([0.0, 0.0], 1.7), 0.0).is_err());
    }

    #[test]
    fn eye_midpoint_is_mapped_head() {
        let ground = flat_ground(3.0);
        let p = PhysicalPose::new(0.0, [0.4, 1.6, -0.2], 1.1, -0.3).unwrap();
        let m = RigMapping::new([7.0, -2.0], 0.6, 42.0, 0.001).unwrap();
        let head = m.map_pose(&ground, &p).unwrap();
        let eyes = m.eye_poses(&ground, &p, 0.064).unwrap();
        for i in 0..3 {
            let mid = 0.5 * (eyes.left_eye[i] + eyes.right_eye[i]);
            assert!((mid - head.pos[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn ground_height_constant_field_any_scale() {
        let ground = flat_ground(3.0);
        for scale in [1.0, 30.0, 100.0] {
            let m = RigMapping::new([0.0, 0.0], 0.0, scale, 0.003).unwrap();
            let g = m
                .ground_height_under(&ground, &pose([0.3, 0.3], 1.7))
                .unwrap();
            assert!((g - 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_coeff_equals_raw_sample() {
        let base = generate_value_noise([-100.0, -100.0], 2.0, 101, 101, 7, 5.0, 20.0).unwrap();
        let ground = GroundModel::new(base.clone(), KernelKind::Gaussian);
        let m = RigMapping::new([0.0, 0.0], 0.0, 100.0, 0.0).unwrap();
        let p = pose([0.37, -0.12], 1.7);
        let v = m.map_xz(p.xz());
        let want = base.sample_height(v[0], v[1]).unwrap();
        assert_eq!(m.ground_height_under(&ground, &p).unwrap(), want);
    }

    #[test]
    fn larger_kernel_contracts_toward_mean() {
        // sinusoid field, symmetric about its zero mean; larger kernels
        // attenuate it toward the mean at every point
        let (nx, nz, cell) = (101usize, 101usize, 2.0);
        let wl = 24.0;
        let heights: Vec<f64> = (0..nz)
            .flat_map(|iz| {
                (0..nx).map(move |ix| {
                    let x = -100.0 + ix as f64 * cell;
                    let z = -100.0 + iz as f64 * cell;
                    5.0 * (std::f64::consts::TAU * x / wl).sin()
                        * (std::f64::consts::TAU * z / wl).sin()
                })
            })
            .collect();
        let base = HeightField::new([-100.0, -100.0], cell, nx, nz, heights).unwrap();
        let ground = GroundModel::new(base, KernelKind::Gaussian);
        let p = pose([wl / 4.0, wl / 4.0], 1.7); // crest of the sinusoid
        let scale_coeff = 0.05;
        let m1 = RigMapping::new([0.0, 0.0], 0.0, 1.0, scale_coeff).unwrap();
        let m100 = RigMapping::new([0.0, 0.0], 0.0, 1.0, scale_coeff * 100.0).unwrap();
        let g1 = m1.ground_height_under(&ground, &p).unwrap();
        let g100 = m100.ground_height_under(&ground, &p).unwrap();
        assert!(g100.abs() <= g1.abs() + 1e-9, "g1={g1} g100={g100}");
    }

    #[test]
    fn unmap_inverts_map() {
        let m = RigMapping::new([3.0, -8.0], 0.7, 17.0, 0.0).unwrap();
        let p = [0.42, -1.3];
        let back = m.unmap_xz(m.map_xz(p));
        assert!((back[0] - p[0]).abs() < 1e-12);
        assert!((back[1] - p[1]).abs() < 1e-12);
    }

    #[test]
    fn re_anchor_maps_physical_to_target() {
        let m = RigMapping::new([3.0, -8.0], 0.7, 17.0, 0.0).unwrap();
        let m2 = m.re_anchored([0.5, 0.5], [100.0, 200.0]);
        let v = m2.map_xz([0.5, 0.5]);
        assert!((v[0] - 100.0).abs() < 1e-9);
        assert!((v[1] - 200.0).abs() < 1e-9);
        assert_eq!(m2.scale, m.scale);
        assert_eq!(m2.yaw_offset, m.yaw_offset);
    }
}
