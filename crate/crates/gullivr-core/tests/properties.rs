//! Property-based invariants over the geometry and state-machine core.

use gullivr_core::heightfield::{HeightField, KernelKind};
use gullivr_core::locomotion::{
    wrap_angle, ModeState, TRANSITION_MAX_SECONDS, TRANSITION_SECONDS_PER_SCALE,
};
use gullivr_core::rig::RigMapping;
use gullivr_core::telemetry::{classify_hit, HitZone};
use proptest::prelude::*;

fn small_field(heights: Vec<f64>) -> HeightField {
    let n = 8;
    HeightField::new([0.0, 0.0], 1.0, n, n, heights).unwrap()
}

proptest! {
    #[test]
    fn smoothing_stays_within_height_range(
        heights in prop::collection::vec(-50.0f64..50.0, 64),
        radius in 0.0f64..5.0,
        gaussian in any::<bool>(),
    ) {
        let f = small_field(heights);
        let kind = if gaussian { KernelKind::Gaussian } else { KernelKind::Box };
        let s = f.smooth(radius, kind).unwrap();
        let (lo, hi) = (f.min_height(), f.max_height());
        for &h in s.heights() {
            prop_assert!(h >= lo - 1e-12 && h <= hi + 1e-12);
        }
    }

    #[test]
    fn bilinear_sampling_is_exact_at_nodes(
        heights in prop::collection::vec(-50.0f64..50.0, 64),
    ) {
        let f = small_field(heights);
        for iz in 0..8usize {
            for ix in 0..8usize {
                let h = f.sample_height(ix as f64, iz as f64).unwrap();
                prop_assert!((h - f.height_at_node(ix, iz)).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn mapping_round_trips_points(
        ax in -100.0f64..100.0, az in -100.0f64..100.0,
        yaw in -3.2f64..3.2,
        scale in 0.1f64..200.0,
        px in -5.0f64..5.0, pz in -5.0f64..5.0,
    ) {
        let m = RigMapping::new([ax, az], yaw, scale, 0.003).unwrap();
        let v = m.map_xz([px, pz]);
        let back = m.unmap_xz(v);
        prop_assert!((back[0] - px).abs() <= 1e-9 && (back[1] - pz).abs() <= 1e-9);
    }

    #[test]
    fn transition_duration_obeys_both_bounds(
        scale in 1.001f64..500.0,
        configured in 0.0f64..10.0,
    ) {
        let next = ModeState::normal()
            .begin_transition(scale, 0.0, None, false, configured, [0.0, 0.0], [0.0, 0.0])
            .unwrap();
        let d = next.transition.unwrap().duration;
        prop_assert!(d <= TRANSITION_SECONDS_PER_SCALE * scale + 1e-15);
        prop_assert!(d <= TRANSITION_MAX_SECONDS);
        prop_assert!(d <= configured);
    }

    #[test]
    fn hit_zone_is_monotone_in_miss_distance(
        radius in 0.01f64..2.0,
        a in 0.0f64..3.0,
        b in 0.0f64..3.0,
    ) {
        let rank = |z: HitZone| match z {
            HitZone::Inner => 0,
            HitZone::Outer => 1,
            HitZone::Miss => 2,
        };
        let (near, far) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(rank(classify_hit(near, radius)) <= rank(classify_hit(far, radius)));
    }

    #[test]
    fn wrap_angle_lands_in_principal_range(a in -100.0f64..100.0) {
        let w = wrap_angle(a);
        prop_assert!(w >= -std::f64::consts::PI - 1e-12 && w <= std::f64::consts::PI + 1e-12);
        // same angle modulo a full turn
        let diff = (w - a) / std::f64::consts::TAU;
        prop_assert!((diff - diff.round()).abs() <= 1e-9);
    }
}
