mod common;

use std::collections::BTreeMap;
use std::f64::consts::PI;

use common::DistanceConstants;
use curvewave::flow::{flow_index, Branch, VelocityModel};
use curvewave::*;
use proptest::prelude::*;

fn pinned() -> BTreeMap<String, DistanceConstants> {
    serde_json::from_str(include_str!("data/distance_constants.json")).unwrap()
}

fn point(x: [f64; 2], theta: f64, j: f64) -> PhasePoint {
    PhasePoint::new(x, [j.exp2() * theta.cos(), j.exp2() * theta.sin()]).unwrap()
}

prop_compose! {
    fn phase_point()(x1 in 0.0..1.0f64, x2 in 0.0..1.0f64, theta in 0.0..2.0 * PI, j in 1.0..8.0f64) -> PhasePoint {
        point([x1, x2], theta, j)
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn basic_bounds(a in phase_point(), b in phase_point()) {
        prop_assert!(d(&a, &b) >= 0.0);
        prop_assert!(omega(&a, &b) >= 1.0);
        prop_assert_eq!(omega(&a, &a), 1.0);
    }

    #[test]
    fn orientation_is_taken_mod_pi(a in phase_point(), b in phase_point()) {
        let flipped = PhasePoint::new(b.x, [-b.xi[0], -b.xi[1]]).unwrap();
        prop_assert!((d(&a, &b) - d(&a, &flipped)).abs() < 1e-9);
    }

    #[test]
    fn periodic_in_position(a in phase_point(), b in phase_point(), s1 in -2i32..3, s2 in -2i32..3) {
        let shifted = PhasePoint { x: [b.x[0] + s1 as f64, b.x[1] + s2 as f64], ..b };
        prop_assert!((d(&a, &b) - d(&a, &shifted)).abs() < 1e-9);
    }

    // |<e_a - e_b, dx>| <= |dtheta| |dx| <= (dtheta^2 + |dx|^2) / 2 gives 3/2
    #[test]
    fn quasi_symmetry_analytic(a in phase_point(), b in phase_point()) {
        prop_assert!(omega(&a, &b) <= 1.5 * omega(&b, &a) * (1.0 + 1e-12));
    }

    // splitting the along term through the middle codirection gives 5/2
    #[test]
    fn quasi_triangle_analytic(a in phase_point(), b in phase_point(), c in phase_point()) {
        prop_assert!(d(&a, &b) <= 2.5 * (d(&a, &c) + d(&c, &b)) + 1e-12);
    }

    #[test]
    fn rigid_translation_preserves_omega(
        x1 in 0.0..1.0f64, x2 in 0.0..1.0f64, y1 in 0.0..1.0f64, y2 in 0.0..1.0f64,
        theta in 0.0..2.0 * PI, t in 0.0..1.0f64,
    ) {
        let a = point([x1, x2], theta, 5.0);
        let b = point([y1, y2], theta, 4.0);
        let e = [theta.cos(), theta.sin()];
        let shift = |p: &PhasePoint| PhasePoint { x: [p.x[0] + t * e[0], p.x[1] + t * e[1]], ..*p };
        prop_assert!((omega(&shift(&a), &shift(&b)) / omega(&a, &b) - 1.0).abs() < 1e-9);
    }
}

#[test]
fn flowed_indices_with_shared_codirection_keep_omega() {
    let t = build_frame(FrameParams::new(128, 5)).unwrap();
    let c = VelocityModel::constant(1.0);
    let (ka, kc) = t.wedge(4, 3).unwrap().dims();
    let a = CurveletIndex::new(4, 3, 0, kc / 3);
    let b = CurveletIndex::new(4, 3, ka - 1, kc / 2);
    let fa = flow_index(&t, &a, &c, Branch::Plus, 0.3).unwrap();
    let fb = flow_index(&t, &b, &c, Branch::Plus, 0.3).unwrap();
    let before = omega(&t.phase_point(&a).unwrap(), &t.phase_point(&b).unwrap());
    assert!((omega(&fa.point, &fb.point) / before - 1.0).abs() < 1e-9);
}

#[test]
fn pinned_constants_hold_on_coarse_grid() {
    let t = build_frame(FrameParams::new(64, 4)).unwrap();
    let p = pinned()["n64"];
    assert!(common::symmetry_constant(&t, 1, 10_000) <= p.symmetry);
    assert!(common::triangle_constant(&t, 2, 10_000) <= p.triangle);
    assert!(common::composition_constant(&t, 3, 200) <= p.composition);
    assert!(common::flow_constant(&t, 4, 10_000, &VelocityModel::sinusoidal_x1(0.2), 0.25) <= p.flow);
}

#[test]
fn pinned_constants_within_analytic_bounds() {
    // a coarse point at scale 2^1 drops its along term: sup over s of 1 + 2s / (1 + 2s^2)
    for c in pinned().values() {
        assert!(c.symmetry <= 1.0 + 0.5 * 2.0f64.sqrt());
        assert!(c.triangle <= 2.5);
        assert!(c.composition.is_finite() && c.flow.is_finite());
    }
}
