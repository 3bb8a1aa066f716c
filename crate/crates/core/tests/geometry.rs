use std::f64::consts::PI;

use proptest::prelude::*;
use roadforge_core::geom::{
    chain_poses, compute_polyline_curvature, heading_change, normalize_angle, resample, segment_endpoint, segment_pose_at,
    GeomSegment, Point, Polyline, Pose,
};

fn circle(r: f64, n: usize) -> Polyline {
    Polyline::new((0..n).map(|i| {
        let t = 2.0 * PI * i as f64 / n as f64;
        Point::new(r * t.cos(), r * t.sin())
    }).collect()).unwrap()
}

/// Fine-step midpoint integration of (cos θ, sin θ), independent of the
/// library's quadrature.
fn integrate_pose(start: Pose, seg: &GeomSegment, steps: usize) -> Pose {
    let h = seg.length / steps as f64;
    let theta = |s: f64| start.heading + seg.curv_start * s + 0.5 * (seg.curv_end - seg.curv_start) / seg.length * s * s;
    let (mut x, mut y) = (start.x, start.y);
    for i in 0..steps {
        let t = theta((i as f64 + 0.5) * h);
        x += h * t.cos();
        y += h * t.sin();
    }
    Pose::new(x, y, theta(seg.length))
}

#[test]
fn circle_curvature_is_inverse_radius() {
    let p = circle(10.0, 256);
    let prof = compute_polyline_curvature(&p, 1.0).unwrap();
    let n = prof.kappa.len();
    for k in &prof.kappa[2..n - 2] {
        assert!((k - 0.1).abs() < 0.001, "{k}");
    }
}

#[test]
fn straight_line_has_zero_curvature() {
    let p = Polyline::new((0..50).map(|i| Point::new(i as f64 * 0.7, i as f64 * 0.3)).collect()).unwrap();
    let prof = compute_polyline_curvature(&p, 1.0).unwrap();
    assert!(prof.max_abs() <= 1e-12, "{}", prof.max_abs());
}

#[test]
fn clothoid_curvature_matches_linear_profile() {
    let seg = GeomSegment::spiral(40.0, 0.0, 0.08);
    let start = Pose::new(3.0, -2.0, 0.4);
    let pts: Vec<Point> = (0..=400).map(|i| segment_pose_at(start, &seg, 0.1 * i as f64).position()).collect();
    let prof = compute_polyline_curvature(&Polyline::new(pts).unwrap(), 0.5).unwrap();
    let worst = prof.s.iter().zip(&prof.kappa).map(|(s, k)| (k - seg.curvature_at(*s)).abs()).fold(0.0, f64::max);
    assert!(worst < 0.005, "{worst}");
}

#[test]
fn resampling_keeps_endpoints_and_spacing() {
    let p = circle(10.0, 64);
    let r = resample(&p, 0.5).unwrap();
    assert_eq!(r.first(), p.first());
    assert_eq!(r.last(), p.last());
    for w in r.points().windows(2).take(r.len() - 2) {
        assert!((w[0].distance(w[1]) - 0.5).abs() < 0.01);
    }
}

#[test]
fn quarter_arc_endpoint() {
    // R = 20, counterclockwise from the origin heading east.
    let seg = GeomSegment::arc(10.0 * PI, 0.05);
    let end = segment_endpoint(Pose::new(0.0, 0.0, 0.0), &seg);
    assert!((end.x - 20.0).abs() < 1e-12 && (end.y - 20.0).abs() < 1e-12);
    assert!((end.heading - PI / 2.0).abs() < 1e-15);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn spiral_arc_spiral_heading_closure(k in -0.3f64..0.3, ls1 in 0.5f64..30.0, la in 0.0f64..40.0, ls2 in 0.5f64..30.0) {
        prop_assume!(k.abs() > 1e-6);
        let mut chain = vec![GeomSegment::spiral(ls1, 0.0, k)];
        if la > 0.0 {
            chain.push(GeomSegment::arc(la, k));
        }
        chain.push(GeomSegment::spiral(ls2, k, 0.0));
        let closed_form = k / 2.0 * ls1 + k * la + k / 2.0 * ls2;
        prop_assert!((heading_change(&chain) - closed_form).abs() <= 1e-12);
        // Simpson's rule is exact for piecewise-linear κ on each piece.
        let numeric: f64 = chain.iter().map(|s| s.length / 6.0 * (s.curv_start + 4.0 * s.curvature_at(s.length / 2.0) + s.curv_end)).sum();
        prop_assert!((heading_change(&chain) - numeric).abs() <= 1e-9);
    }

    #[test]
    fn spiral_endpoint_matches_fine_integration(k0 in -0.2f64..0.2, k1 in -0.2f64..0.2, len in 1.0f64..60.0, h in -PI..PI) {
        let seg = GeomSegment::spiral(len, k0, k1);
        let start = Pose::new(1.0, 2.0, h);
        let got = segment_endpoint(start, &seg);
        let want = integrate_pose(start, &seg, 20_000);
        prop_assert!(got.position().distance(want.position()) < 1e-5);
        prop_assert!(normalize_angle(got.heading - want.heading).abs() < 1e-12);
    }

    #[test]
    fn chain_poses_are_consistent(k in -0.2f64..0.2, a in 1.0f64..20.0, b in 1.0f64..20.0) {
        let segs = [GeomSegment::line(a), GeomSegment::spiral(b, 0.0, k), GeomSegment::arc(a, k), GeomSegment::spiral(b, k, 0.0)];
        let poses = chain_poses(Pose::new(0.0, 0.0, 0.3), &segs);
        prop_assert_eq!(poses.len(), segs.len() + 1);
        for (i, s) in segs.iter().enumerate() {
            let e = segment_endpoint(poses[i], s);
            prop_assert!(e.position().distance(poses[i + 1].position()) < 1e-12);
        }
        let total = poses.last().unwrap().heading - poses[0].heading;
        prop_assert!(normalize_angle(total - heading_change(&segs)).abs() < 1e-12);
    }

    #[test]
    fn reversed_segment_returns_to_start(k0 in -0.2f64..0.2, k1 in -0.2f64..0.2, len in 1.0f64..40.0) {
        let seg = GeomSegment::spiral(len, k0, k1);
        let start = Pose::new(0.0, 0.0, 0.0);
        let end = segment_endpoint(start, &seg);
        let back = segment_endpoint(Pose::new(end.x, end.y, end.heading + PI), &seg.reversed());
        prop_assert!(back.position().distance(start.position()) < 1e-9);
    }
}
