use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sngbench::geometry::*;

const R: f64 = 40.0;

fn quarter_circle(segments: usize) -> Polyline {
    let pts = (0..=segments)
        .map(|i| {
            let a = -FRAC_PI_2 + FRAC_PI_2 * i as f64 / segments as f64;
            Point2::new(R * a.cos(), R + R * a.sin())
        })
        .collect();
    Polyline::new(pts).unwrap()
}

/// Walks a 10^5-segment subdivision accumulating chord lengths.
fn dense_point_at(s: f64) -> Point2 {
    let n = 100_000;
    let at = |i: usize| {
        let a = -FRAC_PI_2 + FRAC_PI_2 * i as f64 / n as f64;
        Point2::new(R * a.cos(), R + R * a.sin())
    };
    let mut acc = 0.0;
    for i in 0..n {
        let (a, b) = (at(i), at(i + 1));
        let d = a.dist(b);
        if acc + d >= s {
            return a.lerp(b, (s - acc) / d);
        }
        acc += d;
    }
    at(n)
}

#[test]
fn quarter_circle_resampling_matches_dense_walk() {
    let line = quarter_circle(2000);
    let pts = resample_by_spacing(&line, 10.0, 4).unwrap();
    for (k, p) in pts.iter().enumerate() {
        let oracle = dense_point_at(10.0 * (k + 1) as f64);
        assert!(p.dist(oracle) < 1e-3, "point {k}: {p:?} vs {oracle:?}");
    }
}

#[test]
fn quarter_circle_midpoint_heading() {
    let line = quarter_circle(2000);
    let h = line.heading_at(line.length() / 2.0).unwrap();
    assert!((h - FRAC_PI_4).abs() < 1e-3, "{h}");
    // dense chord direction around the midpoint
    let s = R * FRAC_PI_4;
    let d = dense_point_at(s + 1e-3) - dense_point_at(s - 1e-3);
    assert!((d.angle() - h).abs() < 1e-3);
}

fn sampled_intersect(a: &OrientedBox, b: &OrientedBox, n: usize) -> bool {
    let side = (n as f64).sqrt() as usize;
    let samples = |bx: &OrientedBox| -> Vec<Point2> {
        let pose = bx.pose();
        let mut out = Vec::with_capacity(side * side);
        for i in 0..side {
            for j in 0..side {
                let u = -bx.half_length + 2.0 * bx.half_length * i as f64 / (side - 1) as f64;
                let v = -bx.half_width + 2.0 * bx.half_width * j as f64 / (side - 1) as f64;
                out.push(pose.to_world(Point2::new(u, v)));
            }
        }
        out
    };
    samples(a).iter().any(|p| b.contains(*p)) || samples(b).iter().any(|p| a.contains(*p))
}

#[test]
fn rotated_box_overlap_matches_sampling() {
    let a = OrientedBox::new(Point2::ORIGIN, 0.0, 1.0, 0.5);
    let b = OrientedBox::new(Point2::new(1.9, 0.0), FRAC_PI_4, 1.0, 0.5);
    assert_eq!(obb_intersect(&a, &b), sampled_intersect(&a, &b, 10_000));
    assert!(obb_intersect(&a, &b));
    let far = OrientedBox::new(Point2::new(3.2, 0.0), FRAC_PI_4, 1.0, 0.5);
    assert_eq!(obb_intersect(&a, &far), sampled_intersect(&a, &far, 10_000));
}

fn winding_number(p: Point2, poly: &[Point2]) -> i32 {
    let mut w = 0;
    for i in 0..poly.len() {
        let (a, b) = (poly[i], poly[(i + 1) % poly.len()]);
        let side = (b - a).cross(p - a);
        if a.y <= p.y {
            if b.y > p.y && side > 0.0 {
                w += 1;
            }
        } else if b.y <= p.y && side < 0.0 {
            w -= 1;
        }
    }
    w
}

#[test]
fn point_in_polygon_agrees_with_winding_number() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut checked = 0;
    while checked < 10_000 {
        let n = rng.random_range(3..9);
        let mut angles: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..2.0 * PI)).collect();
        angles.sort_by(f64::total_cmp);
        let c = Point2::new(rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0));
        let r = rng.random_range(1.0..4.0);
        let poly: Vec<Point2> = angles
            .iter()
            .map(|a| c + Point2::from_polar(r, *a))
            .collect();
        if polygon_area(&poly).abs() < 1e-3 {
            continue;
        }
        let p = Point2::new(rng.random_range(-10.0..10.0), rng.random_range(-10.0..10.0));
        // skip near-boundary draws where conventions legitimately differ
        let near_edge = (0..poly.len()).any(|i| {
            let l = Polyline::new(vec![poly[i], poly[(i + 1) % poly.len()]]).unwrap();
            l.project(p).distance < 1e-9
        });
        if near_edge {
            continue;
        }
        assert_eq!(
            point_in_polygon(p, &poly).unwrap(),
            winding_number(p, &poly) != 0,
            "{p:?} in {poly:?}"
        );
        checked += 1;
    }
}

fn arb_polyline() -> impl Strategy<Value = Polyline> {
    prop::collection::vec((-50.0..50.0f64, -50.0..50.0f64), 2..12).prop_filter_map(
        "degenerate",
        |pts| {
            Polyline::new_dedup(
                pts.into_iter().map(|(x, y)| Point2::new(x, y)).collect(),
                0.5,
            )
            .ok()
        },
    )
}

fn arb_pose() -> impl Strategy<Value = Pose> {
    (-100.0..100.0f64, -100.0..100.0f64, -PI..PI).prop_map(|(x, y, h)| Pose::xyh(x, y, h))
}

fn arb_points() -> impl Strategy<Value = Vec<Point2>> {
    prop::collection::vec(
        (-100.0..100.0f64, -100.0..100.0f64).prop_map(|(x, y)| Point2::new(x, y)),
        1..20,
    )
}

proptest! {
    #[test]
    fn resampled_points_are_exactly_spaced(line in arb_polyline(), spacing in 0.2..10.0f64, count in 1usize..10) {
        prop_assume!(line.length() >= spacing * count as f64);
        let pts = resample_by_spacing(&line, spacing, count).unwrap();
        prop_assert_eq!(pts.len(), count);
        for (k, p) in pts.iter().enumerate() {
            let target = spacing * (k + 1) as f64;
            let proj = line.project_in_window(*p, target - 1e-6, target + 1e-6).unwrap();
            prop_assert!(proj.distance < 1e-6);
            prop_assert!((proj.s - target).abs() < 1e-6);
        }
    }

    #[test]
    fn cumulative_arclength_matches_segments(line in arb_polyline()) {
        let pts = line.points();
        let cum = line.cum_arclen();
        for i in 0..pts.len() - 1 {
            prop_assert!((cum[i + 1] - cum[i] - pts[i].dist(pts[i + 1])).abs() < 1e-9);
        }
    }

    #[test]
    fn ego_frame_round_trip(ego in arb_pose(), pts in arb_points()) {
        let back = from_ego_frame(&ego, &to_ego_frame(&ego, &pts));
        for (a, b) in pts.iter().zip(&back) {
            prop_assert!(a.dist(*b) < 1e-9);
        }
    }

    #[test]
    fn ego_frame_is_rigid(ego in arb_pose(), pts in arb_points()) {
        let local = to_ego_frame(&ego, &pts);
        for i in 0..pts.len() {
            for j in 0..pts.len() {
                prop_assert!((pts[i].dist(pts[j]) - local[i].dist(local[j])).abs() < 1e-9);
            }
        }
        let origin = to_ego_frame(&ego, &[ego.position])[0];
        prop_assert!(origin.norm() < 1e-9);
    }

    #[test]
    fn box_overlap_is_symmetric(a in arb_pose(), b in arb_pose(), l1 in 0.5..6.0f64, w1 in 0.5..3.0f64, l2 in 0.5..6.0f64, w2 in 0.5..3.0f64) {
        let scale = |p: Pose| Pose::new(p.position * 0.05, p.heading);
        let (ba, bb) = (OrientedBox::at_pose(&scale(a), l1, w1), OrientedBox::at_pose(&scale(b), l2, w2));
        prop_assert_eq!(obb_intersect(&ba, &bb), obb_intersect(&bb, &ba));
    }

    #[test]
    fn headings_stay_normalized(a in -1e4..1e4f64) {
        let n = normalize_angle(a);
        prop_assert!(n > -PI && n <= PI);
        prop_assert!((a.cos() - n.cos()).abs() < 1e-9 && (a.sin() - n.sin()).abs() < 1e-9);
    }
}
