use std::f64::consts::PI;

use sngbench::geometry::{normalize_angle, OrientedBox, Point2, Pose};
use sngbench::map::{bundled, Keyframe, ScriptedAgent};
use sngbench::navigation::CommandCorruption;
use sngbench::planners::{CommandPlanner, ExpertPlanner};
use sngbench::sim::*;

/// Largest deviation of the integrated path from the analytic turning
/// circle, whose center sits at (0, R) for a start at the origin heading +x.
fn circle_error(dt: f64, duration: f64) -> (f64, f64) {
    let params = BicycleParams::default();
    let steer: f64 = 0.2;
    let radius = params.wheelbase / steer.tan();
    let center = Point2::new(0.0, radius);
    let mut s = EgoState {
        v: 5.0,
        ..EgoState::at_rest(Pose::xyh(0.0, 0.0, 0.0))
    };
    let u = ControlInput { accel: 0.0, steer };
    let mut worst: f64 = 0.0;
    for _ in 0..(duration / dt).round() as usize {
        s = step_bicycle(&s, u, &params, dt);
        worst = worst.max((s.pose.position.dist(center) - radius).abs());
    }
    (worst, radius)
}

#[test]
fn constant_steer_traces_the_turning_circle() {
    let (err, radius) = circle_error(0.01, 100.0);
    assert!((radius - 13.81).abs() < 0.01);
    assert!(err / radius < 0.01, "relative error {}", err / radius);
}

#[test]
fn halving_the_step_halves_the_error() {
    let (coarse, _) = circle_error(0.02, 100.0);
    let (fine, _) = circle_error(0.01, 100.0);
    let factor = coarse / fine;
    assert!((1.7..=2.3).contains(&factor), "factor {factor}");
}

#[test]
fn coasting_straight_is_exact() {
    let params = BicycleParams::default();
    let mut s = EgoState {
        v: 7.25,
        ..EgoState::at_rest(Pose::xyh(3.0, -2.0, 0.7))
    };
    for _ in 0..5000 {
        s = step_bicycle(&s, ControlInput::default(), &params, 0.1);
        assert_eq!(s.v, 7.25);
        assert_eq!(s.pose.heading, 0.7);
    }
}

#[test]
fn heading_interpolation_across_the_wrap() {
    let agent = ScriptedAgent {
        id: "a".into(),
        length: 4.6,
        width: 1.9,
        keyframes: vec![
            Keyframe {
                t: 0.0,
                pose: Pose::xyh(0.0, 0.0, 170f64.to_radians()),
                speed: 1.0,
            },
            Keyframe {
                t: 2.0,
                pose: Pose::xyh(-2.0, 0.0, -170f64.to_radians()),
                speed: 1.0,
            },
        ],
    };
    for k in 0..=20 {
        let t = k as f64 * 0.1;
        let (pose, _) = agent_pose_at(&agent, t);
        // unwrap the end heading next to the start, then interpolate
        let (h0, mut h1) = (170f64.to_radians(), -170f64.to_radians());
        while h1 - h0 > PI {
            h1 -= 2.0 * PI;
        }
        while h1 - h0 < -PI {
            h1 += 2.0 * PI;
        }
        let oracle = h0 + (h1 - h0) * t / 2.0;
        assert!(
            normalize_angle(pose.heading - oracle).abs() < 1e-12,
            "t={t}"
        );
    }
}

/// Contact counts as front-half when most sampled overlap lies ahead of the
/// ego's rear axle midpoint.
fn front_half_oracle(ego: &Pose, params: &BicycleParams, other: &OrientedBox) -> bool {
    let ego_box = params.footprint(ego);
    let n = 200;
    let (mut sum, mut count) = (0.0, 0);
    for i in 0..n {
        for j in 0..n {
            let local = Point2::new(
                -ego_box.half_length + 2.0 * ego_box.half_length * i as f64 / (n - 1) as f64,
                -ego_box.half_width + 2.0 * ego_box.half_width * j as f64 / (n - 1) as f64,
            );
            if other.contains(ego.to_world(local)) {
                sum += local.x;
                count += 1;
            }
        }
    }
    count > 0 && sum / count as f64 >= 0.0
}

#[test]
fn fault_follows_motion_and_contact_side() {
    let params = BicycleParams::default();
    let ego_pose = Pose::xyh(0.0, 0.0, 0.0);
    let glancing_front = OrientedBox::new(Point2::new(1.5, 1.8), 0.1, 2.3, 0.95);
    let glancing_rear = OrientedBox::new(Point2::new(-1.8, 1.8), -0.1, 2.3, 0.95);
    let moving = EgoState {
        v: 5.0,
        ..EgoState::at_rest(ego_pose)
    };
    let stopped = EgoState::at_rest(ego_pose);
    assert!(at_fault(&moving, &params, &glancing_front));
    assert!(at_fault(&moving, &params, &glancing_rear));
    for other in [glancing_front, glancing_rear] {
        assert_eq!(
            at_fault(&stopped, &params, &other),
            front_half_oracle(&ego_pose, &params, &other)
        );
    }
    assert!(at_fault(&stopped, &params, &glancing_front));
    assert!(!at_fault(&stopped, &params, &glancing_rear));
}

#[test]
fn expert_on_empty_road_completes_cleanly() {
    let s = bundled("straight_empty").unwrap().scenario;
    let log = run_episode(
        &s,
        &ExpertPlanner::new(&s).unwrap(),
        &EpisodeConfig::default(),
    )
    .unwrap();
    assert_eq!(log.status, EpisodeStatus::Completed);
    assert!(log
        .steps
        .iter()
        .all(|r| r.collisions.is_empty() && !r.off_road));
    for (k, r) in log.steps.iter().enumerate() {
        assert_eq!(r.t, k as f64 * s.dt);
    }
}

fn parked_in_lane() -> sngbench::map::Scenario {
    let mut s = bundled("straight_empty").unwrap().scenario;
    s.id = "parked_in_lane".into();
    let lane_y = s.ego_start.position.y;
    s.agents.push(ScriptedAgent::parked(
        "blocker",
        Pose::xyh(60.0, lane_y, 0.0),
        4.6,
        1.9,
    ));
    s
}

#[test]
fn command_planner_hits_a_parked_car() {
    let s = parked_in_lane();
    let cfg = EpisodeConfig {
        nav: NavVariant::command(CommandCorruption::Original),
        ..EpisodeConfig::default()
    };
    let log = run_episode(&s, &CommandPlanner::default(), &cfg).unwrap();
    assert_eq!(log.status, EpisodeStatus::CollisionStop);
    let hit = log.steps.last().unwrap();
    assert_eq!(hit.collisions.len(), 1);
    assert!(hit.collisions[0].at_fault);
}

#[test]
fn episodes_are_reproducible() {
    let s = bundled("roundabout_n4_exit3_r15").unwrap().scenario;
    let cfg = EpisodeConfig {
        nav: NavVariant::sng(sngbench::navigation::SamplingConfig::MEDIUM),
        seed: 11,
        ..EpisodeConfig::default()
    };
    let planner = sngbench::planners::SngPlanner::default();
    let a = run_episode(&s, &planner, &cfg).unwrap();
    let b = run_episode(&s, &planner, &cfg).unwrap();
    assert_eq!(a.to_jsonl(), b.to_jsonl());
}

#[test]
fn timeout_logs_every_step() {
    let mut s = bundled("straight_empty").unwrap().scenario;
    s.duration = 3.05;
    let log = run_episode(
        &s,
        &ExpertPlanner::new(&s).unwrap(),
        &EpisodeConfig::default(),
    )
    .unwrap();
    assert_eq!(log.status, EpisodeStatus::Timeout);
    assert_eq!(log.steps.len(), (s.duration / s.dt).ceil() as usize);
}
