use std::f64::consts::FRAC_PI_2;

use sngbench::geometry::{Point2, Pose};
use sngbench::map::*;
use sngbench::navigation::*;
use sngbench::planners::*;
use sngbench::sim::{open_loop_plans, run_episode, EgoState, EpisodeConfig, NavVariant};

const V_MAX: f64 = 15.0;

fn arms() -> Vec<(PlannerKind, NavVariant)> {
    vec![
        (PlannerKind::Expert, NavVariant::NoNav),
        (PlannerKind::Command, NavVariant::NoNav),
        (
            PlannerKind::Command,
            NavVariant::command(CommandCorruption::Original),
        ),
        (PlannerKind::Sng, NavVariant::sng(SamplingConfig::SPARSE)),
        (PlannerKind::Sng, NavVariant::sng(SamplingConfig::DENSE)),
    ]
}

#[test]
fn every_plan_meets_trajectory_invariants() {
    for id in bundled_ids() {
        let s = bundled(id).unwrap().scenario;
        let expert = plan_expert(&s).unwrap();
        for (kind, nav) in arms() {
            let planner = sngbench::harness::make_planner(kind, &s).unwrap();
            let cfg = EpisodeConfig {
                nav,
                seed: 5,
                ..EpisodeConfig::default()
            };
            for sample in open_loop_plans(&s, planner.as_ref(), &cfg, &expert, 1.0).unwrap() {
                let Ok(plan) = sample.plan else { continue };
                if let Err(e) = plan.check(V_MAX) {
                    panic!("{id} {kind} {} at {}: {e}", nav.describe(), sample.t);
                }
                assert_eq!(plan.horizon_points(), DEFAULT_HORIZON_POINTS);
            }
        }
    }
}

#[test]
fn expert_slows_to_curvature_speed() {
    let sweep = FRAC_PI_2;
    let s = make_curve_scenario("quarter_r20", 20.0, sweep, StraightTraffic::Empty)
        .unwrap()
        .scenario;
    let center = Point2::new(40.0, 20.0);
    let expert = plan_expert(&s).unwrap();
    let mut checked = 0;
    for (tp, v) in expert.poses.iter().zip(&expert.speeds) {
        let progress = tp.pose.heading / sweep;
        if !(0.4..=0.6).contains(&progress) {
            continue;
        }
        let r = tp.pose.position.dist(center);
        let expected = (3.0 * r).sqrt();
        assert!(
            (v - expected).abs() / expected < 0.05,
            "v {v} vs {expected} at r {r}"
        );
        checked += 1;
    }
    assert!(checked > 3);
}

#[test]
fn expert_keeps_the_limit_on_a_straight_road() {
    let s = bundled("straight_empty").unwrap().scenario;
    let expert = plan_expert(&s).unwrap();
    let limit = s.graph.edges().next().unwrap().speed_limit;
    let cruising: Vec<f64> = expert.speeds[20..expert.speeds.len() / 2].to_vec();
    assert!(
        cruising.iter().all(|v| (v - limit).abs() < 0.05),
        "{cruising:?}"
    );
}

fn straight_obs<'a>(s: &'a Scenario, nav: NavInput) -> Observation<'a> {
    Observation {
        t: 0.0,
        ego: EgoState {
            v: 10.0,
            ..EgoState::at_rest(s.ego_start)
        },
        agents: Vec::new(),
        corridor: &s.corridor,
        graph: &s.graph,
        speed_limit: 10.0,
        nav,
        side_command: None,
    }
}

#[test]
fn noiseless_straight_path_stays_on_axis() {
    let s = bundled("straight_empty").unwrap().scenario;
    let route = plan_global_route(&s.graph, &s.route_request.0, &s.route_request.1).unwrap();
    let sng = build_sng(
        &route,
        &s.ego_start,
        10.0,
        &s.graph,
        SamplingConfig::MEDIUM,
        None,
    )
    .unwrap();
    let obs = straight_obs(
        &s,
        NavInput::Sng(SngView {
            path: Some(sng.path),
            tbt: Some(sng.tbt),
        }),
    );
    let plan = SngPlanner::default().plan(&obs).unwrap();
    for w in &plan.waypoints {
        assert!(w.y.abs() < 0.1, "{w:?}");
    }
}

#[test]
fn sng_plans_ignore_the_command_stream() {
    let mut command_changed = false;
    for g in turn_suite() {
        let s = &g.scenario;
        let expert = plan_expert(s).unwrap();
        let route = plan_global_route(&s.graph, &s.route_request.0, &s.route_request.1).unwrap();
        for (i, tp) in expert.poses.iter().enumerate().step_by(20) {
            let v = expert.speeds[i];
            let Ok(sng) = build_sng(
                &route,
                &tp.pose,
                v,
                &s.graph,
                SamplingConfig::MEDIUM,
                Some(&NoiseConfig::with_seed(1)),
            ) else {
                continue;
            };
            let obs = |nav, side_command| Observation {
                t: tp.t,
                ego: EgoState {
                    v,
                    ..EgoState::at_rest(tp.pose)
                },
                agents: Vec::new(),
                corridor: &s.corridor,
                graph: &s.graph,
                speed_limit: 10.0,
                nav,
                side_command,
            };
            let view = SngView {
                path: Some(sng.path.clone()),
                tbt: Some(sng.tbt),
            };
            let reference = SngPlanner::default()
                .plan(&obs(NavInput::Sng(view.clone()), None))
                .unwrap();
            let cmd = annotate_driving_command(
                &expert.poses,
                tp.t,
                DEFAULT_HORIZON_S,
                DEFAULT_LATERAL_THRESHOLD,
            );
            let mut command_plans = Vec::new();
            for mode in CommandCorruption::ALL {
                let injected = corrupt_command(cmd, mode, i as u64);
                let plan = SngPlanner::default()
                    .plan(&obs(NavInput::Sng(view.clone()), Some(injected)))
                    .unwrap();
                assert_eq!(plan, reference);
                if let Ok(p) =
                    CommandPlanner::default().plan(&obs(NavInput::Command(injected), None))
                {
                    command_plans.push(p.waypoints);
                }
            }
            command_changed |= command_plans.windows(2).any(|w| w[0] != w[1]);
        }
    }
    assert!(command_changed, "corruptions never changed a command plan");
}

fn mirror_point(p: Point2) -> Point2 {
    Point2::new(p.x, -p.y)
}

#[test]
fn sng_plans_mirror_with_their_inputs() {
    for id in [
        "cross_left",
        "bvr_lane_change_100",
        "curve_left_gentle",
        "roundabout_n4_exit0_r15",
    ] {
        let s = bundled(id).unwrap().scenario;
        let route = plan_global_route(&s.graph, &s.route_request.0, &s.route_request.1).unwrap();
        let expert = plan_expert(&s).unwrap();
        let nodes = s
            .graph
            .nodes()
            .iter()
            .map(|(k, p)| (k.clone(), mirror_point(*p)))
            .collect();
        let edges = s
            .graph
            .edges()
            .map(|e| Edge {
                centerline: e.centerline.map_points(mirror_point).unwrap(),
                ..e.clone()
            })
            .collect();
        let mgraph = RoadGraph::new(nodes, edges).unwrap();
        let mcorridor: Vec<Vec<Point2>> = s
            .corridor
            .iter()
            .map(|poly| poly.iter().rev().map(|p| mirror_point(*p)).collect())
            .collect();
        for (i, tp) in expert.poses.iter().enumerate().step_by(25) {
            let v = expert.speeds[i];
            let Ok(sng) = build_sng(
                &route,
                &tp.pose,
                v,
                &s.graph,
                SamplingConfig::MEDIUM,
                Some(&NoiseConfig::with_seed(3)),
            ) else {
                continue;
            };
            let mtbt = TbtInfo {
                current: sng.tbt.current.mirrored(),
                future: sng.tbt.future.mirrored(),
                supplementary: match sng.tbt.supplementary {
                    SupplementaryAction::EnterLeftTurnLane => {
                        SupplementaryAction::EnterRightTurnLane
                    }
                    SupplementaryAction::EnterRightTurnLane => {
                        SupplementaryAction::EnterLeftTurnLane
                    }
                    other => other,
                },
                ..sng.tbt
            };
            let mpath = NavigationPath {
                points: sng.path.points.iter().map(|p| mirror_point(*p)).collect(),
                ..sng.path.clone()
            };
            let ego = EgoState {
                v,
                ..EgoState::at_rest(tp.pose)
            };
            let mego = EgoState {
                v,
                ..EgoState::at_rest(Pose::new(mirror_point(tp.pose.position), -tp.pose.heading))
            };
            let plan = SngPlanner::default()
                .plan(&Observation {
                    t: tp.t,
                    ego,
                    agents: Vec::new(),
                    corridor: &s.corridor,
                    graph: &s.graph,
                    speed_limit: 10.0,
                    nav: NavInput::Sng(SngView {
                        path: Some(sng.path.clone()),
                        tbt: Some(sng.tbt),
                    }),
                    side_command: None,
                })
                .unwrap();
            let mplan = SngPlanner::default()
                .plan(&Observation {
                    t: tp.t,
                    ego: mego,
                    agents: Vec::new(),
                    corridor: &mcorridor,
                    graph: &mgraph,
                    speed_limit: 10.0,
                    nav: NavInput::Sng(SngView {
                        path: Some(mpath),
                        tbt: Some(mtbt),
                    }),
                    side_command: None,
                })
                .unwrap();
            for (a, b) in plan.waypoints.iter().zip(&mplan.waypoints) {
                assert!(
                    mirror_point(*a).dist(*b) < 1e-6,
                    "{id} at {}: {a:?} vs {b:?}",
                    tp.t
                );
            }
        }
    }
}

#[test]
fn sng_episodes_ignore_an_injected_command() {
    for id in ["roundabout_n4_exit1_r15", "cross_left", "straight_lead"] {
        let s = bundled(id).unwrap().scenario;
        let base = EpisodeConfig {
            nav: NavVariant::sng(SamplingConfig::MEDIUM),
            seed: 5,
            ..EpisodeConfig::default()
        };
        let reference = run_episode(&s, &SngPlanner::default(), &base)
            .unwrap()
            .to_jsonl();
        for mode in CommandCorruption::ALL {
            let cfg = EpisodeConfig {
                side_command: Some(mode),
                ..base.clone()
            };
            let log = run_episode(&s, &SngPlanner::default(), &cfg).unwrap();
            assert_eq!(log.to_jsonl(), reference, "{id} under {mode}");
        }
    }
}
