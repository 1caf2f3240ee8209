//! Open-loop displacement error, the PDMS sub-scores with their aggregate,
//! and route-level closed-loop scores.

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{obb_intersect, OrientedBox, Point2, Pose};
use crate::map::{plan_global_route, GlobalRoute, ProgressTracker, Scenario};
use crate::navigation::ON_ROUTE_TOLERANCE;
use crate::planners::{ExpertTrajectory, PlannedTrajectory, Planner, WAYPOINT_DT};
use crate::sim::{
    open_loop_plans, run_episode_with_expert, EpisodeConfig, EpisodeLog, EpisodeStatus, NavVariant,
    SimError, StepRecord,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricError {
    #[error("expert covers {available} waypoints, {needed} needed")]
    HorizonUncovered { needed: usize, available: usize },
    #[error("episode log has no steps")]
    EmptyLog,
    #[error(transparent)]
    Sim(#[from] SimError),
}

/// Comfort envelope. Accelerations in m/s², jerk in m/s³.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComfortBounds {
    pub max_lon_accel: f64,
    pub max_lat_accel: f64,
    pub max_lon_jerk: f64,
}

impl Default for ComfortBounds {
    fn default() -> Self {
        ComfortBounds {
            max_lon_accel: 4.0,
            max_lat_accel: 4.9,
            max_lon_jerk: 8.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SubScores {
    pub nc: f64,
    pub dac: f64,
    pub ttc: f64,
    pub comf: f64,
    pub ep: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PdmsReport {
    pub sub: SubScores,
    pub pdms: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClosedLoopReport {
    pub driving_score: f64,
    pub success: bool,
    pub efficiency: f64,
    pub comfortness: f64,
    pub route_completion: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OpenLoopReport {
    pub avg_l2: f64,
    pub avg_l1: f64,
    pub horizon: f64,
}

/// Mean L2 and L1 distances between predicted and expert waypoints up to
/// `horizon` seconds after `t0`, both in the expert frame at `t0`.
pub fn avg_displacement(
    pred: &PlannedTrajectory,
    gt: &ExpertTrajectory,
    t0: f64,
    horizon: f64,
) -> Result<OpenLoopReport, MetricError> {
    let n = (horizon / WAYPOINT_DT).round() as usize;
    let truth = gt
        .waypoints_at(t0, n)
        .ok_or(MetricError::HorizonUncovered {
            needed: n,
            available: ((gt.duration() - t0) / WAYPOINT_DT).floor().max(0.0) as usize,
        })?;
    displacement(&pred.waypoints, &truth, horizon)
}

/// Same as [`avg_displacement`] on raw aligned waypoint lists whose index 0
/// is the anchor.
pub fn displacement(
    pred: &[Point2],
    truth: &[Point2],
    horizon: f64,
) -> Result<OpenLoopReport, MetricError> {
    let n = (horizon / WAYPOINT_DT).round() as usize;
    if n == 0 || pred.len() <= n || truth.len() <= n {
        return Err(MetricError::HorizonUncovered {
            needed: n,
            available: pred.len().min(truth.len()).saturating_sub(1),
        });
    }
    let (mut l2, mut l1) = (0.0, 0.0);
    for k in 1..=n {
        let d = pred[k] - truth[k];
        l2 += d.norm();
        l1 += d.x.abs() + d.y.abs();
    }
    Ok(OpenLoopReport {
        avg_l2: l2 / n as f64,
        avg_l1: l1 / n as f64,
        horizon,
    })
}

pub fn score_nc(log: &EpisodeLog) -> f64 {
    let hit = log
        .steps
        .iter()
        .flat_map(|r| &r.collisions)
        .any(|c| c.at_fault);
    if hit {
        0.0
    } else {
        1.0
    }
}

pub fn score_dac(log: &EpisodeLog) -> f64 {
    if log.steps.iter().any(|r| r.off_road) {
        0.0
    } else {
        1.0
    }
}

/// Projection step and horizon of the TTC check, seconds.
pub const TTC_STEP: f64 = 0.1;
pub const TTC_HORIZON: f64 = 4.0;
/// Ego speed below which TTC violations are ignored, m/s.
pub const TTC_MIN_SPEED: f64 = 0.5;

fn advance(pose: &Pose, speed: f64, tau: f64) -> Pose {
    Pose::new(pose.position + pose.forward() * (speed * tau), pose.heading)
}

/// First time at which constant-velocity projections of the ego and any
/// agent overlap, checked at multiples of `step` up to `horizon`.
pub fn time_to_collision(
    record: &StepRecord,
    length: f64,
    width: f64,
    step: f64,
    horizon: f64,
) -> Option<f64> {
    let n = (horizon / step).round() as usize;
    (0..=n).map(|k| k as f64 * step).find(|&tau| {
        let ego =
            OrientedBox::at_pose(&advance(&record.ego.pose, record.ego.v, tau), length, width);
        record.agents.iter().any(|a| {
            let other = OrientedBox::at_pose(&advance(&a.pose, a.speed, tau), a.length, a.width);
            obb_intersect(&ego, &other)
        })
    })
}

pub fn score_ttc(log: &EpisodeLog, threshold: f64) -> f64 {
    let (l, w) = (log.params.length, log.params.width);
    let violated = log
        .steps
        .iter()
        .filter(|r| r.ego.v > TTC_MIN_SPEED)
        .any(|r| {
            time_to_collision(r, l, w, TTC_STEP, TTC_HORIZON).is_some_and(|ttc| ttc < threshold)
        });
    if violated {
        0.0
    } else {
        1.0
    }
}

/// Whether step `i` lies inside the comfort envelope; jerk is the finite
/// difference of longitudinal acceleration to the previous step.
pub fn step_comfortable(log: &EpisodeLog, i: usize, bounds: &ComfortBounds) -> bool {
    let (lon, lat) = log.steps[i].ego.accel;
    let jerk = if i == 0 {
        0.0
    } else {
        (lon - log.steps[i - 1].ego.accel.0) / log.dt
    };
    lon.abs() <= bounds.max_lon_accel
        && lat.abs() <= bounds.max_lat_accel
        && jerk.abs() <= bounds.max_lon_jerk
}

pub fn score_comfort(log: &EpisodeLog, bounds: &ComfortBounds) -> f64 {
    if (0..log.steps.len()).all(|i| step_comfortable(log, i, bounds)) {
        1.0
    } else {
        0.0
    }
}

/// Arc-length progress along `route` from the first to the last pose.
fn progress<'p>(route: &GlobalRoute, poses: impl IntoIterator<Item = &'p Pose>) -> f64 {
    let mut it = poses.into_iter();
    let Some(first) = it.next() else { return 0.0 };
    let mut tracker = ProgressTracker::new(route, first);
    let s0 = tracker.s();
    let mut s = s0;
    for p in it {
        s = tracker.update(p.position);
    }
    s - s0
}

/// Ego progress over the expert's progress in the same time span, clipped
/// to [0, 1].
pub fn score_ep(log: &EpisodeLog, route: &GlobalRoute, expert: &ExpertTrajectory) -> f64 {
    let Some(last) = log.steps.last() else {
        return 0.0;
    };
    let ego = progress(route, log.steps.iter().map(|r| &r.ego.pose));
    let expert_poses = expert
        .poses
        .iter()
        .take_while(|p| p.t <= last.t + 1e-9)
        .map(|p| &p.pose);
    let reference = progress(route, expert_poses);
    if reference <= 1e-9 {
        return if ego >= 0.0 { 1.0 } else { 0.0 };
    }
    (ego / reference).clamp(0.0, 1.0)
}

/// Multiplicative NC·DAC gate over a 5:2:5 weighted mean of TTC, comfort
/// and progress.
pub fn aggregate_pdms(sub: &SubScores) -> f64 {
    sub.nc * sub.dac * (5.0 * sub.ttc + 2.0 * sub.comf + 5.0 * sub.ep) / 12.0
}

pub fn pdms_report(
    log: &EpisodeLog,
    route: &GlobalRoute,
    expert: &ExpertTrajectory,
    bounds: &ComfortBounds,
) -> PdmsReport {
    let sub = SubScores {
        nc: score_nc(log),
        dac: score_dac(log),
        ttc: score_ttc(log, 1.0),
        comf: score_comfort(log, bounds),
        ep: score_ep(log, route, expert),
    };
    PdmsReport {
        sub,
        pdms: aggregate_pdms(&sub),
    }
}

/// Closed-loop penalty factors.
pub const COLLISION_PENALTY: f64 = 0.5;
pub const OFF_ROAD_PENALTY: f64 = 0.7;
pub const WRONG_EXIT_PENALTY: f64 = 0.6;
pub const SUCCESS_COMPLETION: f64 = 0.95;

/// Whether the episode ended on a road that is not part of the route.
pub fn ended_off_route(log: &EpisodeLog, route: &GlobalRoute, scenario: &Scenario) -> bool {
    let Some(last) = log.steps.last() else {
        return false;
    };
    let p = last.ego.pose;
    scenario
        .graph
        .nearest_edge(p.position, p.heading, FRAC_PI_2)
        .filter(|(_, pr)| pr.distance <= 8.0)
        .is_some_and(|(e, _)| !route.edge_ids.contains(&e.id))
}

pub fn closed_loop_scores(
    log: &EpisodeLog,
    route: &GlobalRoute,
    scenario: &Scenario,
    bounds: &ComfortBounds,
) -> ClosedLoopReport {
    if log.steps.is_empty() {
        return ClosedLoopReport {
            driving_score: 0.0,
            success: false,
            efficiency: 0.0,
            comfortness: 100.0,
            route_completion: 0.0,
        };
    }
    let start = ProgressTracker::new(route, &log.steps[0].ego.pose).s();
    let remaining = (route.length() - start).max(1e-9);
    let route_completion = if log.status == EpisodeStatus::Completed {
        1.0
    } else {
        (progress(route, log.steps.iter().map(|r| &r.ego.pose)) / remaining).clamp(0.0, 1.0)
    };

    let at_fault = log
        .steps
        .iter()
        .flat_map(|r| &r.collisions)
        .filter(|c| c.at_fault)
        .count();
    let off_road_runs = log
        .steps
        .iter()
        .enumerate()
        .filter(|(i, r)| r.off_road && (*i == 0 || !log.steps[i - 1].off_road))
        .count();
    let mut penalty =
        COLLISION_PENALTY.powi(at_fault as i32) * OFF_ROAD_PENALTY.powi(off_road_runs as i32);
    if ended_off_route(log, route, scenario) {
        penalty *= WRONG_EXIT_PENALTY;
    }

    let mut ratios = Vec::new();
    for r in &log.steps {
        let pr = route.centerline.project(r.ego.pose.position);
        if pr.distance > ON_ROUTE_TOLERANCE {
            continue;
        }
        let limit = scenario
            .graph
            .edge(route.edge_id_at(pr.s))
            .map_or(0.0, |e| e.speed_limit);
        if limit > 0.0 {
            ratios.push(r.ego.v / limit);
        }
    }
    let efficiency = if ratios.is_empty() {
        0.0
    } else {
        100.0 * ratios.iter().sum::<f64>() / ratios.len() as f64
    };
    let comfortable = (0..log.steps.len())
        .filter(|&i| step_comfortable(log, i, bounds))
        .count();

    ClosedLoopReport {
        driving_score: 100.0 * route_completion * penalty,
        success: route_completion >= SUCCESS_COMPLETION && at_fault == 0,
        efficiency,
        comfortness: 100.0 * comfortable as f64 / log.steps.len() as f64,
        route_completion,
    }
}

/// Open-loop query period and horizon, seconds.
pub const OPEN_LOOP_PERIOD: f64 = 1.0;
pub const OPEN_LOOP_HORIZON: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OpenSummary {
    pub avg_l1: Option<f64>,
    pub avg_l2: Option<f64>,
}

/// One row of results.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub scenario_id: String,
    pub planner: String,
    pub nav_variant: String,
    pub corruption: Option<String>,
    pub seed: u64,
    pub sub: SubScores,
    pub pdms: f64,
    pub closed: ClosedLoopReport,
    pub open: OpenSummary,
}

/// Averages open-loop errors over every query that produced a plan and is
/// covered by the expert.
pub fn open_loop_summary(
    scenario: &Scenario,
    planner: &dyn Planner,
    cfg: &EpisodeConfig,
    expert: &ExpertTrajectory,
) -> Result<OpenSummary, MetricError> {
    let samples = open_loop_plans(scenario, planner, cfg, expert, OPEN_LOOP_PERIOD)?;
    let reports: Vec<OpenLoopReport> = samples
        .iter()
        .filter_map(|s| {
            let plan = s.plan.as_ref().ok()?;
            avg_displacement(plan, expert, s.t, OPEN_LOOP_HORIZON).ok()
        })
        .collect();
    if reports.is_empty() {
        return Ok(OpenSummary {
            avg_l1: None,
            avg_l2: None,
        });
    }
    let n = reports.len() as f64;
    Ok(OpenSummary {
        avg_l1: Some(reports.iter().map(|r| r.avg_l1).sum::<f64>() / n),
        avg_l2: Some(reports.iter().map(|r| r.avg_l2).sum::<f64>() / n),
    })
}

/// Log and scores of one closed-loop run.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub log: EpisodeLog,
    pub report: MetricReport,
}

/// Runs the episode, the open-loop queries and every metric.
pub fn evaluate(
    scenario: &Scenario,
    planner: &dyn Planner,
    cfg: &EpisodeConfig,
    expert: &ExpertTrajectory,
    bounds: &ComfortBounds,
) -> Result<Evaluation, MetricError> {
    let route = plan_global_route(
        &scenario.graph,
        &scenario.route_request.0,
        &scenario.route_request.1,
    )
    .map_err(SimError::from)?;
    let log = run_episode_with_expert(scenario, planner, cfg, Some(expert))?;
    if log.steps.is_empty() {
        return Err(MetricError::EmptyLog);
    }
    let pdms = pdms_report(&log, &route, expert, bounds);
    let closed = closed_loop_scores(&log, &route, scenario, bounds);
    let open = open_loop_summary(scenario, planner, cfg, expert)?;
    let corruption = match &cfg.nav {
        NavVariant::Command { corruption, .. } => Some(corruption.to_string()),
        _ => None,
    };
    let report = MetricReport {
        scenario_id: scenario.id.clone(),
        planner: planner.name().to_string(),
        nav_variant: cfg.nav.describe(),
        corruption,
        seed: cfg.seed,
        sub: pdms.sub,
        pdms: pdms.pdms,
        closed,
        open,
    };
    Ok(Evaluation { log, report })
}
