use std::f64::consts::FRAC_PI_2;

use super::{
    speed_profile, waypoints_along, Observation, PlannedTrajectory, Planner, PlannerError,
    ProfileConfig, DEFAULT_HORIZON_POINTS, WAYPOINT_DT,
};
use crate::geometry::{interpolate_timed, to_ego_frame, Point2, Polyline, Pose, TimedPose};
use crate::map::{plan_global_route, MapError, Scenario};
use crate::sim::{run_episode, EpisodeConfig, NavVariant, SimError};

/// Distance ahead of the ego's projection where planned references rejoin
/// the lane, meters.
pub(crate) const MERGE_DISTANCE: f64 = 4.0;
/// Length of reference handed to the speed profile, meters.
pub(crate) const REFERENCE_LENGTH: f64 = 90.0;

/// Builds the ego-frame reference: the lane from the ego's projection `s`
/// on, with the ego's lateral offset blended out over `MERGE_DISTANCE`.
pub(crate) fn merge_reference(ego: &Pose, line: &Polyline, s: f64) -> Option<Polyline> {
    let foot = line.pose_at(s.clamp(0.0, line.length()));
    let offset = foot.to_local(ego.position).y;
    let end = (s + MERGE_DISTANCE + REFERENCE_LENGTH).min(line.length());
    let mut pts = vec![ego.position];
    let blend_steps = 8;
    for k in 1..=blend_steps {
        let u = k as f64 / blend_steps as f64;
        let at = s + MERGE_DISTANCE * u;
        if at >= end {
            break;
        }
        let p = line.pose_at(at);
        let w = 0.5 * (1.0 + (std::f64::consts::PI * u).cos());
        pts.push(p.position + p.forward().perp() * (offset * w));
    }
    let start = s + MERGE_DISTANCE;
    if end - start > 0.5 {
        let slice = line.slice(start, end).ok()?;
        pts.extend_from_slice(&slice.points()[1..]);
    } else {
        let h = line.heading_at_clamped(line.length());
        pts.push(line.last() + Point2::from_polar(REFERENCE_LENGTH, h));
    }
    let local = to_ego_frame(ego, &pts);
    let line = Polyline::new_dedup(local, 1e-6).ok()?;
    let len = line.length();
    Some(if len < REFERENCE_LENGTH {
        line.extended(REFERENCE_LENGTH - len)
    } else {
        line
    })
}

/// Follows the scenario's expert path (the override if present, otherwise
/// the route centerline) with the curvature-limited speed profile. Ignores
/// traffic and navigation input.
#[derive(Debug, Clone)]
pub struct ExpertPlanner {
    path: Polyline,
    horizon_points: usize,
    profile: ProfileConfig,
}

impl ExpertPlanner {
    pub fn new(scenario: &Scenario) -> Result<Self, MapError> {
        let route = plan_global_route(
            &scenario.graph,
            &scenario.route_request.0,
            &scenario.route_request.1,
        )?;
        let path = scenario.expert_override.clone().unwrap_or(route.centerline);
        Ok(ExpertPlanner {
            path: path.extended(2.0 * REFERENCE_LENGTH),
            horizon_points: DEFAULT_HORIZON_POINTS,
            profile: ProfileConfig::default(),
        })
    }

    pub fn with_horizon(mut self, points: usize) -> Self {
        self.horizon_points = points;
        self
    }

    pub fn path(&self) -> &Polyline {
        &self.path
    }
}

impl Planner for ExpertPlanner {
    fn name(&self) -> &'static str {
        "expert"
    }

    fn plan(&self, obs: &Observation<'_>) -> Result<PlannedTrajectory, PlannerError> {
        let pose = obs.ego.pose;
        let proj = self
            .path
            .project_with_heading(pose.position, pose.heading, FRAC_PI_2)
            .unwrap_or_else(|| self.path.project(pose.position));
        if proj.distance > 10.0 {
            return Err(PlannerError::OffReference(proj.distance));
        }
        let reference = merge_reference(&pose, &self.path, proj.s).ok_or(PlannerError::NoLane)?;
        let profile = speed_profile(&reference, obs.speed_limit, None, &self.profile);
        Ok(PlannedTrajectory {
            waypoints: waypoints_along(
                &reference,
                &profile,
                obs.ego.v,
                self.horizon_points,
                &self.profile,
            ),
            warning: None,
        })
    }
}

/// Time-indexed expert poses over a whole scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpertTrajectory {
    pub poses: Vec<TimedPose>,
    pub speeds: Vec<f64>,
}

impl ExpertTrajectory {
    pub fn duration(&self) -> f64 {
        self.poses.last().map_or(0.0, |p| p.t)
    }

    pub fn pose_at(&self, t: f64) -> Option<Pose> {
        interpolate_timed(&self.poses, t)
    }

    /// Future expert positions at the waypoint rate in the frame of the
    /// expert pose at `t0`; index 0 is the origin. `None` if the trajectory
    /// ends before the horizon.
    pub fn waypoints_at(&self, t0: f64, count: usize) -> Option<Vec<Point2>> {
        let origin = self.pose_at(t0)?;
        let poses = super::expert_waypoints(&self.poses, t0, count)?;
        Some(poses.iter().map(|p| origin.to_local(p.position)).collect())
    }

    /// Index of the logged pose closest to `p` among those heading within
    /// 90° of `heading`.
    pub fn nearest_time(&self, p: Point2, heading: f64) -> Option<f64> {
        let gated = |tp: &&TimedPose| {
            crate::geometry::normalize_angle(tp.pose.heading - heading).abs() <= FRAC_PI_2
        };
        self.poses
            .iter()
            .filter(gated)
            .min_by(|a, b| a.pose.position.dist(p).total_cmp(&b.pose.position.dist(p)))
            .map(|tp| tp.t)
    }

    /// Step-resampled view at `WAYPOINT_DT`.
    pub fn view_2hz(&self) -> Vec<TimedPose> {
        let n = (self.duration() / WAYPOINT_DT).floor() as usize;
        (0..=n)
            .filter_map(|k| {
                let t = k as f64 * WAYPOINT_DT;
                self.pose_at(t).map(|pose| TimedPose { t, pose })
            })
            .collect()
    }
}

/// Closed-loop rollout of the expert planner on the scenario with traffic
/// removed.
pub fn plan_expert(scenario: &Scenario) -> Result<ExpertTrajectory, SimError> {
    let planner = ExpertPlanner::new(scenario)?;
    let mut empty = scenario.clone();
    empty.agents.clear();
    let cfg = EpisodeConfig {
        nav: NavVariant::NoNav,
        ..EpisodeConfig::default()
    };
    let log = run_episode(&empty, &planner, &cfg)?;
    Ok(ExpertTrajectory {
        poses: log
            .steps
            .iter()
            .map(|r| TimedPose {
                t: r.t,
                pose: r.ego.pose,
            })
            .collect(),
        speeds: log.steps.iter().map(|r| r.ego.v).collect(),
    })
}
