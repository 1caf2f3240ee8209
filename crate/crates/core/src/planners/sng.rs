use super::expert::REFERENCE_LENGTH;
use super::{
    pursuit_path, speed_profile, waypoints_along, NavInput, Observation, PlannedTrajectory,
    Planner, PlannerError, ProfileConfig, DEFAULT_HORIZON_POINTS,
};
use crate::geometry::{normalize_angle, point_in_polygon_unchecked, Point2, Polyline};
use crate::navigation::{DrivingAction, SupplementaryAction, TbtInfo};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SngPlannerConfig {
    pub horizon_points: usize,
    pub profile: ProfileConfig,
    /// Speed cap around turns and roundabouts, m/s.
    pub maneuver_speed: f64,
    /// An upcoming turn this many seconds away already triggers the cap.
    pub maneuver_time: f64,
    /// Time headway for the lead-vehicle check, seconds.
    pub headway: f64,
    /// Minimum lead-vehicle check distance, meters.
    pub min_follow: f64,
    /// Gap kept to a stationary obstacle, meters.
    pub stop_gap: f64,
    pub lane_width: f64,
    /// Ego footprint half extents, meters.
    pub ego_half_length: f64,
    pub ego_half_width: f64,
    /// Pure-pursuit lookahead: `max(lookahead_min, lookahead_time · v)`.
    pub lookahead_min: f64,
    pub lookahead_time: f64,
    /// Curvature bound of generated paths, 1/m.
    pub max_curvature: f64,
}

impl Default for SngPlannerConfig {
    fn default() -> Self {
        SngPlannerConfig {
            horizon_points: DEFAULT_HORIZON_POINTS,
            profile: ProfileConfig::default(),
            maneuver_speed: 7.0,
            maneuver_time: 4.0,
            headway: 2.0,
            min_follow: 15.0,
            stop_gap: 5.0,
            lane_width: 3.5,
            ego_half_length: 2.3,
            ego_half_width: 0.95,
            lookahead_min: 5.0,
            lookahead_time: 0.8,
            max_curvature: 0.24,
        }
    }
}

/// Follows the navigation path and applies the TBT rules: early lane
/// positioning before a turn lane, slowing for maneuvers, and keeping
/// behind traffic on the path.
#[derive(Debug, Clone, Default)]
pub struct SngPlanner {
    pub cfg: SngPlannerConfig,
}

fn is_maneuver(a: DrivingAction) -> bool {
    matches!(
        a,
        DrivingAction::EnterRoundabout
            | DrivingAction::TurnLeft
            | DrivingAction::TurnRight
            | DrivingAction::UTurn
    )
}

impl SngPlanner {
    pub fn new(cfg: SngPlannerConfig) -> Self {
        SngPlanner { cfg }
    }

    /// +1 to move left, -1 right, when the next maneuver needs a turn lane.
    fn lane_side(tbt: &TbtInfo) -> Option<f64> {
        match (tbt.future, tbt.supplementary) {
            (DrivingAction::TurnRight, SupplementaryAction::EnterRightTurnLane) => Some(-1.0),
            (DrivingAction::TurnLeft, SupplementaryAction::EnterLeftTurnLane) => Some(1.0),
            _ => None,
        }
    }

    fn speed_limit(&self, base: f64, tbt: Option<&TbtInfo>) -> f64 {
        let Some(t) = tbt else { return base };
        let soon = is_maneuver(t.future) && t.time_to_maneuver <= self.cfg.maneuver_time;
        if is_maneuver(t.current) || soon {
            base.min(self.cfg.maneuver_speed)
        } else {
            base
        }
    }
}

impl Planner for SngPlanner {
    fn name(&self) -> &'static str {
        "sng"
    }

    fn plan(&self, obs: &Observation<'_>) -> Result<PlannedTrajectory, PlannerError> {
        let view = match &obs.nav {
            NavInput::Sng(v) => v,
            other => {
                return Err(PlannerError::WrongNav {
                    planner: "sng",
                    nav: other.kind(),
                })
            }
        };
        let cfg = &self.cfg;
        let ego = obs.ego.pose;
        let mut pts = vec![Point2::ORIGIN];
        match &view.path {
            Some(p) if p.points.is_empty() => return Err(PlannerError::EmptyPath),
            Some(p) => pts.extend_from_slice(&p.points),
            None => pts.push(Point2::new(40.0, 0.0)),
        }
        if let Some(side) = view.tbt.as_ref().and_then(Self::lane_side) {
            let orig = pts.clone();
            for i in 1..orig.len() {
                let next = orig.get(i + 1).copied().unwrap_or(orig[i]);
                let normal = (next - orig[i - 1]).normalized().perp();
                let probe = ego.to_world(orig[i] + normal * (side * cfg.lane_width));
                if obs
                    .corridor
                    .iter()
                    .any(|poly| point_in_polygon_unchecked(probe, poly))
                {
                    pts[i] = orig[i] + normal * (side * cfg.lane_width / 2.0);
                }
            }
        }
        let mut guide = Polyline::new_dedup(pts, 1e-6).map_err(|_| PlannerError::EmptyPath)?;
        if guide.length() < REFERENCE_LENGTH {
            guide = guide.extended(REFERENCE_LENGTH - guide.length());
        }
        let lookahead = cfg.lookahead_min.max(cfg.lookahead_time * obs.ego.v);
        let reference = pursuit_path(&guide, lookahead, cfg.max_curvature, guide.length());

        let mut limit = self.speed_limit(obs.speed_limit, view.tbt.as_ref());
        let v = obs.ego.v;
        let reach = (cfg.headway * v)
            .max(cfg.min_follow)
            .max(v * v / (2.0 * cfg.profile.decel) + cfg.stop_gap + 2.0 * cfg.ego_half_length);
        let mut stop_at: Option<f64> = None;
        for a in &obs.agents {
            let local = ego.to_local(a.pose.position);
            let pr = reference.project(local);
            if pr.s <= 0.0 || pr.s > reach + a.length / 2.0 {
                continue;
            }
            if pr.distance > a.width / 2.0 + cfg.ego_half_width + 0.5 {
                continue;
            }
            let rel =
                normalize_angle(a.pose.heading - ego.heading - reference.heading_at_clamped(pr.s));
            let along = a.speed * rel.cos();
            if along < 0.5 {
                let s = (pr.s - a.length / 2.0 - cfg.ego_half_length - cfg.stop_gap).max(0.0);
                stop_at = Some(stop_at.map_or(s, |x: f64| x.min(s)));
            } else {
                limit = limit.min(along);
            }
        }
        let profile = speed_profile(&reference, limit, stop_at, &cfg.profile);
        Ok(PlannedTrajectory {
            waypoints: waypoints_along(&reference, &profile, v, cfg.horizon_points, &cfg.profile),
            warning: None,
        })
    }
}
