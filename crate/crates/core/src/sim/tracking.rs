use super::{BicycleParams, ControlInput, EgoState};
use crate::geometry::{Point2, Polyline};
use crate::planners::WAYPOINT_DT;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackerConfig {
    pub min_lookahead: f64,
    /// Lookahead growth with speed, seconds.
    pub lookahead_time: f64,
    pub lookahead_base: f64,
    /// Proportional speed gain, 1/s.
    pub speed_gain: f64,
    /// Longitudinal jerk limit, m/s³.
    pub max_jerk: f64,
    /// Steering rate limit, rad/s.
    pub max_steer_rate: f64,
}

impl Default for TrackerConfig {
    fn default() -> Self {
        TrackerConfig {
            min_lookahead: 2.5,
            lookahead_time: 0.35,
            lookahead_base: 1.5,
            speed_gain: 1.5,
            max_jerk: 6.0,
            max_steer_rate: 0.8,
        }
    }
}

/// Pure pursuit on the planned waypoints plus speed control toward the
/// speed the waypoint spacing implies.
#[derive(Debug, Clone)]
pub struct Tracker {
    cfg: TrackerConfig,
    t0: f64,
    points: Vec<Point2>,
    line: Option<Polyline>,
    last_accel: f64,
    last_steer: f64,
}

impl Tracker {
    pub fn new(cfg: TrackerConfig) -> Self {
        Tracker {
            cfg,
            t0: 0.0,
            points: Vec::new(),
            line: None,
            last_accel: 0.0,
            last_steer: 0.0,
        }
    }

    /// Replaces the tracked plan with world-frame waypoints issued at `t0`.
    pub fn set_plan(&mut self, t0: f64, points: Vec<Point2>) {
        self.line = Polyline::new_dedup(points.clone(), 1e-6)
            .ok()
            .filter(|l| l.length() > 0.05);
        self.points = points;
        self.t0 = t0;
    }

    fn segment_speed(&self, i: usize) -> f64 {
        let n = self.points.len();
        if n < 2 {
            return 0.0;
        }
        let i = i.min(n - 2);
        self.points[i].dist(self.points[i + 1]) / WAYPOINT_DT
    }

    /// Plan speed at `tau` seconds after issue, interpolated between segment
    /// midpoints.
    fn target_speed(&self, tau: f64) -> f64 {
        let x = (tau / WAYPOINT_DT - 0.5).max(0.0);
        let i = x.floor() as usize;
        let u = x - i as f64;
        self.segment_speed(i) * (1.0 - u) + self.segment_speed(i + 1) * u
    }

    pub fn control(
        &mut self,
        state: &EgoState,
        t: f64,
        params: &BicycleParams,
        dt: f64,
    ) -> ControlInput {
        let c = self.cfg;
        let tau = t - self.t0 + dt;
        let v_target = self.target_speed(tau);
        let feed = (self.target_speed(tau + WAYPOINT_DT) - v_target) / WAYPOINT_DT;
        let mut accel = feed + c.speed_gain * (v_target - state.v);
        accel = accel.clamp(-params.max_decel, params.max_accel);
        let dj = c.max_jerk * dt;
        accel = accel.clamp(self.last_accel - dj, self.last_accel + dj);

        let mut steer = self.last_steer;
        if let Some(line) = &self.line {
            let pos = state.pose.position;
            let ld = (c.lookahead_time * state.v + c.lookahead_base).max(c.min_lookahead);
            let proj = line.project(pos);
            let s = proj.s + ld;
            let target = if s <= line.length() {
                line.point_at(s)
            } else {
                let dir = Point2::from_polar(1.0, line.heading_at_clamped(line.length()));
                line.last() + dir * (s - line.length())
            };
            let local = state.pose.to_local(target);
            let dist = local.norm().max(1e-6);
            let alpha = local.y.atan2(local.x);
            steer = (2.0 * params.wheelbase * alpha.sin() / dist).atan();
        }
        let dmax = c.max_steer_rate * dt;
        steer = steer
            .clamp(self.last_steer - dmax, self.last_steer + dmax)
            .clamp(-params.max_steer, params.max_steer);
        self.last_accel = accel;
        self.last_steer = steer;
        ControlInput { accel, steer }
    }
}
