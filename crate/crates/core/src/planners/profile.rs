use crate::geometry::{Point2, Polyline, Pose};

use super::WAYPOINT_DT;

/// Speed-profile constants shared by all planners.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfileConfig {
    /// Lateral acceleration allowed in curves, m/s².
    pub a_lat_max: f64,
    /// Planned deceleration, m/s².
    pub decel: f64,
    /// Planned acceleration, m/s².
    pub accel: f64,
    /// Arc length over which curvature is measured, meters.
    pub curvature_window: f64,
}

impl Default for ProfileConfig {
    fn default() -> Self {
        ProfileConfig {
            a_lat_max: 3.0,
            decel: 2.0,
            accel: 1.5,
            curvature_window: 4.0,
        }
    }
}

/// Speed caps sampled every meter of a reference path.
#[derive(Debug, Clone, PartialEq)]
pub struct SpeedProfile {
    step: f64,
    caps: Vec<f64>,
}

impl SpeedProfile {
    pub fn cap_at(&self, s: f64) -> f64 {
        if s <= 0.0 {
            return self.caps[0];
        }
        let x = s / self.step;
        let i = x.floor() as usize;
        if i + 1 >= self.caps.len() {
            return *self.caps.last().expect("non-empty");
        }
        let u = x - i as f64;
        self.caps[i] * (1.0 - u) + self.caps[i + 1] * u
    }
}

/// Curvature of the circle through three points; zero when collinear.
fn menger_curvature(a: Point2, b: Point2, c: Point2) -> f64 {
    let denom = a.dist(b) * b.dist(c) * c.dist(a);
    if denom < 1e-12 {
        return 0.0;
    }
    2.0 * (b - a).cross(c - a).abs() / denom
}

/// Curvature-limited speed caps with a backward deceleration pass. Beyond
/// `stop_at` (if given) the cap is zero.
pub fn speed_profile(
    reference: &Polyline,
    limit: f64,
    stop_at: Option<f64>,
    cfg: &ProfileConfig,
) -> SpeedProfile {
    let step = 1.0;
    let len = reference.length();
    let n = (len / step).ceil() as usize + 1;
    let s_at = |i: usize| (i as f64 * step).min(len);
    let pts: Vec<Point2> = (0..n).map(|i| reference.point_at(s_at(i))).collect();
    let half = ((cfg.curvature_window / 2.0) / step).round().max(1.0) as usize;
    let mut caps: Vec<f64> = (0..n)
        .map(|i| {
            let a = i.saturating_sub(half);
            let b = (i + half).min(n - 1);
            let kappa = if a < i && i < b {
                menger_curvature(pts[a], pts[i], pts[b])
            } else {
                0.0
            };
            let mut v = limit;
            if kappa > 1e-9 {
                v = v.min((cfg.a_lat_max / kappa).sqrt());
            }
            if stop_at.is_some_and(|stop| s_at(i) >= stop) {
                v = 0.0;
            }
            v
        })
        .collect();
    for i in (0..n - 1).rev() {
        let ds = s_at(i + 1) - s_at(i);
        caps[i] = caps[i].min((caps[i + 1].powi(2) + 2.0 * cfg.decel * ds).sqrt());
    }
    SpeedProfile { step, caps }
}

/// Positions reached along `reference` at `WAYPOINT_DT` intervals, starting
/// at speed `v0` and obeying the profile and the acceleration limit. The
/// first entry is the start of the reference.
pub fn waypoints_along(
    reference: &Polyline,
    profile: &SpeedProfile,
    v0: f64,
    count: usize,
    cfg: &ProfileConfig,
) -> Vec<Point2> {
    let h = 0.01;
    let sub = (WAYPOINT_DT / h).round() as usize;
    let len = reference.length();
    let end_dir = Point2::from_polar(1.0, reference.heading_at_clamped(len));
    let at = |s: f64| {
        if s <= len {
            reference.point_at(s)
        } else {
            reference.last() + end_dir * (s - len)
        }
    };
    let mut out = vec![at(0.0)];
    let mut s = 0.0;
    let mut v = v0.max(0.0).min(profile.cap_at(0.0));
    for _ in 0..count {
        for _ in 0..sub {
            let cap = profile.cap_at(s);
            v = (v + cfg.accel * h).min(cap);
            s += v * h;
        }
        out.push(at(s));
    }
    out
}

/// Path swept by a pure-pursuit follower of `reference` that starts at the
/// origin heading along +x, with a fixed lookahead and bounded curvature.
/// Smooths kinks in a piecewise-linear reference.
pub fn pursuit_path(
    reference: &Polyline,
    lookahead: f64,
    max_curvature: f64,
    length: f64,
) -> Polyline {
    let step = 0.25;
    let len = reference.length();
    let end_dir = Point2::from_polar(1.0, reference.heading_at_clamped(len));
    let mut p = Point2::ORIGIN;
    let mut heading = 0.0;
    let mut s_hint = 0.0;
    let mut pts = vec![p];
    for _ in 0..(length / step).ceil() as usize {
        let proj = reference
            .project_in_window(p, s_hint - 1.0, s_hint + 2.0 * lookahead)
            .unwrap_or_else(|| reference.project(p));
        s_hint = proj.s.max(s_hint);
        let s = proj.s + lookahead;
        let target = if s <= len {
            reference.point_at(s)
        } else {
            reference.last() + end_dir * (s - len)
        };
        let local = Pose::new(p, heading).to_local(target);
        let d2 = local.dot(local).max(1e-9);
        let kappa = (2.0 * local.y / d2).clamp(-max_curvature, max_curvature);
        p = p + Point2::from_polar(step, heading + kappa * step / 2.0);
        heading += kappa * step;
        pts.push(p);
    }
    Polyline::new(pts).expect("steps are non-degenerate")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn arc(r: f64, sweep: f64) -> Polyline {
        let n = 400;
        let pts = (0..=n)
            .map(|i| {
                let a = sweep * i as f64 / n as f64;
                Point2::new(r * a.sin(), r * (1.0 - a.cos()))
            })
            .collect();
        Polyline::new(pts).unwrap()
    }

    #[test]
    fn straight_keeps_limit() {
        let line = Polyline::new(vec![Point2::new(0.0, 0.0), Point2::new(100.0, 0.0)]).unwrap();
        let p = speed_profile(&line, 10.0, None, &ProfileConfig::default());
        assert_eq!(p.cap_at(50.0), 10.0);
        let w = waypoints_along(&line, &p, 10.0, 8, &ProfileConfig::default());
        assert_eq!(w.len(), 9);
        for (k, q) in w.iter().enumerate() {
            assert!((q.x - 5.0 * k as f64).abs() < 1e-6, "{q:?}");
        }
    }

    #[test]
    fn curve_limits_speed() {
        let line = arc(20.0, 1.5);
        let p = speed_profile(&line, 15.0, None, &ProfileConfig::default());
        let expected = (3.0f64 * 20.0).sqrt();
        assert!((p.cap_at(15.0) - expected).abs() / expected < 0.01);
    }

    #[test]
    fn pursuit_converges_onto_offset_line() {
        let line = Polyline::new(vec![Point2::new(0.0, 1.0), Point2::new(100.0, 1.0)]).unwrap();
        let path = pursuit_path(&line, 5.0, 0.24, 60.0);
        assert!(path.first() == Point2::ORIGIN);
        let end = path.last();
        assert!((end.y - 1.0).abs() < 0.05, "{end:?}");
        let mid = path.point_at(2.0);
        assert!(mid.y > 0.0 && mid.y < 1.0);
    }

    #[test]
    fn stop_point_brakes() {
        let line = Polyline::new(vec![Point2::new(0.0, 0.0), Point2::new(100.0, 0.0)]).unwrap();
        let p = speed_profile(&line, 10.0, Some(20.0), &ProfileConfig::default());
        assert_eq!(p.cap_at(20.0), 0.0);
        assert!((p.cap_at(0.0) - 80f64.sqrt()).abs() < 1e-9);
        let w = waypoints_along(&line, &p, 8.0, 16, &ProfileConfig::default());
        assert!(w.last().unwrap().x <= 20.0 + 1e-9);
    }
}
