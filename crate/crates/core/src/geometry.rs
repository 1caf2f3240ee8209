//! Planar geometry: points, poses, arc-length indexed polylines, frame
//! transforms, polygon containment and oriented-box overlap.
//!
//! Frame convention everywhere: headings are counterclockwise-positive
//! radians, and the ego frame has +x forward and +y to the left.

use std::f64::consts::PI;
use std::ops::{Add, Mul, Sub};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Tolerance used for boundary and coincidence decisions.
pub const GEOM_EPS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("polyline needs at least 2 points, got {0}")]
    TooFewPoints(usize),
    #[error("polyline point {0} is not finite")]
    NonFinite(usize),
    #[error("polyline points {0} and {1} coincide")]
    CoincidentPoints(usize, usize),
    #[error("line of length {length:.3} m is shorter than {needed:.3} m")]
    LineTooShort { length: f64, needed: f64 },
    #[error("arc length {s:.6} outside [0, {length:.6}]")]
    OutOfRange { s: f64, length: f64 },
    #[error("degenerate polygon: {0}")]
    DegeneratePolygon(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, GeometryError>;

/// Wraps an angle into (−π, π].
pub fn normalize_angle(a: f64) -> f64 {
    if a > -PI && a <= PI {
        return a;
    }
    let r = a.rem_euclid(2.0 * PI);
    if r > PI {
        r - 2.0 * PI
    } else {
        r
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl From<[f64; 2]> for Point2 {
    fn from(v: [f64; 2]) -> Self {
        Point2 { x: v[0], y: v[1] }
    }
}

impl From<Point2> for [f64; 2] {
    fn from(p: Point2) -> Self {
        [p.x, p.y]
    }
}

impl Point2 {
    pub const ORIGIN: Point2 = Point2 { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Point2 { x, y }
    }

    pub fn from_polar(r: f64, angle: f64) -> Self {
        Point2::new(r * angle.cos(), r * angle.sin())
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn dot(self, o: Point2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    /// z-component of the 3D cross product.
    pub fn cross(self, o: Point2) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn dist(self, o: Point2) -> f64 {
        (self - o).norm()
    }

    pub fn angle(self) -> f64 {
        self.y.atan2(self.x)
    }

    /// Rotates counterclockwise by `a` radians about the origin.
    pub fn rotate(self, a: f64) -> Point2 {
        let (s, c) = a.sin_cos();
        Point2::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }

    pub fn lerp(self, o: Point2, t: f64) -> Point2 {
        Point2::new(self.x + (o.x - self.x) * t, self.y + (o.y - self.y) * t)
    }

    /// Unit vector to the left of this direction.
    pub fn perp(self) -> Point2 {
        Point2::new(-self.y, self.x)
    }

    pub fn normalized(self) -> Point2 {
        let n = self.norm();
        if n > 0.0 {
            self * (1.0 / n)
        } else {
            self
        }
    }
}

impl Add for Point2 {
    type Output = Point2;
    fn add(self, o: Point2) -> Point2 {
        Point2::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Point2 {
    type Output = Point2;
    fn sub(self, o: Point2) -> Point2 {
        Point2::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Point2 {
    type Output = Point2;
    fn mul(self, k: f64) -> Point2 {
        Point2::new(self.x * k, self.y * k)
    }
}

/// Position plus heading. The heading is kept in (−π, π].
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Pose {
    pub position: Point2,
    pub heading: f64,
}

impl Pose {
    pub fn new(position: Point2, heading: f64) -> Self {
        Pose {
            position,
            heading: normalize_angle(heading),
        }
    }

    pub fn xyh(x: f64, y: f64, heading: f64) -> Self {
        Pose::new(Point2::new(x, y), heading)
    }

    pub fn forward(&self) -> Point2 {
        Point2::from_polar(1.0, self.heading)
    }

    /// World point expressed in this pose's frame.
    pub fn to_local(&self, p: Point2) -> Point2 {
        (p - self.position).rotate(-self.heading)
    }

    /// Local point expressed in the world frame.
    pub fn to_world(&self, p: Point2) -> Point2 {
        p.rotate(self.heading) + self.position
    }

    /// Another world pose expressed relative to this one.
    pub fn relative(&self, other: &Pose) -> Pose {
        Pose::new(self.to_local(other.position), other.heading - self.heading)
    }
}

/// Rigid transform of world points into the ego frame (+x forward, +y left).
pub fn to_ego_frame(ego: &Pose, world_points: &[Point2]) -> Vec<Point2> {
    world_points.iter().map(|p| ego.to_local(*p)).collect()
}

/// Inverse of [`to_ego_frame`].
pub fn from_ego_frame(ego: &Pose, local_points: &[Point2]) -> Vec<Point2> {
    local_points.iter().map(|p| ego.to_world(*p)).collect()
}

/// A pose stamped with a time in seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimedPose {
    pub t: f64,
    pub pose: Pose,
}

/// Pose at time `t` on a time-sorted sequence, linearly interpolated with
/// shortest-arc heading blending. `None` outside the covered interval.
pub fn interpolate_timed(seq: &[TimedPose], t: f64) -> Option<Pose> {
    let first = seq.first()?;
    let last = seq.last()?;
    if t < first.t - GEOM_EPS || t > last.t + GEOM_EPS {
        return None;
    }
    let idx = seq.partition_point(|tp| tp.t <= t);
    if idx == 0 {
        return Some(first.pose);
    }
    if idx >= seq.len() {
        return Some(last.pose);
    }
    let (a, b) = (&seq[idx - 1], &seq[idx]);
    let span = b.t - a.t;
    let u = if span > 0.0 { (t - a.t) / span } else { 0.0 };
    let dh = normalize_angle(b.pose.heading - a.pose.heading);
    Some(Pose::new(
        a.pose.position.lerp(b.pose.position, u),
        a.pose.heading + dh * u,
    ))
}

/// Closest-point query result on a polyline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Projection {
    /// Arc length of the closest point.
    pub s: f64,
    pub point: Point2,
    pub distance: f64,
    /// Signed offset of the query point, positive to the left of travel.
    pub lateral: f64,
    pub segment: usize,
}

/// Piecewise-linear curve indexed by cumulative arc length.
#[derive(Debug, Clone, PartialEq)]
pub struct Polyline {
    points: Vec<Point2>,
    cum_arclen: Vec<f64>,
}

impl Polyline {
    pub fn new(points: Vec<Point2>) -> Result<Self> {
        if points.len() < 2 {
            return Err(GeometryError::TooFewPoints(points.len()));
        }
        let mut cum = Vec::with_capacity(points.len());
        cum.push(0.0);
        for (i, p) in points.iter().enumerate() {
            if !p.is_finite() {
                return Err(GeometryError::NonFinite(i));
            }
            if i > 0 {
                let d = p.dist(points[i - 1]);
                if d <= GEOM_EPS {
                    return Err(GeometryError::CoincidentPoints(i - 1, i));
                }
                cum.push(cum[i - 1] + d);
            }
        }
        Ok(Polyline {
            points,
            cum_arclen: cum,
        })
    }

    /// Builds a polyline after dropping consecutive points closer than `min_gap`.
    pub fn new_dedup(points: Vec<Point2>, min_gap: f64) -> Result<Self> {
        let mut out: Vec<Point2> = Vec::with_capacity(points.len());
        for p in points {
            match out.last() {
                Some(q) if q.dist(p) <= min_gap.max(GEOM_EPS) => {}
                _ => out.push(p),
            }
        }
        Polyline::new(out)
    }

    pub fn points(&self) -> &[Point2] {
        &self.points
    }

    pub fn cum_arclen(&self) -> &[f64] {
        &self.cum_arclen
    }

    pub fn length(&self) -> f64 {
        *self.cum_arclen.last().expect("non-empty")
    }

    pub fn first(&self) -> Point2 {
        self.points[0]
    }

    pub fn last(&self) -> Point2 {
        *self.points.last().expect("non-empty")
    }

    pub fn segment_count(&self) -> usize {
        self.points.len() - 1
    }

    pub fn segment_heading(&self, i: usize) -> f64 {
        (self.points[i + 1] - self.points[i]).angle()
    }

    /// Segment index containing arc length `s`; vertices belong to the
    /// following segment, the end point to the last one.
    fn segment_at(&self, s: f64) -> usize {
        let n = self.segment_count();
        let idx = self.cum_arclen.partition_point(|&c| c <= s);
        idx.saturating_sub(1).min(n - 1)
    }

    /// Point at arc length `s`, clamped to the curve.
    pub fn point_at(&self, s: f64) -> Point2 {
        let s = s.clamp(0.0, self.length());
        let i = self.segment_at(s);
        let seg = self.cum_arclen[i + 1] - self.cum_arclen[i];
        let t = ((s - self.cum_arclen[i]) / seg).clamp(0.0, 1.0);
        self.points[i].lerp(self.points[i + 1], t)
    }

    pub fn heading_at(&self, s: f64) -> Result<f64> {
        let len = self.length();
        if !(s >= -GEOM_EPS && s <= len + GEOM_EPS) {
            return Err(GeometryError::OutOfRange { s, length: len });
        }
        Ok(self.segment_heading(self.segment_at(s.clamp(0.0, len))))
    }

    /// Heading at `s` with the arc length clamped to the curve.
    pub fn heading_at_clamped(&self, s: f64) -> f64 {
        self.segment_heading(self.segment_at(s.clamp(0.0, self.length())))
    }

    pub fn pose_at(&self, s: f64) -> Pose {
        Pose::new(self.point_at(s), self.heading_at_clamped(s))
    }

    fn project_segment(&self, i: usize, p: Point2) -> Projection {
        let a = self.points[i];
        let b = self.points[i + 1];
        let ab = b - a;
        let l2 = ab.dot(ab);
        let t = ((p - a).dot(ab) / l2).clamp(0.0, 1.0);
        let q = a.lerp(b, t);
        let seg_len = self.cum_arclen[i + 1] - self.cum_arclen[i];
        let lateral = ab.cross(p - a) / l2.sqrt();
        Projection {
            s: self.cum_arclen[i] + t * seg_len,
            point: q,
            distance: p.dist(q),
            lateral,
            segment: i,
        }
    }

    /// Global closest point.
    pub fn project(&self, p: Point2) -> Projection {
        self.project_filtered(p, |_| true)
            .expect("a polyline always has a segment")
    }

    /// Closest point among segments whose heading is within `max_diff`
    /// radians of `heading`.
    pub fn project_with_heading(
        &self,
        p: Point2,
        heading: f64,
        max_diff: f64,
    ) -> Option<Projection> {
        self.project_filtered(p, |i| {
            normalize_angle(self.segment_heading(i) - heading).abs() <= max_diff
        })
    }

    /// Closest point restricted to arc lengths in `[s_min, s_max]`.
    pub fn project_in_window(&self, p: Point2, s_min: f64, s_max: f64) -> Option<Projection> {
        let mut best: Option<Projection> = None;
        for i in 0..self.segment_count() {
            if self.cum_arclen[i + 1] < s_min || self.cum_arclen[i] > s_max {
                continue;
            }
            let mut pr = self.project_segment(i, p);
            if pr.s < s_min || pr.s > s_max {
                let s = pr.s.clamp(s_min, s_max);
                let q = self.point_at(s);
                pr = Projection {
                    s,
                    point: q,
                    distance: p.dist(q),
                    lateral: pr.lateral,
                    segment: i,
                };
            }
            if best.is_none_or(|b| pr.distance < b.distance) {
                best = Some(pr);
            }
        }
        best
    }

    fn project_filtered(&self, p: Point2, keep: impl Fn(usize) -> bool) -> Option<Projection> {
        let mut best: Option<Projection> = None;
        for i in 0..self.segment_count() {
            if !keep(i) {
                continue;
            }
            let pr = self.project_segment(i, p);
            if best.is_none_or(|b| pr.distance < b.distance - GEOM_EPS) {
                best = Some(pr);
            }
        }
        best
    }

    /// Sub-curve between two arc lengths (clamped, `s0 < s1`).
    pub fn slice(&self, s0: f64, s1: f64) -> Result<Polyline> {
        let len = self.length();
        let s0 = s0.clamp(0.0, len);
        let s1 = s1.clamp(0.0, len);
        if s1 - s0 <= GEOM_EPS {
            return Err(GeometryError::LineTooShort {
                length: (s1 - s0).max(0.0),
                needed: GEOM_EPS,
            });
        }
        let mut pts = vec![self.point_at(s0)];
        for (p, &c) in self.points.iter().zip(&self.cum_arclen) {
            if c > s0 + GEOM_EPS && c < s1 - GEOM_EPS {
                pts.push(*p);
            }
        }
        pts.push(self.point_at(s1));
        Polyline::new_dedup(pts, GEOM_EPS)
    }

    /// Copy extended past its end along the last segment's direction.
    /// Extensions too short to form a segment are ignored.
    pub fn extended(&self, extra: f64) -> Polyline {
        if extra <= GEOM_EPS {
            return self.clone();
        }
        let n = self.points.len();
        let dir = (self.points[n - 1] - self.points[n - 2]).normalized();
        let mut pts = self.points.clone();
        pts.push(self.last() + dir * extra);
        Polyline::new(pts).expect("extension keeps the polyline valid")
    }

    /// Concatenation; a leading point of `other` that repeats our last point
    /// (within `join_tol`) is dropped.
    pub fn concat(&self, other: &Polyline, join_tol: f64) -> Result<Polyline> {
        let mut pts = self.points.clone();
        let skip = usize::from(other.first().dist(self.last()) <= join_tol);
        pts.extend_from_slice(&other.points[skip..]);
        Polyline::new_dedup(pts, GEOM_EPS)
    }

    pub fn reversed(&self) -> Polyline {
        let mut pts = self.points.clone();
        pts.reverse();
        Polyline::new(pts).expect("reversal keeps the polyline valid")
    }

    pub fn map_points(&self, f: impl Fn(Point2) -> Point2) -> Result<Polyline> {
        Polyline::new(self.points.iter().map(|p| f(*p)).collect())
    }
}

/// Points at arc lengths `start + spacing·k`, k = 1..=count.
pub fn resample_from(
    line: &Polyline,
    start: f64,
    spacing: f64,
    count: usize,
) -> Result<Vec<Point2>> {
    if !(spacing > 0.0) || count == 0 {
        return Err(GeometryError::InvalidArgument(format!(
            "spacing {spacing} and count {count} must be positive"
        )));
    }
    let needed = start + spacing * count as f64;
    // relative slack so that an exactly-long-enough line passes despite
    // accumulated rounding in cum_arclen
    if line.length() + 1e-9 * needed.max(1.0) < needed {
        return Err(GeometryError::LineTooShort {
            length: line.length() - start,
            needed: spacing * count as f64,
        });
    }
    Ok((1..=count)
        .map(|k| line.point_at(start + spacing * k as f64))
        .collect())
}

/// Points at arc lengths spacing, 2·spacing, …, count·spacing.
pub fn resample_by_spacing(line: &Polyline, spacing: f64, count: usize) -> Result<Vec<Point2>> {
    resample_from(line, 0.0, spacing, count)
}

fn point_on_segment(p: Point2, a: Point2, b: Point2) -> bool {
    let ab = b - a;
    let l2 = ab.dot(ab);
    if l2 <= GEOM_EPS * GEOM_EPS {
        return p.dist(a) <= GEOM_EPS;
    }
    let t = ((p - a).dot(ab) / l2).clamp(0.0, 1.0);
    p.dist(a.lerp(b, t)) <= GEOM_EPS
}

/// Signed area (positive for counterclockwise vertex order).
pub fn polygon_area(poly: &[Point2]) -> f64 {
    let n = poly.len();
    (0..n)
        .map(|i| poly[i].cross(poly[(i + 1) % n]))
        .sum::<f64>()
        * 0.5
}

/// Even-odd containment; points on the boundary are inside.
pub fn point_in_polygon(p: Point2, poly: &[Point2]) -> Result<bool> {
    if poly.len() < 3 {
        return Err(GeometryError::DegeneratePolygon(format!(
            "{} vertices, need at least 3",
            poly.len()
        )));
    }
    if polygon_area(poly).abs() <= GEOM_EPS {
        return Err(GeometryError::DegeneratePolygon("zero area".into()));
    }
    Ok(point_in_polygon_unchecked(p, poly))
}

/// [`point_in_polygon`] without the degeneracy checks, for hot loops over
/// polygons that were validated once.
pub fn point_in_polygon_unchecked(p: Point2, poly: &[Point2]) -> bool {
    let n = poly.len();
    let mut inside = false;
    let mut j = n - 1;
    for i in 0..n {
        let a = poly[i];
        let b = poly[j];
        if point_on_segment(p, a, b) {
            return true;
        }
        if (a.y > p.y) != (b.y > p.y) {
            let x_cross = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
            if p.x < x_cross {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

/// Vehicle footprint: a rectangle centered on `center`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrientedBox {
    pub center: Point2,
    pub heading: f64,
    pub half_length: f64,
    pub half_width: f64,
}

impl OrientedBox {
    pub fn new(center: Point2, heading: f64, half_length: f64, half_width: f64) -> Self {
        OrientedBox {
            center,
            heading,
            half_length,
            half_width,
        }
    }

    pub fn at_pose(pose: &Pose, length: f64, width: f64) -> Self {
        OrientedBox::new(pose.position, pose.heading, length / 2.0, width / 2.0)
    }

    pub fn pose(&self) -> Pose {
        Pose::new(self.center, self.heading)
    }

    /// Corners in counterclockwise order starting front-left.
    pub fn corners(&self) -> [Point2; 4] {
        let pose = self.pose();
        let (l, w) = (self.half_length, self.half_width);
        [
            pose.to_world(Point2::new(l, w)),
            pose.to_world(Point2::new(-l, w)),
            pose.to_world(Point2::new(-l, -w)),
            pose.to_world(Point2::new(l, -w)),
        ]
    }

    fn axes(&self) -> [Point2; 2] {
        let f = Point2::from_polar(1.0, self.heading);
        [f, f.perp()]
    }

    pub fn contains(&self, p: Point2) -> bool {
        let q = self.pose().to_local(p);
        q.x.abs() <= self.half_length + GEOM_EPS && q.y.abs() <= self.half_width + GEOM_EPS
    }
}

fn project_interval(corners: &[Point2; 4], axis: Point2) -> (f64, f64) {
    corners
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), c| {
            let d = c.dot(axis);
            (lo.min(d), hi.max(d))
        })
}

/// Separating-axis overlap test; touching boxes intersect.
pub fn obb_intersect(a: &OrientedBox, b: &OrientedBox) -> bool {
    let ca = a.corners();
    let cb = b.corners();
    for axis in a.axes().into_iter().chain(b.axes()) {
        let (a_lo, a_hi) = project_interval(&ca, axis);
        let (b_lo, b_hi) = project_interval(&cb, axis);
        if a_hi < b_lo - GEOM_EPS || b_hi < a_lo - GEOM_EPS {
            return false;
        }
    }
    true
}

/// Intersection of two convex counterclockwise polygons (Sutherland–Hodgman).
pub fn convex_clip(subject: &[Point2], clip: &[Point2]) -> Vec<Point2> {
    let mut output: Vec<Point2> = subject.to_vec();
    let m = clip.len();
    for i in 0..m {
        if output.is_empty() {
            break;
        }
        let a = clip[i];
        let b = clip[(i + 1) % m];
        let inside = |p: Point2| (b - a).cross(p - a) >= -GEOM_EPS;
        let input = std::mem::take(&mut output);
        let n = input.len();
        for k in 0..n {
            let cur = input[k];
            let prev = input[(k + n - 1) % n];
            let (cin, pin) = (inside(cur), inside(prev));
            if cin != pin {
                let d = cur - prev;
                let denom = (b - a).cross(d);
                if denom.abs() > GEOM_EPS {
                    // cross(b - a, prev + d·u - a) = 0
                    let u = -(b - a).cross(prev - a) / denom;
                    output.push(prev + d * u);
                }
            }
            if cin {
                output.push(cur);
            }
        }
    }
    output
}

/// Area centroid, falling back to the vertex mean for degenerate input.
pub fn polygon_centroid(poly: &[Point2]) -> Option<Point2> {
    if poly.is_empty() {
        return None;
    }
    let area = polygon_area(poly);
    let mean = poly.iter().fold(Point2::ORIGIN, |acc, p| acc + *p) * (1.0 / poly.len() as f64);
    if area.abs() <= 1e-12 {
        return Some(mean);
    }
    let n = poly.len();
    let mut c = Point2::ORIGIN;
    for i in 0..n {
        let (p, q) = (poly[i], poly[(i + 1) % n]);
        let w = p.cross(q);
        c = c + (p + q) * w;
    }
    Some(c * (1.0 / (6.0 * area)))
}

/// Polygon covering a band of `half_width` on both sides of the line,
/// using mitered vertex offsets. Counterclockwise for a left-to-right band.
pub fn buffer_polyline(line: &Polyline, half_width: f64) -> Vec<Point2> {
    let pts = line.points();
    let n = pts.len();
    let normals: Vec<Point2> = (0..n)
        .map(|i| {
            let d = if i == 0 {
                pts[1] - pts[0]
            } else if i == n - 1 {
                pts[n - 1] - pts[n - 2]
            } else {
                (pts[i + 1] - pts[i]).normalized() + (pts[i] - pts[i - 1]).normalized()
            };
            let nrm = d.normalized().perp();
            if i == 0 || i == n - 1 {
                nrm
            } else {
                // miter length compensation, capped for sharp corners
                let seg = (pts[i + 1] - pts[i]).normalized().perp();
                let cos = nrm.dot(seg).max(0.5);
                nrm * (1.0 / cos)
            }
        })
        .collect();
    let mut poly: Vec<Point2> = pts
        .iter()
        .zip(&normals)
        .map(|(p, nrm)| *p - *nrm * half_width)
        .collect();
    poly.extend(
        pts.iter()
            .zip(&normals)
            .rev()
            .map(|(p, nrm)| *p + *nrm * half_width),
    );
    poly
}
