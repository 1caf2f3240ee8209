use crate::geometry::{point_in_polygon, Point2, Polyline, Pose};

use super::{RoadGraph, ScenarioError};

/// Upper bound on the simulation step.
pub const MAX_DT: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Keyframe {
    pub t: f64,
    pub pose: Pose,
    pub speed: f64,
}

/// Non-reactive traffic participant replaying keyframes.
#[derive(Debug, Clone, PartialEq)]
pub struct ScriptedAgent {
    pub id: String,
    pub length: f64,
    pub width: f64,
    pub keyframes: Vec<Keyframe>,
}

impl ScriptedAgent {
    /// A stationary agent held at `pose`.
    pub fn parked(id: impl Into<String>, pose: Pose, length: f64, width: f64) -> Self {
        ScriptedAgent {
            id: id.into(),
            length,
            width,
            keyframes: vec![Keyframe {
                t: 0.0,
                pose,
                speed: 0.0,
            }],
        }
    }

    /// Agent driving along `path` from arc length `s0` at constant `speed`,
    /// continuing straight past the end. Keyframes every half second.
    pub fn along_path(
        id: impl Into<String>,
        path: &Polyline,
        s0: f64,
        speed: f64,
        duration: f64,
        length: f64,
        width: f64,
    ) -> Self {
        let line = path.extended(s0 + speed * duration + 1.0);
        let n = (duration / 0.5).ceil().max(1.0) as usize;
        let keyframes = (0..=n)
            .map(|k| {
                let t = (k as f64 * 0.5).min(duration);
                Keyframe {
                    t,
                    pose: line.pose_at(s0 + speed * t),
                    speed,
                }
            })
            .collect();
        ScriptedAgent {
            id: id.into(),
            length,
            width,
            keyframes,
        }
    }

    /// Constant-velocity agent moving along its heading for `duration`.
    pub fn constant_velocity(
        id: impl Into<String>,
        start: Pose,
        speed: f64,
        duration: f64,
        length: f64,
        width: f64,
    ) -> Self {
        let end = Pose::new(
            start.position + start.forward() * (speed * duration),
            start.heading,
        );
        ScriptedAgent {
            id: id.into(),
            length,
            width,
            keyframes: vec![
                Keyframe {
                    t: 0.0,
                    pose: start,
                    speed,
                },
                Keyframe {
                    t: duration,
                    pose: end,
                    speed,
                },
            ],
        }
    }
}

/// The unit of evaluation: a map, an ego start, a route request and traffic.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub id: String,
    pub graph: RoadGraph,
    pub corridor: Vec<Vec<Point2>>,
    pub ego_start: Pose,
    pub ego_speed0: f64,
    pub route_request: (String, String),
    pub agents: Vec<ScriptedAgent>,
    pub duration: f64,
    pub dt: f64,
    pub expert_override: Option<Polyline>,
}

fn invariant(field: &str, message: impl Into<String>) -> ScenarioError {
    ScenarioError::Invariant {
        field: field.to_string(),
        message: message.into(),
    }
}

impl Scenario {
    /// Checks every scenario invariant.
    pub fn validate(&self) -> Result<(), ScenarioError> {
        if self.id.is_empty() {
            return Err(invariant("id", "must not be empty"));
        }
        if !(self.dt > 0.0 && self.dt <= MAX_DT) {
            return Err(invariant(
                "dt",
                format!("must satisfy 0 < dt <= {MAX_DT}, got {}", self.dt),
            ));
        }
        if !(self.duration >= self.dt) || !self.duration.is_finite() {
            return Err(invariant(
                "duration",
                format!("must be at least dt ({}), got {}", self.dt, self.duration),
            ));
        }
        if !(self.ego_speed0 >= 0.0 && self.ego_speed0.is_finite()) {
            return Err(invariant("ego.speed", "must be finite and >= 0"));
        }
        if !self.ego_start.position.is_finite() || !self.ego_start.heading.is_finite() {
            return Err(invariant("ego", "pose must be finite"));
        }
        if self.corridor.is_empty() {
            return Err(invariant("corridor", "at least one polygon is required"));
        }
        for (i, poly) in self.corridor.iter().enumerate() {
            if poly.iter().any(|p| !p.is_finite()) {
                return Err(invariant(&format!("corridor[{i}]"), "non-finite vertex"));
            }
            // probe with the polygon's own first vertex to surface degeneracy
            point_in_polygon(poly.first().copied().unwrap_or_default(), poly)
                .map_err(|e| invariant(&format!("corridor[{i}]"), e.to_string()))?;
        }
        let inside = self
            .corridor
            .iter()
            .any(|poly| point_in_polygon(self.ego_start.position, poly).unwrap_or(false));
        if !inside {
            return Err(invariant("ego", "start position lies outside the corridor"));
        }
        let (start, goal) = &self.route_request;
        for (field, node) in [("route.start", start), ("route.goal", goal)] {
            if self.graph.node(node).is_none() {
                return Err(invariant(field, format!("unknown node {node:?}")));
            }
        }
        if start == goal {
            return Err(invariant("route", "start and goal must differ"));
        }
        let mut seen = std::collections::BTreeSet::new();
        for (i, a) in self.agents.iter().enumerate() {
            let field = format!("agents[{i}]");
            if !seen.insert(a.id.as_str()) {
                return Err(invariant(&field, format!("duplicate agent id {:?}", a.id)));
            }
            if !(a.length > 0.0 && a.width > 0.0) {
                return Err(invariant(&field, "length and width must be > 0"));
            }
            let Some(first) = a.keyframes.first() else {
                return Err(invariant(&field, "needs at least one keyframe"));
            };
            if first.t != 0.0 {
                return Err(invariant(&field, "first keyframe must be at t = 0"));
            }
            for w in a.keyframes.windows(2) {
                if !(w[1].t > w[0].t) {
                    return Err(invariant(
                        &field,
                        "keyframe times must be strictly increasing",
                    ));
                }
            }
            for k in &a.keyframes {
                if !(k.speed >= 0.0) || !k.pose.position.is_finite() || !k.pose.heading.is_finite()
                {
                    return Err(invariant(
                        &field,
                        "keyframe values must be finite, speed >= 0",
                    ));
                }
            }
        }
        Ok(())
    }

    /// Number of simulation steps covering the duration.
    pub fn step_count(&self) -> usize {
        (self.duration / self.dt - 1e-9).ceil() as usize
    }

    pub fn is_inside_corridor(&self, p: Point2) -> bool {
        self.corridor
            .iter()
            .any(|poly| crate::geometry::point_in_polygon_unchecked(p, poly))
    }
}
