//! Kinematic bicycle model, scripted traffic playback, event detection and
//! the closed-loop episode runner.

mod episode;
mod tracking;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{convex_clip, normalize_angle, polygon_centroid, OrientedBox, Pose};
use crate::map::{MapError, ScenarioError, ScriptedAgent};

pub use episode::{
    derive_seed, open_loop_plans, run_episode, run_episode_with_expert, AgentState, CollisionEvent,
    EpisodeConfig, EpisodeLog, EpisodeStatus, NavVariant, OpenLoopSample, StepRecord,
    GOAL_TOLERANCE,
};
pub use tracking::{Tracker, TrackerConfig};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error(transparent)]
    Map(#[from] MapError),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error("invalid episode configuration: {0}")]
    Config(String),
}

/// Ego vehicle state. `accel` is (longitudinal, lateral) in the ego frame.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EgoState {
    pub pose: Pose,
    pub v: f64,
    pub accel: (f64, f64),
    pub steering: f64,
}

impl EgoState {
    pub fn at_rest(pose: Pose) -> Self {
        EgoState {
            pose,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BicycleParams {
    pub wheelbase: f64,
    pub max_steer: f64,
    pub max_accel: f64,
    /// Braking limit as a positive magnitude.
    pub max_decel: f64,
    pub length: f64,
    pub width: f64,
}

impl Default for BicycleParams {
    fn default() -> Self {
        BicycleParams {
            wheelbase: 2.8,
            max_steer: 0.6,
            max_accel: 3.0,
            max_decel: 6.0,
            length: 4.6,
            width: 1.9,
        }
    }
}

impl BicycleParams {
    pub fn footprint(&self, pose: &Pose) -> OrientedBox {
        OrientedBox::at_pose(pose, self.length, self.width)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ControlInput {
    pub accel: f64,
    pub steer: f64,
}

/// One explicit-Euler step of the kinematic bicycle. Inputs are clamped to
/// the vehicle limits and speed never goes negative.
pub fn step_bicycle(
    state: &EgoState,
    u: ControlInput,
    params: &BicycleParams,
    dt: f64,
) -> EgoState {
    let accel = u.accel.clamp(-params.max_decel, params.max_accel);
    let steer = u.steer.clamp(-params.max_steer, params.max_steer);
    let (x, y) = (state.pose.position.x, state.pose.position.y);
    let th = state.pose.heading;
    let v = state.v;
    let nx = x + v * th.cos() * dt;
    let ny = y + v * th.sin() * dt;
    let nth = th + v / params.wheelbase * steer.tan() * dt;
    let nv = (v + accel * dt).max(0.0);
    EgoState {
        pose: Pose::xyh(nx, ny, nth),
        v: nv,
        accel: (accel, nv * nv * steer.tan() / params.wheelbase),
        steering: steer,
    }
}

/// Agent pose and speed at time `t`, interpolated between keyframes. After
/// the last keyframe the agent holds its pose (and is stationary if it ever
/// moved along a keyframe sequence).
pub fn agent_pose_at(agent: &ScriptedAgent, t: f64) -> (Pose, f64) {
    let kf = &agent.keyframes;
    let last = kf.last().expect("validated agents have keyframes");
    if t >= last.t {
        let speed = if kf.len() > 1 && t > last.t {
            0.0
        } else {
            last.speed
        };
        return (last.pose, speed);
    }
    let idx = kf.partition_point(|k| k.t <= t).max(1);
    let (a, b) = (&kf[idx - 1], &kf[idx]);
    let u = (t - a.t) / (b.t - a.t);
    let dh = normalize_angle(b.pose.heading - a.pose.heading);
    (
        Pose::new(
            a.pose.position.lerp(b.pose.position, u),
            a.pose.heading + dh * u,
        ),
        a.speed + (b.speed - a.speed) * u,
    )
}

/// Fault attribution for a contact between the ego and another box: the
/// ego is at fault when moving, or when the contact region lies in the
/// front half of its footprint.
pub fn at_fault(ego: &EgoState, params: &BicycleParams, other: &OrientedBox) -> bool {
    if ego.v > 0.1 {
        return true;
    }
    let ego_box = params.footprint(&ego.pose);
    let region = convex_clip(&ego_box.corners(), &other.corners());
    let contact = polygon_centroid(&region)
        .or_else(|| region.first().copied())
        .unwrap_or(other.center);
    ego.pose.to_local(contact).x > 0.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Point2;
    use crate::map::Keyframe;

    #[test]
    fn straight_step_is_exact() {
        let s = EgoState {
            v: 10.0,
            ..Default::default()
        };
        let n = step_bicycle(&s, ControlInput::default(), &BicycleParams::default(), 0.1);
        assert_eq!(n.pose.position, Point2::new(1.0, 0.0));
        assert_eq!(n.pose.heading, 0.0);
        assert_eq!(n.v, 10.0);
    }

    #[test]
    fn braking_clamps_and_floors() {
        let s = EgoState {
            v: 0.3,
            ..Default::default()
        };
        let n = step_bicycle(
            &s,
            ControlInput {
                accel: -20.0,
                steer: 0.0,
            },
            &BicycleParams::default(),
            0.1,
        );
        assert_eq!(n.v, 0.0);
        assert_eq!(n.accel.0, -6.0);
    }

    #[test]
    fn agent_interpolation() {
        let agent = ScriptedAgent {
            id: "a".into(),
            length: 4.0,
            width: 2.0,
            keyframes: vec![
                Keyframe {
                    t: 0.0,
                    pose: Pose::xyh(0.0, 0.0, 0.0),
                    speed: 1.0,
                },
                Keyframe {
                    t: 2.0,
                    pose: Pose::xyh(2.0, 0.0, 0.0),
                    speed: 1.0,
                },
            ],
        };
        assert_eq!(agent_pose_at(&agent, 1.0).0.position, Point2::new(1.0, 0.0));
        assert_eq!(agent_pose_at(&agent, 2.0), (Pose::xyh(2.0, 0.0, 0.0), 1.0));
        assert_eq!(agent_pose_at(&agent, 5.0), (Pose::xyh(2.0, 0.0, 0.0), 0.0));
    }

    #[test]
    fn fault_rules() {
        let p = BicycleParams::default();
        let still = EgoState::at_rest(Pose::xyh(0.0, 0.0, 0.0));
        // agent touching the rear bumper
        let behind = OrientedBox::new(Point2::new(-4.5, 0.0), 0.0, 2.3, 0.95);
        assert!(!at_fault(&still, &p, &behind));
        let ahead = OrientedBox::new(Point2::new(4.5, 0.0), 0.0, 2.3, 0.95);
        assert!(at_fault(&still, &p, &ahead));
        let moving = EgoState { v: 5.0, ..still };
        assert!(at_fault(&moving, &p, &behind));
    }
}
