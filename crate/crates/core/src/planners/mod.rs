//! Planner interface and the three rule-based baselines.

mod command;
mod expert;
mod profile;
mod sng;

use std::fmt;

use thiserror::Error;

use crate::geometry::{Point2, Pose, TimedPose};
use crate::map::{RoadGraph, ScriptedAgent};
use crate::navigation::{DrivingCommand, NavigationPath, TbtInfo};
use crate::sim::EgoState;

pub use command::{junction_exits, CommandPlanner, ExitOption};
pub use expert::{plan_expert, ExpertPlanner, ExpertTrajectory};
pub use profile::{pursuit_path, speed_profile, waypoints_along, ProfileConfig, SpeedProfile};
pub use sng::{SngPlanner, SngPlannerConfig};

/// Waypoint spacing in time, seconds.
pub const WAYPOINT_DT: f64 = 0.5;
/// Default number of future waypoints (4 s).
pub const DEFAULT_HORIZON_POINTS: usize = 8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PlannerError {
    #[error("planner {planner} cannot use navigation input {nav}")]
    WrongNav {
        planner: &'static str,
        nav: &'static str,
    },
    #[error("navigation path has no points")]
    EmptyPath,
    #[error("no lane found near the ego")]
    NoLane,
    #[error("ego is {0:.2} m away from the reference path")]
    OffReference(f64),
}

/// A nearby traffic participant as seen by the planner (world frame).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AgentObs {
    pub pose: Pose,
    pub speed: f64,
    pub length: f64,
    pub width: f64,
}

/// SNG components available to the planner; either may be withheld.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SngView {
    pub path: Option<NavigationPath>,
    pub tbt: Option<TbtInfo>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum NavInput {
    NoNav,
    Command(DrivingCommand),
    Sng(SngView),
}

impl NavInput {
    pub fn kind(&self) -> &'static str {
        match self {
            NavInput::NoNav => "none",
            NavInput::Command(_) => "command",
            NavInput::Sng(_) => "sng",
        }
    }
}

/// Everything a planner may look at during one replanning step.
#[derive(Debug, Clone)]
pub struct Observation<'a> {
    pub t: f64,
    pub ego: EgoState,
    /// Agents within the observation radius.
    pub agents: Vec<AgentObs>,
    pub corridor: &'a [Vec<Point2>],
    /// Lane-level map without the route.
    pub graph: &'a RoadGraph,
    /// Speed limit of the lane the ego is on.
    pub speed_limit: f64,
    pub nav: NavInput,
    /// A driving command carried next to `nav` regardless of its variant.
    /// Planners conditioned on other inputs never read it.
    pub side_command: Option<DrivingCommand>,
}

/// Future ego positions in the ego frame at `WAYPOINT_DT` spacing. Index 0
/// is the anchor at the current time.
#[derive(Debug, Clone, PartialEq)]
pub struct PlannedTrajectory {
    pub waypoints: Vec<Point2>,
    /// Set when the planner fell back to a default choice.
    pub warning: Option<String>,
}

impl PlannedTrajectory {
    /// Number of future waypoints (excluding the anchor).
    pub fn horizon_points(&self) -> usize {
        self.waypoints.len().saturating_sub(1)
    }

    /// Checks anchor proximity and the spacing bound for `v_max`.
    pub fn check(&self, v_max: f64) -> Result<(), String> {
        let first = self.waypoints.first().ok_or("no waypoints")?;
        if first.norm() > 2.0 {
            return Err(format!("first waypoint {:.2} m from the ego", first.norm()));
        }
        for (i, w) in self.waypoints.windows(2).enumerate() {
            let d = w[0].dist(w[1]);
            if d > v_max * WAYPOINT_DT + 2.0 {
                return Err(format!("waypoints {i} and {} are {d:.2} m apart", i + 1));
            }
        }
        Ok(())
    }
}

pub trait Planner: Send + Sync {
    fn name(&self) -> &'static str;
    fn plan(&self, obs: &Observation<'_>) -> Result<PlannedTrajectory, PlannerError>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PlannerKind {
    Expert,
    Command,
    Sng,
}

impl PlannerKind {
    pub const ALL: [PlannerKind; 3] = [PlannerKind::Expert, PlannerKind::Command, PlannerKind::Sng];

    pub fn as_str(self) -> &'static str {
        match self {
            PlannerKind::Expert => "expert",
            PlannerKind::Command => "command",
            PlannerKind::Sng => "sng",
        }
    }

    pub fn parse(text: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.as_str() == text)
    }
}

impl fmt::Display for PlannerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Agent state helper used by the runner.
pub(crate) fn agent_obs(agent: &ScriptedAgent, t: f64) -> AgentObs {
    let (pose, speed) = crate::sim::agent_pose_at(agent, t);
    AgentObs {
        pose,
        speed,
        length: agent.length,
        width: agent.width,
    }
}

/// Expert poses sampled at the waypoint rate starting from `t0`.
pub(crate) fn expert_waypoints(expert: &[TimedPose], t0: f64, n: usize) -> Option<Vec<Pose>> {
    (0..=n)
        .map(|k| crate::geometry::interpolate_timed(expert, t0 + k as f64 * WAYPOINT_DT))
        .collect()
}
