//! Road graphs, scenarios, the JSON scenario format, A* routing and the
//! scenario generators.

mod bundled;
mod format;
mod generators;
mod graph;
mod route;
mod scenario;

use thiserror::Error;

use crate::geometry::GeometryError;

pub use bundled::{bundled, bundled_ids, multi_exit_suite, straight_suite, turn_suite};
pub use format::{parse_scenario, serialize_scenario, ScenarioDoc};
pub use generators::{
    make_bvr_lane_change_scenario, make_curve_scenario, make_intersection_scenario,
    make_parked_bypass_scenario, make_roundabout_scenario, make_s_bend_scenario,
    make_straight_scenario, GeneratedScenario, JunctionInfo, JunctionKind, StraightTraffic,
};
pub use graph::{Edge, EdgeTag, RoadGraph, ENDPOINT_TOLERANCE};
pub use route::{plan_global_route, route_cost, GlobalRoute, ProgressTracker};
pub use scenario::{Keyframe, Scenario, ScriptedAgent, MAX_DT};

/// Lane width used by every generator, meters.
pub const LANE_WIDTH: f64 = 3.5;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MapError {
    #[error("unknown node {0:?}")]
    UnknownNode(String),
    #[error("unknown edge {0:?}")]
    UnknownEdge(String),
    #[error("duplicate id {0:?}")]
    DuplicateId(String),
    #[error("edge {edge} centerline ends {offset:.3} m away from its node")]
    EndpointMismatch { edge: String, offset: f64 },
    #[error("no route from {start:?} to {goal:?}")]
    NoRoute { start: String, goal: String },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Scenario document failures, one variant per validation stage.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScenarioError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("schema error at {path}: {message}")]
    Schema { path: String, message: String },
    #[error("invariant violated for {field}: {message}")]
    Invariant { field: String, message: String },
}
