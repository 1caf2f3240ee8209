//! JSON scenario documents.
//!
//! Top-level keys: `id`, `graph {nodes[], edges[]}`, `corridor[]`,
//! `ego {x, y, heading, speed}`, `route {start, goal}`, `agents[]`,
//! `duration`, `dt` and an optional `expert_override`. Unknown keys are
//! rejected. Distances are meters, angles radians, speeds m/s.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{Edge, EdgeTag, Keyframe, MapError, RoadGraph, Scenario, ScenarioError, ScriptedAgent};
use crate::geometry::{Point2, Polyline, Pose};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioDoc {
    pub id: String,
    pub graph: GraphDoc,
    pub corridor: Vec<Vec<[f64; 2]>>,
    pub ego: EgoDoc,
    pub route: RouteDoc,
    pub agents: Vec<AgentDoc>,
    pub duration: f64,
    pub dt: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expert_override: Option<Vec<[f64; 2]>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphDoc {
    pub nodes: Vec<NodeDoc>,
    pub edges: Vec<EdgeDoc>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeDoc {
    pub id: String,
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeDoc {
    pub id: String,
    pub from: String,
    pub to: String,
    pub points: Vec<[f64; 2]>,
    pub lane_width: f64,
    pub speed_limit: f64,
    #[serde(default)]
    pub tags: Vec<EdgeTag>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EgoDoc {
    pub x: f64,
    pub y: f64,
    pub heading: f64,
    pub speed: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RouteDoc {
    pub start: String,
    pub goal: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentDoc {
    pub id: String,
    pub length: f64,
    pub width: f64,
    pub keyframes: Vec<KeyframeDoc>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KeyframeDoc {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub heading: f64,
    pub speed: f64,
}

fn pts(v: &[[f64; 2]]) -> Vec<Point2> {
    v.iter().copied().map(Point2::from).collect()
}

fn arr(v: &[Point2]) -> Vec<[f64; 2]> {
    v.iter().map(|p| [p.x, p.y]).collect()
}

fn pointer(path: &serde_path_to_error::Path) -> String {
    use serde_path_to_error::Segment;
    let mut out = String::new();
    for seg in path.iter() {
        out.push('/');
        match seg {
            Segment::Seq { index } => out.push_str(&index.to_string()),
            Segment::Map { key } => out.push_str(&key.replace('~', "~0").replace('/', "~1")),
            Segment::Enum { variant } => out.push_str(variant),
            Segment::Unknown => out.push('?'),
        }
    }
    out
}

fn graph_error(e: MapError) -> ScenarioError {
    let field = match &e {
        MapError::EndpointMismatch { edge, .. } => format!("graph.edges[{edge}]"),
        MapError::UnknownNode(_) => "graph.edges".to_string(),
        _ => "graph".to_string(),
    };
    ScenarioError::Invariant {
        field,
        message: e.to_string(),
    }
}

impl ScenarioDoc {
    pub fn into_scenario(self) -> Result<Scenario, ScenarioError> {
        let mut nodes = BTreeMap::new();
        for n in &self.graph.nodes {
            if nodes.insert(n.id.clone(), Point2::new(n.x, n.y)).is_some() {
                return Err(ScenarioError::Invariant {
                    field: "graph.nodes".into(),
                    message: format!("duplicate node id {:?}", n.id),
                });
            }
        }
        let mut edges = Vec::with_capacity(self.graph.edges.len());
        for e in &self.graph.edges {
            let centerline =
                Polyline::new(pts(&e.points)).map_err(|err| ScenarioError::Invariant {
                    field: format!("graph.edges[{}].points", e.id),
                    message: err.to_string(),
                })?;
            edges.push(Edge {
                id: e.id.clone(),
                from: e.from.clone(),
                to: e.to.clone(),
                centerline,
                lane_width: e.lane_width,
                speed_limit: e.speed_limit,
                tags: e.tags.iter().copied().collect::<BTreeSet<_>>(),
            });
        }
        let graph = RoadGraph::new(nodes, edges).map_err(graph_error)?;
        let expert_override = match &self.expert_override {
            Some(p) => Some(
                Polyline::new(pts(p)).map_err(|err| ScenarioError::Invariant {
                    field: "expert_override".into(),
                    message: err.to_string(),
                })?,
            ),
            None => None,
        };
        let scenario = Scenario {
            id: self.id,
            graph,
            corridor: self.corridor.iter().map(|p| pts(p)).collect(),
            ego_start: Pose::xyh(self.ego.x, self.ego.y, self.ego.heading),
            ego_speed0: self.ego.speed,
            route_request: (self.route.start, self.route.goal),
            agents: self
                .agents
                .into_iter()
                .map(|a| ScriptedAgent {
                    id: a.id,
                    length: a.length,
                    width: a.width,
                    keyframes: a
                        .keyframes
                        .into_iter()
                        .map(|k| Keyframe {
                            t: k.t,
                            pose: Pose::xyh(k.x, k.y, k.heading),
                            speed: k.speed,
                        })
                        .collect(),
                })
                .collect(),
            duration: self.duration,
            dt: self.dt,
            expert_override,
        };
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn from_scenario(s: &Scenario) -> Self {
        ScenarioDoc {
            id: s.id.clone(),
            graph: GraphDoc {
                nodes: s
                    .graph
                    .nodes()
                    .iter()
                    .map(|(id, p)| NodeDoc {
                        id: id.clone(),
                        x: p.x,
                        y: p.y,
                    })
                    .collect(),
                edges: s
                    .graph
                    .edges()
                    .map(|e| EdgeDoc {
                        id: e.id.clone(),
                        from: e.from.clone(),
                        to: e.to.clone(),
                        points: arr(e.centerline.points()),
                        lane_width: e.lane_width,
                        speed_limit: e.speed_limit,
                        tags: e.tags.iter().copied().collect(),
                    })
                    .collect(),
            },
            corridor: s.corridor.iter().map(|p| arr(p)).collect(),
            ego: EgoDoc {
                x: s.ego_start.position.x,
                y: s.ego_start.position.y,
                heading: s.ego_start.heading,
                speed: s.ego_speed0,
            },
            route: RouteDoc {
                start: s.route_request.0.clone(),
                goal: s.route_request.1.clone(),
            },
            agents: s
                .agents
                .iter()
                .map(|a| AgentDoc {
                    id: a.id.clone(),
                    length: a.length,
                    width: a.width,
                    keyframes: a
                        .keyframes
                        .iter()
                        .map(|k| KeyframeDoc {
                            t: k.t,
                            x: k.pose.position.x,
                            y: k.pose.position.y,
                            heading: k.pose.heading,
                            speed: k.speed,
                        })
                        .collect(),
                })
                .collect(),
            duration: s.duration,
            dt: s.dt,
            expert_override: s.expert_override.as_ref().map(|p| arr(p.points())),
        }
    }
}

/// Parses and fully validates a scenario document.
pub fn parse_scenario(text: &str) -> Result<Scenario, ScenarioError> {
    let value: serde_json::Value =
        serde_json::from_str(text).map_err(|e| ScenarioError::Syntax {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
    let doc: ScenarioDoc = serde_path_to_error::deserialize(value).map_err(|e| {
        let path = pointer(e.path());
        ScenarioError::Schema {
            path,
            message: e.into_inner().to_string(),
        }
    })?;
    doc.into_scenario()
}

/// Canonical pretty-printed JSON for a scenario.
pub fn serialize_scenario(s: &Scenario) -> String {
    let mut out = serde_json::to_string_pretty(&ScenarioDoc::from_scenario(s))
        .expect("scenario documents always serialize");
    out.push('\n');
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const MINIMAL: &str = r#"{
  "id": "minimal_straight",
  "graph": {
    "nodes": [{"id": "a", "x": 0.0, "y": 0.0}, {"id": "b", "x": 100.0, "y": 0.0}],
    "edges": [{"id": "ab", "from": "a", "to": "b", "points": [[0,0],[100,0]],
               "lane_width": 3.5, "speed_limit": 10.0, "tags": []}]
  },
  "corridor": [[[-10,-3.5],[110,-3.5],[110,3.5],[-10,3.5]]],
  "ego": {"x": 5.0, "y": 0.0, "heading": 0.0, "speed": 5.0},
  "route": {"start": "a", "goal": "b"},
  "agents": [],
  "duration": 20.0,
  "dt": 0.1
}"#;

    #[test]
    fn minimal_document_parses() {
        let s = parse_scenario(MINIMAL).unwrap();
        assert_eq!(s.graph.node_count(), 2);
        assert_eq!(s.graph.edge_count(), 1);
        assert_eq!(s.step_count(), 200);
        let again = parse_scenario(&serialize_scenario(&s)).unwrap();
        assert_eq!(again, s);
    }

    #[test]
    fn zero_dt_is_an_invariant_error() {
        let text = MINIMAL.replace("\"dt\": 0.1", "\"dt\": 0.0");
        match parse_scenario(&text) {
            Err(ScenarioError::Invariant { field, .. }) => assert_eq!(field, "dt"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_tag_lists_allowed_values() {
        let text = MINIMAL.replace("\"tags\": []", "\"tags\": [\"raceway\"]");
        match parse_scenario(&text) {
            Err(ScenarioError::Schema { path, message }) => {
                assert_eq!(path, "/graph/edges/0/tags/0");
                assert!(message.contains("raceway"));
                for t in EdgeTag::ALL {
                    assert!(message.contains(t.as_str()), "{message}");
                }
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn syntax_error_has_position() {
        let text = "{\n  \"id\": \"x\",\n  oops\n}";
        match parse_scenario(text) {
            Err(ScenarioError::Syntax { line, column, .. }) => {
                assert_eq!(line, 3);
                assert!(column > 0);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_key_and_missing_field_are_schema_errors() {
        let text = MINIMAL.replace("\"dt\": 0.1", "\"dt\": 0.1, \"weather\": \"rain\"");
        assert!(matches!(
            parse_scenario(&text),
            Err(ScenarioError::Schema { .. })
        ));
        let text = MINIMAL.replace("\"speed\": 5.0", "\"speeed\": 5.0");
        match parse_scenario(&text) {
            Err(ScenarioError::Schema { path, .. }) => assert!(path.starts_with("/ego")),
            other => panic!("unexpected {other:?}"),
        }
        let text = MINIMAL.replace("\"lane_width\": 3.5", "\"lane_width\": \"wide\"");
        match parse_scenario(&text) {
            Err(ScenarioError::Schema { path, .. }) => {
                assert_eq!(path, "/graph/edges/0/lane_width")
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn ego_outside_corridor_is_rejected() {
        let text = MINIMAL.replace("\"x\": 5.0, \"y\": 0.0", "\"x\": 5.0, \"y\": 20.0");
        match parse_scenario(&text) {
            Err(ScenarioError::Invariant { field, .. }) => assert_eq!(field, "ego"),
            other => panic!("unexpected {other:?}"),
        }
    }
}
