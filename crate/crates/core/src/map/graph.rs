use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::MapError;
use crate::geometry::{normalize_angle, Point2, Polyline, Projection};

/// Allowed distance between an edge's centerline ends and its nodes.
pub const ENDPOINT_TOLERANCE: f64 = 0.1;

/// Closed vocabulary of edge annotations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeTag {
    Roundabout,
    Highway,
    Tunnel,
    RightTurnLane,
    LeftTurnLane,
    Merge,
    ExitRamp,
    IntersectionApproach,
    None,
}

impl EdgeTag {
    pub const ALL: [EdgeTag; 9] = [
        EdgeTag::Roundabout,
        EdgeTag::Highway,
        EdgeTag::Tunnel,
        EdgeTag::RightTurnLane,
        EdgeTag::LeftTurnLane,
        EdgeTag::Merge,
        EdgeTag::ExitRamp,
        EdgeTag::IntersectionApproach,
        EdgeTag::None,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            EdgeTag::Roundabout => "roundabout",
            EdgeTag::Highway => "highway",
            EdgeTag::Tunnel => "tunnel",
            EdgeTag::RightTurnLane => "right_turn_lane",
            EdgeTag::LeftTurnLane => "left_turn_lane",
            EdgeTag::Merge => "merge",
            EdgeTag::ExitRamp => "exit_ramp",
            EdgeTag::IntersectionApproach => "intersection_approach",
            EdgeTag::None => "none",
        }
    }
}

impl fmt::Display for EdgeTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    pub id: String,
    pub from: String,
    pub to: String,
    pub centerline: Polyline,
    pub lane_width: f64,
    pub speed_limit: f64,
    pub tags: BTreeSet<EdgeTag>,
}

impl Edge {
    pub fn has_tag(&self, tag: EdgeTag) -> bool {
        self.tags.contains(&tag)
    }

    pub fn length(&self) -> f64 {
        self.centerline.length()
    }

    /// First tag other than `none`, in vocabulary order.
    pub fn primary_tag(&self) -> Option<EdgeTag> {
        self.tags.iter().copied().find(|t| *t != EdgeTag::None)
    }
}

/// Directed road graph. Ids are kept in sorted maps so iteration order is
/// deterministic.
#[derive(Debug, Clone, PartialEq)]
pub struct RoadGraph {
    nodes: BTreeMap<String, Point2>,
    edges: BTreeMap<String, Edge>,
    outgoing: BTreeMap<String, Vec<String>>,
    incoming: BTreeMap<String, Vec<String>>,
}

impl RoadGraph {
    pub fn new(nodes: BTreeMap<String, Point2>, edges: Vec<Edge>) -> Result<Self, MapError> {
        let mut edge_map = BTreeMap::new();
        let mut outgoing: BTreeMap<String, Vec<String>> =
            nodes.keys().map(|k| (k.clone(), Vec::new())).collect();
        let mut incoming = outgoing.clone();
        for (id, p) in &nodes {
            if !p.is_finite() {
                return Err(MapError::Invalid(format!(
                    "node {id} has non-finite position"
                )));
            }
        }
        for e in edges {
            let from = nodes
                .get(&e.from)
                .ok_or_else(|| MapError::UnknownNode(e.from.clone()))?;
            let to = nodes
                .get(&e.to)
                .ok_or_else(|| MapError::UnknownNode(e.to.clone()))?;
            let d0 = e.centerline.first().dist(*from);
            let d1 = e.centerline.last().dist(*to);
            if d0 > ENDPOINT_TOLERANCE || d1 > ENDPOINT_TOLERANCE {
                return Err(MapError::EndpointMismatch {
                    edge: e.id.clone(),
                    offset: d0.max(d1),
                });
            }
            if !(e.lane_width > 0.0 && e.lane_width.is_finite()) {
                return Err(MapError::Invalid(format!(
                    "edge {} lane_width must be > 0",
                    e.id
                )));
            }
            if !(e.speed_limit > 0.0 && e.speed_limit.is_finite()) {
                return Err(MapError::Invalid(format!(
                    "edge {} speed_limit must be > 0",
                    e.id
                )));
            }
            outgoing
                .get_mut(&e.from)
                .expect("checked")
                .push(e.id.clone());
            incoming.get_mut(&e.to).expect("checked").push(e.id.clone());
            if let Some(old) = edge_map.insert(e.id.clone(), e) {
                return Err(MapError::DuplicateId(old.id));
            }
        }
        for list in outgoing.values_mut().chain(incoming.values_mut()) {
            list.sort();
        }
        Ok(RoadGraph {
            nodes,
            edges: edge_map,
            outgoing,
            incoming,
        })
    }

    pub fn nodes(&self) -> &BTreeMap<String, Point2> {
        &self.nodes
    }

    pub fn edges(&self) -> impl Iterator<Item = &Edge> {
        self.edges.values()
    }

    pub fn node(&self, id: &str) -> Option<Point2> {
        self.nodes.get(id).copied()
    }

    pub fn edge(&self, id: &str) -> Option<&Edge> {
        self.edges.get(id)
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Outgoing edges of a node, sorted by id.
    pub fn out_edges(&self, node: &str) -> Vec<&Edge> {
        self.outgoing
            .get(node)
            .map(|ids| ids.iter().map(|id| &self.edges[id]).collect())
            .unwrap_or_default()
    }

    pub fn in_edges(&self, node: &str) -> Vec<&Edge> {
        self.incoming
            .get(node)
            .map(|ids| ids.iter().map(|id| &self.edges[id]).collect())
            .unwrap_or_default()
    }

    /// Nearest edge whose local direction agrees with `heading` to within
    /// `max_heading_diff`. Ties go to the smaller edge id.
    pub fn nearest_edge(
        &self,
        p: Point2,
        heading: f64,
        max_heading_diff: f64,
    ) -> Option<(&Edge, Projection)> {
        let mut best: Option<(&Edge, Projection)> = None;
        for e in self.edges.values() {
            let Some(pr) = e
                .centerline
                .project_with_heading(p, heading, max_heading_diff)
            else {
                continue;
            };
            if best
                .as_ref()
                .is_none_or(|(_, b)| pr.distance < b.distance - 1e-9)
            {
                best = Some((e, pr));
            }
        }
        best
    }

    /// Undirected connectivity check.
    pub fn is_connected(&self) -> bool {
        let Some(start) = self.nodes.keys().next() else {
            return true;
        };
        let mut seen = BTreeSet::new();
        let mut stack = vec![start.as_str()];
        while let Some(n) = stack.pop() {
            if !seen.insert(n) {
                continue;
            }
            for e in self.out_edges(n) {
                stack.push(&e.to);
            }
            for e in self.in_edges(n) {
                stack.push(&e.from);
            }
        }
        seen.len() == self.nodes.len()
    }

    /// Heading change from the end of `a` into the start of `b`.
    pub fn junction_angle(a: &Edge, b: &Edge) -> f64 {
        let ha = a.centerline.heading_at_clamped(a.length());
        let hb = b.centerline.heading_at_clamped(0.0);
        normalize_angle(hb - ha)
    }
}
