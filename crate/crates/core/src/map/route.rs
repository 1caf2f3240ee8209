use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};

use super::{Edge, MapError, RoadGraph};
use crate::geometry::{Point2, Polyline, Pose, Projection};

/// Joint tolerance when stitching edge centerlines together.
const JOIN_TOLERANCE: f64 = 0.2;

/// A planned chain of edges and its stitched centerline.
#[derive(Debug, Clone, PartialEq)]
pub struct GlobalRoute {
    pub edge_ids: Vec<String>,
    pub centerline: Polyline,
    pub goal: Point2,
    /// Arc-length interval of each edge on the stitched centerline.
    spans: Vec<(f64, f64)>,
}

impl GlobalRoute {
    /// Stitches an explicit chain of edges.
    pub fn from_edges(graph: &RoadGraph, edge_ids: &[String]) -> Result<Self, MapError> {
        let edges: Vec<&Edge> = edge_ids
            .iter()
            .map(|id| {
                graph
                    .edge(id)
                    .ok_or_else(|| MapError::UnknownEdge(id.clone()))
            })
            .collect::<Result<_, _>>()?;
        let Some(first) = edges.first() else {
            return Err(MapError::Invalid("a route needs at least one edge".into()));
        };
        for w in edges.windows(2) {
            if w[0].to != w[1].from {
                return Err(MapError::Invalid(format!(
                    "edges {} and {} do not share a node",
                    w[0].id, w[1].id
                )));
            }
        }
        let mut centerline = first.centerline.clone();
        let mut spans = vec![(0.0, centerline.length())];
        for e in &edges[1..] {
            let start = centerline.length();
            centerline = centerline.concat(&e.centerline, JOIN_TOLERANCE)?;
            spans.push((start, centerline.length()));
        }
        let goal = graph
            .node(&edges.last().expect("non-empty").to)
            .expect("graph edges reference existing nodes");
        Ok(GlobalRoute {
            edge_ids: edge_ids.to_vec(),
            centerline,
            goal,
            spans,
        })
    }

    pub fn length(&self) -> f64 {
        self.centerline.length()
    }

    pub fn spans(&self) -> &[(f64, f64)] {
        &self.spans
    }

    /// Index of the edge covering arc length `s`; a joint belongs to the
    /// following edge.
    pub fn edge_index_at(&self, s: f64) -> usize {
        let idx = self.spans.partition_point(|(a, _)| *a <= s);
        idx.saturating_sub(1).min(self.spans.len() - 1)
    }

    pub fn edge_id_at(&self, s: f64) -> &str {
        &self.edge_ids[self.edge_index_at(s)]
    }

    /// Copy with the centerline extended straight past the goal. Spans and
    /// goal are unchanged; the tail belongs to the last edge.
    pub fn with_tail(&self, extra: f64) -> GlobalRoute {
        let mut r = self.clone();
        r.centerline = self.centerline.extended(extra);
        if let Some(last) = r.spans.last_mut() {
            last.1 = r.centerline.length();
        }
        r
    }

    /// Projection restricted to segments heading within 90° of `heading`,
    /// falling back to the global closest point.
    pub fn locate(&self, p: Point2, heading: f64) -> Projection {
        self.centerline
            .project_with_heading(p, heading, std::f64::consts::FRAC_PI_2)
            .unwrap_or_else(|| self.centerline.project(p))
    }
}

/// Arc-length progress along a route, followed through a moving window so
/// that loops and near passes of the centerline cannot cause jumps.
#[derive(Debug, Clone)]
pub struct ProgressTracker<'a> {
    route: &'a GlobalRoute,
    s: f64,
}

impl<'a> ProgressTracker<'a> {
    /// Search window behind and ahead of the last progress, meters.
    pub const BACK: f64 = 10.0;
    pub const AHEAD: f64 = 30.0;
    /// Positions farther than this from the route leave progress unchanged.
    pub const MAX_OFFSET: f64 = 5.0;

    pub fn new(route: &'a GlobalRoute, start: &Pose) -> Self {
        ProgressTracker {
            route,
            s: route.locate(start.position, start.heading).s,
        }
    }

    pub fn update(&mut self, p: Point2) -> f64 {
        if let Some(pr) =
            self.route
                .centerline
                .project_in_window(p, self.s - Self::BACK, self.s + Self::AHEAD)
        {
            if pr.distance <= Self::MAX_OFFSET {
                self.s = pr.s;
            }
        }
        self.s
    }

    pub fn s(&self) -> f64 {
        self.s
    }
}

#[derive(Debug, PartialEq)]
struct OpenEntry {
    f: f64,
    g: f64,
    node: String,
}

impl Eq for OpenEntry {}

impl Ord for OpenEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        // min-heap on f, then on node id for determinism
        other
            .f
            .total_cmp(&self.f)
            .then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for OpenEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Minimum-arc-length route by A* with a straight-line heuristic. Equal-cost
/// alternatives resolve to the lexicographically smaller incoming edge id.
pub fn plan_global_route(
    graph: &RoadGraph,
    start: &str,
    goal: &str,
) -> Result<GlobalRoute, MapError> {
    let start_pos = graph
        .node(start)
        .ok_or_else(|| MapError::UnknownNode(start.to_string()))?;
    let goal_pos = graph
        .node(goal)
        .ok_or_else(|| MapError::UnknownNode(goal.to_string()))?;
    if start == goal {
        return Err(MapError::Invalid("start and goal must differ".into()));
    }
    let heuristic = |n: &str| graph.node(n).map_or(0.0, |p| p.dist(goal_pos));

    let mut g_score: HashMap<String, f64> = HashMap::new();
    let mut came_from: HashMap<String, String> = HashMap::new();
    let mut closed: HashMap<String, bool> = HashMap::new();
    let mut open = BinaryHeap::new();
    g_score.insert(start.to_string(), 0.0);
    open.push(OpenEntry {
        f: start_pos.dist(goal_pos),
        g: 0.0,
        node: start.to_string(),
    });

    while let Some(OpenEntry { g, node, .. }) = open.pop() {
        if closed.contains_key(&node) {
            continue;
        }
        if g > g_score.get(&node).copied().unwrap_or(f64::INFINITY) + 1e-9 {
            continue;
        }
        if node == goal {
            break;
        }
        closed.insert(node.clone(), true);
        for e in graph.out_edges(&node) {
            if closed.contains_key(&e.to) {
                continue;
            }
            let tentative = g + e.length();
            let current = g_score.get(&e.to).copied().unwrap_or(f64::INFINITY);
            let better = tentative < current - 1e-9;
            let tie = (tentative - current).abs() <= 1e-9
                && came_from.get(&e.to).is_some_and(|prev| e.id < *prev);
            if better || tie {
                g_score.insert(e.to.clone(), tentative);
                came_from.insert(e.to.clone(), e.id.clone());
                open.push(OpenEntry {
                    f: tentative + heuristic(&e.to),
                    g: tentative,
                    node: e.to.clone(),
                });
            }
        }
    }

    if !came_from.contains_key(goal) {
        return Err(MapError::NoRoute {
            start: start.to_string(),
            goal: goal.to_string(),
        });
    }
    let mut chain = Vec::new();
    let mut cur = goal.to_string();
    while cur != start {
        let eid = came_from[&cur].clone();
        cur = graph.edge(&eid).expect("known edge").from.clone();
        chain.push(eid);
    }
    chain.reverse();
    GlobalRoute::from_edges(graph, &chain)
}

/// Sum of edge lengths along a route.
pub fn route_cost(graph: &RoadGraph, route: &GlobalRoute) -> f64 {
    route
        .edge_ids
        .iter()
        .filter_map(|id| graph.edge(id))
        .map(Edge::length)
        .sum()
}
