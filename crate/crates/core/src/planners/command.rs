use std::collections::BTreeSet;
use std::f64::consts::FRAC_PI_2;

use super::expert::{merge_reference, MERGE_DISTANCE, REFERENCE_LENGTH};
use super::{
    speed_profile, waypoints_along, NavInput, Observation, PlannedTrajectory, Planner,
    PlannerError, ProfileConfig, DEFAULT_HORIZON_POINTS,
};
use crate::geometry::{normalize_angle, Polyline};
use crate::map::{Edge, EdgeTag, RoadGraph};
use crate::navigation::{command_ambiguity, DrivingCommand};

/// One way out of a junction.
#[derive(Debug, Clone, PartialEq)]
pub struct ExitOption {
    /// Edges from the junction node up to and including the first edge that
    /// leaves the junction.
    pub edges: Vec<String>,
    /// World heading on leaving the junction.
    pub heading: f64,
}

/// Exits reachable from a branching node. Inside a roundabout every way out
/// of the ring counts, found by walking roundabout edges; elsewhere each
/// outgoing edge is an exit.
pub fn junction_exits(graph: &RoadGraph, node: &str) -> Vec<ExitOption> {
    let outs = graph.out_edges(node);
    if !outs.iter().any(|e| e.has_tag(EdgeTag::Roundabout)) {
        return outs
            .iter()
            .map(|e| ExitOption {
                edges: vec![e.id.clone()],
                heading: e.centerline.heading_at_clamped(e.length()),
            })
            .collect();
    }
    let mut found = Vec::new();
    let mut visited = BTreeSet::new();
    let mut chain = Vec::new();
    walk_ring(graph, node, &mut visited, &mut chain, &mut found);
    found
}

fn walk_ring(
    graph: &RoadGraph,
    node: &str,
    visited: &mut BTreeSet<String>,
    chain: &mut Vec<String>,
    found: &mut Vec<ExitOption>,
) {
    if !visited.insert(node.to_string()) {
        return;
    }
    for e in graph.out_edges(node) {
        chain.push(e.id.clone());
        if e.has_tag(EdgeTag::Roundabout) {
            walk_ring(graph, &e.to, visited, chain, found);
        } else {
            found.push(ExitOption {
                edges: chain.clone(),
                heading: e.centerline.heading_at_clamped(0.0),
            });
        }
        chain.pop();
    }
}

/// Heading that junction exits are measured against when arriving over
/// `edge`: its own end heading, or inside a roundabout the end heading of the
/// nearest entry upstream of it.
pub fn approach_heading(graph: &RoadGraph, edge: &Edge) -> f64 {
    if !edge.has_tag(EdgeTag::Roundabout) {
        return edge.centerline.heading_at_clamped(edge.length());
    }
    // backward shortest-distance search over roundabout edges
    let mut best: Option<(f64, &Edge)> = None;
    let mut frontier: Vec<(f64, &str)> = vec![(0.0, edge.from.as_str())];
    let mut settled = BTreeSet::new();
    while let Some(i) = (0..frontier.len()).min_by(|a, b| {
        frontier[*a]
            .0
            .total_cmp(&frontier[*b].0)
            .then(frontier[*a].1.cmp(frontier[*b].1))
    }) {
        let (d, node) = frontier.swap_remove(i);
        if best.is_some_and(|(bd, _)| bd <= d) || !settled.insert(node) {
            continue;
        }
        for e in graph.in_edges(node) {
            if e.has_tag(EdgeTag::Roundabout) {
                frontier.push((d + e.length(), e.from.as_str()));
            } else if best.is_none_or(|(bd, be)| d < bd || (d == bd && e.id < be.id)) {
                best = Some((d, e));
            }
        }
    }
    best.map_or(edge.centerline.heading_at_clamped(0.0), |(_, e)| {
        e.centerline.heading_at_clamped(e.length())
    })
}

/// Lane-keeping planner that picks junction exits from a driving command.
#[derive(Debug, Clone)]
pub struct CommandPlanner {
    pub horizon_points: usize,
    /// Junctions farther than this are not decided yet, meters.
    pub decision_range: f64,
    pub profile: ProfileConfig,
}

impl Default for CommandPlanner {
    fn default() -> Self {
        CommandPlanner {
            horizon_points: DEFAULT_HORIZON_POINTS,
            decision_range: 40.0,
            profile: ProfileConfig::default(),
        }
    }
}

impl CommandPlanner {
    /// Index of the exit chosen for `cmd` given headings relative to the
    /// junction approach,
    /// and whether the command matched any exit.
    pub fn choose_exit(relative: &[f64], cmd: DrivingCommand) -> (usize, bool) {
        let straightest = |set: &mut dyn Iterator<Item = usize>| {
            set.min_by(|a, b| {
                relative[*a]
                    .abs()
                    .total_cmp(&relative[*b].abs())
                    .then(a.cmp(b))
            })
        };
        let matches =
            command_ambiguity(relative, cmd).unwrap_or_else(|_| (0..relative.len()).collect());
        let unknown = cmd == DrivingCommand::Unknown;
        match straightest(&mut matches.into_iter()) {
            Some(i) => (i, true),
            None => (straightest(&mut (0..relative.len())).unwrap_or(0), unknown),
        }
    }

    /// Edge chain ahead of the ego, with a fallback warning if the command
    /// matched no exit.
    fn lane_chain<'g>(
        &self,
        graph: &'g RoadGraph,
        start: &'g Edge,
        start_s: f64,
        cmd: DrivingCommand,
    ) -> (Vec<&'g Edge>, Option<String>) {
        let needed = MERGE_DISTANCE + REFERENCE_LENGTH;
        let mut chain = vec![start];
        let mut ahead = start.length() - start_s;
        let mut warning = None;
        for _ in 0..64 {
            if ahead >= needed {
                break;
            }
            let last = *chain.last().expect("non-empty");
            let outs = graph.out_edges(&last.to);
            match outs.len() {
                0 => break,
                1 => {
                    ahead += outs[0].length();
                    chain.push(outs[0]);
                }
                _ => {
                    if ahead > self.decision_range {
                        break;
                    }
                    let exits = junction_exits(graph, &last.to);
                    let frame = approach_heading(graph, last);
                    let relative: Vec<f64> = exits
                        .iter()
                        .map(|x| normalize_angle(x.heading - frame))
                        .collect();
                    let (pick, matched) = Self::choose_exit(&relative, cmd);
                    if !matched && warning.is_none() {
                        warning = Some(format!("no exit matches {cmd}; taking the straightest"));
                    }
                    for id in &exits[pick].edges {
                        let e = graph.edge(id).expect("exit edges exist");
                        ahead += e.length();
                        chain.push(e);
                    }
                }
            }
        }
        (chain, warning)
    }
}

impl Planner for CommandPlanner {
    fn name(&self) -> &'static str {
        "command"
    }

    fn plan(&self, obs: &Observation<'_>) -> Result<PlannedTrajectory, PlannerError> {
        let cmd = match &obs.nav {
            NavInput::Command(c) => *c,
            NavInput::NoNav => DrivingCommand::Unknown,
            other => {
                return Err(PlannerError::WrongNav {
                    planner: "command",
                    nav: other.kind(),
                })
            }
        };
        let pose = obs.ego.pose;
        let (edge, proj) = obs
            .graph
            .nearest_edge(pose.position, pose.heading, FRAC_PI_2)
            .filter(|(_, p)| p.distance <= 8.0)
            .ok_or(PlannerError::NoLane)?;
        let (chain, warning) = self.lane_chain(obs.graph, edge, proj.s, cmd);
        let mut line: Polyline = chain[0].centerline.clone();
        for e in &chain[1..] {
            line = line
                .concat(&e.centerline, 0.2)
                .map_err(|_| PlannerError::NoLane)?;
        }
        let reference = merge_reference(&pose, &line, proj.s).ok_or(PlannerError::NoLane)?;
        let profile = speed_profile(&reference, obs.speed_limit, None, &self.profile);
        Ok(PlannedTrajectory {
            waypoints: waypoints_along(
                &reference,
                &profile,
                obs.ego.v,
                self.horizon_points,
                &self.profile,
            ),
            warning,
        })
    }
}
