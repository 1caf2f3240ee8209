//! Procedural scenarios: roundabouts, intersections, the beyond-visual-range
//! lane-change road and plain roads for the straight suite.

use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::{FRAC_PI_2, PI, TAU};

use super::{
    plan_global_route, Edge, EdgeTag, MapError, RoadGraph, Scenario, ScriptedAgent, LANE_WIDTH,
};
use crate::geometry::{buffer_polyline, normalize_angle, Point2, Polyline, Pose};

const DT: f64 = 0.1;
const ARC_STEP: f64 = 1.0;
const CAR_LENGTH: f64 = 4.6;
const CAR_WIDTH: f64 = 1.9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JunctionKind {
    Roundabout,
    Intersection,
}

/// Where the route meets its junction and which exits that junction offers.
#[derive(Debug, Clone, PartialEq)]
pub struct JunctionInfo {
    pub kind: JunctionKind,
    /// Ring entry for roundabouts, stop line for intersections.
    pub decision_point: Point2,
    pub approach_heading: f64,
    /// Exit headings relative to the approach, in exit order.
    pub exit_headings: Vec<f64>,
    pub chosen: usize,
}

/// A generated scenario plus the construction facts tests rely on.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedScenario {
    pub scenario: Scenario,
    pub junction: Option<JunctionInfo>,
}

fn arc(center: Point2, radius: f64, a0: f64, sweep: f64) -> Vec<Point2> {
    let n = ((sweep.abs() * radius) / ARC_STEP).ceil().max(1.0) as usize;
    (0..=n)
        .map(|i| center + Point2::from_polar(radius, a0 + sweep * i as f64 / n as f64))
        .collect()
}

fn segment(a: Point2, b: Point2) -> Vec<Point2> {
    let n = (a.dist(b) / 10.0).ceil().max(1.0) as usize;
    (0..=n).map(|i| a.lerp(b, i as f64 / n as f64)).collect()
}

/// Cosine lateral transition along +x from `(x0, y0)` to `(x0 + len, y1)`.
fn lane_shift(x0: f64, y0: f64, len: f64, y1: f64) -> Vec<Point2> {
    let n = len.ceil() as usize;
    (0..=n)
        .map(|i| {
            let u = i as f64 / n as f64;
            Point2::new(x0 + len * u, y0 + (y1 - y0) * (1.0 - (PI * u).cos()) / 2.0)
        })
        .collect()
}

fn join(parts: &[Vec<Point2>]) -> Vec<Point2> {
    let mut out: Vec<Point2> = Vec::new();
    for part in parts {
        for p in part {
            if out.last().is_none_or(|q| q.dist(*p) > 1e-6) {
                out.push(*p);
            }
        }
    }
    out
}

#[derive(Default)]
struct RoadBuilder {
    nodes: BTreeMap<String, Point2>,
    edges: Vec<Edge>,
    corridor: Vec<Vec<Point2>>,
}

impl RoadBuilder {
    fn node(&mut self, id: &str, p: Point2) {
        self.nodes.insert(id.to_string(), p);
    }

    /// Adds an edge whose polyline is snapped onto its end nodes.
    fn edge(
        &mut self,
        id: &str,
        from: &str,
        to: &str,
        mut points: Vec<Point2>,
        speed_limit: f64,
        tags: &[EdgeTag],
    ) -> Result<(), MapError> {
        let a = self.nodes[from];
        let b = self.nodes[to];
        if let Some(p) = points.first_mut() {
            *p = a;
        }
        if let Some(p) = points.last_mut() {
            *p = b;
        }
        let centerline = Polyline::new_dedup(points, 1e-6)?;
        self.edges.push(Edge {
            id: id.to_string(),
            from: from.to_string(),
            to: to.to_string(),
            centerline,
            lane_width: LANE_WIDTH,
            speed_limit,
            tags: tags.iter().copied().collect::<BTreeSet<_>>(),
        });
        Ok(())
    }

    /// Drivable band around an edge; terminal edges are padded past their ends.
    fn band(&mut self, edge_id: &str, pad_start: f64, pad_end: f64) {
        let e = self
            .edges
            .iter()
            .find(|e| e.id == edge_id)
            .expect("edge added");
        let mut line = e.centerline.clone();
        // round caps close the wedges between bands meeting at an angle
        for c in [line.first(), line.last()] {
            self.corridor.push(
                (0..16)
                    .map(|k| c + Point2::from_polar(LANE_WIDTH, k as f64 * PI / 8.0))
                    .collect(),
            );
        }
        if pad_end > 0.0 {
            line = line.extended(pad_end);
        }
        if pad_start > 0.0 {
            line = line.reversed().extended(pad_start).reversed();
        }
        self.corridor.push(buffer_polyline(&line, LANE_WIDTH));
    }

    fn rect(&mut self, x0: f64, y0: f64, x1: f64, y1: f64) {
        self.corridor.push(vec![
            Point2::new(x0, y0),
            Point2::new(x1, y0),
            Point2::new(x1, y1),
            Point2::new(x0, y1),
        ]);
    }

    #[allow(clippy::too_many_arguments)]
    fn finish(
        self,
        id: String,
        start: &str,
        goal: &str,
        ego_offset: f64,
        agents: Vec<ScriptedAgent>,
        expert_override: Option<Polyline>,
        ego_speed0: f64,
    ) -> Result<Scenario, MapError> {
        let graph = RoadGraph::new(self.nodes, self.edges)?;
        let route = plan_global_route(&graph, start, goal)?;
        let ego_start = route.centerline.pose_at(ego_offset);
        let slowest = route
            .edge_ids
            .iter()
            .filter_map(|e| graph.edge(e))
            .map(|e| e.speed_limit)
            .fold(f64::INFINITY, f64::min);
        let duration = ((route.length() - ego_offset) / (0.5 * slowest) + 10.0).ceil();
        let scenario = Scenario {
            id,
            graph,
            corridor: self.corridor,
            ego_start,
            ego_speed0,
            route_request: (start.to_string(), goal.to_string()),
            agents,
            duration,
            dt: DT,
            expert_override,
        };
        scenario
            .validate()
            .map_err(|e| MapError::Invalid(format!("generated scenario is invalid: {e}")))?;
        Ok(scenario)
    }
}

/// Roundabout with `exits` evenly spaced arms (the entry arm included),
/// counterclockwise circulation and right-hand traffic. The route enters
/// from the west arm and leaves by the `exit_index`-th exit counted from the
/// entry; exit `exits - 1` returns along the entry arm.
pub fn make_roundabout_scenario(
    exits: usize,
    exit_index: usize,
    radius: f64,
) -> Result<GeneratedScenario, MapError> {
    if !(3..=5).contains(&exits) {
        return Err(MapError::InvalidParameter(format!(
            "exits must be in 3..=5, got {exits}"
        )));
    }
    if exit_index >= exits {
        return Err(MapError::InvalidParameter(format!(
            "exit_index {exit_index} must be below exits {exits}"
        )));
    }
    if !(radius >= 10.0) || !radius.is_finite() {
        return Err(MapError::InvalidParameter(format!(
            "radius must be >= 10 m, got {radius}"
        )));
    }
    const ARM: f64 = 60.0;
    const LIMIT: f64 = 10.0;
    let y0 = -LANE_WIDTH / 2.0;
    let entry_r = (0.6 * radius).min(10.0);
    // entry curve tangent to the approach lane and externally tangent to the ring
    let ex = -((radius + entry_r).powi(2) - (y0 - entry_r).powi(2)).sqrt();
    let entry_center = Point2::new(ex, y0 - entry_r);
    let tangent = entry_center * (radius / (radius + entry_r));
    let beta = normalize_angle(tangent.angle() - PI);
    let spacing = TAU / exits as f64;
    if spacing - 2.0 * beta < 0.15 {
        return Err(MapError::InvalidParameter(format!(
            "radius {radius} too small for {exits} exits"
        )));
    }
    let entry_a0 = FRAC_PI_2;
    let entry_sweep = (tangent - entry_center).angle() - FRAC_PI_2;
    let exit_center = Point2::new(-ex, entry_center.y);
    let exit_tangent = Point2::new(-tangent.x, tangent.y);
    let exit_a0 = (exit_tangent - exit_center).angle();
    let exit_sweep = FRAC_PI_2 - exit_a0;

    let mut b = RoadBuilder::default();
    let psi = |j: usize| PI + spacing * j as f64;
    for j in 0..exits {
        let rin = psi(j) - PI;
        let rout = psi(j);
        b.node(
            &format!("arm{j}_in_far"),
            Point2::new(-radius - ARM, y0).rotate(rin),
        );
        b.node(&format!("arm{j}_in_near"), Point2::new(ex, y0).rotate(rin));
        b.node(
            &format!("ring_in{j}"),
            Point2::from_polar(radius, psi(j) + beta),
        );
        b.node(
            &format!("ring_out{j}"),
            Point2::from_polar(radius, psi(j) - beta),
        );
        b.node(
            &format!("arm{j}_out_near"),
            Point2::new(-ex, y0).rotate(rout),
        );
        b.node(
            &format!("arm{j}_out_far"),
            Point2::new(radius + ARM, y0).rotate(rout),
        );
    }
    for j in 0..exits {
        let rin = psi(j) - PI;
        let rout = psi(j);
        let next = (j + 1) % exits;
        let far_in = b.nodes[&format!("arm{j}_in_far")];
        let near_in = b.nodes[&format!("arm{j}_in_near")];
        b.edge(
            &format!("arm{j}_approach"),
            &format!("arm{j}_in_far"),
            &format!("arm{j}_in_near"),
            segment(far_in, near_in),
            LIMIT,
            &[],
        )?;
        let entry: Vec<Point2> = arc(entry_center, entry_r, entry_a0, entry_sweep)
            .into_iter()
            .map(|p| p.rotate(rin))
            .collect();
        b.edge(
            &format!("arm{j}_entry"),
            &format!("arm{j}_in_near"),
            &format!("ring_in{j}"),
            entry,
            LIMIT,
            &[EdgeTag::Roundabout],
        )?;
        b.edge(
            &format!("ring{j}_pass"),
            &format!("ring_out{j}"),
            &format!("ring_in{j}"),
            arc(Point2::ORIGIN, radius, psi(j) - beta, 2.0 * beta),
            LIMIT,
            &[EdgeTag::Roundabout],
        )?;
        b.edge(
            &format!("ring{j}_link"),
            &format!("ring_in{j}"),
            &format!("ring_out{next}"),
            arc(Point2::ORIGIN, radius, psi(j) + beta, spacing - 2.0 * beta),
            LIMIT,
            &[EdgeTag::Roundabout],
        )?;
        let exit: Vec<Point2> = arc(exit_center, entry_r, exit_a0, exit_sweep)
            .into_iter()
            .map(|p| p.rotate(rout))
            .collect();
        b.edge(
            &format!("arm{j}_exit"),
            &format!("ring_out{j}"),
            &format!("arm{j}_out_near"),
            exit,
            LIMIT,
            &[EdgeTag::Roundabout],
        )?;
        let near_out = b.nodes[&format!("arm{j}_out_near")];
        let far_out = b.nodes[&format!("arm{j}_out_far")];
        b.edge(
            &format!("arm{j}_depart"),
            &format!("arm{j}_out_near"),
            &format!("arm{j}_out_far"),
            segment(near_out, far_out),
            LIMIT,
            &[],
        )?;
    }
    for j in 0..exits {
        b.band(&format!("arm{j}_approach"), 10.0, 0.0);
        b.band(&format!("arm{j}_entry"), 0.0, 0.0);
        b.band(&format!("ring{j}_pass"), 0.0, 0.0);
        b.band(&format!("ring{j}_link"), 0.0, 0.0);
        b.band(&format!("arm{j}_exit"), 0.0, 0.0);
        b.band(&format!("arm{j}_depart"), 0.0, 10.0);
    }
    let exit_arm = (exit_index + 1) % exits;
    let decision_point = b.nodes["ring_in0"];
    let exit_headings = (0..exits)
        .map(|k| normalize_angle(psi((k + 1) % exits)))
        .collect();
    let scenario = b.finish(
        format!(
            "roundabout_n{exits}_exit{exit_index}_r{}",
            radius.round() as i64
        ),
        "arm0_in_far",
        &format!("arm{exit_arm}_out_far"),
        5.0,
        Vec::new(),
        None,
        LIMIT,
    )?;
    Ok(GeneratedScenario {
        scenario,
        junction: Some(JunctionInfo {
            kind: JunctionKind::Roundabout,
            decision_point,
            approach_heading: 0.0,
            exit_headings,
            chosen: exit_index,
        }),
    })
}

/// Two-lane road heading east with a right turn `turn_distance` meters ahead
/// of the ego. The ego starts in the left lane; the route moves to the right
/// lane just before the junction, on an edge tagged `right_turn_lane`.
pub fn make_bvr_lane_change_scenario(turn_distance: f64) -> Result<GeneratedScenario, MapError> {
    if !(turn_distance >= 60.0) || !turn_distance.is_finite() {
        return Err(MapError::InvalidParameter(format!(
            "turn_distance must be >= 60 m, got {turn_distance}"
        )));
    }
    const LIMIT: f64 = 8.0;
    const TURN_R: f64 = 10.0;
    const SHIFT_LEN: f64 = 25.0;
    let d = turn_distance;
    let yl = LANE_WIDTH / 2.0;
    let yr = -LANE_WIDTH / 2.0;
    let shift_start = d - 30.0;
    let mut b = RoadBuilder::default();
    b.node("left_start", Point2::new(-15.0, yl));
    b.node("lane_split", Point2::new(shift_start, yl));
    b.node("left_end", Point2::new(d + 60.0, yl));
    b.node("turn_end", Point2::new(d + TURN_R, yr - TURN_R));
    b.node("south_end", Point2::new(d + TURN_R, yr - TURN_R - 60.0));
    b.edge(
        "e1_left_lane",
        "left_start",
        "lane_split",
        segment(Point2::new(-15.0, yl), Point2::new(shift_start, yl)),
        LIMIT,
        &[],
    )?;
    let pre = join(&[
        lane_shift(shift_start, yl, SHIFT_LEN, yr),
        segment(Point2::new(shift_start + SHIFT_LEN, yr), Point2::new(d, yr)),
        arc(Point2::new(d, yr - TURN_R), TURN_R, FRAC_PI_2, -FRAC_PI_2),
    ]);
    b.edge(
        "e2_pre_junction",
        "lane_split",
        "turn_end",
        pre,
        LIMIT,
        &[EdgeTag::RightTurnLane],
    )?;
    b.edge(
        "e3_south",
        "turn_end",
        "south_end",
        segment(
            Point2::new(d + TURN_R, yr - TURN_R),
            Point2::new(d + TURN_R, yr - TURN_R - 60.0),
        ),
        LIMIT,
        &[],
    )?;
    b.edge(
        "e4_straight_on",
        "lane_split",
        "left_end",
        segment(Point2::new(shift_start, yl), Point2::new(d + 60.0, yl)),
        LIMIT,
        &[],
    )?;
    b.rect(-25.0, -LANE_WIDTH, d + 70.0, LANE_WIDTH);
    b.band("e2_pre_junction", 0.0, 0.0);
    b.band("e3_south", 0.0, 10.0);
    let scenario = b.finish(
        format!("bvr_lane_change_{}", turn_distance.round() as i64),
        "left_start",
        "south_end",
        15.0,
        Vec::new(),
        None,
        LIMIT,
    )?;
    Ok(GeneratedScenario {
        scenario,
        junction: Some(JunctionInfo {
            kind: JunctionKind::Intersection,
            decision_point: Point2::new(shift_start, yl),
            approach_heading: 0.0,
            exit_headings: vec![-FRAC_PI_2, 0.0],
            chosen: 0,
        }),
    })
}

/// Signalless junction approached from the west. With 4 branches the exits
/// are right, straight, left (indices 0, 1, 2); with 3 it is a T-junction
/// with exits right, left.
pub fn make_intersection_scenario(
    branches: usize,
    chosen: usize,
) -> Result<GeneratedScenario, MapError> {
    if !(3..=4).contains(&branches) {
        return Err(MapError::InvalidParameter(format!(
            "branches must be 3 or 4, got {branches}"
        )));
    }
    let n_exits = branches - 1;
    if chosen >= n_exits {
        return Err(MapError::InvalidParameter(format!(
            "chosen {chosen} must be below {n_exits}"
        )));
    }
    const LIMIT: f64 = 10.0;
    const HALF: f64 = 10.0;
    const ARM: f64 = 70.0;
    let h = LANE_WIDTH / 2.0;
    let mut b = RoadBuilder::default();
    b.node("west_far", Point2::new(-HALF - ARM, -h));
    b.node("stop", Point2::new(-HALF, -h));
    b.edge(
        "approach",
        "west_far",
        "stop",
        segment(Point2::new(-HALF - ARM, -h), Point2::new(-HALF, -h)),
        LIMIT,
        &[EdgeTag::IntersectionApproach],
    )?;
    let mut exits: Vec<(&str, f64)> = Vec::new();
    // right turn into the southbound lane
    b.node("south_near", Point2::new(-h, -HALF));
    b.node("south_far", Point2::new(-h, -HALF - ARM));
    let r_right = HALF - h;
    b.edge(
        "turn_right",
        "stop",
        "south_near",
        arc(Point2::new(-HALF, -HALF), r_right, FRAC_PI_2, -FRAC_PI_2),
        LIMIT,
        &[],
    )?;
    b.edge(
        "depart_south",
        "south_near",
        "south_far",
        segment(Point2::new(-h, -HALF), Point2::new(-h, -HALF - ARM)),
        LIMIT,
        &[],
    )?;
    exits.push(("south_far", -FRAC_PI_2));
    if branches == 4 {
        b.node("east_near", Point2::new(HALF, -h));
        b.node("east_far", Point2::new(HALF + ARM, -h));
        b.edge(
            "go_straight",
            "stop",
            "east_near",
            segment(Point2::new(-HALF, -h), Point2::new(HALF, -h)),
            LIMIT,
            &[],
        )?;
        b.edge(
            "depart_east",
            "east_near",
            "east_far",
            segment(Point2::new(HALF, -h), Point2::new(HALF + ARM, -h)),
            LIMIT,
            &[],
        )?;
        exits.push(("east_far", 0.0));
    }
    b.node("north_near", Point2::new(h, HALF));
    b.node("north_far", Point2::new(h, HALF + ARM));
    let r_left = HALF + h;
    b.edge(
        "turn_left",
        "stop",
        "north_near",
        arc(Point2::new(-HALF, HALF), r_left, -FRAC_PI_2, FRAC_PI_2),
        LIMIT,
        &[],
    )?;
    b.edge(
        "depart_north",
        "north_near",
        "north_far",
        segment(Point2::new(h, HALF), Point2::new(h, HALF + ARM)),
        LIMIT,
        &[],
    )?;
    exits.push(("north_far", FRAC_PI_2));

    let w = LANE_WIDTH;
    b.rect(-HALF - ARM - 10.0, -w, -HALF, w);
    b.rect(-HALF, -HALF, HALF, HALF);
    b.rect(-w, -HALF - ARM - 10.0, w, -HALF);
    b.rect(-w, HALF, w, HALF + ARM + 10.0);
    if branches == 4 {
        b.rect(HALF, -w, HALF + ARM + 10.0, w);
    }
    b.band("turn_right", 0.0, 0.0);
    b.band("turn_left", 0.0, 0.0);
    let names = if branches == 4 {
        ["right", "straight", "left"].as_slice()
    } else {
        ["right", "left"].as_slice()
    };
    let kind = if branches == 4 { "cross" } else { "tee" };
    let goal = exits[chosen].0;
    let scenario = b.finish(
        format!("{kind}_{}", names[chosen]),
        "west_far",
        goal,
        10.0,
        Vec::new(),
        None,
        LIMIT,
    )?;
    Ok(GeneratedScenario {
        scenario,
        junction: Some(JunctionInfo {
            kind: JunctionKind::Intersection,
            decision_point: Point2::new(-HALF, -h),
            approach_heading: 0.0,
            exit_headings: exits.iter().map(|e| e.1).collect(),
            chosen,
        }),
    })
}

/// Traffic options for the plain-road generators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StraightTraffic {
    Empty,
    /// Vehicle in the opposite lane driving toward the ego.
    Oncoming,
    /// Faster vehicle ahead in the ego lane.
    FasterLead,
}

/// Centerline of the lane to the left of `line`, running the other way.
fn opposite_lane(line: &Polyline) -> Vec<Point2> {
    line.points()
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let s = line.cum_arclen()[i];
            let h = line.heading_at_clamped(if i + 1 == line.points().len() {
                s
            } else {
                s + 1e-9
            });
            *p + Point2::from_polar(LANE_WIDTH, h + FRAC_PI_2)
        })
        .rev()
        .collect()
}

fn two_lane(b: &mut RoadBuilder, center: &[Point2], limit: f64) -> Result<(), MapError> {
    let line = Polyline::new_dedup(center.to_vec(), 1e-6)?;
    let opposite = opposite_lane(&line);
    b.node("start", line.first());
    b.node("end", line.last());
    b.node("opp_start", opposite[0]);
    b.node("opp_end", *opposite.last().expect("non-empty"));
    b.edge("lane", "start", "end", line.points().to_vec(), limit, &[])?;
    b.edge("opposite", "opp_start", "opp_end", opposite, limit, &[])?;
    // turnaround joining the opposite lane back onto the ego lane start
    let h0 = line.heading_at_clamped(0.0);
    let c = line.first() + Point2::from_polar(LANE_WIDTH / 2.0, h0 + FRAC_PI_2);
    b.edge(
        "turnaround",
        "opp_end",
        "start",
        arc(c, LANE_WIDTH / 2.0, h0 + FRAC_PI_2, PI),
        limit,
        &[],
    )?;
    b.band("lane", 10.0, 10.0);
    b.band("opposite", 10.0, 10.0);
    Ok(())
}

fn traffic_agents(
    traffic: StraightTraffic,
    lane: &Polyline,
    duration: f64,
) -> Result<Vec<ScriptedAgent>, MapError> {
    Ok(match traffic {
        StraightTraffic::Empty => Vec::new(),
        StraightTraffic::Oncoming => {
            let opposite = Polyline::new(opposite_lane(lane))?;
            vec![ScriptedAgent::along_path(
                "oncoming", &opposite, 5.0, 8.0, duration, CAR_LENGTH, CAR_WIDTH,
            )]
        }
        StraightTraffic::FasterLead => vec![ScriptedAgent::along_path(
            "lead", lane, 40.0, 13.0, duration, CAR_LENGTH, CAR_WIDTH,
        )],
    })
}

/// Straight two-lane road of `length` meters heading east.
pub fn make_straight_scenario(
    id: &str,
    length: f64,
    traffic: StraightTraffic,
) -> Result<GeneratedScenario, MapError> {
    if !(length >= 80.0) {
        return Err(MapError::InvalidParameter(format!(
            "length must be >= 80 m, got {length}"
        )));
    }
    const LIMIT: f64 = 10.0;
    let center = segment(Point2::ORIGIN, Point2::new(length, 0.0));
    let mut b = RoadBuilder::default();
    two_lane(&mut b, &center, LIMIT)?;
    let lane = Polyline::new(center)?;
    let agents = traffic_agents(traffic, &lane, 2.0 * length / LIMIT + 20.0)?;
    let scenario = b.finish(id.to_string(), "start", "end", 10.0, agents, None, LIMIT)?;
    Ok(GeneratedScenario {
        scenario,
        junction: None,
    })
}

/// Two-lane road: 40 m straight, an arc of `radius` sweeping `sweep` radians
/// (positive bends left), then 60 m straight.
pub fn make_curve_scenario(
    id: &str,
    radius: f64,
    sweep: f64,
    traffic: StraightTraffic,
) -> Result<GeneratedScenario, MapError> {
    if !(radius >= 20.0) || sweep.abs() >= PI || sweep == 0.0 {
        return Err(MapError::InvalidParameter(format!(
            "curve needs radius >= 20 and 0 < |sweep| < pi, got {radius}, {sweep}"
        )));
    }
    const LIMIT: f64 = 10.0;
    let start_arc = Point2::new(40.0, 0.0);
    let side = sweep.signum();
    let c = Point2::new(40.0, side * radius);
    let a0 = -side * FRAC_PI_2;
    let arc_pts = arc(c, radius, a0, sweep);
    let end_arc = *arc_pts.last().expect("non-empty");
    let tail = end_arc + Point2::from_polar(60.0, sweep);
    let center = join(&[
        segment(Point2::ORIGIN, start_arc),
        arc_pts,
        segment(end_arc, tail),
    ]);
    let mut b = RoadBuilder::default();
    two_lane(&mut b, &center, LIMIT)?;
    let lane = Polyline::new_dedup(center, 1e-6)?;
    let agents = traffic_agents(traffic, &lane, 2.0 * lane.length() / LIMIT + 20.0)?;
    let scenario = b.finish(id.to_string(), "start", "end", 10.0, agents, None, LIMIT)?;
    Ok(GeneratedScenario {
        scenario,
        junction: None,
    })
}

/// Gentle S-bend: left arc then right arc of equal radius and sweep.
pub fn make_s_bend_scenario(
    id: &str,
    radius: f64,
    sweep: f64,
) -> Result<GeneratedScenario, MapError> {
    if !(radius >= 20.0) || !(sweep > 0.0 && sweep < FRAC_PI_2) {
        return Err(MapError::InvalidParameter(format!(
            "s-bend needs radius >= 20 and 0 < sweep < pi/2, got {radius}, {sweep}"
        )));
    }
    const LIMIT: f64 = 10.0;
    let p0 = Point2::new(30.0, 0.0);
    let first = arc(Point2::new(30.0, radius), radius, -FRAC_PI_2, sweep);
    let mid = *first.last().expect("non-empty");
    // second arc: center on the right of travel at the joint
    let c2 = mid + Point2::from_polar(radius, sweep - FRAC_PI_2);
    let second = arc(c2, radius, sweep + FRAC_PI_2, -sweep);
    let end = *second.last().expect("non-empty");
    let tail = end + Point2::new(40.0, 0.0);
    let center = join(&[
        segment(Point2::ORIGIN, p0),
        first,
        second,
        segment(end, tail),
    ]);
    let mut b = RoadBuilder::default();
    two_lane(&mut b, &center, LIMIT)?;
    let scenario = b.finish(
        id.to_string(),
        "start",
        "end",
        10.0,
        Vec::new(),
        None,
        LIMIT,
    )?;
    Ok(GeneratedScenario {
        scenario,
        junction: None,
    })
}

/// Straight road with a parked car in the ego lane; the expert path swings
/// into the opposite lane to pass it.
pub fn make_parked_bypass_scenario(id: &str) -> Result<GeneratedScenario, MapError> {
    const LIMIT: f64 = 10.0;
    const LENGTH: f64 = 220.0;
    let parked_x = 110.0;
    let center = segment(Point2::ORIGIN, Point2::new(LENGTH, 0.0));
    let mut b = RoadBuilder::default();
    two_lane(&mut b, &center, LIMIT)?;
    let w = LANE_WIDTH;
    let path = join(&[
        segment(Point2::ORIGIN, Point2::new(parked_x - 50.0, 0.0)),
        lane_shift(parked_x - 50.0, 0.0, 35.0, w),
        segment(
            Point2::new(parked_x - 15.0, w),
            Point2::new(parked_x + 15.0, w),
        ),
        lane_shift(parked_x + 15.0, w, 35.0, 0.0),
        segment(Point2::new(parked_x + 50.0, 0.0), Point2::new(LENGTH, 0.0)),
    ]);
    let agents = vec![ScriptedAgent::parked(
        "parked",
        Pose::xyh(parked_x, 0.0, 0.0),
        CAR_LENGTH,
        CAR_WIDTH,
    )];
    let scenario = b.finish(
        id.to_string(),
        "start",
        "end",
        10.0,
        agents,
        Some(Polyline::new_dedup(path, 1e-6)?),
        LIMIT,
    )?;
    Ok(GeneratedScenario {
        scenario,
        junction: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::map::plan_global_route;

    #[test]
    fn roundabout_parameter_ranges() {
        assert!(make_roundabout_scenario(2, 0, 15.0).is_err());
        assert!(make_roundabout_scenario(6, 0, 15.0).is_err());
        assert!(make_roundabout_scenario(4, 4, 15.0).is_err());
        assert!(make_roundabout_scenario(4, 1, 9.0).is_err());
        for n in 3..=5 {
            for k in 0..n {
                let g = make_roundabout_scenario(n, k, 15.0).unwrap();
                assert!(g.scenario.graph.is_connected());
            }
        }
    }

    #[test]
    fn roundabout_exit_headings() {
        let g = make_roundabout_scenario(4, 1, 15.0).unwrap();
        let j = g.junction.unwrap();
        let deg: Vec<i64> = j
            .exit_headings
            .iter()
            .map(|h| h.to_degrees().round() as i64)
            .collect();
        assert_eq!(deg, vec![-90, 0, 90, 180]);
        let s = &g.scenario;
        let route = plan_global_route(&s.graph, &s.route_request.0, &s.route_request.1).unwrap();
        // straight-through: leaves heading east, like it arrived
        let end_heading = route.centerline.heading_at_clamped(route.length());
        assert!(end_heading.abs() < 1e-9);
        assert!(route.edge_ids.iter().any(|e| e == "arm2_exit"));
    }

    #[test]
    fn first_exit_turns_right_and_last_returns() {
        let g = make_roundabout_scenario(4, 0, 15.0).unwrap();
        let s = &g.scenario;
        let route = plan_global_route(&s.graph, &s.route_request.0, &s.route_request.1).unwrap();
        let h = route.centerline.heading_at_clamped(route.length());
        assert!((h + FRAC_PI_2).abs() < 1e-9);
        let g = make_roundabout_scenario(3, 2, 15.0).unwrap();
        let s = &g.scenario;
        let route = plan_global_route(&s.graph, &s.route_request.0, &s.route_request.1).unwrap();
        let h = route.centerline.heading_at_clamped(route.length());
        assert!((h.abs() - PI).abs() < 1e-9);
    }

    #[test]
    fn bvr_precondition() {
        assert!(make_bvr_lane_change_scenario(30.0).is_err());
        let g = make_bvr_lane_change_scenario(100.0).unwrap();
        let e = g.scenario.graph.edge("e2_pre_junction").unwrap();
        assert!(e.has_tag(EdgeTag::RightTurnLane));
        assert!(
            g.scenario
                .ego_start
                .position
                .dist(Point2::new(0.0, LANE_WIDTH / 2.0))
                < 1e-9
        );
    }

    #[test]
    fn intersection_variants() {
        assert!(make_intersection_scenario(5, 0).is_err());
        assert!(make_intersection_scenario(3, 2).is_err());
        let g = make_intersection_scenario(4, 2).unwrap();
        assert_eq!(g.scenario.id, "cross_left");
        let s = &g.scenario;
        let route = plan_global_route(&s.graph, &s.route_request.0, &s.route_request.1).unwrap();
        assert_eq!(
            route.edge_ids,
            vec!["approach", "turn_left", "depart_north"]
        );
        assert_eq!(s.graph.out_edges("stop").len(), 3);
        let t = make_intersection_scenario(3, 0).unwrap();
        assert_eq!(t.scenario.id, "tee_right");
        assert_eq!(t.scenario.graph.out_edges("stop").len(), 2);
    }
}
