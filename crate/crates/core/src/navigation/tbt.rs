use super::{DrivingAction, NavError, SupplementaryAction, TbtInfo, ON_ROUTE_TOLERANCE};
use crate::geometry::{normalize_angle, Pose};
use crate::map::{EdgeTag, GlobalRoute, RoadGraph};

/// Thresholds of the rule-based maneuver classifier.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TbtConfig {
    /// Heading changes below this are not maneuvers, degrees.
    pub straight_deg: f64,
    /// Boundary between keep and turn, degrees.
    pub turn_deg: f64,
    /// Boundary between turn and U-turn, degrees.
    pub uturn_deg: f64,
    /// Window over which `straight_deg` defines the turning rate, meters.
    pub window: f64,
    /// Largest gap between turning vertices of one bend, meters.
    pub bend_gap: f64,
    /// A maneuver starting closer than this is the current action, meters.
    pub current_split: f64,
    /// Cap on the distance reported when nothing lies ahead, meters.
    pub straight_cap: f64,
    /// Speed floor for time estimates, m/s.
    pub min_speed: f64,
}

impl Default for TbtConfig {
    fn default() -> Self {
        TbtConfig {
            straight_deg: 15.0,
            turn_deg: 60.0,
            uturn_deg: 150.0,
            window: 30.0,
            bend_gap: 5.0,
            current_split: 5.0,
            straight_cap: 200.0,
            min_speed: 0.5,
        }
    }
}

impl TbtConfig {
    /// Action for a net heading change, `None` below the straight threshold.
    pub fn classify(&self, dtheta: f64) -> Option<DrivingAction> {
        let deg = dtheta.to_degrees();
        let mag = deg.abs();
        let left = deg > 0.0;
        if mag < self.straight_deg {
            None
        } else if mag < self.turn_deg {
            Some(if left {
                DrivingAction::KeepLeft
            } else {
                DrivingAction::KeepRight
            })
        } else if mag < self.uturn_deg {
            Some(if left {
                DrivingAction::TurnLeft
            } else {
                DrivingAction::TurnRight
            })
        } else {
            Some(DrivingAction::UTurn)
        }
    }
}

/// A maneuver located on the route by arc length.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Maneuver {
    pub action: DrivingAction,
    pub start_s: f64,
    pub end_s: f64,
    /// Net heading change over the maneuver, radians (unwrapped).
    pub heading_change: f64,
    pub supplementary: SupplementaryAction,
    /// For roundabouts, the action implied by the exit taken.
    pub exit_action: Option<DrivingAction>,
}

/// Every maneuver along the route, ordered by start.
///
/// Contiguous roundabout-tagged edges form one roundabout maneuver. Elsewhere
/// a vertex is turning when its heading change per meter reaches
/// `straight_deg / window`; runs of same-sign turning vertices no more than
/// `bend_gap` apart form a bend, classified by its summed heading change.
pub fn find_maneuvers(route: &GlobalRoute, graph: &RoadGraph, cfg: &TbtConfig) -> Vec<Maneuver> {
    let line = &route.centerline;
    let pts = line.points();
    let cum = line.cum_arclen();

    let mut runs: Vec<(f64, f64)> = Vec::new();
    for (id, span) in route.edge_ids.iter().zip(route.spans()) {
        let tagged = graph
            .edge(id)
            .is_some_and(|e| e.has_tag(EdgeTag::Roundabout));
        if !tagged {
            continue;
        }
        match runs.last_mut() {
            Some(last) if (last.1 - span.0).abs() < 1e-6 => last.1 = span.1,
            _ => runs.push(*span),
        }
    }
    let in_run = |s: f64| {
        runs.iter()
            .position(|(a, b)| s >= a - 1e-6 && s <= b + 1e-6)
    };

    let rate = cfg.straight_deg.to_radians() / cfg.window;
    // (arc length, turning angle, is turning)
    let mut free: Vec<(f64, f64, bool)> = Vec::new();
    let mut run_turn = vec![0.0; runs.len()];
    for i in 1..pts.len().saturating_sub(1) {
        let alpha = normalize_angle(line.segment_heading(i) - line.segment_heading(i - 1));
        let s = cum[i];
        if let Some(r) = in_run(s) {
            run_turn[r] += alpha;
            continue;
        }
        let span = ((cum[i] - cum[i - 1]) + (cum[i + 1] - cum[i])) / 2.0;
        let turning = alpha.abs() / span.min(cfg.window) >= rate;
        free.push((s, alpha, turning));
    }

    let mut out = Vec::new();
    for (r, (a, b)) in runs.iter().enumerate() {
        out.push(Maneuver {
            action: DrivingAction::EnterRoundabout,
            start_s: *a,
            end_s: *b,
            heading_change: run_turn[r],
            supplementary: SupplementaryAction::EnterRoundaboutLane,
            exit_action: Some(
                cfg.classify(run_turn[r])
                    .unwrap_or(DrivingAction::ProceedStraight),
            ),
        });
    }

    let turning: Vec<(f64, f64)> = free.iter().filter(|v| v.2).map(|v| (v.0, v.1)).collect();
    let mut bends: Vec<(f64, f64)> = Vec::new();
    let mut i = 0;
    while i < turning.len() {
        let sign = turning[i].1.signum();
        let mut j = i;
        while j + 1 < turning.len()
            && turning[j + 1].1.signum() == sign
            && turning[j + 1].0 - turning[j].0 <= cfg.bend_gap
        {
            j += 1;
        }
        bends.push((turning[i].0, turning[j].0));
        i = j + 1;
    }
    for (start, end) in bends {
        let net: f64 = free
            .iter()
            .filter(|v| v.0 >= start - 1e-9 && v.0 <= end + 1e-9)
            .map(|v| v.1)
            .sum();
        let Some(action) = cfg.classify(net) else {
            continue;
        };
        let host = route.edge_id_at((start - 0.5).max(0.0));
        let tag = graph.edge(host).and_then(|e| e.primary_tag());
        out.push(Maneuver {
            action,
            start_s: start,
            end_s: end,
            heading_change: net,
            supplementary: SupplementaryAction::from_tag(tag),
            exit_action: None,
        });
    }
    out.sort_by(|a, b| a.start_s.total_cmp(&b.start_s));
    out
}

/// Full TBT record for an ego pose and speed on the route.
pub fn compute_tbt(
    route: &GlobalRoute,
    ego: &Pose,
    speed: f64,
    graph: &RoadGraph,
    cfg: &TbtConfig,
) -> Result<TbtInfo, NavError> {
    let proj = route.locate(ego.position, ego.heading);
    if proj.distance > ON_ROUTE_TOLERANCE {
        return Err(NavError::OffRoute {
            distance: proj.distance,
            limit: ON_ROUTE_TOLERANCE,
        });
    }
    let s = proj.s;
    let maneuvers = find_maneuvers(route, graph, cfg);
    let ahead: Vec<&Maneuver> = maneuvers.iter().filter(|m| m.end_s > s + 1e-6).collect();
    let (current, distance, future, supplementary) = match ahead.first() {
        None => (
            DrivingAction::ProceedStraight,
            (route.length() - s).clamp(0.0, cfg.straight_cap),
            DrivingAction::None,
            SupplementaryAction::None,
        ),
        Some(m) if m.action == DrivingAction::EnterRoundabout => {
            let d = if m.start_s > s {
                m.start_s - s
            } else {
                m.end_s - s
            };
            (
                DrivingAction::EnterRoundabout,
                d,
                m.exit_action.unwrap_or(DrivingAction::ProceedStraight),
                SupplementaryAction::EnterRoundaboutLane,
            )
        }
        Some(m) if m.start_s - s > cfg.current_split => (
            DrivingAction::ProceedStraight,
            m.start_s - s,
            m.action,
            m.supplementary,
        ),
        Some(m) => {
            let (future, supp) = ahead
                .get(1)
                .map_or((DrivingAction::None, SupplementaryAction::None), |n| {
                    (n.action, n.supplementary)
                });
            (m.action, m.end_s - s, future, supp)
        }
    };
    let distance = distance.max(0.0);
    Ok(TbtInfo {
        current,
        distance_to_maneuver: distance,
        time_to_maneuver: distance / speed.max(cfg.min_speed),
        future,
        supplementary,
    })
}

/// Current action with distance and time to it.
pub fn classify_current_action(
    route: &GlobalRoute,
    ego: &Pose,
    speed: f64,
    graph: &RoadGraph,
) -> Result<(DrivingAction, f64, f64), NavError> {
    let t = compute_tbt(route, ego, speed, graph, &TbtConfig::default())?;
    Ok((t.current, t.distance_to_maneuver, t.time_to_maneuver))
}

/// Action following the current one and its supplementary action.
pub fn predict_future_action(
    route: &GlobalRoute,
    ego: &Pose,
    graph: &RoadGraph,
) -> Result<(DrivingAction, SupplementaryAction), NavError> {
    let t = compute_tbt(route, ego, 0.0, graph, &TbtConfig::default())?;
    Ok((t.future, t.supplementary))
}

/// One-line English rendering of the guidance.
pub fn render_tbt_text(tbt: &TbtInfo) -> String {
    let via = match tbt.supplementary {
        SupplementaryAction::None => String::new(),
        s => format!(", via {}", s.phrase()),
    };
    format!(
        "In {:.0} m ({:.1} s): {}. Then: {}{}.",
        tbt.distance_to_maneuver,
        tbt.time_to_maneuver,
        tbt.current.phrase(),
        tbt.future.phrase(),
        via
    )
}
