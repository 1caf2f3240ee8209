use std::collections::BTreeSet;
use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use super::{at_fault, step_bicycle, BicycleParams, EgoState, SimError, Tracker, TrackerConfig};
use crate::geometry::{
    from_ego_frame, obb_intersect, point_in_polygon_unchecked, OrientedBox, Point2, Pose,
};
use crate::map::{plan_global_route, GlobalRoute, ProgressTracker, Scenario};
use crate::navigation::{
    annotate_with, apply_path_noise, compute_tbt, corrupt_command, render_tbt_text,
    sample_navigation_path, CommandCorruption, DrivingCommand, Horizon, NoiseConfig,
    SamplingConfig, TbtConfig, DEFAULT_LATERAL_THRESHOLD,
};
use crate::planners::{
    agent_obs, plan_expert, ExpertTrajectory, NavInput, Observation, PlannedTrajectory, Planner,
    SngView,
};

/// Distance to the goal that completes an episode, meters.
pub const GOAL_TOLERANCE: f64 = 3.0;
/// Straight extension past the goal used for path sampling, meters.
const ROUTE_TAIL: f64 = 50.0;

/// Which navigation input the planner receives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NavVariant {
    NoNav,
    /// A command annotated from the expert, then corrupted.
    Command {
        corruption: CommandCorruption,
        horizon: Horizon,
        lateral_threshold: f64,
    },
    /// SNG components; `sampling = None` withholds the path, `tbt = false`
    /// withholds the guidance.
    Sng {
        sampling: Option<SamplingConfig>,
        tbt: bool,
        /// (sigma_lat, sigma_lon); `None` means a noiseless path.
        noise: Option<(f64, f64)>,
    },
}

impl NavVariant {
    pub fn command(corruption: CommandCorruption) -> Self {
        NavVariant::Command {
            corruption,
            horizon: Horizon::default(),
            lateral_threshold: DEFAULT_LATERAL_THRESHOLD,
        }
    }

    /// Full SNG with default noise.
    pub fn sng(sampling: SamplingConfig) -> Self {
        NavVariant::Sng {
            sampling: Some(sampling),
            tbt: true,
            noise: Some((
                NoiseConfig::DEFAULT_SIGMA_LAT,
                NoiseConfig::DEFAULT_SIGMA_LON,
            )),
        }
    }

    pub fn describe(&self) -> String {
        match self {
            NavVariant::NoNav => "none".into(),
            NavVariant::Command { corruption, .. } => format!("command:{corruption}"),
            NavVariant::Sng { sampling, tbt, .. } => {
                let path = sampling.map_or("nopath".to_string(), |s| s.to_string());
                format!("sng:{path}{}", if *tbt { "+tbt" } else { "" })
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeConfig {
    /// Seconds between planner calls; a multiple of the scenario dt.
    pub replan_period: f64,
    pub nav: NavVariant,
    pub seed: u64,
    pub params: BicycleParams,
    pub tracker: TrackerConfig,
    /// Agents farther than this are not observed, meters.
    pub observation_radius: f64,
    /// Also annotate a command every replan, corrupt it this way and attach
    /// it to the observation as a side channel.
    pub side_command: Option<CommandCorruption>,
}

impl Default for EpisodeConfig {
    fn default() -> Self {
        EpisodeConfig {
            replan_period: 0.5,
            nav: NavVariant::NoNav,
            seed: 0,
            params: BicycleParams::default(),
            tracker: TrackerConfig::default(),
            observation_radius: 50.0,
            side_command: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EpisodeStatus {
    Completed,
    Timeout,
    CollisionStop,
    OffRouteStop,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentState {
    pub id: String,
    pub pose: Pose,
    pub speed: f64,
    pub length: f64,
    pub width: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollisionEvent {
    pub agent: String,
    pub at_fault: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub t: f64,
    pub ego: EgoState,
    pub agents: Vec<AgentState>,
    pub collisions: Vec<CollisionEvent>,
    pub off_road: bool,
    /// Planned waypoints (ego frame) on replanning steps.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plan: Option<Vec<Point2>>,
    /// Navigation input summary on replanning steps.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nav: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub warning: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeSummary {
    pub scenario_id: String,
    pub planner: String,
    pub nav: String,
    pub seed: u64,
    pub dt: f64,
    pub steps: usize,
    pub status: EpisodeStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeLog {
    pub scenario_id: String,
    pub planner: String,
    pub nav: String,
    pub seed: u64,
    pub dt: f64,
    pub params: BicycleParams,
    pub steps: Vec<StepRecord>,
    pub status: EpisodeStatus,
    pub error: Option<String>,
}

impl EpisodeLog {
    pub fn summary(&self) -> EpisodeSummary {
        EpisodeSummary {
            scenario_id: self.scenario_id.clone(),
            planner: self.planner.clone(),
            nav: self.nav.clone(),
            seed: self.seed,
            dt: self.dt,
            steps: self.steps.len(),
            status: self.status,
            error: self.error.clone(),
        }
    }

    /// One JSON object per step, then `{"summary": ...}`.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for r in &self.steps {
            out.push_str(&serde_json::to_string(r).expect("records serialize"));
            out.push('\n');
        }
        let summary = serde_json::json!({ "summary": self.summary() });
        out.push_str(&serde_json::to_string(&summary).expect("summary serializes"));
        out.push('\n');
        out
    }

    pub fn final_state(&self) -> Option<&EgoState> {
        self.steps.last().map(|r| &r.ego)
    }

    /// Planner warnings raised during the episode.
    pub fn warnings(&self) -> impl Iterator<Item = &str> {
        self.steps.iter().filter_map(|r| r.warning.as_deref())
    }
}

/// Decorrelated 64-bit seed for a stream index.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    // splitmix64 finalizer
    let mut z = seed ^ stream.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Runs one closed-loop episode. Command inputs need the expert rollout,
/// which is computed on demand.
pub fn run_episode(
    scenario: &Scenario,
    planner: &dyn Planner,
    cfg: &EpisodeConfig,
) -> Result<EpisodeLog, SimError> {
    let expert = match cfg.nav {
        NavVariant::Command { .. } => Some(plan_expert(scenario)?),
        _ if cfg.side_command.is_some() => Some(plan_expert(scenario)?),
        _ => None,
    };
    run_episode_with_expert(scenario, planner, cfg, expert.as_ref())
}

struct NavBuilder<'a> {
    scenario: &'a Scenario,
    route: GlobalRoute,
    sampled: GlobalRoute,
    expert: Option<&'a ExpertTrajectory>,
}

impl NavBuilder<'_> {
    fn command(
        &self,
        ego: &EgoState,
        corruption: CommandCorruption,
        horizon: Horizon,
        lateral_threshold: f64,
        seed: u64,
        step: u64,
    ) -> Result<DrivingCommand, String> {
        let expert = self
            .expert
            .ok_or("command input needs the expert trajectory")?;
        let p = ego.pose;
        let cmd = expert
            .nearest_time(p.position, p.heading)
            .map_or(DrivingCommand::Unknown, |t| {
                annotate_with(&expert.poses, t, horizon, lateral_threshold)
            });
        Ok(corrupt_command(cmd, corruption, derive_seed(seed, step)))
    }

    fn side_command(
        &self,
        cfg: &EpisodeConfig,
        ego: &EgoState,
        step: u64,
    ) -> Result<Option<DrivingCommand>, String> {
        cfg.side_command
            .map(|c| {
                self.command(
                    ego,
                    c,
                    Horizon::default(),
                    DEFAULT_LATERAL_THRESHOLD,
                    cfg.seed,
                    step,
                )
            })
            .transpose()
    }

    fn build(
        &self,
        nav: &NavVariant,
        ego: &EgoState,
        seed: u64,
        step: u64,
    ) -> Result<(NavInput, String), String> {
        match nav {
            NavVariant::NoNav => Ok((NavInput::NoNav, "none".into())),
            NavVariant::Command {
                corruption,
                horizon,
                lateral_threshold,
            } => {
                let cmd =
                    self.command(ego, *corruption, *horizon, *lateral_threshold, seed, step)?;
                Ok((NavInput::Command(cmd), cmd.to_string()))
            }
            NavVariant::Sng {
                sampling,
                tbt,
                noise,
            } => {
                let mut view = SngView::default();
                let mut text = String::new();
                if let Some(cfg) = sampling {
                    let mut path = sample_navigation_path(&self.sampled, &ego.pose, *cfg)
                        .map_err(|e| e.to_string())?;
                    if let Some((lat, lon)) = noise {
                        let n = NoiseConfig {
                            sigma_lat: *lat,
                            sigma_lon: *lon,
                            seed: derive_seed(seed, step),
                        };
                        path = apply_path_noise(&path, &n).map_err(|e| e.to_string())?;
                    }
                    view.path = Some(path);
                    text.push_str(&cfg.to_string());
                }
                if *tbt {
                    let info = compute_tbt(
                        &self.route,
                        &ego.pose,
                        ego.v,
                        &self.scenario.graph,
                        &TbtConfig::default(),
                    )
                    .map_err(|e| e.to_string())?;
                    if !text.is_empty() {
                        text.push(' ');
                    }
                    text.push_str(&render_tbt_text(&info));
                    view.tbt = Some(info);
                }
                Ok((NavInput::Sng(view), text))
            }
        }
    }
}

fn observation<'a>(
    scenario: &'a Scenario,
    state: &EgoState,
    t: f64,
    speed_limit: f64,
    radius: f64,
    nav: NavInput,
    side_command: Option<DrivingCommand>,
) -> Observation<'a> {
    Observation {
        t,
        ego: *state,
        agents: scenario
            .agents
            .iter()
            .map(|a| agent_obs(a, t))
            .filter(|a| a.pose.position.dist(state.pose.position) <= radius)
            .collect(),
        corridor: &scenario.corridor,
        graph: &scenario.graph,
        speed_limit,
        nav,
        side_command,
    }
}

fn local_limit(scenario: &Scenario, pose: &Pose, default: f64) -> f64 {
    scenario
        .graph
        .nearest_edge(pose.position, pose.heading, FRAC_PI_2)
        .filter(|(_, p)| p.distance <= 8.0)
        .map_or(default, |(e, _)| e.speed_limit)
}

/// One open-loop query: the planner's output with the ego placed on the
/// expert trajectory at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct OpenLoopSample {
    pub t: f64,
    pub plan: Result<PlannedTrajectory, String>,
}

/// Queries the planner every `period` seconds from expert states, as in
/// log-replay evaluation. Stops where the expert trajectory ends.
pub fn open_loop_plans(
    scenario: &Scenario,
    planner: &dyn Planner,
    cfg: &EpisodeConfig,
    expert: &ExpertTrajectory,
    period: f64,
) -> Result<Vec<OpenLoopSample>, SimError> {
    if !(period > 0.0) {
        return Err(SimError::Config(format!(
            "open-loop period {period} must be positive"
        )));
    }
    scenario.validate()?;
    let route = plan_global_route(
        &scenario.graph,
        &scenario.route_request.0,
        &scenario.route_request.1,
    )?;
    let default_limit = scenario
        .graph
        .edge(&route.edge_ids[0])
        .map_or(10.0, |e| e.speed_limit);
    let nav = NavBuilder {
        scenario,
        sampled: route.with_tail(ROUTE_TAIL),
        route,
        expert: Some(expert),
    };
    let mut out = Vec::new();
    let mut k = 0u64;
    loop {
        let t = k as f64 * period;
        let Some(pose) = expert.pose_at(t) else { break };
        if t > expert.duration() {
            break;
        }
        let idx = ((t / scenario.dt).round() as usize).min(expert.speeds.len().saturating_sub(1));
        let state = EgoState {
            pose,
            v: expert.speeds.get(idx).copied().unwrap_or(0.0),
            ..Default::default()
        };
        let step = (t / scenario.dt).round() as u64;
        let limit = local_limit(scenario, &pose, default_limit);
        let plan = nav
            .build(&cfg.nav, &state, cfg.seed, step)
            .and_then(|(input, _)| {
                let side = nav.side_command(cfg, &state, step)?;
                let obs = observation(
                    scenario,
                    &state,
                    t,
                    limit,
                    cfg.observation_radius,
                    input,
                    side,
                );
                planner.plan(&obs).map_err(|e| e.to_string())
            });
        out.push(OpenLoopSample { t, plan });
        k += 1;
    }
    Ok(out)
}

/// Runs one closed-loop episode with a precomputed expert rollout.
pub fn run_episode_with_expert(
    scenario: &Scenario,
    planner: &dyn Planner,
    cfg: &EpisodeConfig,
    expert: Option<&ExpertTrajectory>,
) -> Result<EpisodeLog, SimError> {
    scenario.validate()?;
    let dt = scenario.dt;
    let ratio = cfg.replan_period / dt;
    if !(cfg.replan_period > 0.0) || (ratio - ratio.round()).abs() > 1e-6 || ratio.round() < 1.0 {
        return Err(SimError::Config(format!(
            "replan period {} is not a positive multiple of dt {dt}",
            cfg.replan_period
        )));
    }
    let replan_every = ratio.round() as usize;
    let route = plan_global_route(
        &scenario.graph,
        &scenario.route_request.0,
        &scenario.route_request.1,
    )?;
    let nav = NavBuilder {
        scenario,
        sampled: route.with_tail(ROUTE_TAIL),
        route,
        expert,
    };
    let goal = nav.route.goal;
    let route_len = nav.route.length();
    let default_limit = scenario
        .graph
        .edge(&nav.route.edge_ids[0])
        .map_or(10.0, |e| e.speed_limit);

    let params = cfg.params;
    let mut state = EgoState {
        pose: scenario.ego_start,
        v: scenario.ego_speed0,
        accel: (0.0, 0.0),
        steering: 0.0,
    };
    let mut tracker = Tracker::new(cfg.tracker);
    let mut in_contact: BTreeSet<String> = BTreeSet::new();
    let mut progress = ProgressTracker::new(&nav.route, &state.pose);
    let mut steps = Vec::new();
    let mut status = EpisodeStatus::Timeout;
    let mut error = None;
    let n = scenario.step_count();

    for k in 0..n {
        let t = k as f64 * dt;
        let agents: Vec<AgentState> = scenario
            .agents
            .iter()
            .map(|a| {
                let (pose, speed) = super::agent_pose_at(a, t);
                AgentState {
                    id: a.id.clone(),
                    pose,
                    speed,
                    length: a.length,
                    width: a.width,
                }
            })
            .collect();
        let ego_box = params.footprint(&state.pose);
        let mut collisions = Vec::new();
        for a in &agents {
            let b = OrientedBox::at_pose(&a.pose, a.length, a.width);
            if obb_intersect(&ego_box, &b) {
                if in_contact.insert(a.id.clone()) {
                    collisions.push(CollisionEvent {
                        agent: a.id.clone(),
                        at_fault: at_fault(&state, &params, &b),
                    });
                }
            } else {
                in_contact.remove(&a.id);
            }
        }
        let off_road = ego_box.corners().iter().any(|c| {
            !scenario
                .corridor
                .iter()
                .any(|poly| point_in_polygon_unchecked(*c, poly))
        });

        let mut record = StepRecord {
            t,
            ego: state,
            agents,
            collisions,
            off_road,
            plan: None,
            nav: None,
            warning: None,
        };

        if k % replan_every == 0 {
            let limit = local_limit(scenario, &state.pose, default_limit);
            let planned =
                nav.build(&cfg.nav, &state, cfg.seed, k as u64)
                    .and_then(|(input, text)| {
                        let side = nav.side_command(cfg, &state, k as u64)?;
                        let obs = observation(
                            scenario,
                            &state,
                            t,
                            limit,
                            cfg.observation_radius,
                            input,
                            side,
                        );
                        planner
                            .plan(&obs)
                            .map(|p| (p, text))
                            .map_err(|e| e.to_string())
                    });
            match planned {
                Ok((plan, text)) => {
                    tracker.set_plan(t, from_ego_frame(&state.pose, &plan.waypoints));
                    record.plan = Some(plan.waypoints);
                    record.nav = Some(text);
                    record.warning = plan.warning;
                }
                Err(e) => {
                    steps.push(record);
                    status = EpisodeStatus::OffRouteStop;
                    error = Some(e);
                    break;
                }
            }
        }

        let s_now = progress.update(state.pose.position);
        let collided = !record.collisions.is_empty() && state.v > 0.1;
        steps.push(record);
        if state.pose.position.dist(goal) <= GOAL_TOLERANCE && s_now >= route_len - 10.0 {
            status = EpisodeStatus::Completed;
            break;
        }
        if collided {
            status = EpisodeStatus::CollisionStop;
            break;
        }
        let u = tracker.control(&state, t, &params, dt);
        state = step_bicycle(&state, u, &params, dt);
    }

    Ok(EpisodeLog {
        scenario_id: scenario.id.clone(),
        planner: planner.name().to_string(),
        nav: cfg.nav.describe(),
        seed: cfg.seed,
        dt,
        params,
        steps,
        status,
        error,
    })
}
