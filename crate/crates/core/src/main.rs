use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use sngbench::geometry::{from_ego_frame, Point2};
use sngbench::harness::{
    emit_rows_csv, emit_table, make_planner, render_svg, resolve_scenario, run_ablation, ArmSpec,
    ExperimentSpec, HarnessError, NavKind, Overlays, TableFormat,
};
use sngbench::map::{
    bundled, bundled_ids, plan_global_route, route_cost, serialize_scenario, Scenario,
};
use sngbench::metrics::{evaluate, ComfortBounds};
use sngbench::navigation::{
    annotate_with, build_sng, compute_tbt, render_tbt_text, Horizon, SamplingConfig, TbtConfig,
};
use sngbench::planners::{
    plan_expert, NavInput, Observation, Planner, PlannerKind, SngPlanner, SngView,
};
use sngbench::sim::{EgoState, EpisodeConfig};

#[derive(Parser)]
#[command(
    name = "sngbench",
    version,
    about = "Closed-loop comparison of navigation inputs for driving planners"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one closed-loop episode and print its metric report.
    Simulate(SimulateArgs),
    /// Print the driving command and turn-by-turn guidance along the expert.
    Annotate(AnnotateArgs),
    /// Run an experiment grid and write the results table.
    Ablate(AblateArgs),
    /// Draw a scenario as SVG.
    Render(RenderArgs),
    /// Parse and check a scenario file.
    Validate(ScenarioArg),
    /// Print the planned route of a scenario.
    Routes(ScenarioArg),
    /// List bundled scenario ids.
    List,
    /// Write a bundled scenario as JSON.
    Export(ExportArgs),
}

#[derive(Args)]
struct ScenarioArg {
    /// Scenario file, or the id of a bundled scenario.
    #[arg(long)]
    scenario: String,
}

#[derive(Clone, Copy, ValueEnum)]
enum NavArg {
    None,
    Command,
    Sng,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    scenario: String,
    #[arg(long, default_value = "sng")]
    planner: String,
    /// Defaults to the input the planner takes.
    #[arg(long, value_enum)]
    nav: Option<NavArg>,
    /// Command corruption: original, none, random, left, right, forward.
    #[arg(long)]
    corrupt: Option<String>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "4x10")]
    sampling: String,
    #[arg(long)]
    no_tbt: bool,
    #[arg(long)]
    no_path: bool,
    #[arg(long)]
    no_noise: bool,
    /// Write the step log as JSON Lines.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct AnnotateArgs {
    #[arg(long)]
    scenario: String,
    #[arg(long, default_value_t = 4.0)]
    horizon: f64,
    #[arg(long, default_value_t = 1.0)]
    lateral: f64,
    /// Use a distance horizon of this many meters instead of a time horizon.
    #[arg(long)]
    spatial_interval: Option<f64>,
    /// Seconds between annotations.
    #[arg(long, default_value_t = 0.5)]
    every: f64,
}

#[derive(Args)]
struct AblateArgs {
    /// Experiment spec JSON.
    #[arg(long, conflicts_with = "preset")]
    spec: Option<PathBuf>,
    /// Built-in grid over bundled suites: `representation` or `corruption`.
    #[arg(long)]
    preset: Option<String>,
    /// Seeds for presets.
    #[arg(long, value_delimiter = ',', default_value = "0,1,2")]
    seeds: Vec<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value = "csv")]
    format: String,
    /// Also write every cell as CSV.
    #[arg(long)]
    rows: Option<PathBuf>,
    #[arg(long)]
    strict: bool,
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args)]
struct RenderArgs {
    #[arg(long)]
    scenario: String,
    /// Layers to draw: expert, planned, nav, tbt.
    #[arg(long, value_delimiter = ',')]
    overlay: Vec<String>,
    #[arg(long, default_value = "4x10")]
    sampling: String,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ExportArgs {
    #[arg(long)]
    id: String,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Failure classes mapped onto exit codes.
enum Failure {
    Invalid(String),
    Runtime(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Invalid(_) => 1,
            Failure::Runtime(_) => 2,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Invalid(m) | Failure::Runtime(m) => m,
        }
    }
}

fn invalid(e: impl ToString) -> Failure {
    Failure::Invalid(e.to_string())
}

fn runtime(e: impl ToString) -> Failure {
    Failure::Runtime(e.to_string())
}

fn load(id: &str) -> Result<Scenario, Failure> {
    let scenario = resolve_scenario(id).map_err(|e| match e {
        HarnessError::Scenario { .. } | HarnessError::UnknownScenario(_) => invalid(e),
        other => runtime(other),
    })?;
    scenario.validate().map_err(invalid)?;
    Ok(scenario)
}

fn write_or_print(out: Option<&PathBuf>, text: &str) -> Result<(), Failure> {
    match out {
        Some(path) => {
            fs::write(path, text).map_err(|e| runtime(format!("{}: {e}", path.display())))
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn simulate(a: SimulateArgs) -> Result<(), Failure> {
    let scenario = load(&a.scenario)?;
    let nav_kind = match a.nav {
        Some(NavArg::None) => NavKind::None,
        Some(NavArg::Command) => NavKind::Command,
        Some(NavArg::Sng) => NavKind::Sng,
        None => match PlannerKind::parse(&a.planner) {
            Some(PlannerKind::Expert) => NavKind::None,
            Some(PlannerKind::Sng) => NavKind::Sng,
            _ => NavKind::Command,
        },
    };
    let arm = ArmSpec {
        label: None,
        planner: a.planner.clone(),
        nav: nav_kind,
        corruption: a.corrupt.clone(),
        sampling: (nav_kind == NavKind::Sng && !a.no_path).then(|| a.sampling.clone()),
        tbt: nav_kind == NavKind::Sng && !a.no_tbt,
        noise: !a.no_noise,
    }
    .resolve()
    .map_err(invalid)?;
    let kind = arm.planner;
    let nav = arm.nav;
    let planner = make_planner(kind, &scenario).map_err(runtime)?;
    let expert = plan_expert(&scenario).map_err(runtime)?;
    let cfg = EpisodeConfig {
        nav,
        seed: a.seed,
        ..EpisodeConfig::default()
    };
    let ev = evaluate(
        &scenario,
        planner.as_ref(),
        &cfg,
        &expert,
        &ComfortBounds::default(),
    )
    .map_err(runtime)?;
    if let Some(path) = &a.out {
        write_or_print(Some(path), &ev.log.to_jsonl())?;
    }
    println!(
        "{}",
        serde_json::to_string_pretty(&ev.report).map_err(runtime)?
    );
    Ok(())
}

fn annotate(a: AnnotateArgs) -> Result<(), Failure> {
    let scenario = load(&a.scenario)?;
    if !(a.every > 0.0 && a.lateral > 0.0) {
        return Err(invalid("--every and --lateral must be positive"));
    }
    let horizon = match a.spatial_interval {
        Some(d) if d > 0.0 => Horizon::Spatial(d),
        Some(d) => {
            return Err(invalid(format!(
                "--spatial-interval must be positive, got {d}"
            )))
        }
        None if a.horizon > 0.0 => Horizon::Temporal(a.horizon),
        None => {
            return Err(invalid(format!(
                "--horizon must be positive, got {}",
                a.horizon
            )))
        }
    };
    let expert = plan_expert(&scenario).map_err(runtime)?;
    let route = plan_global_route(
        &scenario.graph,
        &scenario.route_request.0,
        &scenario.route_request.1,
    )
    .map_err(runtime)?;
    let mut k = 0usize;
    loop {
        let t = k as f64 * a.every;
        if t > expert.duration() + 1e-9 {
            break;
        }
        let pose = expert
            .pose_at(t)
            .ok_or_else(|| runtime("expert trajectory is empty"))?;
        let idx = ((t / scenario.dt).round() as usize).min(expert.speeds.len() - 1);
        let cmd = annotate_with(&expert.poses, t, horizon, a.lateral);
        let mut line = serde_json::json!({ "t": t, "command": cmd.as_str() });
        if let Ok(tbt) = compute_tbt(
            &route,
            &pose,
            expert.speeds[idx],
            &scenario.graph,
            &TbtConfig::default(),
        ) {
            line["tbt"] = serde_json::json!({
                "current": tbt.current.phrase(),
                "future": tbt.future.phrase(),
                "supplementary": tbt.supplementary.phrase(),
                "text": render_tbt_text(&tbt),
            });
        }
        println!("{line}");
        k += 1;
    }
    Ok(())
}

fn ablate(a: AblateArgs) -> Result<(), Failure> {
    let format = TableFormat::parse(&a.format)
        .ok_or_else(|| invalid(format!("unknown format {:?}", a.format)))?;
    let mut spec = match (&a.spec, &a.preset) {
        (Some(path), _) => {
            let text = fs::read_to_string(path)
                .map_err(|e| invalid(format!("{}: {e}", path.display())))?;
            ExperimentSpec::from_json(&text).map_err(invalid)?
        }
        (None, Some(p)) => {
            let turn: Vec<String> = sngbench::map::turn_suite()
                .into_iter()
                .map(|g| g.scenario.id)
                .collect();
            let straight: Vec<String> = sngbench::map::straight_suite()
                .into_iter()
                .map(|g| g.scenario.id)
                .collect();
            match p.as_str() {
                "representation" => ExperimentSpec::representation_grid(turn, a.seeds.clone()),
                "corruption" => ExperimentSpec::corruption_grid(straight, a.seeds.clone()),
                other => return Err(invalid(format!("unknown preset {other:?}"))),
            }
        }
        (None, None) => return Err(invalid("one of --spec or --preset is required")),
    };
    spec.strict |= a.strict;
    let table = run_ablation(&spec, a.threads).map_err(|e| match e {
        HarnessError::CellsFailed { .. } | HarnessError::Pool(_) => runtime(e),
        other => invalid(other),
    })?;
    write_or_print(a.out.as_ref(), &emit_table(&table, format))?;
    if let Some(path) = &a.rows {
        write_or_print(Some(path), &emit_rows_csv(&table))?;
    }
    for r in table.failures() {
        eprintln!(
            "failed: {} / {} / seed {}: {}",
            r.scenario_id,
            r.arm,
            r.seed,
            r.outcome.as_ref().err().map_or("", String::as_str)
        );
    }
    Ok(())
}

fn render(a: RenderArgs) -> Result<(), Failure> {
    let scenario = load(&a.scenario)?;
    let mut overlays = Overlays::default();
    let wants = |name: &str| a.overlay.iter().any(|o| o == name);
    for o in &a.overlay {
        if !["expert", "planned", "nav", "tbt"].contains(&o.as_str()) {
            return Err(invalid(format!("unknown overlay {o:?}")));
        }
    }
    if wants("expert") {
        let expert = plan_expert(&scenario).map_err(runtime)?;
        overlays.expert = Some(expert.poses.iter().map(|p| p.pose.position).collect());
    }
    if wants("planned") || wants("nav") || wants("tbt") {
        let sampling = SamplingConfig::parse(&a.sampling).map_err(invalid)?;
        let route = plan_global_route(
            &scenario.graph,
            &scenario.route_request.0,
            &scenario.route_request.1,
        )
        .map_err(runtime)?;
        let ego = scenario.ego_start;
        let sng = build_sng(
            &route,
            &ego,
            scenario.ego_speed0,
            &scenario.graph,
            sampling,
            None,
        )
        .map_err(runtime)?;
        if wants("nav") {
            overlays.nav_path = Some(from_ego_frame(&ego, &sng.path.points));
        }
        if wants("tbt") {
            overlays.tbt_text = Some(render_tbt_text(&sng.tbt));
        }
        if wants("planned") {
            let limit = scenario
                .graph
                .edge(&route.edge_ids[0])
                .map_or(10.0, |e| e.speed_limit);
            let obs = Observation {
                t: 0.0,
                ego: EgoState {
                    pose: ego,
                    v: scenario.ego_speed0,
                    ..EgoState::default()
                },
                agents: Vec::new(),
                corridor: &scenario.corridor,
                graph: &scenario.graph,
                speed_limit: limit,
                nav: NavInput::Sng(SngView {
                    path: Some(sng.path.clone()),
                    tbt: Some(sng.tbt),
                }),
                side_command: None,
            };
            let plan = SngPlanner::default().plan(&obs).map_err(runtime)?;
            let pts: Vec<Point2> = from_ego_frame(&ego, &plan.waypoints);
            overlays.planned = Some(pts);
        }
    }
    write_or_print(a.out.as_ref(), &render_svg(&scenario, &overlays))
}

fn routes(a: ScenarioArg) -> Result<(), Failure> {
    let scenario = load(&a.scenario)?;
    let (start, goal) = &scenario.route_request;
    let route = plan_global_route(&scenario.graph, start, goal).map_err(runtime)?;
    let cost = route_cost(&scenario.graph, &route);
    println!(
        "{}",
        serde_json::json!({
            "start": start,
            "goal": goal,
            "edges": route.edge_ids,
            "length_m": route.length(),
            "cost": cost,
        })
    );
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Annotate(a) => annotate(a),
        Command::Ablate(a) => ablate(a),
        Command::Render(a) => render(a),
        Command::Validate(a) => {
            let s = load(&a.scenario)?;
            println!(
                "ok: {} ({} edges, {} agents)",
                s.id,
                s.graph.edges().count(),
                s.agents.len()
            );
            Ok(())
        }
        Command::Routes(a) => routes(a),
        Command::List => {
            for id in bundled_ids() {
                println!("{id}");
            }
            Ok(())
        }
        Command::Export(a) => {
            let g = bundled(&a.id)
                .ok_or_else(|| invalid(format!("unknown bundled scenario {:?}", a.id)))?;
            write_or_print(a.out.as_ref(), &serialize_scenario(&g.scenario))
        }
    }
}

/// Let `sngbench list | head` end quietly instead of panicking on a closed pipe.
fn reset_sigpipe() {
    #[cfg(unix)]
    // SAFETY: restoring the default disposition before any output is written.
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
}

fn main() -> ExitCode {
    reset_sigpipe();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
