//! Experiment grids over scenarios, navigation arms and seeds, plus result
//! tables and SVG scene rendering.

mod render;
mod table;

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::map::{bundled, parse_scenario, Scenario};
use crate::metrics::{evaluate, ComfortBounds, MetricReport};
use crate::navigation::{CommandCorruption, NoiseConfig, SamplingConfig};
use crate::planners::{
    plan_expert, CommandPlanner, ExpertPlanner, ExpertTrajectory, Planner, PlannerKind, SngPlanner,
};
use crate::sim::{EpisodeConfig, NavVariant};

pub use render::{render_svg, Overlays};
pub use table::{emit_rows_csv, emit_table, TableFormat};

/// Environment variable capping the worker count.
pub const THREADS_ENV: &str = "SNGBENCH_THREADS";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HarnessError {
    #[error("invalid experiment spec: {0}")]
    InvalidSpec(String),
    #[error("unknown scenario {0:?}")]
    UnknownScenario(String),
    #[error("scenario {id}: {message}")]
    Scenario { id: String, message: String },
    #[error("{failed} of {total} cells failed; first: {first}")]
    CellsFailed {
        failed: usize,
        total: usize,
        first: String,
    },
    #[error("worker pool: {0}")]
    Pool(String),
}

/// Navigation input family of an arm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NavKind {
    None,
    Command,
    Sng,
}

/// One arm as written in a spec file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArmSpec {
    /// Row label; derived from the other fields when absent.
    #[serde(default)]
    pub label: Option<String>,
    pub planner: String,
    pub nav: NavKind,
    #[serde(default)]
    pub corruption: Option<String>,
    /// `COUNTxSPACING`, e.g. `4x10`.
    #[serde(default)]
    pub sampling: Option<String>,
    #[serde(default)]
    pub tbt: bool,
    /// Path noise on SNG arms.
    #[serde(default = "default_true")]
    pub noise: bool,
}

fn default_true() -> bool {
    true
}

/// A validated arm.
#[derive(Debug, Clone, PartialEq)]
pub struct Arm {
    pub label: String,
    pub planner: PlannerKind,
    pub nav: NavVariant,
}

impl ArmSpec {
    pub fn resolve(&self) -> Result<Arm, HarnessError> {
        let bad = |m: String| HarnessError::InvalidSpec(m);
        let planner = PlannerKind::parse(&self.planner)
            .ok_or_else(|| bad(format!("unknown planner {:?}", self.planner)))?;
        if self.corruption.is_some() && self.nav != NavKind::Command {
            return Err(bad("corruption only applies to command arms".into()));
        }
        if (self.sampling.is_some() || self.tbt) && self.nav != NavKind::Sng {
            return Err(bad("sampling and tbt only apply to sng arms".into()));
        }
        let compatible = matches!(
            (planner, self.nav),
            (PlannerKind::Expert, NavKind::None)
                | (PlannerKind::Command, NavKind::None | NavKind::Command)
                | (PlannerKind::Sng, NavKind::Sng)
        );
        if !compatible {
            return Err(bad(format!(
                "planner {planner} cannot take {:?} input",
                self.nav
            )));
        }
        let nav = match self.nav {
            NavKind::None => NavVariant::NoNav,
            NavKind::Command => {
                let c = self.corruption.as_deref().unwrap_or("original");
                NavVariant::command(
                    CommandCorruption::parse(c)
                        .ok_or_else(|| bad(format!("unknown corruption {c:?}")))?,
                )
            }
            NavKind::Sng => {
                let sampling = self
                    .sampling
                    .as_deref()
                    .map(SamplingConfig::parse)
                    .transpose()
                    .map_err(|e| bad(e.to_string()))?;
                if sampling.is_none() && !self.tbt {
                    return Err(bad("sng arm needs a path, tbt, or both".into()));
                }
                NavVariant::Sng {
                    sampling,
                    tbt: self.tbt,
                    noise: (self.noise && sampling.is_some()).then_some((
                        NoiseConfig::DEFAULT_SIGMA_LAT,
                        NoiseConfig::DEFAULT_SIGMA_LON,
                    )),
                }
            }
        };
        let label = self
            .label
            .clone()
            .unwrap_or_else(|| format!("{planner}/{}", nav.describe()));
        Ok(Arm {
            label,
            planner,
            nav,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    /// Bundled scenario ids or paths to scenario files.
    pub scenario_ids: Vec<String>,
    pub arms: Vec<ArmSpec>,
    pub seeds: Vec<u64>,
    #[serde(default = "default_replan")]
    pub replan_period: f64,
    /// Abort with an error when any cell fails.
    #[serde(default)]
    pub strict: bool,
}

fn default_replan() -> f64 {
    0.5
}

fn arm(
    label: &str,
    planner: &str,
    nav: NavKind,
    corruption: Option<&str>,
    sampling: Option<&str>,
    tbt: bool,
) -> ArmSpec {
    ArmSpec {
        label: Some(label.to_string()),
        planner: planner.to_string(),
        nav,
        corruption: corruption.map(str::to_string),
        sampling: sampling.map(str::to_string),
        tbt,
        noise: true,
    }
}

impl ExperimentSpec {
    /// Navigation-representation grid: no navigation, command, TBT only,
    /// then each path density without and with TBT.
    pub fn representation_grid(scenario_ids: Vec<String>, seeds: Vec<u64>) -> Self {
        let mut arms = vec![
            arm("no-nav", "command", NavKind::None, None, None, false),
            arm("command", "command", NavKind::Command, None, None, false),
            arm("tbt", "sng", NavKind::Sng, None, None, true),
        ];
        for s in ["2x20", "4x10", "8x5"] {
            arms.push(arm(s, "sng", NavKind::Sng, None, Some(s), false));
            arms.push(arm(
                &format!("{s}+tbt"),
                "sng",
                NavKind::Sng,
                None,
                Some(s),
                true,
            ));
        }
        ExperimentSpec {
            scenario_ids,
            arms,
            seeds,
            replan_period: default_replan(),
            strict: false,
        }
    }

    /// One command arm per corruption mode.
    pub fn corruption_grid(scenario_ids: Vec<String>, seeds: Vec<u64>) -> Self {
        let arms = CommandCorruption::ALL
            .iter()
            .map(|c| {
                arm(
                    c.as_str(),
                    "command",
                    NavKind::Command,
                    Some(c.as_str()),
                    None,
                    false,
                )
            })
            .collect();
        ExperimentSpec {
            scenario_ids,
            arms,
            seeds,
            replan_period: default_replan(),
            strict: false,
        }
    }

    pub fn from_json(text: &str) -> Result<Self, HarnessError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| HarnessError::InvalidSpec(e.to_string()))
    }

    pub fn validate(&self) -> Result<Vec<Arm>, HarnessError> {
        if self.scenario_ids.is_empty() {
            return Err(HarnessError::InvalidSpec("no scenarios".into()));
        }
        if self.seeds.is_empty() {
            return Err(HarnessError::InvalidSpec("no seeds".into()));
        }
        if self.arms.is_empty() {
            return Err(HarnessError::InvalidSpec("no arms".into()));
        }
        if !(self.replan_period > 0.0) {
            return Err(HarnessError::InvalidSpec(format!(
                "replan period must be positive, got {}",
                self.replan_period
            )));
        }
        let arms = self
            .arms
            .iter()
            .map(ArmSpec::resolve)
            .collect::<Result<Vec<_>, _>>()?;
        let mut seen = BTreeMap::new();
        for a in &arms {
            if seen.insert(a.label.clone(), ()).is_some() {
                return Err(HarnessError::InvalidSpec(format!(
                    "duplicate arm label {:?}",
                    a.label
                )));
            }
        }
        Ok(arms)
    }
}

/// Bundled scenario by id, or a scenario file by path.
pub fn resolve_scenario(id: &str) -> Result<Scenario, HarnessError> {
    if let Some(g) = bundled(id) {
        return Ok(g.scenario);
    }
    let path = Path::new(id);
    if path.is_file() {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::Scenario {
            id: id.to_string(),
            message: e.to_string(),
        })?;
        return parse_scenario(&text).map_err(|e| HarnessError::Scenario {
            id: id.to_string(),
            message: e.to_string(),
        });
    }
    Err(HarnessError::UnknownScenario(id.to_string()))
}

/// Per-episode seed: the first eight bytes of SHA-256 over the experiment seed,
/// scenario id and arm label.
pub fn episode_seed(seed: u64, scenario_id: &str, arm: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update([0]);
    h.update(scenario_id.as_bytes());
    h.update([0]);
    h.update(arm.as_bytes());
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("digest is 32 bytes"))
}

/// Worker count from `SNGBENCH_THREADS`; `None` when unset or invalid.
pub fn threads_from_env() -> Option<usize> {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|n| *n > 0)
}

/// One scenario × arm × seed cell.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub scenario_id: String,
    pub arm_index: usize,
    pub arm: String,
    pub seed: u64,
    pub outcome: Result<MetricReport, String>,
}

/// Means over the successful cells of one arm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub arm_index: usize,
    pub arm: String,
    pub episodes: usize,
    pub failed: usize,
    pub nc: f64,
    pub dac: f64,
    pub ttc: f64,
    pub comf: f64,
    pub ep: f64,
    pub pdms: f64,
    pub driving_score: f64,
    /// Percent of episodes counted as successful.
    pub success_rate: f64,
    pub efficiency: f64,
    pub comfortness: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultsTable {
    pub rows: Vec<ResultRow>,
    pub aggregates: Vec<AggregateRow>,
}

impl ResultsTable {
    pub fn from_rows(mut rows: Vec<ResultRow>, arms: &[Arm]) -> Self {
        rows.sort_by(|a, b| {
            a.arm_index
                .cmp(&b.arm_index)
                .then_with(|| a.scenario_id.cmp(&b.scenario_id))
                .then(a.seed.cmp(&b.seed))
        });
        let aggregates = arms
            .iter()
            .enumerate()
            .map(|(i, arm)| aggregate(i, &arm.label, rows.iter().filter(|r| r.arm_index == i)))
            .collect();
        ResultsTable { rows, aggregates }
    }

    /// Keeps only the aggregate rows accepted by `keep`.
    pub fn filter_aggregates(&self, keep: impl Fn(&AggregateRow) -> bool) -> ResultsTable {
        ResultsTable {
            rows: self.rows.clone(),
            aggregates: self
                .aggregates
                .iter()
                .filter(|a| keep(a))
                .cloned()
                .collect(),
        }
    }

    pub fn failures(&self) -> impl Iterator<Item = &ResultRow> {
        self.rows.iter().filter(|r| r.outcome.is_err())
    }
}

fn aggregate<'a>(
    arm_index: usize,
    arm: &str,
    rows: impl Iterator<Item = &'a ResultRow>,
) -> AggregateRow {
    let mut ok: Vec<&MetricReport> = Vec::new();
    let mut failed = 0;
    for r in rows {
        match &r.outcome {
            Ok(m) => ok.push(m),
            Err(_) => failed += 1,
        }
    }
    let mean = |f: &dyn Fn(&MetricReport) -> f64| {
        if ok.is_empty() {
            0.0
        } else {
            ok.iter().map(|m| f(m)).sum::<f64>() / ok.len() as f64
        }
    };
    AggregateRow {
        arm_index,
        arm: arm.to_string(),
        episodes: ok.len(),
        failed,
        nc: mean(&|m| m.sub.nc),
        dac: mean(&|m| m.sub.dac),
        ttc: mean(&|m| m.sub.ttc),
        comf: mean(&|m| m.sub.comf),
        ep: mean(&|m| m.sub.ep),
        pdms: mean(&|m| m.pdms),
        driving_score: mean(&|m| m.closed.driving_score),
        success_rate: 100.0 * mean(&|m| if m.closed.success { 1.0 } else { 0.0 }),
        efficiency: mean(&|m| m.closed.efficiency),
        comfortness: mean(&|m| m.closed.comfortness),
    }
}

/// A fresh planner instance of the given kind for one scenario.
pub fn make_planner(kind: PlannerKind, scenario: &Scenario) -> Result<Box<dyn Planner>, String> {
    Ok(match kind {
        PlannerKind::Expert => Box::new(ExpertPlanner::new(scenario).map_err(|e| e.to_string())?),
        PlannerKind::Command => Box::new(CommandPlanner::default()),
        PlannerKind::Sng => Box::new(SngPlanner::default()),
    })
}

/// Runs every cell on a worker pool of `threads` workers (`None`: the
/// `SNGBENCH_THREADS` cap, else one per core). Output does not depend on
/// the worker count.
pub fn run_ablation(
    spec: &ExperimentSpec,
    threads: Option<usize>,
) -> Result<ResultsTable, HarnessError> {
    let arms = spec.validate()?;
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads.or_else(threads_from_env) {
        pool = pool.num_threads(n);
    }
    let pool = pool
        .build()
        .map_err(|e| HarnessError::Pool(e.to_string()))?;

    let scenarios: Vec<Scenario> = spec
        .scenario_ids
        .iter()
        .map(|id| resolve_scenario(id))
        .collect::<Result<_, _>>()?;
    let rows = pool.install(|| {
        let experts: Vec<Result<ExpertTrajectory, String>> = scenarios
            .par_iter()
            .map(|s| plan_expert(s).map_err(|e| e.to_string()))
            .collect();
        let cells: Vec<(usize, usize, u64)> = (0..arms.len())
            .flat_map(|a| {
                (0..scenarios.len())
                    .flat_map(move |s| spec.seeds.iter().map(move |&seed| (a, s, seed)))
            })
            .collect();
        cells
            .par_iter()
            .map(|&(a, si, seed)| {
                let scenario = &scenarios[si];
                let arm = &arms[a];
                let outcome = run_cell(scenario, arm, &experts[si], seed, spec.replan_period);
                ResultRow {
                    scenario_id: scenario.id.clone(),
                    arm_index: a,
                    arm: arm.label.clone(),
                    seed,
                    outcome,
                }
            })
            .collect::<Vec<_>>()
    });
    let table = ResultsTable::from_rows(rows, &arms);
    if spec.strict {
        let failed: Vec<&ResultRow> = table.failures().collect();
        if let Some(first) = failed.first() {
            return Err(HarnessError::CellsFailed {
                failed: failed.len(),
                total: table.rows.len(),
                first: format!(
                    "{} / {} / seed {}: {}",
                    first.scenario_id,
                    first.arm,
                    first.seed,
                    first.outcome.as_ref().err().cloned().unwrap_or_default()
                ),
            });
        }
    }
    Ok(table)
}

fn run_cell(
    scenario: &Scenario,
    arm: &Arm,
    expert: &Result<ExpertTrajectory, String>,
    seed: u64,
    replan_period: f64,
) -> Result<MetricReport, String> {
    let expert = expert
        .as_ref()
        .map_err(|e| format!("expert rollout failed: {e}"))?;
    let planner = make_planner(arm.planner, scenario)?;
    let cfg = EpisodeConfig {
        replan_period,
        nav: arm.nav,
        seed: episode_seed(seed, &scenario.id, &arm.label),
        ..EpisodeConfig::default()
    };
    evaluate(
        scenario,
        planner.as_ref(),
        &cfg,
        expert,
        &ComfortBounds::default(),
    )
    .map(|e| e.report)
    .map_err(|e| e.to_string())
}

impl fmt::Display for NavKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NavKind::None => "none",
            NavKind::Command => "command",
            NavKind::Sng => "sng",
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(arms: Vec<ArmSpec>) -> ExperimentSpec {
        ExperimentSpec {
            scenario_ids: vec!["straight_empty".into()],
            arms,
            seeds: vec![0],
            replan_period: 0.5,
            strict: false,
        }
    }

    #[test]
    fn arm_validation() {
        let mut a = arm("x", "command", NavKind::Sng, None, Some("4x10"), false);
        assert!(a.resolve().is_err());
        a.planner = "sng".into();
        assert!(a.resolve().is_ok());
        a.corruption = Some("left".into());
        assert!(a.resolve().is_err());
        let b = arm("y", "sng", NavKind::Sng, None, None, false);
        assert!(b.resolve().is_err());
        let c = arm("z", "expert", NavKind::Command, None, None, false);
        assert!(c.resolve().is_err());
    }

    #[test]
    fn grids_have_expected_shape() {
        let g = ExperimentSpec::representation_grid(vec!["a".into()], vec![0]);
        let labels: Vec<String> = g.validate().unwrap().into_iter().map(|a| a.label).collect();
        assert_eq!(
            labels,
            [
                "no-nav", "command", "tbt", "2x20", "2x20+tbt", "4x10", "4x10+tbt", "8x5",
                "8x5+tbt"
            ]
        );
        let c = ExperimentSpec::corruption_grid(vec!["a".into()], vec![0]);
        assert_eq!(c.validate().unwrap().len(), 6);
    }

    #[test]
    fn smallest_spec_gives_one_row() {
        let t = run_ablation(
            &spec(vec![arm("e", "expert", NavKind::None, None, None, false)]),
            Some(1),
        )
        .unwrap();
        assert_eq!(t.rows.len(), 1);
        assert_eq!(t.aggregates.len(), 1);
        assert!((t.rows[0].outcome.as_ref().unwrap().pdms - 1.0).abs() < 1e-12);
    }

    #[test]
    fn unknown_scenario_is_rejected() {
        let mut s = spec(vec![arm("e", "expert", NavKind::None, None, None, false)]);
        s.scenario_ids = vec!["nope".into()];
        assert!(matches!(
            run_ablation(&s, Some(1)),
            Err(HarnessError::UnknownScenario(_))
        ));
    }

    #[test]
    fn seeds_differ_by_arm() {
        assert_ne!(episode_seed(0, "s", "a"), episode_seed(0, "s", "b"));
        assert_eq!(episode_seed(7, "s", "a"), episode_seed(7, "s", "a"));
    }

    #[test]
    fn spec_json_is_strict() {
        let ok = r#"{"scenario_ids":["straight_empty"],"arms":[{"planner":"expert","nav":"none"}],"seeds":[1]}"#;
        assert!(ExperimentSpec::from_json(ok).is_ok());
        let bad = r#"{"scenario_ids":[],"arms":[],"seeds":[],"extra":1}"#;
        assert!(ExperimentSpec::from_json(bad).is_err());
    }
}
