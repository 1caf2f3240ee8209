use serde::{Deserialize, Serialize};

use super::{
    apply_path_noise, compute_tbt, render_tbt_text, DrivingAction, NavError, NoiseConfig,
    SamplingConfig, Sng, SupplementaryAction, TbtConfig,
};
use crate::geometry::{Point2, Pose};
use crate::map::{GlobalRoute, RoadGraph};

/// Samples the path, perturbs it when `noise` is given, and attaches TBT.
pub fn build_sng(
    route: &GlobalRoute,
    ego: &Pose,
    speed: f64,
    graph: &RoadGraph,
    cfg: SamplingConfig,
    noise: Option<&NoiseConfig>,
) -> Result<Sng, NavError> {
    let mut path = super::sample_navigation_path(route, ego, cfg)?;
    if let Some(n) = noise {
        path = apply_path_noise(&path, n)?;
    }
    let tbt = compute_tbt(route, ego, speed, graph, &TbtConfig::default())?;
    Ok(Sng { path, tbt })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathDoc {
    pub points: Vec<Point2>,
    pub spacing: f64,
    pub count: usize,
    pub noisy: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TbtDoc {
    pub current: DrivingAction,
    pub distance_m: f64,
    pub time_s: f64,
    pub future: DrivingAction,
    pub supplementary: SupplementaryAction,
}

/// Canonical JSON shape of an SNG.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SngDoc {
    pub path: PathDoc,
    pub tbt: TbtDoc,
    pub text: String,
}

impl From<&Sng> for SngDoc {
    fn from(s: &Sng) -> Self {
        SngDoc {
            path: PathDoc {
                points: s.path.points.clone(),
                spacing: s.path.config.spacing,
                count: s.path.config.count,
                noisy: s.path.noisy,
            },
            tbt: TbtDoc {
                current: s.tbt.current,
                distance_m: s.tbt.distance_to_maneuver,
                time_s: s.tbt.time_to_maneuver,
                future: s.tbt.future,
                supplementary: s.tbt.supplementary,
            },
            text: render_tbt_text(&s.tbt),
        }
    }
}

/// Compact canonical JSON; field order is fixed.
pub fn sng_to_json(sng: &Sng) -> String {
    serde_json::to_string(&SngDoc::from(sng)).expect("SNG documents always serialize")
}
