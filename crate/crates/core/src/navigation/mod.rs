//! Navigation inputs: sampled route paths, turn-by-turn (TBT) guidance, their
//! combination (SNG), and legacy driving commands with corruption modes.

mod command;
mod path;
mod sng;
mod tbt;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{GeometryError, Point2};
use crate::map::EdgeTag;

pub use command::{
    annotate_driving_command, annotate_with, command_ambiguity, corrupt_command, Horizon,
    DEFAULT_HORIZON_S, DEFAULT_LATERAL_THRESHOLD,
};
pub use path::{apply_path_noise, sample_navigation_path};
pub use sng::{build_sng, sng_to_json, SngDoc};
pub use tbt::{
    classify_current_action, compute_tbt, find_maneuvers, predict_future_action, render_tbt_text,
    Maneuver, TbtConfig,
};

/// Forward reach of the sampled navigation path, meters.
pub const PATH_RANGE: f64 = 40.0;

/// Maximum distance from the route for the ego to count as on it.
pub const ON_ROUTE_TOLERANCE: f64 = 5.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NavError {
    #[error("ego is {distance:.2} m from the route (limit {limit} m)")]
    OffRoute { distance: f64, limit: f64 },
    #[error("route has {remaining:.2} m left but the path needs {needed:.2} m")]
    RouteTooShort { remaining: f64, needed: f64 },
    #[error("path noise was already applied")]
    AlreadyNoisy,
    #[error("at least two exits are needed, got {0}")]
    TooFewExits(usize),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Point count and spacing of the navigation path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplingConfig {
    pub count: usize,
    pub spacing: f64,
}

impl SamplingConfig {
    pub const SPARSE: SamplingConfig = SamplingConfig {
        count: 2,
        spacing: 20.0,
    };
    pub const MEDIUM: SamplingConfig = SamplingConfig {
        count: 4,
        spacing: 10.0,
    };
    pub const DENSE: SamplingConfig = SamplingConfig {
        count: 8,
        spacing: 5.0,
    };
    pub const PRESETS: [SamplingConfig; 3] = [Self::SPARSE, Self::MEDIUM, Self::DENSE];

    pub fn new(count: usize, spacing: f64) -> Result<Self, NavError> {
        let cfg = SamplingConfig { count, spacing };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), NavError> {
        if self.count == 0 || !(self.spacing > 0.0) || !self.spacing.is_finite() {
            return Err(NavError::InvalidConfig(format!(
                "count and spacing must be positive, got {}x{}",
                self.count, self.spacing
            )));
        }
        if self.reach() > PATH_RANGE + 1e-9 {
            return Err(NavError::InvalidConfig(format!(
                "{}x{} reaches past {PATH_RANGE} m",
                self.count, self.spacing
            )));
        }
        Ok(())
    }

    pub fn reach(&self) -> f64 {
        self.count as f64 * self.spacing
    }

    /// Parses `CxS`, e.g. `4x10`.
    pub fn parse(text: &str) -> Result<Self, NavError> {
        let bad = || NavError::InvalidConfig(format!("expected COUNTxSPACING, got {text:?}"));
        let (c, s) = text.split_once(['x', 'X']).ok_or_else(bad)?;
        let count = c.trim().parse().map_err(|_| bad())?;
        let spacing = s.trim().parse().map_err(|_| bad())?;
        Self::new(count, spacing)
    }
}

impl fmt::Display for SamplingConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}", self.count, self.spacing)
    }
}

/// Gaussian perturbation of path points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseConfig {
    pub sigma_lat: f64,
    pub sigma_lon: f64,
    pub seed: u64,
}

impl NoiseConfig {
    pub const DEFAULT_SIGMA_LAT: f64 = 0.5;
    pub const DEFAULT_SIGMA_LON: f64 = 1.0;

    pub fn with_seed(seed: u64) -> Self {
        NoiseConfig {
            sigma_lat: Self::DEFAULT_SIGMA_LAT,
            sigma_lon: Self::DEFAULT_SIGMA_LON,
            seed,
        }
    }
}

/// Route points ahead of the ego, in the ego frame.
#[derive(Debug, Clone, PartialEq)]
pub struct NavigationPath {
    pub points: Vec<Point2>,
    pub config: SamplingConfig,
    pub noisy: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DrivingAction {
    TurnLeft,
    TurnRight,
    UTurn,
    ProceedStraight,
    KeepLeft,
    KeepRight,
    EnterRoundabout,
    None,
}

impl DrivingAction {
    pub const ALL: [DrivingAction; 8] = [
        DrivingAction::TurnLeft,
        DrivingAction::TurnRight,
        DrivingAction::UTurn,
        DrivingAction::ProceedStraight,
        DrivingAction::KeepLeft,
        DrivingAction::KeepRight,
        DrivingAction::EnterRoundabout,
        DrivingAction::None,
    ];

    pub fn phrase(self) -> &'static str {
        match self {
            DrivingAction::TurnLeft => "turn left",
            DrivingAction::TurnRight => "turn right",
            DrivingAction::UTurn => "make a U-turn",
            DrivingAction::ProceedStraight => "proceed straight",
            DrivingAction::KeepLeft => "keep left",
            DrivingAction::KeepRight => "keep right",
            DrivingAction::EnterRoundabout => "enter the roundabout",
            DrivingAction::None => "none",
        }
    }

    /// Left/right swap under reflection about the ego x-axis.
    pub fn mirrored(self) -> Self {
        match self {
            DrivingAction::TurnLeft => DrivingAction::TurnRight,
            DrivingAction::TurnRight => DrivingAction::TurnLeft,
            DrivingAction::KeepLeft => DrivingAction::KeepRight,
            DrivingAction::KeepRight => DrivingAction::KeepLeft,
            other => other,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SupplementaryAction {
    EnterHighway,
    EnterTunnel,
    EnterRightTurnLane,
    EnterLeftTurnLane,
    Merge,
    ExitRamp,
    IntersectionApproach,
    EnterRoundaboutLane,
    None,
}

impl SupplementaryAction {
    pub const ALL: [SupplementaryAction; 9] = [
        SupplementaryAction::EnterHighway,
        SupplementaryAction::EnterTunnel,
        SupplementaryAction::EnterRightTurnLane,
        SupplementaryAction::EnterLeftTurnLane,
        SupplementaryAction::Merge,
        SupplementaryAction::ExitRamp,
        SupplementaryAction::IntersectionApproach,
        SupplementaryAction::EnterRoundaboutLane,
        SupplementaryAction::None,
    ];

    pub fn from_tag(tag: Option<EdgeTag>) -> Self {
        match tag {
            Some(EdgeTag::Roundabout) => SupplementaryAction::EnterRoundaboutLane,
            Some(EdgeTag::Highway) => SupplementaryAction::EnterHighway,
            Some(EdgeTag::Tunnel) => SupplementaryAction::EnterTunnel,
            Some(EdgeTag::RightTurnLane) => SupplementaryAction::EnterRightTurnLane,
            Some(EdgeTag::LeftTurnLane) => SupplementaryAction::EnterLeftTurnLane,
            Some(EdgeTag::Merge) => SupplementaryAction::Merge,
            Some(EdgeTag::ExitRamp) => SupplementaryAction::ExitRamp,
            Some(EdgeTag::IntersectionApproach) => SupplementaryAction::IntersectionApproach,
            Some(EdgeTag::None) | None => SupplementaryAction::None,
        }
    }

    pub fn phrase(self) -> &'static str {
        match self {
            SupplementaryAction::EnterHighway => "highway",
            SupplementaryAction::EnterTunnel => "tunnel",
            SupplementaryAction::EnterRightTurnLane => "right-turn lane",
            SupplementaryAction::EnterLeftTurnLane => "left-turn lane",
            SupplementaryAction::Merge => "merge",
            SupplementaryAction::ExitRamp => "exit ramp",
            SupplementaryAction::IntersectionApproach => "intersection approach",
            SupplementaryAction::EnterRoundaboutLane => "roundabout lane",
            SupplementaryAction::None => "none",
        }
    }
}

/// Structured turn-by-turn guidance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TbtInfo {
    pub current: DrivingAction,
    pub distance_to_maneuver: f64,
    pub time_to_maneuver: f64,
    pub future: DrivingAction,
    pub supplementary: SupplementaryAction,
}

/// Navigation path plus TBT guidance.
#[derive(Debug, Clone, PartialEq)]
pub struct Sng {
    pub path: NavigationPath,
    pub tbt: TbtInfo,
}

/// Legacy one-hot navigation label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DrivingCommand {
    TurnLeft,
    GoForward,
    TurnRight,
    Unknown,
}

impl DrivingCommand {
    pub const ACTIONABLE: [DrivingCommand; 3] = [
        DrivingCommand::TurnLeft,
        DrivingCommand::GoForward,
        DrivingCommand::TurnRight,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            DrivingCommand::TurnLeft => "turn_left",
            DrivingCommand::GoForward => "go_forward",
            DrivingCommand::TurnRight => "turn_right",
            DrivingCommand::Unknown => "unknown",
        }
    }

    pub fn mirrored(self) -> Self {
        match self {
            DrivingCommand::TurnLeft => DrivingCommand::TurnRight,
            DrivingCommand::TurnRight => DrivingCommand::TurnLeft,
            other => other,
        }
    }
}

impl fmt::Display for DrivingCommand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// How the annotated command is altered before a planner sees it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CommandCorruption {
    Original,
    #[serde(rename = "none")]
    NoneRemoved,
    Random,
    #[serde(rename = "left")]
    FixedLeft,
    #[serde(rename = "right")]
    FixedRight,
    #[serde(rename = "forward")]
    FixedForward,
}

impl CommandCorruption {
    pub const ALL: [CommandCorruption; 6] = [
        CommandCorruption::Original,
        CommandCorruption::NoneRemoved,
        CommandCorruption::Random,
        CommandCorruption::FixedLeft,
        CommandCorruption::FixedRight,
        CommandCorruption::FixedForward,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            CommandCorruption::Original => "original",
            CommandCorruption::NoneRemoved => "none",
            CommandCorruption::Random => "random",
            CommandCorruption::FixedLeft => "left",
            CommandCorruption::FixedRight => "right",
            CommandCorruption::FixedForward => "forward",
        }
    }

    pub fn parse(text: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|m| m.as_str() == text)
    }
}

impl fmt::Display for CommandCorruption {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_reach_forty_meters() {
        for p in SamplingConfig::PRESETS {
            assert_eq!(p.reach(), PATH_RANGE);
            p.validate().unwrap();
        }
        assert!(SamplingConfig::new(5, 10.0).is_err());
        assert_eq!(
            SamplingConfig::parse("4x10").unwrap(),
            SamplingConfig::MEDIUM
        );
        assert!(SamplingConfig::parse("4-10").is_err());
    }

    #[test]
    fn closed_vocabularies() {
        assert_eq!(DrivingAction::ALL.len(), 8);
        assert_eq!(SupplementaryAction::ALL.len(), 9);
        assert_eq!(CommandCorruption::ALL.len(), 6);
        for tag in EdgeTag::ALL {
            let s = SupplementaryAction::from_tag(Some(tag));
            assert_eq!(s == SupplementaryAction::None, tag == EdgeTag::None);
        }
        for m in CommandCorruption::ALL {
            assert_eq!(CommandCorruption::parse(m.as_str()), Some(m));
            let json = serde_json::to_string(&m).unwrap();
            assert_eq!(json, format!("\"{}\"", m.as_str()));
        }
    }
}
