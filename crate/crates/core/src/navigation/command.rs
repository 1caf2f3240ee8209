use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{CommandCorruption, DrivingCommand, NavError};
use crate::geometry::{interpolate_timed, normalize_angle, Pose, TimedPose};

pub const DEFAULT_HORIZON_S: f64 = 4.0;
pub const DEFAULT_LATERAL_THRESHOLD: f64 = 1.0;

/// Exit headings beyond this magnitude fall in a turn region, radians.
const TURN_REGION: f64 = std::f64::consts::PI / 6.0;

/// How far ahead on the expert trajectory the annotator looks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Horizon {
    /// Seconds after `t_now`.
    Temporal(f64),
    /// Meters traveled after `t_now`.
    Spatial(f64),
}

impl Default for Horizon {
    fn default() -> Self {
        Horizon::Temporal(DEFAULT_HORIZON_S)
    }
}

/// Fixed-horizon command label: the lateral offset of the future expert pose
/// in the frame of the current one decides left, right or forward.
pub fn annotate_driving_command(
    expert: &[TimedPose],
    t_now: f64,
    horizon: f64,
    lateral_threshold: f64,
) -> DrivingCommand {
    annotate_with(expert, t_now, Horizon::Temporal(horizon), lateral_threshold)
}

pub fn annotate_with(
    expert: &[TimedPose],
    t_now: f64,
    horizon: Horizon,
    lateral_threshold: f64,
) -> DrivingCommand {
    let Some(now) = interpolate_timed(expert, t_now) else {
        return DrivingCommand::Unknown;
    };
    let future = match horizon {
        Horizon::Temporal(h) => interpolate_timed(expert, t_now + h),
        Horizon::Spatial(d) => pose_after_distance(expert, t_now, now, d),
    };
    let Some(future) = future else {
        return DrivingCommand::Unknown;
    };
    let y = now.to_local(future.position).y;
    if y > lateral_threshold {
        DrivingCommand::TurnLeft
    } else if y < -lateral_threshold {
        DrivingCommand::TurnRight
    } else {
        DrivingCommand::GoForward
    }
}

fn pose_after_distance(expert: &[TimedPose], t_now: f64, now: Pose, d: f64) -> Option<Pose> {
    let mut travelled = 0.0;
    let mut prev = now;
    for tp in expert.iter().filter(|tp| tp.t > t_now) {
        let step = prev.position.dist(tp.pose.position);
        if travelled + step >= d && step > 0.0 {
            let u = (d - travelled) / step;
            let dh = normalize_angle(tp.pose.heading - prev.heading);
            return Some(Pose::new(
                prev.position.lerp(tp.pose.position, u),
                prev.heading + dh * u,
            ));
        }
        travelled += step;
        prev = tp.pose;
    }
    None
}

/// Applies a corruption mode. `Random` draws uniformly from the three
/// actionable commands with a generator seeded by `seed`.
pub fn corrupt_command(cmd: DrivingCommand, mode: CommandCorruption, seed: u64) -> DrivingCommand {
    match mode {
        CommandCorruption::Original => cmd,
        CommandCorruption::NoneRemoved => DrivingCommand::Unknown,
        CommandCorruption::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            DrivingCommand::ACTIONABLE[rng.random_range(0..3)]
        }
        CommandCorruption::FixedLeft => DrivingCommand::TurnLeft,
        CommandCorruption::FixedRight => DrivingCommand::TurnRight,
        CommandCorruption::FixedForward => DrivingCommand::GoForward,
    }
}

/// Command region of a relative exit heading.
pub(crate) fn heading_region(heading: f64) -> DrivingCommand {
    let h = normalize_angle(heading);
    if h > TURN_REGION {
        DrivingCommand::TurnLeft
    } else if h < -TURN_REGION {
        DrivingCommand::TurnRight
    } else {
        DrivingCommand::GoForward
    }
}

/// Indices of the exits a command is consistent with.
pub fn command_ambiguity(
    exit_headings: &[f64],
    cmd: DrivingCommand,
) -> Result<BTreeSet<usize>, NavError> {
    if exit_headings.len() < 2 {
        return Err(NavError::TooFewExits(exit_headings.len()));
    }
    Ok(exit_headings
        .iter()
        .enumerate()
        .filter(|(_, h)| cmd == DrivingCommand::Unknown || heading_region(**h) == cmd)
        .map(|(i, _)| i)
        .collect())
}
