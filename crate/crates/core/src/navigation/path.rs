use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::{NavError, NavigationPath, NoiseConfig, SamplingConfig, ON_ROUTE_TOLERANCE};
use crate::geometry::{resample_from, to_ego_frame, Point2, Pose};
use crate::map::GlobalRoute;

/// Route points ahead of the ego's projection, expressed in the ego frame.
pub fn sample_navigation_path(
    route: &GlobalRoute,
    ego: &Pose,
    cfg: SamplingConfig,
) -> Result<NavigationPath, NavError> {
    cfg.validate()?;
    let proj = route.locate(ego.position, ego.heading);
    if proj.distance > ON_ROUTE_TOLERANCE {
        return Err(NavError::OffRoute {
            distance: proj.distance,
            limit: ON_ROUTE_TOLERANCE,
        });
    }
    let remaining = route.length() - proj.s;
    if remaining + 1e-9 < cfg.reach() {
        return Err(NavError::RouteTooShort {
            remaining,
            needed: cfg.reach(),
        });
    }
    let world = resample_from(&route.centerline, proj.s, cfg.spacing, cfg.count)?;
    Ok(NavigationPath {
        points: to_ego_frame(ego, &world),
        config: cfg,
        noisy: false,
    })
}

/// Adds independent Gaussian offsets to every point: `sigma_lon` along the
/// local path direction, `sigma_lat` across it.
pub fn apply_path_noise(
    path: &NavigationPath,
    noise: &NoiseConfig,
) -> Result<NavigationPath, NavError> {
    if path.noisy {
        return Err(NavError::AlreadyNoisy);
    }
    let bad = |what: &str| NavError::InvalidConfig(format!("{what} must be finite and >= 0"));
    let lon = Normal::new(0.0, noise.sigma_lon).map_err(|_| bad("sigma_lon"))?;
    let lat = Normal::new(0.0, noise.sigma_lat).map_err(|_| bad("sigma_lat"))?;
    let mut rng = ChaCha8Rng::seed_from_u64(noise.seed);
    let pts = &path.points;
    let points = (0..pts.len())
        .map(|i| {
            let prev = if i == 0 { Point2::ORIGIN } else { pts[i - 1] };
            let next = pts.get(i + 1).copied().unwrap_or(pts[i]);
            let mut tangent = (next - prev).normalized();
            if tangent.norm() == 0.0 {
                tangent = Point2::new(1.0, 0.0);
            }
            let d_lon = lon.sample(&mut rng);
            let d_lat = lat.sample(&mut rng);
            pts[i] + tangent * d_lon + tangent.perp() * d_lat
        })
        .collect();
    Ok(NavigationPath {
        points,
        config: path.config,
        noisy: true,
    })
}
