//! Inverse geodesic on the WGS-84 ellipsoid (Vincenty's iteration), with a
//! haversine fallback for the near-antipodal pairs where the iteration does
//! not converge.

use crate::error::{Error, Result};
use crate::ingest::GpsPoint;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ellipsoid {
    /// Semi-major axis in meters.
    pub a: f64,
    /// Flattening.
    pub f: f64,
}

impl Ellipsoid {
    pub const WGS84: Ellipsoid = Ellipsoid {
        a: 6_378_137.0,
        f: 1.0 / 298.257_223_563,
    };

    pub fn b(&self) -> f64 {
        self.a * (1.0 - self.f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeodesicConfig {
    pub ellipsoid: Ellipsoid,
    /// Convergence threshold on the longitude-on-auxiliary-sphere update, radians.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Mean Earth radius used by the haversine fallback.
    pub fallback_radius: f64,
}

impl Default for GeodesicConfig {
    fn default() -> Self {
        GeodesicConfig {
            ellipsoid: Ellipsoid::WGS84,
            tolerance: 1e-12,
            max_iterations: 200,
            fallback_radius: 6_371_008.8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeodesicDistance {
    pub meters: f64,
    /// Set when the iteration failed to converge and the haversine distance
    /// was returned instead.
    pub fallback: bool,
}

pub fn haversine(p1: &GpsPoint, p2: &GpsPoint, radius: f64) -> f64 {
    let (phi1, phi2) = (p1.lat.to_radians(), p2.lat.to_radians());
    let dphi = phi2 - phi1;
    let dlambda = (p2.lon - p1.lon).to_radians();
    let h = (dphi / 2.0).sin().powi(2) + phi1.cos() * phi2.cos() * (dlambda / 2.0).sin().powi(2);
    2.0 * radius * h.sqrt().min(1.0).asin()
}

/// The endpoints are put in a fixed order first, so the result is exactly
/// symmetric in its arguments.
#[allow(non_snake_case)]
pub fn vincenty_inverse_with(p1: &GpsPoint, p2: &GpsPoint, cfg: &GeodesicConfig) -> Result<GeodesicDistance> {
    if ![p1.lat, p1.lon, p2.lat, p2.lon].iter().all(|v| v.is_finite()) {
        return Err(Error::NonFinite("geodesic input coordinates".into()));
    }
    let (p1, p2) = if (p1.lat, p1.lon) <= (p2.lat, p2.lon) {
        (p1, p2)
    } else {
        (p2, p1)
    };
    let Ellipsoid { a, f } = cfg.ellipsoid;
    let b = cfg.ellipsoid.b();

    let L = (p2.lon - p1.lon).to_radians();
    let U1 = ((1.0 - f) * p1.lat.to_radians().tan()).atan();
    let U2 = ((1.0 - f) * p2.lat.to_radians().tan()).atan();
    let (sin_u1, cos_u1) = U1.sin_cos();
    let (sin_u2, cos_u2) = U2.sin_cos();

    let mut lambda = L;
    let mut converged = false;
    let (mut sin_sigma, mut cos_sigma, mut sigma) = (0.0, 0.0, 0.0);
    let (mut cos_sq_alpha, mut cos_2sigma_m) = (0.0, 0.0);

    for _ in 0..cfg.max_iterations {
        let (sin_lambda, cos_lambda) = lambda.sin_cos();
        sin_sigma = ((cos_u2 * sin_lambda).powi(2) + (cos_u1 * sin_u2 - sin_u1 * cos_u2 * cos_lambda).powi(2)).sqrt();
        if sin_sigma == 0.0 {
            // coincident points
            return Ok(GeodesicDistance {
                meters: 0.0,
                fallback: false,
            });
        }
        cos_sigma = sin_u1 * sin_u2 + cos_u1 * cos_u2 * cos_lambda;
        sigma = sin_sigma.atan2(cos_sigma);
        let sin_alpha = cos_u1 * cos_u2 * sin_lambda / sin_sigma;
        cos_sq_alpha = 1.0 - sin_alpha * sin_alpha;
        // equatorial line: cos_sq_alpha = 0
        cos_2sigma_m = if cos_sq_alpha != 0.0 {
            cos_sigma - 2.0 * sin_u1 * sin_u2 / cos_sq_alpha
        } else {
            0.0
        };
        let C = f / 16.0 * cos_sq_alpha * (4.0 + f * (4.0 - 3.0 * cos_sq_alpha));
        let prev = lambda;
        lambda = L
            + (1.0 - C)
                * f
                * sin_alpha
                * (sigma + C * sin_sigma * (cos_2sigma_m + C * cos_sigma * (-1.0 + 2.0 * cos_2sigma_m * cos_2sigma_m)));
        if (lambda - prev).abs() < cfg.tolerance {
            converged = true;
            break;
        }
    }

    if !converged {
        return Ok(GeodesicDistance {
            meters: haversine(p1, p2, cfg.fallback_radius),
            fallback: true,
        });
    }

    let u_sq = cos_sq_alpha * (a * a - b * b) / (b * b);
    let A = 1.0 + u_sq / 16384.0 * (4096.0 + u_sq * (-768.0 + u_sq * (320.0 - 175.0 * u_sq)));
    let B = u_sq / 1024.0 * (256.0 + u_sq * (-128.0 + u_sq * (74.0 - 47.0 * u_sq)));
    let c2 = cos_2sigma_m * cos_2sigma_m;
    let delta_sigma = B
        * sin_sigma
        * (cos_2sigma_m
            + B / 4.0
                * (cos_sigma * (-1.0 + 2.0 * c2)
                    - B / 6.0 * cos_2sigma_m * (-3.0 + 4.0 * sin_sigma * sin_sigma) * (-3.0 + 4.0 * c2)));
    Ok(GeodesicDistance {
        meters: b * A * (sigma - delta_sigma),
        fallback: false,
    })
}

pub fn vincenty_inverse(p1: &GpsPoint, p2: &GpsPoint) -> Result<GeodesicDistance> {
    vincenty_inverse_with(p1, p2, &GeodesicConfig::default())
}
