//! Per-point motion channels: speed, acceleration, jerk and bearing rate.
//!
//! Each value is attached to the first point of the pair (or triple) it is
//! computed from. Entries at the tail of a series that cannot be computed
//! (the last point has no speed, the last two have no acceleration, ...) are
//! exactly zero, so all four channels stay index-aligned with the points.

mod geodesic;

pub use geodesic::{haversine, vincenty_inverse, vincenty_inverse_with, Ellipsoid, GeodesicConfig, GeodesicDistance};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::GpsPoint;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct KinematicConfig {
    pub geodesic: GeodesicConfig,
    /// Fold bearing differences into [0, 180] instead of the plain absolute
    /// difference. Off by default.
    pub wrap_bearing: bool,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct KinematicSeries {
    /// m/s
    pub speed: Vec<f64>,
    /// m/s²
    pub accel: Vec<f64>,
    /// m/s³
    pub jerk: Vec<f64>,
    /// degrees
    pub bearing_rate: Vec<f64>,
}

impl KinematicSeries {
    pub fn len(&self) -> usize {
        self.speed.len()
    }

    pub fn is_empty(&self) -> bool {
        self.speed.is_empty()
    }

    pub fn channels(&self) -> [&[f64]; 4] {
        [&self.speed, &self.accel, &self.jerk, &self.bearing_rate]
    }

    pub fn channels_mut(&mut self) -> [&mut Vec<f64>; 4] {
        [&mut self.speed, &mut self.accel, &mut self.jerk, &mut self.bearing_rate]
    }
}

fn positive_dt(dt: f64) -> Result<f64> {
    if dt > 0.0 && dt.is_finite() {
        Ok(dt)
    } else {
        Err(Error::InvalidInput(format!("time step must be positive, got {dt}")))
    }
}

pub fn speed_with(p1: &GpsPoint, p2: &GpsPoint, cfg: &GeodesicConfig) -> Result<f64> {
    let dt = positive_dt(p2.t - p1.t)?;
    Ok(vincenty_inverse_with(p1, p2, cfg)?.meters / dt)
}

pub fn speed(p1: &GpsPoint, p2: &GpsPoint) -> Result<f64> {
    speed_with(p1, p2, &GeodesicConfig::default())
}

pub fn acceleration(s1: f64, s2: f64, dt: f64) -> Result<f64> {
    Ok((s2 - s1) / positive_dt(dt)?)
}

pub fn jerk(a1: f64, a2: f64, dt: f64) -> Result<f64> {
    Ok((a2 - a1) / positive_dt(dt)?)
}

/// Initial bearing from `p1` to `p2` in degrees, normalized to [0, 360).
/// Coincident points have bearing 0.
pub fn bearing(p1: &GpsPoint, p2: &GpsPoint) -> f64 {
    if p1.lat == p2.lat && p1.lon == p2.lon {
        return 0.0;
    }
    let (lat1, lat2) = (p1.lat.to_radians(), p2.lat.to_radians());
    let dlon = (p2.lon - p1.lon).to_radians();
    let y = dlon.sin() * lat2.cos();
    let x = lat1.cos() * lat2.sin() - lat1.sin() * lat2.cos() * dlon.cos();
    let deg = y.atan2(x).to_degrees().rem_euclid(360.0);
    // rem_euclid can round up to exactly 360 for tiny negative inputs
    if deg >= 360.0 {
        0.0
    } else {
        deg
    }
}

/// Absolute difference of two bearings. No wraparound: 350° → 10° gives 340.
pub fn bearing_rate(b1: f64, b2: f64) -> f64 {
    (b2 - b1).abs()
}

/// Bearing difference folded into [0, 180].
pub fn bearing_rate_wrapped(b1: f64, b2: f64) -> f64 {
    let d = bearing_rate(b1, b2) % 360.0;
    d.min(360.0 - d)
}

pub fn compute_series(points: &[GpsPoint]) -> Result<KinematicSeries> {
    compute_series_with(points, &KinematicConfig::default())
}

pub fn compute_series_with(points: &[GpsPoint], cfg: &KinematicConfig) -> Result<KinematicSeries> {
    let n = points.len();
    if n < 2 {
        return Err(Error::InvalidInput(format!(
            "need at least 2 points for kinematics, got {n}"
        )));
    }
    let mut out = KinematicSeries {
        speed: vec![0.0; n],
        accel: vec![0.0; n],
        jerk: vec![0.0; n],
        bearing_rate: vec![0.0; n],
    };
    let dt: Vec<f64> = points
        .windows(2)
        .map(|w| positive_dt(w[1].t - w[0].t))
        .collect::<Result<_>>()?;
    let mut bearings = vec![0.0; n - 1];
    for i in 0..n - 1 {
        out.speed[i] = vincenty_inverse_with(&points[i], &points[i + 1], &cfg.geodesic)?.meters / dt[i];
        bearings[i] = bearing(&points[i], &points[i + 1]);
    }
    for i in 0..n.saturating_sub(2) {
        out.accel[i] = (out.speed[i + 1] - out.speed[i]) / dt[i];
        out.bearing_rate[i] = if cfg.wrap_bearing {
            bearing_rate_wrapped(bearings[i], bearings[i + 1])
        } else {
            bearing_rate(bearings[i], bearings[i + 1])
        };
    }
    for i in 0..n.saturating_sub(3) {
        out.jerk[i] = (out.accel[i + 1] - out.accel[i]) / dt[i];
    }
    Ok(out)
}
