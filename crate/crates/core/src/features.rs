//! Hand-crafted segment features for the classical baselines: length,
//! two notions of average speed, speed variance, top speeds and
//! accelerations, and three event rates per kilometer.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::GpsPoint;
use crate::kinematics::{self, GeodesicConfig};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HandcraftedConfig {
    /// A heading change larger than this (degrees, folded into [0, 180])
    /// counts as a heading-change event.
    pub heading_change_deg: f64,
    /// A leg slower than this (m/s) counts as a stop.
    pub stop_speed: f64,
    /// Relative speed change |ΔV|/V above this counts as a velocity change.
    pub velocity_change: f64,
    /// Distance unit the event rates are normalized by, in meters.
    pub rate_distance_m: f64,
}

impl Default for HandcraftedConfig {
    fn default() -> Self {
        HandcraftedConfig {
            heading_change_deg: 19.0,
            stop_speed: 3.4,
            velocity_change: 0.26,
            rate_distance_m: 1000.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HandcraftedFeatures {
    /// meters
    pub length: f64,
    /// total distance / total duration
    pub mean_speed: f64,
    /// arithmetic mean of the per-leg speeds
    pub expectation_speed: f64,
    pub var_speed: f64,
    pub top3_speeds: [f64; 3],
    pub top3_accels: [f64; 3],
    pub heading_change_rate: f64,
    pub stop_rate: f64,
    pub velocity_change_rate: f64,
    /// Zero travelled distance; all rates were set to 0.
    #[serde(default)]
    pub degenerate: bool,
}

pub const FEATURE_DIM: usize = 13;

impl HandcraftedFeatures {
    pub fn to_vector(&self) -> [f64; FEATURE_DIM] {
        let [s1, s2, s3] = self.top3_speeds;
        let [a1, a2, a3] = self.top3_accels;
        [
            self.length,
            self.mean_speed,
            self.expectation_speed,
            self.var_speed,
            s1,
            s2,
            s3,
            a1,
            a2,
            a3,
            self.heading_change_rate,
            self.stop_rate,
            self.velocity_change_rate,
        ]
    }
}

fn top3(values: &[f64]) -> [f64; 3] {
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut out = [0.0; 3];
    for (o, v) in out.iter_mut().zip(sorted) {
        *o = v;
    }
    out
}

pub fn extract_handcrafted(points: &[GpsPoint]) -> Result<HandcraftedFeatures> {
    extract_handcrafted_with(points, &HandcraftedConfig::default(), &GeodesicConfig::default())
}

pub fn extract_handcrafted_with(
    points: &[GpsPoint],
    cfg: &HandcraftedConfig,
    geodesic: &GeodesicConfig,
) -> Result<HandcraftedFeatures> {
    let n = points.len();
    if n < 4 {
        return Err(Error::InvalidInput(format!(
            "hand-crafted features need at least 4 points, got {n}"
        )));
    }
    let mut legs = Vec::with_capacity(n - 1);
    let mut speeds = Vec::with_capacity(n - 1);
    let mut dts = Vec::with_capacity(n - 1);
    let mut bearings = Vec::with_capacity(n - 1);
    for w in points.windows(2) {
        let dt = w[1].t - w[0].t;
        if dt.is_nan() || dt <= 0.0 {
            return Err(Error::InvalidInput(format!("timestamps must increase, got step {dt}")));
        }
        let d = kinematics::vincenty_inverse_with(&w[0], &w[1], geodesic)?.meters;
        legs.push(d);
        dts.push(dt);
        speeds.push(d / dt);
        bearings.push(kinematics::bearing(&w[0], &w[1]));
    }
    let accels: Vec<f64> = (0..speeds.len() - 1)
        .map(|i| (speeds[i + 1] - speeds[i]) / dts[i])
        .collect();

    let length: f64 = legs.iter().sum();
    let duration = points[n - 1].t - points[0].t;
    let m = speeds.len() as f64;
    let expectation_speed = speeds.iter().sum::<f64>() / m;
    let var_speed = speeds.iter().map(|s| (s - expectation_speed).powi(2)).sum::<f64>() / m;

    let heading_changes = bearings
        .windows(2)
        .filter(|b| kinematics::bearing_rate_wrapped(b[0], b[1]) > cfg.heading_change_deg)
        .count();
    let stops = speeds.iter().filter(|&&s| s < cfg.stop_speed).count();
    let velocity_changes = speeds
        .windows(2)
        .filter(|s| s[0] > 0.0 && (s[1] - s[0]).abs() / s[0] > cfg.velocity_change)
        .count();

    let degenerate = length <= 0.0;
    let rate = |count: usize| {
        if degenerate {
            0.0
        } else {
            count as f64 / (length / cfg.rate_distance_m)
        }
    };

    Ok(HandcraftedFeatures {
        length,
        mean_speed: length / duration,
        expectation_speed,
        var_speed,
        top3_speeds: top3(&speeds),
        top3_accels: top3(&accels),
        heading_change_rate: rate(heading_changes),
        stop_rate: rate(stops),
        velocity_change_rate: rate(velocity_changes),
        degenerate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    // meters per degree of longitude on the equator (GeographicLib)
    const M_PER_DEG_LON: f64 = 111_319.490_793_273_57;

    fn eastward(speeds: &[f64], dt: f64) -> Vec<GpsPoint> {
        let mut pts = vec![GpsPoint::new(0.0, 0.0, 0.0)];
        let (mut x, mut t) = (0.0, 0.0);
        for s in speeds {
            x += s * dt;
            t += dt;
            pts.push(GpsPoint::new(0.0, x / M_PER_DEG_LON, t));
        }
        pts
    }

    #[test]
    fn uniform_straight_track() {
        let pts = eastward(&[10.0; 10], 10.0);
        let f = extract_handcrafted(&pts).unwrap();
        assert_abs_diff_eq!(f.length, 1000.0, epsilon = 1e-3);
        assert_abs_diff_eq!(f.mean_speed, 10.0, epsilon = 1e-5);
        assert_abs_diff_eq!(f.expectation_speed, 10.0, epsilon = 1e-5);
        assert_abs_diff_eq!(f.var_speed, 0.0, epsilon = 1e-9);
        assert_eq!(f.heading_change_rate, 0.0);
        assert_eq!(f.stop_rate, 0.0);
        assert_eq!(f.velocity_change_rate, 0.0);
        assert!(!f.degenerate);
    }

    #[test]
    fn one_stop_over_two_km() {
        // 19 legs of 105 m at 10.5 m/s plus one slow leg of 5 m at 0.5 m/s
        let mut speeds = vec![10.5; 19];
        speeds.insert(10, 0.5);
        let pts = eastward(&speeds, 10.0);
        let f = extract_handcrafted(&pts).unwrap();
        assert_abs_diff_eq!(f.length, 2000.0, epsilon = 1e-2);
        assert_abs_diff_eq!(f.stop_rate, 0.5, epsilon = 1e-5);
        // the speed drop and recovery are both velocity-change events
        assert_abs_diff_eq!(f.velocity_change_rate, 1.0, epsilon = 1e-5);
        for s in f.top3_speeds {
            assert_abs_diff_eq!(s, 10.5, epsilon = 1e-5);
        }
    }

    #[test]
    fn stationary_track_is_degenerate() {
        let pts: Vec<GpsPoint> = (0..5).map(|i| GpsPoint::new(1.0, 1.0, i as f64)).collect();
        let f = extract_handcrafted(&pts).unwrap();
        assert!(f.degenerate);
        assert_eq!(f.stop_rate, 0.0);
    }

    #[test]
    fn too_few_points() {
        assert!(extract_handcrafted(&eastward(&[1.0, 1.0], 1.0)).is_err());
    }

    #[test]
    fn top3_pads_and_sorts() {
        assert_eq!(top3(&[1.0, 5.0]), [5.0, 1.0, 0.0]);
        assert_eq!(top3(&[1.0, 5.0, 3.0, 4.0]), [5.0, 4.0, 3.0]);
    }
}
