//! Labelled synthetic trajectories with mode-specific kinematics.
//!
//! Each track integrates a speed and heading random walk on a local flat
//! earth. Profiles stay inside the per-mode speed and acceleration caps, so
//! a clean track passes the pipeline untouched and its sample count is
//! known in advance.

use rand::Rng as _;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ingest::{GpsPoint, LabeledPoint, ModeLabel, Trip};
use crate::pipeline::{chunk_ranges, Thresholds};
use crate::seed::{self, stream, Rng};

const EARTH_RADIUS_M: f64 = 6_371_008.8;
const START_T: f64 = 1_230_000_000.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeProfile {
    pub mode: ModeLabel,
    /// m/s; the walk is reflected at both ends
    pub speed_min: f64,
    pub speed_max: f64,
    /// Standard deviation of the per-step acceleration, m/s².
    pub accel_sigma: f64,
    /// Hard bound on |acceleration|, m/s².
    pub accel_max: f64,
    /// Standard deviation of the heading change per step, degrees.
    pub turn_sigma_deg: f64,
    /// Chance per moving step of starting a stop.
    pub stop_prob: f64,
    /// Moving steps between scheduled stops, drawn uniformly from the
    /// range after every stop.
    pub stop_period: Option<(usize, usize)>,
    /// Dwell at zero speed, in steps.
    pub stop_steps: (usize, usize),
    /// s
    pub interval: f64,
}

impl ModeProfile {
    pub fn defaults() -> [ModeProfile; ModeLabel::COUNT] {
        let p = |mode, speed_min, speed_max, accel_sigma, accel_max, turn_sigma_deg| ModeProfile {
            mode,
            speed_min,
            speed_max,
            accel_sigma,
            accel_max,
            turn_sigma_deg,
            stop_prob: 0.0,
            stop_period: None,
            stop_steps: (5, 15),
            interval: 2.0,
        };
        [
            p(ModeLabel::Walk, 0.6, 1.9, 0.1, 0.8, 35.0),
            p(ModeLabel::Bike, 2.2, 5.8, 0.2, 1.2, 12.0),
            ModeProfile {
                stop_period: Some((30, 60)),
                ..p(ModeLabel::Bus, 3.5, 14.0, 0.3, 0.9, 4.0)
            },
            ModeProfile {
                stop_prob: 0.01,
                ..p(ModeLabel::Driving, 5.5, 24.0, 0.8, 4.0, 4.0)
            },
            p(ModeLabel::Train, 10.5, 29.0, 0.3, 1.0, 0.5),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub profiles: [ModeProfile; ModeLabel::COUNT],
    pub per_mode: usize,
    pub points: usize,
    pub seed: u64,
    /// Put one out-of-band speed spike in every track.
    pub noise: bool,
    /// Radius of the uniform position error added to every fix, meters.
    /// Bounded so that speeds move by at most 2r/Δt and accelerations by
    /// at most 4r/Δt².
    pub jitter_m: f64,
}

impl SynthConfig {
    pub fn new(per_mode: usize, points: usize, seed: u64) -> Self {
        SynthConfig {
            profiles: ModeProfile::defaults(),
            per_mode,
            points,
            seed,
            noise: false,
            jitter_m: DEFAULT_JITTER_M,
        }
    }
}

/// How far the injected spike exceeds the mode's speed cap, m/s.
pub const SPIKE_MARGIN: f64 = 1.0;

/// Speed of the leg leaving a spiked point: 8 m/s for walking.
pub fn spike_speed(mode: ModeLabel) -> f64 {
    Thresholds::default().caps(mode).max_speed + SPIKE_MARGIN
}

pub const DEFAULT_JITTER_M: f64 = 1.0;

#[derive(Debug, Clone, PartialEq)]
pub struct SynthTrack {
    pub trip: Trip,
    /// Index of the spiked point, if noise was injected.
    pub spike: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthOutput {
    pub tracks: Vec<SynthTrack>,
}

impl SynthOutput {
    pub fn trips(&self) -> Vec<Trip> {
        self.tracks.iter().map(|t| t.trip.clone()).collect()
    }

    /// Samples the pipeline should produce per track for segment length
    /// `m` and minimum length `min_points`, assuming only spiked points are
    /// removed.
    pub fn expected_samples(&self, m: usize, min_points: usize) -> Vec<usize> {
        self.tracks
            .iter()
            .map(|t| {
                let n = t.trip.points.len() - usize::from(t.spike.is_some());
                chunk_ranges(n, m, min_points).len()
            })
            .collect()
    }
}

struct Walker {
    lat: f64,
    lon: f64,
    heading: f64,
    speed: f64,
}

impl Walker {
    fn advance(&mut self, dist: f64) {
        let h = self.heading.to_radians();
        self.lat += (dist * h.cos() / EARTH_RADIUS_M).to_degrees();
        self.lon += (dist * h.sin() / (EARTH_RADIUS_M * self.lat.to_radians().cos())).to_degrees();
    }
}

fn reflect(v: f64, lo: f64, hi: f64) -> f64 {
    let v = if v < lo { 2.0 * lo - v } else { v };
    let v = if v > hi { 2.0 * hi - v } else { v };
    v.clamp(lo, hi)
}

/// Planar displacement in meters between two nearby points.
fn local_offset(a: &GpsPoint, b: &GpsPoint) -> (f64, f64) {
    let north = (b.lat - a.lat).to_radians() * EARTH_RADIUS_M;
    let east = (b.lon - a.lon).to_radians() * EARTH_RADIUS_M * a.lat.to_radians().cos();
    (east, north)
}

fn jitter(pts: &mut [GpsPoint], radius: f64, rng: &mut Rng) {
    if radius <= 0.0 {
        return;
    }
    for p in pts {
        let r = radius * rng.gen::<f64>().sqrt();
        let a = rng.gen_range(0.0..std::f64::consts::TAU);
        p.lat += (r * a.cos() / EARTH_RADIUS_M).to_degrees();
        p.lon += (r * a.sin() / (EARTH_RADIUS_M * p.lat.to_radians().cos())).to_degrees();
    }
}

fn track_points(profile: &ModeProfile, n: usize, t0: f64, rng: &mut Rng) -> Vec<GpsPoint> {
    let accel = Normal::new(0.0, profile.accel_sigma).expect("finite sigma");
    let turn = Normal::new(0.0, profile.turn_sigma_deg).expect("finite sigma");
    let dt = profile.interval;
    let mut w = Walker {
        lat: rng.gen_range(30.0..45.0),
        lon: rng.gen_range(100.0..120.0),
        heading: rng.gen_range(0.0..360.0),
        speed: rng.gen_range(profile.speed_min..profile.speed_max),
    };
    let mut stopped = 0usize;
    let mut braking = false;
    let next_gap = |rng: &mut Rng| profile.stop_period.map(|(a, b)| rng.gen_range(a..=b));
    let mut until_stop = next_gap(rng);
    let mut pts = Vec::with_capacity(n);
    for i in 0..n {
        pts.push(GpsPoint::new(w.lat, w.lon, t0 + i as f64 * dt));
        let max_dv = profile.accel_max * dt;
        if braking {
            w.speed = (w.speed - max_dv).max(0.0);
            if w.speed == 0.0 {
                braking = false;
                stopped = rng.gen_range(profile.stop_steps.0..=profile.stop_steps.1);
            }
        } else if stopped > 0 {
            stopped -= 1;
            if stopped == 0 {
                until_stop = next_gap(rng);
            }
        } else if w.speed < profile.speed_min {
            w.speed = (w.speed + max_dv).min(profile.speed_min);
        } else if until_stop == Some(0) || rng.gen::<f64>() < profile.stop_prob {
            braking = true;
        } else {
            until_stop = until_stop.map(|u| u - 1);
            let a = accel.sample(rng).clamp(-profile.accel_max, profile.accel_max);
            w.speed = reflect(w.speed + a * dt, profile.speed_min, profile.speed_max);
            w.heading = (w.heading + turn.sample(rng)).rem_euclid(360.0);
        }
        w.advance(w.speed * dt);
    }
    pts
}

/// Move one interior point so that the leg leaving it has speed `speed`
/// while the leg arriving at it stays under the cap. The point goes on the
/// line through its neighbours, `speed·Δt` from its successor on the
/// predecessor's side, where the track covers the most ground over two
/// legs. The arriving leg then has speed |speed − span/Δt|, below the cap
/// whenever the span per step lies between the margin and twice the cap.
fn inject_spike(pts: &mut [GpsPoint], speed: f64) -> Option<usize> {
    let n = pts.len();
    if n < 5 {
        return None;
    }
    let span = |k: usize| {
        let (e, no) = local_offset(&pts[k - 1], &pts[k + 1]);
        e.hypot(no)
    };
    let k = (2..n - 2).max_by(|&a, &b| span(a).total_cmp(&span(b)))?;
    let (e, no) = local_offset(&pts[k + 1], &pts[k - 1]);
    let d = e.hypot(no);
    if d == 0.0 {
        return None;
    }
    let reach = speed * (pts[k + 1].t - pts[k].t);
    let (ue, un) = (e / d, no / d);
    let (pe, pn) = (ue * reach, un * reach);
    let base = pts[k + 1];
    let lat = base.lat + (pn / EARTH_RADIUS_M).to_degrees();
    let lon = base.lon + (pe / (EARTH_RADIUS_M * base.lat.to_radians().cos())).to_degrees();
    pts[k] = GpsPoint::new(lat, lon, pts[k].t);
    Some(k)
}

/// `per_mode` tracks for every profile, in mode order. Each track is its
/// own trip with its own RNG stream, so output does not depend on the
/// worker count.
pub fn generate(cfg: &SynthConfig) -> SynthOutput {
    let jobs: Vec<(usize, usize)> = (0..ModeLabel::COUNT)
        .flat_map(|m| (0..cfg.per_mode).map(move |i| (m, i)))
        .collect();
    let tracks = jobs
        .par_iter()
        .enumerate()
        .map(|(j, &(m, i))| {
            let profile = &cfg.profiles[m];
            let mut rng = seed::rng(cfg.seed, stream::SYNTH, j as u64);
            // tracks far apart in time so they never join into one trip
            let t0 = START_T + j as f64 * 1e6;
            let mut pts = track_points(profile, cfg.points, t0, &mut rng);
            jitter(&mut pts, cfg.jitter_m, &mut rng);
            let spike = if cfg.noise {
                inject_spike(&mut pts, spike_speed(profile.mode))
            } else {
                None
            };
            SynthTrack {
                trip: Trip {
                    user: format!("synth_{}_{i:04}", profile.mode.name()),
                    points: pts
                        .into_iter()
                        .map(|point| LabeledPoint {
                            point,
                            mode: profile.mode,
                        })
                        .collect(),
                },
                spike,
            }
        })
        .collect();
    SynthOutput { tracks }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinematics::compute_series;

    #[test]
    fn class_balance_and_timestamps() {
        let out = generate(&SynthConfig::new(3, 50, 1));
        assert_eq!(out.tracks.len(), 15);
        for m in ModeLabel::ALL {
            assert_eq!(out.tracks.iter().filter(|t| t.trip.points[0].mode == m).count(), 3);
        }
        for t in &out.tracks {
            for w in t.trip.points.windows(2) {
                assert_eq!(w[1].point.t - w[0].point.t, 2.0);
            }
        }
    }

    #[test]
    fn clean_tracks_respect_profile_bands() {
        let cfg = SynthConfig::new(4, 300, 2);
        for t in generate(&cfg).tracks {
            let p = cfg.profiles[t.trip.points[0].mode.index()];
            let pts: Vec<GpsPoint> = t.trip.points.iter().map(|l| l.point).collect();
            let s = compute_series(&pts).unwrap();
            let dt = p.interval;
            let r = cfg.jitter_m;
            for i in 0..pts.len() - 1 {
                assert!(
                    s.speed[i] <= p.speed_max * 1.01 + 2.0 * r / dt,
                    "{:?} speed {}",
                    p.mode,
                    s.speed[i]
                );
            }
            for i in 0..pts.len() - 2 {
                let bound = p.accel_max * 1.01 + 4.0 * r / (dt * dt);
                assert!(s.accel[i].abs() <= bound, "{:?} accel {}", p.mode, s.accel[i]);
            }
        }
    }

    #[test]
    fn same_seed_same_tracks() {
        let cfg = SynthConfig::new(2, 40, 9);
        assert_eq!(generate(&cfg), generate(&cfg));
    }

    #[test]
    fn expected_counts() {
        let out = generate(&SynthConfig::new(1, 450, 3));
        assert_eq!(out.expected_samples(200, 10), vec![3; 5]);
    }
}
