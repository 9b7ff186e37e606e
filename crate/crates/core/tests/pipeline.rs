use modewise::features::{extract_handcrafted, HandcraftedConfig};
use modewise::ingest::{GpsPoint, LabeledPoint, ModeLabel, Segment, Trip};
use modewise::kinematics::{compute_series, compute_series_with, KinematicConfig, KinematicSeries};
use modewise::pipeline::{
    build_dataset, chunk_ranges, chunk_series, filter_kinematic_outliers, read_tmsg, write_tmsg, PipelineConfig,
    Thresholds,
};
use proptest::prelude::*;

const M_PER_DEG: f64 = 111_195.0;

/// Dead-reckon legs of (speed m/s, heading degrees, dt s) from a start fix.
fn track(lat0: f64, legs: &[(f64, f64, f64)]) -> Vec<GpsPoint> {
    let mut pts = vec![GpsPoint::new(lat0, 10.0, 1_000_000.0)];
    for &(v, h, dt) in legs {
        let p = *pts.last().unwrap();
        let (dn, de) = (v * dt * h.to_radians().cos(), v * dt * h.to_radians().sin());
        pts.push(GpsPoint::new(
            p.lat + dn / M_PER_DEG,
            p.lon + de / (M_PER_DEG * p.lat.to_radians().cos()),
            p.t + dt,
        ));
    }
    pts
}

fn mode() -> impl Strategy<Value = ModeLabel> {
    (0u8..5).prop_map(|c| ModeLabel::from_code(c).unwrap())
}

/// Mostly in-band legs with occasional spikes far above every cap.
fn legs(max_len: usize) -> impl Strategy<Value = Vec<(f64, f64, f64)>> {
    prop::collection::vec(
        (
            prop_oneof![8 => 0.0..12.0f64, 1 => 40.0..200.0f64],
            0.0..360.0f64,
            1.0..5.0f64,
        ),
        1..max_len,
    )
}

fn trip_strategy() -> impl Strategy<Value = Trip> {
    (-60.0..60.0f64, prop::collection::vec((mode(), legs(120)), 1..4)).prop_map(|(lat0, runs)| {
        let all_legs: Vec<(f64, f64, f64)> = runs.iter().flat_map(|(_, l)| l.iter().copied()).collect();
        let modes: Vec<ModeLabel> = std::iter::once(runs[0].0)
            .chain(runs.iter().flat_map(|(m, l)| std::iter::repeat_n(*m, l.len())))
            .collect();
        Trip {
            user: "p".into(),
            points: track(lat0, &all_legs)
                .into_iter()
                .zip(modes)
                .map(|(point, mode)| LabeledPoint { point, mode })
                .collect(),
        }
    })
}

fn brute_top3(mut v: Vec<f64>) -> [f64; 3] {
    let mut out = [0.0; 3];
    for o in &mut out {
        if let Some((i, _)) = v.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)) {
            *o = v.remove(i);
        }
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn outlier_filter_is_idempotent(m in mode(), lat0 in -60.0..60.0f64, l in legs(150)) {
        let seg = Segment { points: track(lat0, &l), mode: m, trip_ref: "p#0".into() };
        let once = filter_kinematic_outliers(&seg, &Thresholds::default()).unwrap();
        let twice = filter_kinematic_outliers(&once, &Thresholds::default()).unwrap();
        prop_assert_eq!(once, twice);
    }

    #[test]
    fn chunking_conserves_points(n in 0usize..2000, m in 1usize..300, min_points in 1usize..50) {
        let ranges = chunk_ranges(n, m, min_points);
        let kept: usize = ranges.iter().map(|r| r.len()).sum();
        let remainder = n % m;
        let dropped = if remainder > 0 && remainder < min_points { remainder } else { 0 };
        prop_assert_eq!(kept + dropped, n);
        let series = KinematicSeries {
            speed: vec![1.0; n],
            accel: vec![1.0; n],
            jerk: vec![1.0; n],
            bearing_rate: vec![1.0; n],
        };
        let stacks = chunk_series(&series, ModeLabel::Bus, m, min_points).unwrap();
        prop_assert_eq!(stacks.iter().map(|s| s.valid_len).sum::<usize>(), kept);
        for w in ranges.windows(2) {
            prop_assert_eq!(w[0].end, w[1].start);
        }
    }

    #[test]
    fn emitted_channels_respect_mode_caps(trips in prop::collection::vec(trip_strategy(), 1..4)) {
        let cfg = PipelineConfig { segment_len: 50, ..PipelineConfig::default() };
        let ds = match build_dataset(&trips, &cfg) {
            Ok(ds) => ds,
            Err(modewise::Error::NoUsableSegments) => return Ok(()),
            Err(e) => return Err(TestCaseError::fail(e.to_string())),
        };
        let th = Thresholds::default();
        for s in &ds.samples {
            prop_assert!(s.is_well_formed());
            let caps = th.caps(s.label);
            prop_assert!(s.channel(0).iter().all(|&v| v >= 0.0 && v <= caps.max_speed as f32));
            prop_assert!(s.channel(1).iter().all(|&v| v.abs() <= caps.max_accel as f32));
            prop_assert!(s.channel(3).iter().all(|&v| (0.0..=360.0).contains(&v)));
        }
        prop_assert_eq!(ds.features.as_ref().map(|f| f.len()), Some(ds.len()));
    }

    #[test]
    fn tmsg_round_trip_is_byte_exact(trips in prop::collection::vec(trip_strategy(), 1..3)) {
        let cfg = PipelineConfig { segment_len: 40, ..PipelineConfig::default() };
        let Ok(ds) = build_dataset(&trips, &cfg) else { return Ok(()) };
        let mut first = Vec::new();
        write_tmsg(&mut first, &ds).unwrap();
        let back = read_tmsg(first.as_slice()).unwrap();
        prop_assert_eq!(&back.samples, &ds.samples);
        let mut second = Vec::new();
        write_tmsg(&mut second, &back).unwrap();
        prop_assert_eq!(first, second);
    }

    #[test]
    fn features_match_brute_force(lat0 in -60.0..60.0f64, l in prop::collection::vec((0.0..30.0f64, 0.0..360.0f64, 1.0..5.0f64), 3..80)) {
        let pts = track(lat0, &l);
        let f = extract_handcrafted(&pts).unwrap();
        let cfg = HandcraftedConfig::default();
        let n = pts.len();
        let plain = compute_series(&pts).unwrap();
        let wrapped = compute_series_with(&pts, &KinematicConfig { wrap_bearing: true, ..KinematicConfig::default() }).unwrap();
        let speeds = plain.speed[..n - 1].to_vec();
        let accels = plain.accel[..n - 2].to_vec();
        let mut length = 0.0;
        for i in 0..n - 1 {
            length += speeds[i] * (pts[i + 1].t - pts[i].t);
        }
        let tol = |a: f64, b: f64| (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0);
        prop_assert!(tol(f.length, length), "{} vs {}", f.length, length);
        prop_assert!(tol(f.mean_speed, length / (pts[n - 1].t - pts[0].t)));
        let mean = speeds.iter().sum::<f64>() / speeds.len() as f64;
        prop_assert!(tol(f.expectation_speed, mean));
        let var = speeds.iter().map(|s| (s - mean) * (s - mean)).sum::<f64>() / speeds.len() as f64;
        prop_assert!(tol(f.var_speed, var));
        for (a, b) in f.top3_speeds.iter().zip(brute_top3(speeds.clone())) {
            prop_assert!(tol(*a, b));
        }
        for (a, b) in f.top3_accels.iter().zip(brute_top3(accels.clone())) {
            prop_assert!(tol(*a, b));
        }
        let km = length / cfg.rate_distance_m;
        let mut hc = 0;
        for i in 0..n - 2 {
            if wrapped.bearing_rate[i] > cfg.heading_change_deg {
                hc += 1;
            }
        }
        let sr = speeds.iter().filter(|&&s| s < cfg.stop_speed).count();
        let mut vc = 0;
        for i in 0..speeds.len() - 1 {
            if speeds[i] > 0.0 && ((speeds[i + 1] - speeds[i]) / speeds[i]).abs() > cfg.velocity_change {
                vc += 1;
            }
        }
        if length > 0.0 {
            prop_assert!(tol(f.heading_change_rate, hc as f64 / km));
            prop_assert!(tol(f.stop_rate, sr as f64 / km));
            prop_assert!(tol(f.velocity_change_rate, vc as f64 / km));
        }
    }
}
