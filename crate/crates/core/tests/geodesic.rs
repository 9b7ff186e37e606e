use modewise::ingest::GpsPoint;
use modewise::kinematics::{bearing, compute_series, vincenty_inverse};
use proptest::prelude::*;

struct Row {
    a: GpsPoint,
    b: GpsPoint,
    s12: f64,
}

fn oracle_rows() -> Vec<Row> {
    let text = include_str!("data/geodesic_oracle.csv");
    text.lines()
        .skip(1)
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            let v: Vec<f64> = l.split(',').map(|x| x.parse().unwrap()).collect();
            Row {
                a: GpsPoint::new(v[0], v[1], 0.0),
                b: GpsPoint::new(v[2], v[3], 0.0),
                s12: v[4],
            }
        })
        .collect()
}

#[test]
fn matches_karney_reference_table() {
    let rows = oracle_rows();
    assert_eq!(rows.len(), 1000);
    let mut worst: f64 = 0.0;
    for r in &rows {
        let d = vincenty_inverse(&r.a, &r.b).unwrap();
        assert!(!d.fallback, "fallback on {:?} {:?}", r.a, r.b);
        worst = worst.max((d.meters - r.s12).abs());
    }
    assert!(worst < 1e-3, "worst error {worst} m");
}

#[test]
fn symmetric_on_reference_pairs() {
    for r in oracle_rows() {
        let ab = vincenty_inverse(&r.a, &r.b).unwrap().meters;
        let ba = vincenty_inverse(&r.b, &r.a).unwrap().meters;
        assert!((ab - ba).abs() < 1e-9, "{ab} vs {ba}");
    }
}

fn point() -> impl Strategy<Value = GpsPoint> {
    (-80.0..80.0f64, -180.0..180.0f64).prop_map(|(lat, lon)| GpsPoint::new(lat, lon, 0.0))
}

/// A consecutive fix in a GPS track, at most ~50 m away. Over longer legs
/// the initial bearings of a geodesic and its reverse drift apart by the
/// meridian convergence, about Δλ·sin φ.
fn near(p: GpsPoint) -> impl Strategy<Value = GpsPoint> {
    (-0.0003..0.0003f64, -0.0003..0.0003f64)
        .prop_map(move |(dlat, dlon)| GpsPoint::new(p.lat + dlat, p.lon + dlon, 0.0))
}

proptest! {
    #[test]
    fn triangle_inequality(a in point(), b in point(), c in point()) {
        let d = |x: &GpsPoint, y: &GpsPoint| vincenty_inverse(x, y).unwrap().meters;
        prop_assert!(d(&a, &c) <= d(&a, &b) + d(&b, &c) + 1e-6);
    }

    #[test]
    fn reverse_bearing_differs_by_half_turn((a, b) in point().prop_flat_map(|a| (Just(a), near(a)))) {
        prop_assume!(vincenty_inverse(&a, &b).unwrap().meters > 1.0);
        let diff = (bearing(&a, &b) - bearing(&b, &a)).rem_euclid(360.0);
        prop_assert!((diff - 180.0).abs() < 1e-3 || (diff - 180.0).abs() > 360.0 - 1e-3, "diff {}", diff);
    }

    #[test]
    fn doubling_time_steps_scales_channels(
        start in point(),
        legs in prop::collection::vec((-0.001..0.001f64, -0.001..0.001f64, 0.5..5.0f64), 4..20),
    ) {
        let mut pts = vec![GpsPoint::new(start.lat, start.lon, 0.0)];
        for (dlat, dlon, dt) in &legs {
            let last = *pts.last().unwrap();
            pts.push(GpsPoint::new(last.lat + dlat, last.lon + dlon, last.t + dt));
        }
        let slow: Vec<GpsPoint> = pts.iter().map(|p| GpsPoint::new(p.lat, p.lon, 2.0 * p.t)).collect();
        let fast = compute_series(&pts).unwrap();
        let half = compute_series(&slow).unwrap();
        for i in 0..pts.len() {
            prop_assert!((half.speed[i] - fast.speed[i] / 2.0).abs() <= 1e-9 * fast.speed[i].abs().max(1.0));
            prop_assert!((half.accel[i] - fast.accel[i] / 4.0).abs() <= 1e-9 * fast.accel[i].abs().max(1.0));
            prop_assert_eq!(half.bearing_rate[i], fast.bearing_rate[i]);
        }
    }

    #[test]
    fn series_is_finite_for_increasing_time(
        start in point(),
        legs in prop::collection::vec((-0.01..0.01f64, -0.01..0.01f64, 1e-3..100.0f64), 1..40),
    ) {
        let mut pts = vec![start];
        for (dlat, dlon, dt) in &legs {
            let last = *pts.last().unwrap();
            pts.push(GpsPoint::new(last.lat + dlat, last.lon + dlon, last.t + dt));
        }
        let s = compute_series(&pts).unwrap();
        for ch in s.channels() {
            prop_assert!(ch.iter().all(|v| v.is_finite()));
        }
    }
}
