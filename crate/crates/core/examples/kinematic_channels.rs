//! The four per-point channels of a synthetic bus track.

use modewise::ingest::{GpsPoint, ModeLabel};
use modewise::kinematics::compute_series;
use modewise::synth::{generate, SynthConfig};

fn main() -> modewise::Result<()> {
    let out = generate(&SynthConfig::new(1, 60, 3));
    let bus = out
        .trips()
        .into_iter()
        .find(|t| t.points[0].mode == ModeLabel::Bus)
        .unwrap();
    let points: Vec<GpsPoint> = bus.points.iter().map(|p| p.point).collect();
    let s = compute_series(&points)?;

    println!(
        "{:>4} {:>9} {:>9} {:>9} {:>9}",
        "i", "speed", "accel", "jerk", "brg rate"
    );
    for i in 0..s.len() {
        println!(
            "{i:>4} {:>9.3} {:>9.3} {:>9.3} {:>9.3}",
            s.speed[i], s.accel[i], s.jerk[i], s.bearing_rate[i]
        );
    }
    Ok(())
}
