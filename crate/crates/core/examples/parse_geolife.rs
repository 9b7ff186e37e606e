//! Parse GeoLife trajectories and labels into trips.
//!
//! `cargo run --example parse_geolife -- /path/to/Geolife/Data` loads a
//! whole tree; without an argument a small inline user is parsed.

use modewise::ingest::{
    attach_labels, format_plt, load_geolife_dir, merge_adjacent, parse_labels, parse_plt, split_segments, split_trips,
    GpsPoint, TRIP_GAP_S,
};

fn main() -> modewise::Result<()> {
    if let Some(dir) = std::env::args().nth(1) {
        let (trips, stats) = load_geolife_dir(dir.as_ref(), TRIP_GAP_S)?;
        println!("{}", serde_json::to_string_pretty(&stats).unwrap());
        println!("{} labelled trips", trips.len());
        return Ok(());
    }

    // ten minutes of fixes every 5 s, with a 30 minute hole in the middle
    let start = 1_212_300_000.0;
    let points: Vec<GpsPoint> = (0..240)
        .map(|i| {
            let t = start + 5.0 * i as f64 + if i >= 120 { 1800.0 } else { 0.0 };
            GpsPoint::new(39.98 + 1e-5 * i as f64, 116.32, t)
        })
        .collect();
    let plt = parse_plt(&format_plt(&points));
    let labels = parse_labels(
        "Start Time\tEnd Time\tTransportation Mode\n\
         2008/06/01 06:00:00\t2008/06/01 06:05:00\twalk\n\
         2008/06/01 06:05:01\t2008/06/01 07:00:00\tbus\n",
    );
    println!(
        "{} fixes ({} skipped), {} label spans",
        plt.items.len(),
        plt.skipped,
        labels.items.len()
    );

    let labelled = attach_labels(&plt.items, &labels.items);
    let trips = split_trips("demo", &labelled, TRIP_GAP_S);
    for (i, trip) in trips.iter().enumerate() {
        for seg in merge_adjacent(split_segments(trip, i)) {
            println!("{}: {:?}, {} points", seg.trip_ref, seg.mode, seg.points.len());
        }
    }
    Ok(())
}
