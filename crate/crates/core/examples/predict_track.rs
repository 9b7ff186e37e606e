//! Label the ten-minute chunks of unlabelled tracks.

use modewise::ingest::{GpsPoint, ModeLabel};
use modewise::pipeline::{build_dataset, track_chunks, Caps, PipelineConfig};
use modewise::synth::{generate, SynthConfig};
use modewise::train::{train, EarlyStop, TrainConfig};
use modewise::zoo::{argmax, build_config, stack_batch, ZooOptions};

fn main() -> modewise::Result<()> {
    let cfg = PipelineConfig::default();
    let ds = build_dataset(&generate(&SynthConfig::new(40, 200, 1)).trips(), &cfg)?;
    let spec = build_config(
        "G",
        &ZooOptions {
            filters: [8, 16, 32, 64],
            ..ZooOptions::default()
        },
    )?;
    let tc = TrainConfig {
        batch_size: 8,
        max_epochs: 6,
        early_stop: EarlyStop::None,
        ..TrainConfig::default()
    };
    let net = train(&spec, &ds, None, &tc)?.network;

    // fresh tracks, labels discarded
    for track in generate(&SynthConfig::new(1, 450, 99)).tracks {
        let truth = track.trip.points[0].mode;
        let points: Vec<GpsPoint> = track.trip.points.iter().map(|p| p.point).collect();
        for (i, chunk) in track_chunks(&points, Caps::GLOBAL, &cfg)?.iter().enumerate() {
            let probs = net.predict_proba(&stack_batch(&[&chunk.sample])?)?;
            let guess = ModeLabel::from_code(argmax(probs.row(0)) as u8).unwrap();
            println!(
                "{truth:?} chunk {i}: {} points -> {guess:?} ({:.2})",
                chunk.points,
                probs.row(0)[guess.index()]
            );
        }
    }
    Ok(())
}
