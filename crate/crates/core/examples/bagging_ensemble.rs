//! Bagged members against their average.

use modewise::pipeline::{build_dataset, split_train_test, PipelineConfig};
use modewise::synth::{generate, SynthConfig};
use modewise::train::{accuracy, train_ensemble, EarlyStop, TrainConfig};
use modewise::zoo::{build_config, ZooOptions};

fn main() -> modewise::Result<()> {
    let ds = build_dataset(
        &generate(&SynthConfig::new(40, 200, 3)).trips(),
        &PipelineConfig::default(),
    )?;
    let (tr, te) = split_train_test(&ds, 0.8, 3)?;
    let spec = build_config(
        "C",
        &ZooOptions {
            filters: [8, 16, 32, 64],
            ..ZooOptions::default()
        },
    )?;
    let cfg = TrainConfig {
        batch_size: 8,
        max_epochs: 3,
        early_stop: EarlyStop::None,
        seed: 3,
        ..TrainConfig::default()
    };
    let (ens, _) = train_ensemble(&spec, &tr, None, 5, &cfg)?;
    for (i, m) in ens.members().iter().enumerate() {
        println!("member {i}: {:.3}", accuracy(m, &te)?);
    }
    println!("ensemble: {:.3}", accuracy(&ens, &te)?);
    Ok(())
}
