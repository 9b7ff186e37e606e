//! Train a narrow config G on the synthetic five-mode corpus.

use modewise::pipeline::{build_dataset, split_train_test, PipelineConfig};
use modewise::synth::{generate, SynthConfig};
use modewise::train::{evaluate, train, EarlyStop, TrainConfig};
use modewise::zoo::{build_config, ZooOptions};

fn main() -> modewise::Result<()> {
    let ds = build_dataset(
        &generate(&SynthConfig::new(60, 200, 7)).trips(),
        &PipelineConfig::default(),
    )?;
    let (tr, te) = split_train_test(&ds, 0.8, 7)?;
    let spec = build_config(
        "G",
        &ZooOptions {
            filters: [8, 16, 32, 64],
            ..ZooOptions::default()
        },
    )?;
    let cfg = TrainConfig {
        batch_size: 8,
        max_epochs: 8,
        early_stop: EarlyStop::Val,
        seed: 7,
        ..TrainConfig::default()
    };
    let out = train(&spec, &tr, None, &cfg)?;
    for (e, (loss, acc)) in out.report.loss.iter().zip(&out.report.monitor_accuracy).enumerate() {
        println!("epoch {:>2} loss {loss:.4} val acc {:.3}", e + 1, acc);
    }
    println!(
        "kept epoch {} after {:.1} s",
        out.report.best_epoch, out.report.wall_time_s
    );
    println!("{}", evaluate(&out.network, &te)?.to_table());
    Ok(())
}
