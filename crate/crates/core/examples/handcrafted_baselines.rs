//! KNN and decision tree on hand-crafted segment features.

use modewise::pipeline::{build_dataset, split_train_test, PipelineConfig};
use modewise::synth::{generate, SynthConfig};
use modewise::train::{run_baseline, BaselineAlgo};

fn main() -> modewise::Result<()> {
    let ds = build_dataset(
        &generate(&SynthConfig {
            noise: true,
            ..SynthConfig::new(40, 200, 9)
        })
        .trips(),
        &PipelineConfig::default(),
    )?;
    let (tr, te) = split_train_test(&ds, 0.8, 9)?;
    for algo in [BaselineAlgo::Knn, BaselineAlgo::Dt] {
        let r = run_baseline(algo, &tr, &te, true, None, 5, 9)?;
        println!(
            "{algo:?}: chosen {} by 5-fold search, test accuracy {:.3}",
            r.param, r.eval.accuracy
        );
    }
    Ok(())
}
