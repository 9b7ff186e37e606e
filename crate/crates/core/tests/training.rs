use modewise::nn::encode_tmmd;
use modewise::pipeline::{build_dataset, split_train_test, Dataset, PipelineConfig};
use modewise::synth::{generate, SynthConfig};
use modewise::train::{grid_search_dropout, predict_dataset, train, train_ensemble, EarlyStop, TrainConfig};
use modewise::zoo::{build_config, ZooOptions};

const M: usize = 32;

fn corpus(per_mode: usize, seed: u64) -> Dataset {
    let cfg = PipelineConfig {
        segment_len: M,
        ..PipelineConfig::default()
    };
    build_dataset(&generate(&SynthConfig::new(per_mode, 2 * M, seed)).trips(), &cfg).unwrap()
}

fn tiny() -> ZooOptions {
    ZooOptions {
        segment_len: M,
        filters: [4, 4, 4, 4],
        ..ZooOptions::default()
    }
}

fn in_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .unwrap()
        .install(f)
}

#[test]
fn ensemble_is_independent_of_worker_count() {
    let ds = corpus(4, 1);
    let spec = build_config("B", &tiny()).unwrap();
    let cfg = TrainConfig {
        max_epochs: 2,
        batch_size: 8,
        early_stop: EarlyStop::None,
        seed: 3,
        ..TrainConfig::default()
    };
    let (a, ra) = in_pool(1, || train_ensemble(&spec, &ds, None, 3, &cfg).unwrap());
    let (b, rb) = in_pool(3, || train_ensemble(&spec, &ds, None, 3, &cfg).unwrap());
    for (x, y) in a.members().iter().zip(b.members()) {
        assert_eq!(encode_tmmd(x), encode_tmmd(y));
    }
    assert_eq!(
        ra.iter().map(|r| &r.loss).collect::<Vec<_>>(),
        rb.iter().map(|r| &r.loss).collect::<Vec<_>>()
    );
    // members see different bootstrap samples and seeds
    assert_ne!(encode_tmmd(&a.members()[0]), encode_tmmd(&a.members()[1]));
}

#[test]
fn ensemble_probabilities_are_distributions() {
    let ds = corpus(4, 2);
    let spec = build_config("G", &tiny()).unwrap();
    let cfg = TrainConfig {
        max_epochs: 1,
        batch_size: 8,
        early_stop: EarlyStop::None,
        ..TrainConfig::default()
    };
    let (ens, _) = train_ensemble(&spec, &ds, None, 4, &cfg).unwrap();
    for row in predict_dataset(&ens, &ds).unwrap() {
        assert_eq!(row.len(), 5);
        assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(row.iter().all(|&p| (0.0..=1.0).contains(&p)));
    }
}

#[test]
fn patience_stops_early_and_keeps_the_best_epoch() {
    let ds = corpus(6, 4);
    let (tr, te) = split_train_test(&ds, 0.8, 4).unwrap();
    let spec = build_config("A", &tiny()).unwrap();
    let cfg = TrainConfig {
        max_epochs: 40,
        batch_size: 8,
        early_stop: EarlyStop::Test,
        patience: Some(2),
        ..TrainConfig::default()
    };
    let out = train(&spec, &tr, Some(&te), &cfg).unwrap();
    let r = &out.report;
    assert_eq!(r.monitor_accuracy.len(), r.epochs_run);
    let best = r.monitor_accuracy.iter().cloned().fold(f64::MIN, f64::max);
    assert_eq!(r.monitor_accuracy[r.best_epoch - 1], best);
    assert_eq!(
        r.monitor_accuracy.iter().position(|&a| a == best),
        Some(r.best_epoch - 1)
    );
    if r.epochs_run < 40 {
        assert_eq!(r.epochs_run, r.best_epoch + 2);
    }
    let acc = modewise::train::accuracy(&out.network, &te).unwrap();
    assert_eq!(acc, best);
}

#[test]
fn dropout_grid_covers_every_pair() {
    let ds = corpus(3, 6);
    let cfg = TrainConfig {
        max_epochs: 1,
        batch_size: 8,
        ..TrainConfig::default()
    };
    let res = grid_search_dropout("A", &tiny(), &ds, &[0.5, 0.2], &[0.3], 3, &cfg).unwrap();
    let pairs: Vec<(f64, f64)> = res.cells.iter().map(|c| (c.p_conv, c.p_fc)).collect();
    assert_eq!(pairs, vec![(0.2, 0.3), (0.5, 0.3)]);
    assert!(res.cells.iter().all(|c| c.fold_accuracy.len() == 3));
    let best = res.cells.iter().map(|c| c.mean_accuracy).fold(f64::MIN, f64::max);
    let first_best = res.cells.iter().find(|c| c.mean_accuracy == best).unwrap();
    assert_eq!((res.best_p_conv, res.best_p_fc), (first_best.p_conv, first_best.p_fc));
}
