//! Mini-batch training with Adam, early stopping, evaluation metrics,
//! dropout grid search and the hand-crafted-feature baselines.

mod baseline;
mod gridsearch;
mod knn;
mod metrics;
mod tree;

pub use baseline::{feature_matrix, run_baseline, search_depth, search_k, BaselineAlgo, BaselineReport, SearchPoint};
pub use gridsearch::{fold_indices, grid_search_dropout, parse_grid, GridCell, GridSearchResult};
pub use knn::{Knn, Standardizer};
pub use metrics::EvalReport;
pub use tree::{DecisionTree, TreeNode};

use std::str::FromStr;
use std::time::Instant;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::ModeLabel;
use crate::nn::{softmax_xent, Adam, AdamConfig, Mode, Network, Tensor};
use crate::pipeline::{split_train_test, Dataset};
use crate::seed::{self, stream};
use crate::zoo::{self, Ensemble, NetworkSpec};

/// Which accuracy curve drives early stopping.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EarlyStop {
    /// A validation split carved from the training set.
    Val,
    /// The held-out test set. Leaks test information into model selection.
    Test,
    None,
}

impl FromStr for EarlyStop {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "val" => Ok(EarlyStop::Val),
            "test" => Ok(EarlyStop::Test),
            "none" => Ok(EarlyStop::None),
            _ => Err(Error::InvalidInput(format!(
                "early-stop monitor must be val, test or none, got {s:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub max_epochs: usize,
    pub early_stop: EarlyStop,
    /// Stop after this many epochs without a new best monitored accuracy.
    /// `None` runs every epoch and still returns the best snapshot.
    pub patience: Option<usize>,
    pub seed: u64,
    pub val_fraction: f64,
    pub adam: AdamConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            batch_size: 64,
            max_epochs: 10,
            early_stop: EarlyStop::Val,
            patience: None,
            seed: 0,
            val_fraction: 0.1,
            adam: AdamConfig::default(),
        }
    }
}

impl TrainConfig {
    fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::InvalidInput("batch size must be at least 1".into()));
        }
        if self.patience == Some(0) {
            return Err(Error::InvalidInput("patience must be at least 1".into()));
        }
        if self.max_epochs == 0 {
            return Err(Error::InvalidInput("need at least one epoch".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub config: String,
    pub seed: u64,
    pub early_stop: EarlyStop,
    pub train_samples: usize,
    pub monitor_samples: usize,
    pub epochs_run: usize,
    pub loss: Vec<f64>,
    pub train_accuracy: Vec<f64>,
    pub monitor_accuracy: Vec<f64>,
    /// 1-based epoch whose parameters were kept.
    pub best_epoch: usize,
    pub wall_time_s: f64,
}

pub struct TrainOutcome {
    pub network: Network,
    pub report: RunReport,
}

/// Anything that maps a (B, 4, M) batch to class probabilities.
pub trait Classifier: Sync {
    fn predict_proba(&self, x: &Tensor) -> Result<Tensor>;
}

impl Classifier for Network {
    fn predict_proba(&self, x: &Tensor) -> Result<Tensor> {
        Network::predict_proba(self, x)
    }
}

impl Classifier for Ensemble {
    fn predict_proba(&self, x: &Tensor) -> Result<Tensor> {
        Ensemble::predict_proba(self, x)
    }
}

const EVAL_BATCH: usize = 256;

/// Probability rows for every sample, in order.
pub fn predict_dataset(model: &dyn Classifier, ds: &Dataset) -> Result<Vec<Vec<f64>>> {
    let mut out = Vec::with_capacity(ds.len());
    for chunk in ds.samples.chunks(EVAL_BATCH) {
        let refs: Vec<_> = chunk.iter().collect();
        let p = model.predict_proba(&zoo::stack_batch(&refs)?)?;
        let k = p.shape()[1];
        out.extend(p.data().chunks(k).map(|r| r.to_vec()));
    }
    Ok(out)
}

pub fn predict_labels(model: &dyn Classifier, ds: &Dataset) -> Result<Vec<ModeLabel>> {
    predict_dataset(model, ds)?
        .iter()
        .map(|row| {
            ModeLabel::from_code(zoo::argmax(row) as u8)
                .ok_or_else(|| Error::Shape(format!("model has {} outputs", row.len())))
        })
        .collect()
}

pub fn accuracy(model: &dyn Classifier, ds: &Dataset) -> Result<f64> {
    if ds.is_empty() {
        return Err(Error::InvalidInput("accuracy of an empty set".into()));
    }
    let pred = predict_labels(model, ds)?;
    let hits = pred.iter().zip(ds.labels()).filter(|(p, a)| **p == *a).count();
    Ok(hits as f64 / ds.len() as f64)
}

pub fn evaluate(model: &dyn Classifier, ds: &Dataset) -> Result<EvalReport> {
    EvalReport::from_predictions(&ds.labels(), &predict_labels(model, ds)?)
}

/// 1-based index of the best accuracy; the earliest wins ties.
pub fn early_stopping(curve: &[f64]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, &v) in curve.iter().enumerate() {
        if best.is_none_or(|b| v > curve[b]) {
            best = Some(i);
        }
    }
    best.map(|b| b + 1)
}

/// Train `spec` on `train`. `monitor` is the test set used when
/// `cfg.early_stop` is [`EarlyStop::Test`]; with [`EarlyStop::Val`] a
/// validation split is carved from `train` instead.
pub fn train(
    spec: &NetworkSpec,
    train: &Dataset,
    monitor: Option<&Dataset>,
    cfg: &TrainConfig,
) -> Result<TrainOutcome> {
    let mut rng = seed::rng(cfg.seed, stream::INIT, 0);
    let net = spec.build(&mut rng)?;
    train_network(net, &spec.name, train, monitor, cfg)
}

pub fn train_network(
    mut net: Network,
    name: &str,
    train: &Dataset,
    monitor: Option<&Dataset>,
    cfg: &TrainConfig,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    if train.is_empty() {
        return Err(Error::InvalidInput("empty training set".into()));
    }
    if train.segment_len != net.input_len() {
        return Err(Error::Shape(format!(
            "model takes segments of {} points, data has {}",
            net.input_len(),
            train.segment_len
        )));
    }
    let start = Instant::now();
    let carved;
    let (fit_set, monitor_set): (&Dataset, Option<&Dataset>) = match cfg.early_stop {
        EarlyStop::Val => {
            let (fit, val) = split_train_test(
                train,
                1.0 - cfg.val_fraction,
                seed::derive(cfg.seed, stream::VALIDATION, 0),
            )?;
            if fit.is_empty() || val.is_empty() {
                return Err(Error::InvalidInput(format!(
                    "{} samples are too few for a {} validation split",
                    train.len(),
                    cfg.val_fraction
                )));
            }
            carved = (fit, val);
            (&carved.0, Some(&carved.1))
        }
        EarlyStop::Test => {
            let m = monitor.ok_or_else(|| Error::InvalidInput("early stopping on test needs a monitor set".into()))?;
            if m.is_empty() {
                return Err(Error::InvalidInput("empty monitor set".into()));
            }
            (train, Some(m))
        }
        EarlyStop::None => (train, None),
    };

    let mut adam = Adam::new(cfg.adam);
    let mut dropout_rng = seed::rng(cfg.seed, stream::DROPOUT, 0);
    let mut order: Vec<usize> = (0..fit_set.len()).collect();
    let labels: Vec<u8> = fit_set.samples.iter().map(|s| s.label.code()).collect();

    let mut report = RunReport {
        config: name.to_string(),
        seed: cfg.seed,
        early_stop: cfg.early_stop,
        train_samples: fit_set.len(),
        monitor_samples: monitor_set.map_or(0, |m| m.len()),
        epochs_run: 0,
        loss: Vec::new(),
        train_accuracy: Vec::new(),
        monitor_accuracy: Vec::new(),
        best_epoch: 0,
        wall_time_s: 0.0,
    };
    let mut best: Option<(f64, Network)> = None;
    let mut since_best = 0;

    for epoch in 1..=cfg.max_epochs {
        order.shuffle(&mut seed::rng(cfg.seed, stream::SHUFFLE, epoch as u64));
        let mut loss_sum = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            let samples: Vec<_> = batch.iter().map(|&i| &fit_set.samples[i]).collect();
            let y: Vec<u8> = batch.iter().map(|&i| labels[i]).collect();
            let x = zoo::stack_batch(&samples)?;
            net.zero_grad();
            let logits = net.forward(&x, Mode::Train, &mut dropout_rng)?;
            let (loss, dlogits) = softmax_xent(&logits, &y)?;
            if !loss.is_finite() {
                return Err(Error::Diverged { epoch, loss });
            }
            net.backward(&dlogits)?;
            adam.step(&mut net.params_mut())?;
            loss_sum += loss * batch.len() as f64;
        }
        net.clear_cache();
        let epoch_loss = loss_sum / fit_set.len() as f64;
        report.loss.push(epoch_loss);
        report.train_accuracy.push(accuracy(&net, fit_set)?);
        report.epochs_run = epoch;
        log::info!(
            "{name} epoch {epoch}: loss {epoch_loss:.4}, train acc {:.4}",
            report.train_accuracy.last().unwrap()
        );

        if let Some(m) = monitor_set {
            let acc = accuracy(&net, m)?;
            report.monitor_accuracy.push(acc);
            log::info!("{name} epoch {epoch}: monitor acc {acc:.4}");
            if best.as_ref().is_none_or(|(b, _)| acc > *b) {
                best = Some((acc, net.clone()));
                report.best_epoch = epoch;
                since_best = 0;
            } else {
                since_best += 1;
                if cfg.patience.is_some_and(|p| since_best >= p) {
                    log::info!("{name}: no improvement for {since_best} epochs, stopping");
                    break;
                }
            }
        }
    }

    let network = match best {
        Some((_, snapshot)) => snapshot,
        None => {
            report.best_epoch = report.epochs_run;
            net
        }
    };
    report.wall_time_s = start.elapsed().as_secs_f64();
    Ok(TrainOutcome { network, report })
}

/// Members trained on bootstrap resamples of `train`, each with its own
/// seed derived from `cfg.seed`. Runs members in parallel on the current
/// rayon pool; results do not depend on the worker count.
pub fn train_ensemble(
    spec: &NetworkSpec,
    train: &Dataset,
    monitor: Option<&Dataset>,
    n_members: usize,
    cfg: &TrainConfig,
) -> Result<(Ensemble, Vec<RunReport>)> {
    use rayon::prelude::*;
    if n_members == 0 {
        return Err(Error::InvalidInput("an ensemble needs at least one member".into()));
    }
    let outcomes: Vec<TrainOutcome> = (0..n_members)
        .into_par_iter()
        .map(|i| {
            let member_seed = seed::derive(cfg.seed, stream::MEMBER, i as u64);
            let resampled = zoo::bootstrap_resample(train, &mut seed::rng(cfg.seed, stream::BOOTSTRAP, i as u64));
            let member_cfg = TrainConfig {
                seed: member_seed,
                ..cfg.clone()
            };
            self::train(spec, &resampled, monitor, &member_cfg)
        })
        .collect::<Result<_>>()?;
    let (nets, reports): (Vec<_>, Vec<_>) = outcomes.into_iter().map(|o| (o.network, o.report)).unzip();
    Ok((Ensemble::new(nets)?, reports))
}
