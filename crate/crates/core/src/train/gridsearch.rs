use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{accuracy, train, EarlyStop, TrainConfig};
use crate::error::{Error, Result};
use crate::pipeline::Dataset;
use crate::seed::{self, stream};
use crate::zoo::{build_config, ZooOptions};

/// Seeded partition of `0..n` into `k` folds of near-equal size. Each fold
/// is sorted.
pub fn fold_indices(n: usize, k: usize, seed_value: u64) -> Result<Vec<Vec<usize>>> {
    if k < 2 || k > n {
        return Err(Error::InvalidInput(format!("cannot make {k} folds from {n} samples")));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut seed::rng(seed_value, stream::FOLDS, 0));
    let mut folds = Vec::with_capacity(k);
    let mut start = 0;
    for f in 0..k {
        let size = n / k + usize::from(f < n % k);
        let mut fold = order[start..start + size].to_vec();
        fold.sort_unstable();
        folds.push(fold);
        start += size;
    }
    Ok(folds)
}

/// Training and held-out indices for fold `f`.
pub(crate) fn fold_split(folds: &[Vec<usize>], f: usize) -> (Vec<usize>, Vec<usize>) {
    let mut train: Vec<usize> = folds
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != f)
        .flat_map(|(_, v)| v.iter().copied())
        .collect();
    train.sort_unstable();
    (train, folds[f].clone())
}

/// `"0.2:0.8:0.1"` (inclusive range), `"0.3,0.5"` or a single value.
pub fn parse_grid(s: &str) -> Result<Vec<f64>> {
    let bad = || Error::InvalidInput(format!("bad grid {s:?}; expected start:end:step, a,b,c or a value"));
    let num = |t: &str| t.trim().parse::<f64>().map_err(|_| bad());
    let values: Vec<f64> = if s.contains(':') {
        let parts: Vec<&str> = s.split(':').collect();
        let [a, b, step] = parts[..] else { return Err(bad()) };
        let (a, b, step) = (num(a)?, num(b)?, num(step)?);
        if step.is_nan() || step <= 0.0 || b < a {
            return Err(bad());
        }
        let n = ((b - a) / step + 1e-9).floor() as usize;
        (0..=n).map(|i| ((a + i as f64 * step) * 1e9).round() / 1e9).collect()
    } else {
        s.split(',').map(num).collect::<Result<_>>()?
    };
    if values.is_empty() || values.iter().any(|p| !(0.0..1.0).contains(p)) {
        return Err(Error::InvalidInput(format!(
            "dropout grid {s:?} must hold values in [0, 1)"
        )));
    }
    Ok(values)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    pub p_conv: f64,
    pub p_fc: f64,
    pub fold_accuracy: Vec<f64>,
    pub mean_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSearchResult {
    pub config: String,
    pub folds: usize,
    pub cells: Vec<GridCell>,
    pub best_p_conv: f64,
    pub best_p_fc: f64,
}

/// k-fold cross-validated accuracy for every (p_conv, p_fc) pair. Every
/// fit runs `cfg.max_epochs` epochs without early stopping. The best mean
/// wins; ties go to the lexicographically smaller pair.
pub fn grid_search_dropout(
    config: &str,
    opts: &ZooOptions,
    train_set: &Dataset,
    p_conv: &[f64],
    p_fc: &[f64],
    folds: usize,
    cfg: &TrainConfig,
) -> Result<GridSearchResult> {
    if p_conv.is_empty() || p_fc.is_empty() {
        return Err(Error::InvalidInput("empty dropout grid".into()));
    }
    let mut pairs: Vec<(f64, f64)> = p_conv.iter().flat_map(|&a| p_fc.iter().map(move |&b| (a, b))).collect();
    pairs.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.total_cmp(&y.1)));
    pairs.dedup();
    let fold_sets = fold_indices(train_set.len(), folds, cfg.seed)?;
    let fit_cfg = TrainConfig {
        early_stop: EarlyStop::None,
        ..cfg.clone()
    };
    let jobs: Vec<(usize, usize)> = (0..pairs.len()).flat_map(|c| (0..folds).map(move |f| (c, f))).collect();
    let scores: Vec<f64> = jobs
        .par_iter()
        .map(|&(c, f)| {
            let (p1, p2) = pairs[c];
            let spec = build_config(
                config,
                &ZooOptions {
                    p_conv: p1,
                    p_fc: p2,
                    ..*opts
                },
            )?;
            let (tr, te) = fold_split(&fold_sets, f);
            let out = train(&spec, &train_set.subset(&tr, "cv train"), None, &fit_cfg)?;
            let acc = accuracy(&out.network, &train_set.subset(&te, "cv fold"))?;
            log::info!("grid p=({p1}, {p2}) fold {f}: {acc:.4}");
            Ok(acc)
        })
        .collect::<Result<_>>()?;
    let cells: Vec<GridCell> = pairs
        .iter()
        .enumerate()
        .map(|(c, &(p1, p2))| {
            let fold_accuracy = scores[c * folds..(c + 1) * folds].to_vec();
            GridCell {
                p_conv: p1,
                p_fc: p2,
                mean_accuracy: fold_accuracy.iter().sum::<f64>() / folds as f64,
                fold_accuracy,
            }
        })
        .collect();
    let mut best = 0;
    for (i, c) in cells.iter().enumerate() {
        if c.mean_accuracy > cells[best].mean_accuracy {
            best = i;
        }
    }
    Ok(GridSearchResult {
        config: config.to_string(),
        folds,
        best_p_conv: cells[best].p_conv,
        best_p_fc: cells[best].p_fc,
        cells,
    })
}
