use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::gridsearch::{fold_indices, fold_split};
use super::{DecisionTree, EvalReport, Knn};
use crate::error::{Error, Result};
use crate::ingest::ModeLabel;
use crate::pipeline::Dataset;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BaselineAlgo {
    Knn,
    Dt,
}

impl BaselineAlgo {
    /// Hyperparameter used when no search is run.
    pub fn default_param(self) -> usize {
        match self {
            BaselineAlgo::Knn => 5,
            BaselineAlgo::Dt => 10,
        }
    }

    /// Search range for k or max depth, inclusive.
    pub fn search_range(self) -> (usize, usize) {
        match self {
            BaselineAlgo::Knn => (3, 40),
            BaselineAlgo::Dt => (1, 40),
        }
    }
}

impl FromStr for BaselineAlgo {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "knn" => Ok(BaselineAlgo::Knn),
            "dt" => Ok(BaselineAlgo::Dt),
            _ => Err(Error::InvalidInput(format!("baseline must be knn or dt, got {s:?}"))),
        }
    }
}

/// Feature rows and label codes of a dataset that carries hand-crafted
/// features.
pub fn feature_matrix(ds: &Dataset) -> Result<(Vec<Vec<f64>>, Vec<u8>)> {
    let feats = ds
        .features
        .as_ref()
        .ok_or_else(|| Error::InvalidInput(format!("{} has no hand-crafted features", ds.provenance)))?;
    if feats.len() != ds.len() {
        return Err(Error::Shape(format!(
            "{} feature rows for {} samples",
            feats.len(),
            ds.len()
        )));
    }
    let rows = feats.iter().map(|f| f.to_vector().to_vec()).collect();
    Ok((rows, ds.samples.iter().map(|s| s.label.code()).collect()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchPoint {
    pub param: usize,
    pub cv_accuracy: f64,
}

fn fit_predict(
    algo: BaselineAlgo,
    param: usize,
    rows: &[Vec<f64>],
    labels: &[u8],
    queries: &[Vec<f64>],
) -> Result<Vec<u8>> {
    Ok(match algo {
        BaselineAlgo::Knn => Knn::fit(rows, labels, param, ModeLabel::COUNT)?.predict_all(queries),
        BaselineAlgo::Dt => DecisionTree::fit(rows, labels, param, ModeLabel::COUNT)?.predict_all(queries),
    })
}

fn cv_search(
    algo: BaselineAlgo,
    rows: &[Vec<f64>],
    labels: &[u8],
    params: &[usize],
    folds: usize,
    seed: u64,
) -> Result<Vec<SearchPoint>> {
    let fold_sets = fold_indices(rows.len(), folds, seed)?;
    let pick = |idx: &[usize]| -> (Vec<Vec<f64>>, Vec<u8>) {
        (
            idx.iter().map(|&i| rows[i].clone()).collect(),
            idx.iter().map(|&i| labels[i]).collect(),
        )
    };
    let splits: Vec<_> = (0..folds)
        .map(|f| {
            let (tr, te) = fold_split(&fold_sets, f);
            (pick(&tr), pick(&te))
        })
        .collect();
    params
        .par_iter()
        .map(|&param| {
            let mut hits = 0;
            for ((tr_x, tr_y), (te_x, te_y)) in &splits {
                let pred = fit_predict(algo, param, tr_x, tr_y, te_x)?;
                hits += pred.iter().zip(te_y).filter(|(p, y)| p == y).count();
            }
            Ok(SearchPoint {
                param,
                cv_accuracy: hits as f64 / rows.len() as f64,
            })
        })
        .collect()
}

fn best_of(points: &[SearchPoint]) -> usize {
    let mut best = &points[0];
    for p in points {
        if p.cv_accuracy > best.cv_accuracy {
            best = p;
        }
    }
    best.param
}

/// Cross-validated accuracy for every k in `range`.
pub fn search_k(
    rows: &[Vec<f64>],
    labels: &[u8],
    range: (usize, usize),
    folds: usize,
    seed: u64,
) -> Result<Vec<SearchPoint>> {
    let params: Vec<usize> = (range.0..=range.1).collect();
    cv_search(BaselineAlgo::Knn, rows, labels, &params, folds, seed)
}

/// Cross-validated accuracy for every max depth in `range`.
pub fn search_depth(
    rows: &[Vec<f64>],
    labels: &[u8],
    range: (usize, usize),
    folds: usize,
    seed: u64,
) -> Result<Vec<SearchPoint>> {
    let params: Vec<usize> = (range.0..=range.1).collect();
    cv_search(BaselineAlgo::Dt, rows, labels, &params, folds, seed)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineReport {
    pub algo: BaselineAlgo,
    pub param: usize,
    pub search: Vec<SearchPoint>,
    pub eval: EvalReport,
}

/// Fit on `train`, evaluate on `test`. With `search`, the hyperparameter is
/// picked by k-fold cross-validation on `train` (smallest value on ties);
/// otherwise `param` or the algorithm default is used.
pub fn run_baseline(
    algo: BaselineAlgo,
    train: &Dataset,
    test: &Dataset,
    search: bool,
    param: Option<usize>,
    folds: usize,
    seed: u64,
) -> Result<BaselineReport> {
    let (tr_x, tr_y) = feature_matrix(train)?;
    let (te_x, _) = feature_matrix(test)?;
    let (points, chosen) = if search {
        let pts = match algo {
            BaselineAlgo::Knn => search_k(&tr_x, &tr_y, algo.search_range(), folds, seed)?,
            BaselineAlgo::Dt => search_depth(&tr_x, &tr_y, algo.search_range(), folds, seed)?,
        };
        let best = best_of(&pts);
        (pts, best)
    } else {
        (Vec::new(), param.unwrap_or(algo.default_param()))
    };
    let pred: Vec<ModeLabel> = fit_predict(algo, chosen, &tr_x, &tr_y, &te_x)?
        .into_iter()
        .map(|c| ModeLabel::from_code(c).expect("class codes come from labels"))
        .collect();
    Ok(BaselineReport {
        algo,
        param: chosen,
        search: points,
        eval: EvalReport::from_predictions(&test.labels(), &pred)?,
    })
}
