use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Per-column z-scoring with statistics from the training rows. Constant
/// columns get unit scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Standardizer {
    pub fn fit(rows: &[Vec<f64>]) -> Result<Self> {
        let first = rows
            .first()
            .ok_or_else(|| Error::InvalidInput("cannot standardize zero rows".into()))?;
        let d = first.len();
        let n = rows.len() as f64;
        let mut mean = vec![0.0; d];
        for r in rows {
            if r.len() != d {
                return Err(Error::Shape("feature rows of different widths".into()));
            }
            for (m, v) in mean.iter_mut().zip(r) {
                *m += v / n;
            }
        }
        let mut var = vec![0.0; d];
        for r in rows {
            for ((s, v), m) in var.iter_mut().zip(r).zip(&mean) {
                *s += (v - m).powi(2) / n;
            }
        }
        let std = var.into_iter().map(|v| if v > 0.0 { v.sqrt() } else { 1.0 }).collect();
        Ok(Standardizer { mean, std })
    }

    pub fn apply(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .zip(&self.mean)
            .zip(&self.std)
            .map(|((v, m), s)| (v - m) / s)
            .collect()
    }
}

/// k-nearest neighbours on standardized features, Euclidean distance,
/// majority vote. Vote ties go to the smallest label; distance ties to the
/// earlier training row.
#[derive(Debug, Clone)]
pub struct Knn {
    k: usize,
    scaler: Standardizer,
    rows: Vec<Vec<f64>>,
    labels: Vec<u8>,
    classes: usize,
}

impl Knn {
    pub fn fit(rows: &[Vec<f64>], labels: &[u8], k: usize, classes: usize) -> Result<Self> {
        if rows.len() != labels.len() {
            return Err(Error::Shape(format!("{} rows but {} labels", rows.len(), labels.len())));
        }
        if k == 0 || k > rows.len() {
            return Err(Error::InvalidInput(format!(
                "k = {k} needs between 1 and {} training rows",
                rows.len()
            )));
        }
        let scaler = Standardizer::fit(rows)?;
        Ok(Knn {
            k,
            rows: rows.iter().map(|r| scaler.apply(r)).collect(),
            scaler,
            labels: labels.to_vec(),
            classes,
        })
    }

    pub fn predict(&self, query: &[f64]) -> u8 {
        let q = self.scaler.apply(query);
        let mut dist: Vec<(f64, usize)> = self
            .rows
            .iter()
            .enumerate()
            .map(|(i, r)| (r.iter().zip(&q).map(|(a, b)| (a - b).powi(2)).sum(), i))
            .collect();
        dist.select_nth_unstable_by(self.k - 1, |a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let mut votes = vec![0usize; self.classes];
        for &(_, i) in &dist[..self.k] {
            votes[self.labels[i] as usize] += 1;
        }
        let mut best = 0;
        for (c, &v) in votes.iter().enumerate() {
            if v > votes[best] {
                best = c;
            }
        }
        best as u8
    }

    pub fn predict_all(&self, queries: &[Vec<f64>]) -> Vec<u8> {
        queries.iter().map(|q| self.predict(q)).collect()
    }
}
