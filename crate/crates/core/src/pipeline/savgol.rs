//! Savitzky-Golay smoothing.
//!
//! Every output sample is the value at the sample's own position of the
//! least-squares polynomial fitted over the window around it. Near the ends
//! the window is truncated to the samples that exist; if the truncated
//! window is too small to determine the polynomial it is widened on the
//! interior side.

use std::collections::HashMap;

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct SavitzkyGolay {
    window: usize,
    order: usize,
    weights: HashMap<(usize, usize), Vec<f64>>,
}

impl SavitzkyGolay {
    pub fn new(window: usize, order: usize) -> Result<Self> {
        if window.is_multiple_of(2) {
            return Err(Error::InvalidInput(format!(
                "Savitzky-Golay window must be odd, got {window}"
            )));
        }
        if order >= window {
            return Err(Error::InvalidInput(format!(
                "Savitzky-Golay order {order} must be below window {window}"
            )));
        }
        Ok(SavitzkyGolay {
            window,
            order,
            weights: HashMap::new(),
        })
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Weights of the centered full window.
    pub fn center_coefficients(&mut self) -> Vec<f64> {
        let h = self.window / 2;
        self.weights_for(h, h).to_vec()
    }

    fn weights_for(&mut self, left: usize, right: usize) -> &[f64] {
        let order = self.order;
        self.weights
            .entry((left, right))
            .or_insert_with(|| fit_weights(left, right, order))
    }

    fn extent(&self, i: usize, n: usize) -> (usize, usize) {
        let h = self.window / 2;
        let mut left = h.min(i);
        let mut right = h.min(n - 1 - i);
        while left + right < self.order {
            if i + right + 1 < n {
                right += 1;
            } else {
                left += 1;
            }
        }
        (left, right)
    }

    /// Smooth `series`. Series shorter than `order + 2` are returned unchanged.
    pub fn smooth(&mut self, series: &[f64]) -> Vec<f64> {
        let n = series.len();
        if n < self.order + 2 {
            return series.to_vec();
        }
        (0..n)
            .map(|i| {
                let (left, right) = self.extent(i, n);
                let w = self.weights_for(left, right);
                series[i - left..=i + right].iter().zip(w).map(|(x, w)| x * w).sum()
            })
            .collect()
    }
}

pub fn savgol_smooth(series: &[f64], window: usize, order: usize) -> Result<Vec<f64>> {
    Ok(SavitzkyGolay::new(window, order)?.smooth(series))
}

/// Weights `w` such that `Σ w_j y_j` evaluates, at offset 0, the degree-`order`
/// least-squares fit to samples at offsets `-left..=right`.
fn fit_weights(left: usize, right: usize, order: usize) -> Vec<f64> {
    let p = order + 1;
    let scale = left.max(right).max(1) as f64;
    let xs: Vec<f64> = (-(left as i64)..=right as i64).map(|x| x as f64 / scale).collect();
    let powers: Vec<Vec<f64>> = xs
        .iter()
        .map(|&x| {
            let mut row = Vec::with_capacity(p);
            let mut v = 1.0;
            for _ in 0..p {
                row.push(v);
                v *= x;
            }
            row
        })
        .collect();

    // Gram matrix augmented with e0; solve G c = e0.
    let mut aug = vec![vec![0.0; p + 1]; p];
    for r in 0..p {
        for c in 0..p {
            aug[r][c] = powers.iter().map(|row| row[r] * row[c]).sum();
        }
    }
    aug[0][p] = 1.0;
    for col in 0..p {
        let pivot = (col..p)
            .max_by(|&a, &b| aug[a][col].abs().total_cmp(&aug[b][col].abs()))
            .unwrap_or(col);
        aug.swap(col, pivot);
        let d = aug[col][col];
        for k in col..=p {
            aug[col][k] /= d;
        }
        for r in 0..p {
            if r != col {
                let factor = aug[r][col];
                if factor != 0.0 {
                    for k in col..=p {
                        aug[r][k] -= factor * aug[col][k];
                    }
                }
            }
        }
    }
    let coef: Vec<f64> = aug.iter().map(|row| row[p]).collect();
    powers
        .iter()
        .map(|row| row.iter().zip(&coef).map(|(a, b)| a * b).sum())
        .collect()
}
