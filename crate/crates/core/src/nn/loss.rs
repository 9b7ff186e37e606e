use super::Tensor;
use crate::error::{Error, Result};

/// Row-wise softmax, stabilized by subtracting the row maximum.
pub fn softmax(logits: &Tensor) -> Result<Tensor> {
    let (_, k) = logits.dims2()?;
    let mut out = logits.clone();
    for row in out.data_mut().chunks_mut(k) {
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            sum += *v;
        }
        for v in row.iter_mut() {
            *v /= sum;
        }
    }
    Ok(out)
}

/// Mean negative log-likelihood of `labels` under softmax(`logits`), and
/// its gradient (softmax − onehot) / B.
pub fn softmax_xent(logits: &Tensor, labels: &[u8]) -> Result<(f64, Tensor)> {
    let (b, k) = logits.dims2()?;
    if labels.len() != b {
        return Err(Error::Shape(format!("{b} logit rows but {} labels", labels.len())));
    }
    if let Some(&bad) = labels.iter().find(|&&y| y as usize >= k) {
        return Err(Error::InvalidInput(format!("label {bad} outside 0..{k}")));
    }
    let mut grad = logits.clone();
    let mut loss = 0.0;
    for ((row, grow), &y) in logits.data().chunks(k).zip(grad.data_mut().chunks_mut(k)).zip(labels) {
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lse = max + row.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
        loss += lse - row[y as usize];
        for (g, &v) in grow.iter_mut().zip(row) {
            *g = (v - lse).exp() / b as f64;
        }
        grow[y as usize] -= 1.0 / b as f64;
    }
    Ok((loss / b as f64, grad))
}
