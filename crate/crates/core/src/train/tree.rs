use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TreeNode {
    Leaf {
        label: u8,
    },
    Split {
        feature: usize,
        threshold: f64,
        /// rows with `x[feature] <= threshold`
        left: Box<TreeNode>,
        right: Box<TreeNode>,
    },
}

/// Binary CART classifier with Gini impurity.
///
/// A node becomes a leaf when it is pure, at `max_depth`, or when no
/// feature takes two distinct values. Otherwise it takes the split with the
/// lowest weighted Gini impurity over all features and all midpoints
/// between consecutive distinct values; the first one found (lowest
/// feature, then lowest threshold) wins ties. Leaves predict the majority
/// label, smallest label on ties.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub max_depth: usize,
    pub root: TreeNode,
}

fn gini(counts: &[usize], n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let n = n as f64;
    1.0 - counts.iter().map(|&c| (c as f64 / n).powi(2)).sum::<f64>()
}

fn majority(counts: &[usize]) -> u8 {
    let mut best = 0;
    for (c, &v) in counts.iter().enumerate() {
        if v > counts[best] {
            best = c;
        }
    }
    best as u8
}

struct Builder<'a> {
    rows: &'a [Vec<f64>],
    labels: &'a [u8],
    classes: usize,
    max_depth: usize,
}

impl Builder<'_> {
    fn counts(&self, idx: &[usize]) -> Vec<usize> {
        let mut c = vec![0; self.classes];
        for &i in idx {
            c[self.labels[i] as usize] += 1;
        }
        c
    }

    fn best_split(&self, idx: &[usize]) -> Option<(usize, f64)> {
        let n = idx.len();
        let total = self.counts(idx);
        let mut best: Option<(f64, usize, f64)> = None;
        let mut sorted = idx.to_vec();
        for f in 0..self.rows[idx[0]].len() {
            sorted.sort_by(|&a, &b| self.rows[a][f].total_cmp(&self.rows[b][f]));
            let mut left = vec![0; self.classes];
            for j in 0..n - 1 {
                left[self.labels[sorted[j]] as usize] += 1;
                let (lo, hi) = (self.rows[sorted[j]][f], self.rows[sorted[j + 1]][f]);
                if lo == hi {
                    continue;
                }
                let right: Vec<usize> = total.iter().zip(&left).map(|(t, l)| t - l).collect();
                let nl = j + 1;
                let score = (nl as f64 * gini(&left, nl) + (n - nl) as f64 * gini(&right, n - nl)) / n as f64;
                if best.is_none_or(|(b, _, _)| score < b) {
                    best = Some((score, f, lo + (hi - lo) / 2.0));
                }
            }
        }
        best.map(|(_, f, t)| (f, t))
    }

    fn build(&self, idx: &[usize], depth: usize) -> TreeNode {
        let counts = self.counts(idx);
        let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
        if pure || depth >= self.max_depth {
            return TreeNode::Leaf {
                label: majority(&counts),
            };
        }
        match self.best_split(idx) {
            None => TreeNode::Leaf {
                label: majority(&counts),
            },
            Some((feature, threshold)) => {
                let (l, r): (Vec<usize>, Vec<usize>) = idx.iter().partition(|&&i| self.rows[i][feature] <= threshold);
                TreeNode::Split {
                    feature,
                    threshold,
                    left: Box::new(self.build(&l, depth + 1)),
                    right: Box::new(self.build(&r, depth + 1)),
                }
            }
        }
    }
}

impl DecisionTree {
    pub fn fit(rows: &[Vec<f64>], labels: &[u8], max_depth: usize, classes: usize) -> Result<Self> {
        if rows.is_empty() || rows.len() != labels.len() {
            return Err(Error::InvalidInput(format!(
                "tree needs matching non-empty rows and labels, got {} and {}",
                rows.len(),
                labels.len()
            )));
        }
        if labels.iter().any(|&l| l as usize >= classes) {
            return Err(Error::InvalidInput("label outside the class range".into()));
        }
        let b = Builder {
            rows,
            labels,
            classes,
            max_depth,
        };
        let idx: Vec<usize> = (0..rows.len()).collect();
        Ok(DecisionTree {
            max_depth,
            root: b.build(&idx, 0),
        })
    }

    pub fn predict(&self, x: &[f64]) -> u8 {
        let mut node = &self.root;
        loop {
            match node {
                TreeNode::Leaf { label } => return *label,
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => node = if x[*feature] <= *threshold { left } else { right },
            }
        }
    }

    pub fn predict_all(&self, rows: &[Vec<f64>]) -> Vec<u8> {
        rows.iter().map(|r| self.predict(r)).collect()
    }

    pub fn depth(&self) -> usize {
        fn d(n: &TreeNode) -> usize {
            match n {
                TreeNode::Leaf { .. } => 0,
                TreeNode::Split { left, right, .. } => 1 + d(left).max(d(right)),
            }
        }
        d(&self.root)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stump_on_separable_line() {
        let rows: Vec<Vec<f64>> = (-5..5).map(|i| vec![i as f64 + 0.5]).collect();
        let labels: Vec<u8> = rows.iter().map(|r| (r[0] > 0.0) as u8).collect();
        let t = DecisionTree::fit(&rows, &labels, 1, 5).unwrap();
        match &t.root {
            TreeNode::Split { threshold, .. } => assert!(threshold.abs() < 1e-12),
            leaf => panic!("expected a split, got {leaf:?}"),
        }
        assert_eq!(t.predict_all(&rows), labels);
    }

    #[test]
    fn depth_zero_is_majority() {
        let t = DecisionTree::fit(&[vec![0.0], vec![1.0], vec![2.0]], &[2, 1, 1], 0, 5).unwrap();
        assert_eq!(t.root, TreeNode::Leaf { label: 1 });
    }

    #[test]
    fn identical_rows_cannot_split() {
        let t = DecisionTree::fit(&[vec![1.0], vec![1.0]], &[0, 3], 5, 5).unwrap();
        assert_eq!(t.root, TreeNode::Leaf { label: 0 });
    }
}
