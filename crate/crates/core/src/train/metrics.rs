use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::ModeLabel;

const K: usize = ModeLabel::COUNT;

/// Confusion matrix (rows actual, columns predicted) and the rates derived
/// from it. A rate whose denominator is zero is reported as 0 and named in
/// `zero_denominators`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub n: usize,
    pub confusion: [[usize; K]; K],
    pub accuracy: f64,
    pub precision: [f64; K],
    pub recall: [f64; K],
    pub f_score: [f64; K],
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub macro_f_score: f64,
    pub zero_denominators: Vec<String>,
}

fn ratio(num: usize, den: usize, what: String, flags: &mut Vec<String>) -> f64 {
    if den == 0 {
        flags.push(what);
        0.0
    } else {
        num as f64 / den as f64
    }
}

impl EvalReport {
    pub fn from_predictions(actual: &[ModeLabel], predicted: &[ModeLabel]) -> Result<Self> {
        if actual.len() != predicted.len() {
            return Err(Error::Shape(format!(
                "{} labels but {} predictions",
                actual.len(),
                predicted.len()
            )));
        }
        let mut confusion = [[0; K]; K];
        for (a, p) in actual.iter().zip(predicted) {
            confusion[a.index()][p.index()] += 1;
        }
        Self::from_confusion(confusion)
    }

    pub fn from_confusion(confusion: [[usize; K]; K]) -> Result<Self> {
        let n: usize = confusion.iter().flatten().sum();
        if n == 0 {
            return Err(Error::InvalidInput("evaluation needs at least one sample".into()));
        }
        let trace: usize = (0..K).map(|k| confusion[k][k]).sum();
        let mut flags = Vec::new();
        let mut precision = [0.0; K];
        let mut recall = [0.0; K];
        let mut f_score = [0.0; K];
        for k in 0..K {
            let name = ModeLabel::ALL[k].name();
            let row: usize = confusion[k].iter().sum();
            let col: usize = (0..K).map(|r| confusion[r][k]).sum();
            precision[k] = ratio(confusion[k][k], col, format!("precision:{name}"), &mut flags);
            recall[k] = ratio(confusion[k][k], row, format!("recall:{name}"), &mut flags);
            let s = precision[k] + recall[k];
            f_score[k] = if s > 0.0 {
                2.0 * precision[k] * recall[k] / s
            } else {
                flags.push(format!("f_score:{name}"));
                0.0
            };
        }
        let mean = |v: &[f64; K]| v.iter().sum::<f64>() / K as f64;
        Ok(EvalReport {
            n,
            confusion,
            accuracy: trace as f64 / n as f64,
            macro_precision: mean(&precision),
            macro_recall: mean(&recall),
            macro_f_score: mean(&f_score),
            precision,
            recall,
            f_score,
            zero_denominators: flags,
        })
    }

    /// Confusion matrix with per-class recall and precision, as plain text.
    pub fn to_table(&self) -> String {
        let mut s = String::new();
        let _ = write!(s, "{:>10}", "actual\\pred");
        for m in ModeLabel::ALL {
            let _ = write!(s, "{:>9}", m.name());
        }
        let _ = writeln!(s, "{:>9}", "recall");
        for (k, m) in ModeLabel::ALL.iter().enumerate() {
            let _ = write!(s, "{:>11}", m.name());
            for v in self.confusion[k] {
                let _ = write!(s, "{v:>9}");
            }
            let _ = writeln!(s, "{:>8.1}%", 100.0 * self.recall[k]);
        }
        let _ = write!(s, "{:>11}", "precision");
        for p in self.precision {
            let _ = write!(s, "{:>8.1}%", 100.0 * p);
        }
        let _ = writeln!(s);
        let _ = writeln!(
            s,
            "accuracy {:.2}%  macro precision {:.2}%  macro recall {:.2}%  macro F {:.2}%  (n = {})",
            100.0 * self.accuracy,
            100.0 * self.macro_precision,
            100.0 * self.macro_recall,
            100.0 * self.macro_f_score,
            self.n
        );
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ModeLabel::*;

    #[test]
    fn perfect_predictions() {
        let labels = [Walk, Bike, Bus, Driving, Train, Walk];
        let r = EvalReport::from_predictions(&labels, &labels).unwrap();
        assert_eq!(r.accuracy, 1.0);
        assert_eq!(r.precision, [1.0; K]);
        assert_eq!(r.recall, [1.0; K]);
        assert_eq!(r.macro_f_score, 1.0);
        assert!(r.zero_denominators.is_empty());
    }

    #[test]
    fn walk_row_recall() {
        let mut c = [[0; K]; K];
        c[0] = [2014, 53, 40, 3, 2];
        for k in 1..K {
            c[k][k] = 10;
        }
        let r = EvalReport::from_confusion(c).unwrap();
        assert!((r.recall[0] - 2014.0 / 2112.0).abs() < 1e-12);
        assert!((r.recall[0] - 0.9536).abs() < 1e-4);
    }

    #[test]
    fn single_wrong_sample() {
        let r = EvalReport::from_predictions(&[Bus], &[Walk]).unwrap();
        assert_eq!(r.accuracy, 0.0);
        assert_eq!(r.recall[Bus.index()], 0.0);
        assert!(r.zero_denominators.contains(&"precision:bus".to_string()));
        assert_eq!(r.confusion.iter().flatten().sum::<usize>(), 1);
    }

    #[test]
    fn empty_is_error() {
        assert!(EvalReport::from_predictions(&[], &[]).is_err());
    }

    #[test]
    fn table_has_every_mode() {
        let r = EvalReport::from_predictions(&[Walk, Train], &[Walk, Bus]).unwrap();
        let t = r.to_table();
        for m in ModeLabel::ALL {
            assert!(t.contains(m.name()));
        }
        assert!(t.contains("accuracy 50.00%"));
    }
}
