use std::fs;
use std::path::{Path, PathBuf};

use rand::Rng as _;

use crate::error::{Error, Result};
use crate::nn::{read_tmmd_file, write_tmmd_file, Network, Tensor};
use crate::pipeline::Dataset;
use crate::seed::Rng;

/// `n` indices drawn uniformly with replacement.
pub fn bootstrap_indices(n: usize, rng: &mut Rng) -> Vec<usize> {
    (0..n).map(|_| rng.gen_range(0..n)).collect()
}

pub fn bootstrap_resample(train: &Dataset, rng: &mut Rng) -> Dataset {
    let idx = bootstrap_indices(train.len(), rng);
    let mut ds = train.subset(&idx, format!("bootstrap of {}", train.provenance));
    ds.features = None;
    ds
}

/// Element-wise mean of equally shaped probability tables.
pub fn average_probabilities(tables: &[Tensor]) -> Result<Tensor> {
    let first = tables
        .first()
        .ok_or_else(|| Error::InvalidInput("nothing to average".into()))?;
    let mut sum = Tensor::zeros(first.shape());
    for t in tables {
        if t.shape() != first.shape() {
            return Err(Error::Shape(format!(
                "probability tables {:?} and {:?}",
                first.shape(),
                t.shape()
            )));
        }
        for (s, v) in sum.data_mut().iter_mut().zip(t.data()) {
            *s += v;
        }
    }
    let n = tables.len() as f64;
    for s in sum.data_mut() {
        *s /= n;
    }
    Ok(sum)
}

/// Members with identical architecture whose probabilities are averaged.
#[derive(Debug, Clone)]
pub struct Ensemble {
    members: Vec<Network>,
}

impl Ensemble {
    pub fn new(members: Vec<Network>) -> Result<Self> {
        let first = members
            .first()
            .ok_or_else(|| Error::InvalidInput("an ensemble needs at least one member".into()))?;
        if let Some(i) = members.iter().position(|m| !m.same_architecture(first)) {
            return Err(Error::Shape(format!(
                "ensemble member {i} has a different architecture from member 0"
            )));
        }
        Ok(Ensemble { members })
    }

    pub fn members(&self) -> &[Network] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn input_len(&self) -> usize {
        self.members[0].input_len()
    }

    pub fn predict_proba(&self, x: &Tensor) -> Result<Tensor> {
        let tables = self
            .members
            .iter()
            .map(|m| m.predict_proba(x))
            .collect::<Result<Vec<_>>>()?;
        average_probabilities(&tables)
    }

    pub fn member_path(dir: &Path, i: usize) -> PathBuf {
        dir.join(format!("member_{i:02}.tmmd"))
    }

    /// One TMMD file per member.
    pub fn save_dir(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        self.members
            .iter()
            .enumerate()
            .map(|(i, m)| {
                let p = Self::member_path(dir, i);
                write_tmmd_file(&p, m)?;
                Ok(p)
            })
            .collect()
    }

    /// Loads `member_*.tmmd` in name order.
    pub fn load_dir(dir: &Path) -> Result<Self> {
        let mut paths: Vec<PathBuf> = fs::read_dir(dir)
            .map_err(|e| Error::io(dir, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| {
                p.file_name()
                    .and_then(|n| n.to_str())
                    .is_some_and(|n| n.starts_with("member_") && n.ends_with(".tmmd"))
            })
            .collect();
        paths.sort();
        if paths.is_empty() {
            return Err(Error::InvalidInput(format!(
                "no member_*.tmmd files in {}",
                dir.display()
            )));
        }
        let members = paths.iter().map(|p| read_tmmd_file(p)).collect::<Result<Vec<_>>>()?;
        Self::new(members)
    }
}
