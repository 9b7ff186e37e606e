//! Fixed-length four-channel samples and the `TMSG` dataset file.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! "TMSG"  u32 version=1  u32 n_samples  u32 channels=4  u32 M
//! per sample: u8 label  u32 valid_len  4*M f32 (channel-major)
//! ```
//!
//! Hand-crafted features, when present, travel in a sidecar next to the
//! dataset (`<file>.hcf`, one JSON object per sample, same order).

use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::features::HandcraftedFeatures;
use crate::ingest::ModeLabel;
use crate::seed;

pub const CHANNELS: usize = 4;
pub const TMSG_MAGIC: &[u8; 4] = b"TMSG";
pub const TMSG_VERSION: u32 = 1;

/// One sample: channel-major `[speed, accel, jerk, bearing_rate]`, each of
/// length `M`, zero beyond `valid_len`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelStack {
    data: Vec<f32>,
    segment_len: usize,
    pub label: ModeLabel,
    pub valid_len: usize,
}

impl ChannelStack {
    /// Build a sample from per-channel values; channels shorter than
    /// `segment_len` are zero-padded.
    pub fn from_channels(channels: [&[f64]; CHANNELS], segment_len: usize, label: ModeLabel) -> Result<Self> {
        let valid_len = channels[0].len();
        if channels.iter().any(|c| c.len() != valid_len) || valid_len > segment_len {
            return Err(Error::Shape(format!(
                "channel lengths {:?} do not fit segment length {segment_len}",
                channels.iter().map(|c| c.len()).collect::<Vec<_>>()
            )));
        }
        let mut data = vec![0.0f32; CHANNELS * segment_len];
        for (c, values) in channels.iter().enumerate() {
            for (i, &v) in values.iter().enumerate() {
                if !v.is_finite() {
                    return Err(Error::NonFinite(format!("channel {c} of a sample")));
                }
                data[c * segment_len + i] = v as f32;
            }
        }
        Ok(ChannelStack {
            data,
            segment_len,
            label,
            valid_len,
        })
    }

    pub fn from_raw(data: Vec<f32>, segment_len: usize, label: ModeLabel, valid_len: usize) -> Result<Self> {
        if data.len() != CHANNELS * segment_len || valid_len > segment_len {
            return Err(Error::Shape(format!(
                "{} values for 4x{segment_len} sample (valid_len {valid_len})",
                data.len()
            )));
        }
        Ok(ChannelStack {
            data,
            segment_len,
            label,
            valid_len,
        })
    }

    pub fn segment_len(&self) -> usize {
        self.segment_len
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn channel(&self, c: usize) -> &[f32] {
        &self.data[c * self.segment_len..(c + 1) * self.segment_len]
    }

    /// True when the shape is 4xM, every value is finite, and the padding
    /// region is zero in all channels.
    pub fn is_well_formed(&self) -> bool {
        self.data.len() == CHANNELS * self.segment_len
            && self.valid_len <= self.segment_len
            && self.data.iter().all(|v| v.is_finite())
            && (0..CHANNELS).all(|c| self.channel(c)[self.valid_len..].iter().all(|&v| v == 0.0))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub segment_len: usize,
    pub samples: Vec<ChannelStack>,
    pub provenance: String,
    /// Per-sample hand-crafted features, aligned with `samples`.
    pub features: Option<Vec<HandcraftedFeatures>>,
}

impl Dataset {
    pub fn new(segment_len: usize, provenance: impl Into<String>) -> Self {
        Dataset {
            segment_len,
            samples: Vec::new(),
            provenance: provenance.into(),
            features: None,
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn labels(&self) -> Vec<ModeLabel> {
        self.samples.iter().map(|s| s.label).collect()
    }

    pub fn class_counts(&self) -> [usize; ModeLabel::COUNT] {
        let mut counts = [0; ModeLabel::COUNT];
        for s in &self.samples {
            counts[s.label.index()] += 1;
        }
        counts
    }

    /// Samples at `indices`, in the given order.
    pub fn subset(&self, indices: &[usize], provenance: impl Into<String>) -> Dataset {
        Dataset {
            segment_len: self.segment_len,
            samples: indices.iter().map(|&i| self.samples[i].clone()).collect(),
            provenance: provenance.into(),
            features: self
                .features
                .as_ref()
                .map(|f| indices.iter().map(|&i| f[i].clone()).collect()),
        }
    }

    pub fn concat(&mut self, other: Dataset) -> Result<()> {
        if other.segment_len != self.segment_len {
            return Err(Error::Shape(format!(
                "segment length {} vs {}",
                other.segment_len, self.segment_len
            )));
        }
        self.features = match (self.features.take(), other.features) {
            (Some(mut a), Some(b)) => {
                a.extend(b);
                Some(a)
            }
            (None, Some(b)) if self.samples.is_empty() => Some(b),
            _ => None,
        };
        self.samples.extend(other.samples);
        Ok(())
    }
}

/// Uniform random split at sample level. Both halves keep the original
/// sample order.
pub fn split_train_test(dataset: &Dataset, frac: f64, seed_value: u64) -> Result<(Dataset, Dataset)> {
    if dataset.is_empty() {
        return Err(Error::InvalidInput("cannot split an empty dataset".into()));
    }
    if !(0.0..=1.0).contains(&frac) {
        return Err(Error::InvalidInput(format!("split fraction {frac} outside [0, 1]")));
    }
    let n = dataset.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut seed::rng(seed_value, seed::stream::SPLIT, 0));
    let n_train = ((frac * n as f64).round() as usize).min(n);
    let mut train_idx = order[..n_train].to_vec();
    let mut test_idx = order[n_train..].to_vec();
    train_idx.sort_unstable();
    test_idx.sort_unstable();
    Ok((
        dataset.subset(
            &train_idx,
            format!("{} [train {frac} seed {seed_value}]", dataset.provenance),
        ),
        dataset.subset(
            &test_idx,
            format!("{} [test {frac} seed {seed_value}]", dataset.provenance),
        ),
    ))
}

pub fn write_tmsg<W: Write>(out: W, dataset: &Dataset) -> Result<()> {
    let mut out = BufWriter::new(out);
    let m = dataset.segment_len;
    out.write_all(TMSG_MAGIC)?;
    for v in [TMSG_VERSION, dataset.len() as u32, CHANNELS as u32, m as u32] {
        out.write_all(&v.to_le_bytes())?;
    }
    for s in &dataset.samples {
        if s.segment_len() != m {
            return Err(Error::Shape(format!(
                "sample of length {} in a dataset of length {m}",
                s.segment_len()
            )));
        }
        out.write_all(&[s.label.code()])?;
        out.write_all(&(s.valid_len as u32).to_le_bytes())?;
        for v in s.data() {
            out.write_all(&v.to_le_bytes())?;
        }
    }
    out.flush()?;
    Ok(())
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut buf = [0u8; 4];
    r.read_exact(&mut buf)
        .map_err(|e| Error::Format(format!("truncated dataset: {e}")))?;
    Ok(u32::from_le_bytes(buf))
}

pub fn read_tmsg<R: Read>(input: R) -> Result<Dataset> {
    let mut r = BufReader::new(input);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)
        .map_err(|_| Error::Format("file too short for a dataset header".into()))?;
    if &magic != TMSG_MAGIC {
        return Err(Error::Format(format!("bad dataset magic {magic:?}, expected \"TMSG\"")));
    }
    let version = read_u32(&mut r)?;
    if version != TMSG_VERSION {
        return Err(Error::Format(format!("unsupported dataset version {version}")));
    }
    let n = read_u32(&mut r)? as usize;
    let channels = read_u32(&mut r)? as usize;
    if channels != CHANNELS {
        return Err(Error::Format(format!("expected 4 channels, found {channels}")));
    }
    let m = read_u32(&mut r)? as usize;
    let mut ds = Dataset::new(m, "");
    ds.samples.reserve(n);
    let mut raw = vec![0u8; CHANNELS * m * 4];
    for i in 0..n {
        let mut label = [0u8; 1];
        r.read_exact(&mut label)
            .map_err(|_| Error::Format(format!("truncated dataset at sample {i}")))?;
        let label = ModeLabel::from_code(label[0])
            .ok_or_else(|| Error::Format(format!("label code {} out of range", label[0])))?;
        let valid_len = read_u32(&mut r)? as usize;
        r.read_exact(&mut raw)
            .map_err(|_| Error::Format(format!("truncated dataset at sample {i}")))?;
        let data = raw
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
            .collect();
        ds.samples.push(ChannelStack::from_raw(data, m, label, valid_len)?);
    }
    let mut trailing = [0u8; 1];
    if r.read(&mut trailing)? != 0 {
        return Err(Error::Format("trailing bytes after the last sample".into()));
    }
    Ok(ds)
}

pub fn features_sidecar(path: &Path) -> PathBuf {
    let mut name = path.as_os_str().to_owned();
    name.push(".hcf");
    PathBuf::from(name)
}

/// Write the dataset and, if it carries features, the `.hcf` sidecar.
pub fn write_dataset_file(path: &Path, dataset: &Dataset) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_tmsg(file, dataset)?;
    let sidecar = features_sidecar(path);
    match &dataset.features {
        Some(features) => {
            let file = fs::File::create(&sidecar).map_err(|e| Error::io(&sidecar, e))?;
            let mut out = BufWriter::new(file);
            for f in features {
                serde_json::to_writer(&mut out, f)?;
                out.write_all(b"\n")?;
            }
            out.flush()?;
        }
        None if sidecar.exists() => {
            fs::remove_file(&sidecar).map_err(|e| Error::io(&sidecar, e))?;
        }
        None => {}
    }
    Ok(())
}

pub fn read_dataset_file(path: &Path) -> Result<Dataset> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut ds = read_tmsg(file)?;
    ds.provenance = path.display().to_string();
    let sidecar = features_sidecar(path);
    if sidecar.is_file() {
        let file = fs::File::open(&sidecar).map_err(|e| Error::io(&sidecar, e))?;
        let features = BufReader::new(file)
            .lines()
            .filter(|l| l.as_ref().map(|l| !l.trim().is_empty()).unwrap_or(true))
            .map(|l| Ok(serde_json::from_str(&l?)?))
            .collect::<Result<Vec<HandcraftedFeatures>>>()?;
        if features.len() != ds.len() {
            return Err(Error::Format(format!(
                "feature sidecar has {} rows for {} samples",
                features.len(),
                ds.len()
            )));
        }
        ds.features = Some(features);
    }
    Ok(ds)
}
