//! The nine reference architectures A–I and bagged ensembles of them.
//!
//! Every stack is built from the same grammar: groups of two width-3
//! convolutions (each followed by ReLU), optionally max-pooling and dropout
//! after a group, then up to two hidden fully connected layers and a final
//! dense layer with one output per class. A hidden FC layer has a quarter
//! of the units of the layer feeding it (floor division).

mod ensemble;

pub use ensemble::{average_probabilities, bootstrap_indices, bootstrap_resample, Ensemble};

use rand::SeedableRng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::ModeLabel;
use crate::nn::{Conv1d, Dense, Layer, Network, Shape, Tensor};
use crate::pipeline::{ChannelStack, CHANNELS};
use crate::seed::Rng;

pub const CONFIG_NAMES: [&str; 9] = ["A", "B", "C", "D", "E", "F", "G", "H", "I"];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum LayerSpec {
    Conv { filters: usize, kernel: usize },
    Relu,
    Pool { width: usize, stride: usize },
    Dropout { p: f64 },
    Flatten,
    Dense { units: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkSpec {
    pub name: String,
    pub in_channels: usize,
    pub segment_len: usize,
    pub layers: Vec<LayerSpec>,
}

/// Knobs shared by all configurations. The defaults give the reference
/// stacks for 200-point segments.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZooOptions {
    pub segment_len: usize,
    /// Filter counts of the four convolution groups.
    pub filters: [usize; 4],
    pub kernel: usize,
    pub pool_width: usize,
    pub pool_stride: usize,
    /// Dropout after convolution groups.
    pub p_conv: f64,
    /// Dropout after hidden FC layers.
    pub p_fc: f64,
    pub num_classes: usize,
}

impl Default for ZooOptions {
    fn default() -> Self {
        ZooOptions {
            segment_len: 200,
            filters: [32, 64, 128, 256],
            kernel: 3,
            pool_width: 2,
            pool_stride: 2,
            p_conv: 0.5,
            p_fc: 0.5,
            num_classes: ModeLabel::COUNT,
        }
    }
}

/// Which optional parts of the grammar a configuration uses.
struct Pattern {
    groups: usize,
    pool: bool,
    /// dropout after each of the first three groups
    group_dropout: [bool; 3],
    /// fourth group (never pooled)
    extra_group: bool,
    hidden_fc: usize,
    fc_dropout: bool,
}

fn pattern(name: &str) -> Option<Pattern> {
    let p = |groups, pool, group_dropout, extra_group, hidden_fc, fc_dropout| Pattern {
        groups,
        pool,
        group_dropout,
        extra_group,
        hidden_fc,
        fc_dropout,
    };
    let none = [false; 3];
    let last = [false, false, true];
    Some(match name {
        "A" => p(1, false, none, false, 0, false),
        "B" => p(2, false, none, false, 0, false),
        "C" => p(3, false, none, false, 0, false),
        "D" => p(3, false, none, false, 1, false),
        "E" => p(3, true, none, false, 1, false),
        "F" => p(3, true, [true; 3], false, 1, true),
        "G" => p(3, true, last, false, 1, true),
        "H" => p(3, true, last, true, 1, true),
        "I" => p(3, true, last, false, 2, true),
        _ => return None,
    })
}

pub fn build_config(name: &str, opts: &ZooOptions) -> Result<NetworkSpec> {
    let pat = pattern(name).ok_or_else(|| Error::UnknownConfig {
        name: name.to_string(),
        valid: CONFIG_NAMES.join(", "),
    })?;
    let mut layers = Vec::new();
    let conv_pair = |layers: &mut Vec<LayerSpec>, filters| {
        for _ in 0..2 {
            layers.push(LayerSpec::Conv {
                filters,
                kernel: opts.kernel,
            });
            layers.push(LayerSpec::Relu);
        }
    };
    for g in 0..pat.groups {
        conv_pair(&mut layers, opts.filters[g]);
        if pat.pool {
            layers.push(LayerSpec::Pool {
                width: opts.pool_width,
                stride: opts.pool_stride,
            });
        }
        if pat.group_dropout[g] {
            layers.push(LayerSpec::Dropout { p: opts.p_conv });
        }
    }
    if pat.extra_group {
        conv_pair(&mut layers, opts.filters[3]);
    }
    layers.push(LayerSpec::Flatten);
    let mut spec = NetworkSpec {
        name: name.to_string(),
        in_channels: CHANNELS,
        segment_len: opts.segment_len,
        layers,
    };
    for _ in 0..pat.hidden_fc {
        let width = match spec.output_shape()? {
            Shape::Flat(f) => f / 4,
            s => unreachable!("flatten produced {s:?}"),
        };
        if width == 0 {
            return Err(Error::Shape(format!(
                "segment length {} too short for {name}",
                opts.segment_len
            )));
        }
        spec.layers.push(LayerSpec::Dense { units: width });
        spec.layers.push(LayerSpec::Relu);
        if pat.fc_dropout {
            spec.layers.push(LayerSpec::Dropout { p: opts.p_fc });
        }
    }
    spec.layers.push(LayerSpec::Dense {
        units: opts.num_classes,
    });
    spec.shapes()?;
    Ok(spec)
}

impl NetworkSpec {
    /// Shape after every layer, starting with the input. Purely symbolic;
    /// nothing is allocated.
    pub fn shapes(&self) -> Result<Vec<Shape>> {
        let mut shapes = vec![Shape::Seq(self.in_channels, self.segment_len)];
        for (i, layer) in self.layers.iter().enumerate() {
            let cur = *shapes.last().unwrap();
            let bad = || Error::Shape(format!("{}: layer {i} ({layer:?}) cannot take {cur:?}", self.name));
            let next = match (*layer, cur) {
                (LayerSpec::Conv { filters, .. }, Shape::Seq(_, l)) => Shape::Seq(filters, l),
                (LayerSpec::Relu | LayerSpec::Dropout { .. }, s) => s,
                (LayerSpec::Pool { width, stride }, Shape::Seq(c, l)) if l >= width && stride > 0 => {
                    Shape::Seq(c, (l - width) / stride + 1)
                }
                (LayerSpec::Flatten, Shape::Seq(c, l)) => Shape::Flat(c * l),
                (LayerSpec::Dense { units }, Shape::Flat(_)) => Shape::Flat(units),
                _ => return Err(bad()),
            };
            shapes.push(next);
        }
        Ok(shapes)
    }

    pub fn output_shape(&self) -> Result<Shape> {
        Ok(*self.shapes()?.last().unwrap())
    }

    /// Widths of the dense layers before the output layer.
    pub fn hidden_widths(&self) -> Vec<usize> {
        let mut w: Vec<usize> = self
            .layers
            .iter()
            .filter_map(|l| match l {
                LayerSpec::Dense { units } => Some(*units),
                _ => None,
            })
            .collect();
        w.pop();
        w
    }

    pub fn param_count(&self) -> Result<usize> {
        let shapes = self.shapes()?;
        Ok(self
            .layers
            .iter()
            .zip(&shapes)
            .map(|(layer, input)| match (layer, input) {
                (LayerSpec::Conv { filters, kernel }, Shape::Seq(c, _)) => filters * c * kernel + filters,
                (LayerSpec::Dense { units }, Shape::Flat(f)) => units * f + units,
                _ => 0,
            })
            .sum())
    }

    /// Concrete network with zero parameters.
    pub fn build_zeroed(&self) -> Result<Network> {
        let shapes = self.shapes()?;
        let layers = self
            .layers
            .iter()
            .zip(&shapes)
            .map(|(layer, input)| match (*layer, *input) {
                (LayerSpec::Conv { filters, kernel }, Shape::Seq(c, _)) => {
                    Layer::Conv1d(Conv1d::new(c, filters, kernel))
                }
                (LayerSpec::Relu, _) => Layer::relu(),
                (LayerSpec::Pool { width, stride }, _) => Layer::max_pool(width, stride),
                (LayerSpec::Dropout { p }, _) => Layer::dropout(p),
                (LayerSpec::Flatten, _) => Layer::flatten(),
                (LayerSpec::Dense { units }, Shape::Flat(f)) => Layer::Dense(Dense::new(f, units)),
                _ => unreachable!("shapes() validated the stack"),
            })
            .collect();
        Network::new(self.in_channels, self.segment_len, layers)
    }

    /// Glorot-initialized network.
    pub fn build(&self, rng: &mut Rng) -> Result<Network> {
        let mut net = self.build_zeroed()?;
        net.init(rng);
        Ok(net)
    }

    pub fn build_seeded(&self, seed: u64) -> Result<Network> {
        self.build(&mut Rng::seed_from_u64(seed))
    }
}

/// Stack samples into a (B, 4, M) input tensor.
pub fn stack_batch(samples: &[&ChannelStack]) -> Result<Tensor> {
    let m = samples.first().map_or(0, |s| s.segment_len());
    let mut data = Vec::with_capacity(samples.len() * CHANNELS * m);
    for s in samples {
        if s.segment_len() != m {
            return Err(Error::Shape("samples of different lengths in one batch".into()));
        }
        data.extend(s.data().iter().map(|&v| v as f64));
    }
    Tensor::new(vec![samples.len(), CHANNELS, m], data)
}

/// Class probabilities (B, K) in evaluation mode.
pub fn forward_full(net: &Network, batch: &Tensor) -> Result<Tensor> {
    net.predict_proba(batch)
}

/// Index of the largest entry; ties go to the lowest index.
pub fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate() {
        if v > row[best] {
            best = i;
        }
    }
    best
}
