//! Layers, loss, initialization and optimizer for small 1-D convolutional
//! classifiers. Arithmetic is f64; parameters are stored as f32 on disk.

mod adam;
mod init;
mod io;
mod layers;
mod loss;
mod network;
mod tensor;

pub use adam::{Adam, AdamConfig};
pub use init::{glorot_bound, glorot_init, init_layer};
pub use io::{
    decode_tmmd, encode_tmmd, read_tmmd, read_tmmd_file, write_tmmd, write_tmmd_file, TMMD_MAGIC, TMMD_VERSION,
};
pub use layers::{Conv1d, Dense, Dropout, Flatten, Layer, MaxPool, Relu};
pub use loss::{softmax, softmax_xent};
pub use network::Network;
pub use tensor::Tensor;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}

/// Activation shape of a single sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Shape {
    /// channels, length
    Seq(usize, usize),
    Flat(usize),
}

/// A parameter tensor and its accumulated gradient.
#[derive(Debug, Clone, PartialEq)]
pub struct Param {
    pub value: Vec<f64>,
    pub grad: Vec<f64>,
}

impl Param {
    pub fn zeros(n: usize) -> Self {
        Param {
            value: vec![0.0; n],
            grad: vec![0.0; n],
        }
    }
}
