//! TMMD model files.
//!
//! ```text
//! "TMMD" | u32 version | u32 n_layers | layer* | u32 crc32
//! layer: u8 kind, then
//!   0 conv1d   u32 out, u32 in, u32 kernel, f32 weight[out·in·kernel], f32 bias[out]
//!   1 relu
//!   2 maxpool  u32 width, u32 stride
//!   3 dropout  f32 p
//!   4 flatten
//!   5 dense    u32 out, u32 in, f32 weight[out·in], f32 bias[out]
//! ```
//!
//! Little-endian throughout. The CRC-32 covers every byte before it. The
//! input length is not stored; it is recovered from the first dense layer
//! by walking the pooling layers backwards.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use super::{Conv1d, Dense, Layer, Network};
use crate::error::{Error, Result};
use crate::pipeline::CHANNELS;

pub const TMMD_MAGIC: &[u8; 4] = b"TMMD";
pub const TMMD_VERSION: u32 = 1;

const CONV: u8 = 0;
const RELU: u8 = 1;
const MAXPOOL: u8 = 2;
const DROPOUT: u8 = 3;
const FLATTEN: u8 = 4;
const DENSE: u8 = 5;

fn put_u32(buf: &mut Vec<u8>, v: usize) {
    buf.extend_from_slice(&(v as u32).to_le_bytes());
}

fn put_f32s(buf: &mut Vec<u8>, vs: &[f64]) {
    for &v in vs {
        buf.extend_from_slice(&(v as f32).to_le_bytes());
    }
}

pub fn encode_tmmd(net: &Network) -> Vec<u8> {
    let mut buf = Vec::new();
    buf.extend_from_slice(TMMD_MAGIC);
    put_u32(&mut buf, TMMD_VERSION as usize);
    put_u32(&mut buf, net.layers().len());
    for layer in net.layers() {
        match layer {
            Layer::Conv1d(c) => {
                buf.push(CONV);
                put_u32(&mut buf, c.out_channels);
                put_u32(&mut buf, c.in_channels);
                put_u32(&mut buf, c.kernel);
                put_f32s(&mut buf, &c.weight.value);
                put_f32s(&mut buf, &c.bias.value);
            }
            Layer::Relu(_) => buf.push(RELU),
            Layer::MaxPool(p) => {
                buf.push(MAXPOOL);
                put_u32(&mut buf, p.width);
                put_u32(&mut buf, p.stride);
            }
            Layer::Dropout(d) => {
                buf.push(DROPOUT);
                put_f32s(&mut buf, &[d.p]);
            }
            Layer::Flatten(_) => buf.push(FLATTEN),
            Layer::Dense(d) => {
                buf.push(DENSE);
                put_u32(&mut buf, d.outputs);
                put_u32(&mut buf, d.inputs);
                put_f32s(&mut buf, &d.weight.value);
                put_f32s(&mut buf, &d.bias.value);
            }
        }
    }
    let crc = crc32fast::hash(&buf);
    buf.extend_from_slice(&crc.to_le_bytes());
    buf
}

pub fn write_tmmd<W: Write>(mut out: W, net: &Network) -> Result<()> {
    out.write_all(&encode_tmmd(net))?;
    out.flush()?;
    Ok(())
}

pub fn write_tmmd_file(path: &Path, net: &Network) -> Result<()> {
    fs::write(path, encode_tmmd(net)).map_err(|e| Error::io(path, e))
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.buf.len() - self.pos < n {
            return Err(Error::Format("truncated model file".into()));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<usize> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()) as usize)
    }

    fn f32s(&mut self, n: usize) -> Result<Vec<f64>> {
        let bytes = self.take(
            n.checked_mul(4)
                .ok_or_else(|| Error::Format("layer too large".into()))?,
        )?;
        let vals: Vec<f64> = bytes
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes(b.try_into().unwrap()) as f64)
            .collect();
        if vals.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("model parameters".into()));
        }
        Ok(vals)
    }
}

pub fn decode_tmmd(bytes: &[u8]) -> Result<Network> {
    if bytes.len() < 16 || &bytes[..4] != TMMD_MAGIC {
        return Err(Error::Format("not a TMMD model file (bad magic)".into()));
    }
    let (payload, tail) = bytes.split_at(bytes.len() - 4);
    let stored = u32::from_le_bytes(tail.try_into().unwrap());
    if crc32fast::hash(payload) != stored {
        return Err(Error::Format("model file checksum mismatch".into()));
    }
    let mut cur = Cursor { buf: payload, pos: 4 };
    let version = cur.u32()?;
    if version != TMMD_VERSION as usize {
        return Err(Error::Format(format!("unsupported TMMD version {version}")));
    }
    let n_layers = cur.u32()?;
    let mut layers = Vec::with_capacity(n_layers.min(1024));
    for _ in 0..n_layers {
        let layer = match cur.u8()? {
            CONV => {
                let (out, inp, k) = (cur.u32()?, cur.u32()?, cur.u32()?);
                if k % 2 == 0 {
                    return Err(Error::Format(format!("conv kernel width {k} is not odd")));
                }
                let mut c = Conv1d::new(inp, out, k);
                c.weight.value = cur.f32s(out * inp * k)?;
                c.bias.value = cur.f32s(out)?;
                Layer::Conv1d(c)
            }
            RELU => Layer::relu(),
            MAXPOOL => {
                let (w, s) = (cur.u32()?, cur.u32()?);
                if w == 0 || s == 0 {
                    return Err(Error::Format("max-pool width and stride must be positive".into()));
                }
                Layer::max_pool(w, s)
            }
            DROPOUT => {
                let p = cur.f32s(1)?[0];
                if !(0.0..1.0).contains(&p) {
                    return Err(Error::Format(format!("dropout p {p} outside [0, 1)")));
                }
                Layer::dropout(p)
            }
            FLATTEN => Layer::flatten(),
            DENSE => {
                let (out, inp) = (cur.u32()?, cur.u32()?);
                let mut d = Dense::new(inp, out);
                d.weight.value = cur.f32s(out * inp)?;
                d.bias.value = cur.f32s(out)?;
                Layer::Dense(d)
            }
            k => return Err(Error::Format(format!("unknown layer kind {k}"))),
        };
        layers.push(layer);
    }
    if cur.pos != payload.len() {
        return Err(Error::Format("trailing bytes after the last layer".into()));
    }
    let in_channels = layers
        .iter()
        .find_map(|l| match l {
            Layer::Conv1d(c) => Some(c.in_channels),
            _ => None,
        })
        .unwrap_or(CHANNELS);
    let input_len = infer_input_len(&layers, in_channels)?;
    Network::new(in_channels, input_len, layers)
}

/// Smallest input length consistent with the first dense layer's fan-in.
fn infer_input_len(layers: &[Layer], in_channels: usize) -> Result<usize> {
    let flat_at = layers
        .iter()
        .position(|l| matches!(l, Layer::Flatten(_)))
        .ok_or_else(|| Error::Format("model has no flatten layer".into()))?;
    let fan_in = match layers[flat_at + 1..].iter().find(|l| matches!(l, Layer::Dense(_))) {
        Some(Layer::Dense(d)) => d.inputs,
        _ => return Err(Error::Format("model has no dense layer after flatten".into())),
    };
    let channels = layers[..flat_at]
        .iter()
        .rev()
        .find_map(|l| match l {
            Layer::Conv1d(c) => Some(c.out_channels),
            _ => None,
        })
        .unwrap_or(in_channels);
    if channels == 0 || fan_in % channels != 0 {
        return Err(Error::Format(format!(
            "dense fan-in {fan_in} is not a multiple of {channels} channels"
        )));
    }
    let mut len = fan_in / channels;
    for layer in layers[..flat_at].iter().rev() {
        if let Layer::MaxPool(p) = layer {
            len = (len - 1) * p.stride + p.width;
        }
    }
    Ok(len)
}

pub fn read_tmmd<R: Read>(mut input: R) -> Result<Network> {
    let mut bytes = Vec::new();
    input.read_to_end(&mut bytes)?;
    decode_tmmd(&bytes)
}

pub fn read_tmmd_file(path: &Path) -> Result<Network> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_tmmd(&bytes)
}
