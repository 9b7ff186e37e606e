use rand::Rng as _;

use super::{Mode, Param, Shape, Tensor};
use crate::error::{Error, Result};
use crate::seed::Rng;

/// Valid output range `lo..hi` for a shifted read `x[i + offset]` over a
/// row of length `l`.
fn shifted_range(l: usize, offset: isize) -> (usize, usize) {
    let lo = (-offset).max(0) as usize;
    let hi = (l as isize - offset).clamp(0, l as isize) as usize;
    (lo, hi.max(lo))
}

/// 1-D convolution, stride 1, zero "same" padding (odd kernel width).
#[derive(Debug, Clone, PartialEq)]
pub struct Conv1d {
    pub in_channels: usize,
    pub out_channels: usize,
    pub kernel: usize,
    /// (out, in, kernel), row-major
    pub weight: Param,
    pub bias: Param,
    input: Option<Tensor>,
}

impl Conv1d {
    /// Zero-initialized; see [`super::glorot_init`].
    pub fn new(in_channels: usize, out_channels: usize, kernel: usize) -> Self {
        assert!(kernel % 2 == 1, "same padding needs an odd kernel width");
        Conv1d {
            in_channels,
            out_channels,
            kernel,
            weight: Param::zeros(out_channels * in_channels * kernel),
            bias: Param::zeros(out_channels),
            input: None,
        }
    }

    fn padding(&self) -> isize {
        (self.kernel / 2) as isize
    }

    fn check(&self, x: &Tensor) -> Result<(usize, usize, usize)> {
        let (b, c, l) = x.dims3()?;
        if c != self.in_channels {
            return Err(Error::Shape(format!(
                "conv1d expects {} input channels, got {c}",
                self.in_channels
            )));
        }
        Ok((b, c, l))
    }

    fn apply(&self, x: &Tensor) -> Result<Tensor> {
        let (b, c, l) = self.check(x)?;
        let (d, k, p) = (self.out_channels, self.kernel, self.padding());
        let mut out = Tensor::zeros(&[b, d, l]);
        let xs = x.data();
        let w = &self.weight.value;
        for (bi, out_b) in out.data_mut().chunks_mut(d * l).enumerate() {
            for (di, row) in out_b.chunks_mut(l).enumerate() {
                row.fill(self.bias.value[di]);
                for ci in 0..c {
                    let xrow = &xs[(bi * c + ci) * l..(bi * c + ci + 1) * l];
                    for kk in 0..k {
                        let wv = w[(di * c + ci) * k + kk];
                        let off = kk as isize - p;
                        let (lo, hi) = shifted_range(l, off);
                        let src = &xrow[(lo as isize + off) as usize..(hi as isize + off) as usize];
                        for (o, &xv) in row[lo..hi].iter_mut().zip(src) {
                            *o += wv * xv;
                        }
                    }
                }
            }
        }
        Ok(out)
    }

    fn backward(&mut self, dout: &Tensor) -> Result<Tensor> {
        let x = self.input.as_ref().ok_or_else(no_forward)?;
        let (b, c, l) = x.dims3()?;
        let (d, k, p) = (self.out_channels, self.kernel, self.padding());
        if dout.shape() != [b, d, l] {
            return Err(Error::Shape(format!(
                "conv1d gradient shape {:?}, expected {:?}",
                dout.shape(),
                [b, d, l]
            )));
        }
        let mut dx = Tensor::zeros(&[b, c, l]);
        let (xs, gs) = (x.data(), dout.data());
        for bi in 0..b {
            for di in 0..d {
                let grow = &gs[(bi * d + di) * l..(bi * d + di + 1) * l];
                self.bias.grad[di] += grow.iter().sum::<f64>();
                for ci in 0..c {
                    let base = (bi * c + ci) * l;
                    let xrow = &xs[base..base + l];
                    let dxrow = &mut dx.data_mut()[base..base + l];
                    for kk in 0..k {
                        let widx = (di * c + ci) * k + kk;
                        let wv = self.weight.value[widx];
                        let off = kk as isize - p;
                        let (lo, hi) = shifted_range(l, off);
                        let s = (lo as isize + off) as usize;
                        let e = (hi as isize + off) as usize;
                        let mut acc = 0.0;
                        for ((&g, &xv), dxv) in grow[lo..hi].iter().zip(&xrow[s..e]).zip(&mut dxrow[s..e]) {
                            acc += g * xv;
                            *dxv += wv * g;
                        }
                        self.weight.grad[widx] += acc;
                    }
                }
            }
        }
        Ok(dx)
    }
}

/// Fully connected layer on (B, F) input.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub inputs: usize,
    pub outputs: usize,
    /// (out, in), row-major
    pub weight: Param,
    pub bias: Param,
    input: Option<Tensor>,
}

impl Dense {
    pub fn new(inputs: usize, outputs: usize) -> Self {
        Dense {
            inputs,
            outputs,
            weight: Param::zeros(inputs * outputs),
            bias: Param::zeros(outputs),
            input: None,
        }
    }

    fn apply(&self, x: &Tensor) -> Result<Tensor> {
        let (b, f) = x.dims2()?;
        if f != self.inputs {
            return Err(Error::Shape(format!("dense expects {} inputs, got {f}", self.inputs)));
        }
        let o = self.outputs;
        let mut out = Tensor::zeros(&[b, o]);
        for (bi, orow) in out.data_mut().chunks_mut(o).enumerate() {
            let xrow = x.row(bi);
            for (oi, ov) in orow.iter_mut().enumerate() {
                let wrow = &self.weight.value[oi * f..(oi + 1) * f];
                *ov = self.bias.value[oi] + wrow.iter().zip(xrow).map(|(w, x)| w * x).sum::<f64>();
            }
        }
        Ok(out)
    }

    fn backward(&mut self, dout: &Tensor) -> Result<Tensor> {
        let x = self.input.as_ref().ok_or_else(no_forward)?;
        let (b, f) = x.dims2()?;
        let o = self.outputs;
        if dout.shape() != [b, o] {
            return Err(Error::Shape(format!(
                "dense gradient shape {:?}, expected {:?}",
                dout.shape(),
                [b, o]
            )));
        }
        let mut dx = Tensor::zeros(&[b, f]);
        for bi in 0..b {
            let xrow = x.row(bi);
            let grow = dout.row(bi);
            let dxrow = &mut dx.data_mut()[bi * f..(bi + 1) * f];
            for (oi, &g) in grow.iter().enumerate() {
                self.bias.grad[oi] += g;
                let wrow = &self.weight.value[oi * f..(oi + 1) * f];
                let gwrow = &mut self.weight.grad[oi * f..(oi + 1) * f];
                for j in 0..f {
                    gwrow[j] += g * xrow[j];
                    dxrow[j] += g * wrow[j];
                }
            }
        }
        Ok(dx)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Relu {
    input: Option<Tensor>,
}

/// Non-overlapping by default (width 2, stride 2). Trailing elements that
/// do not fill a window are dropped; ties go to the first index.
#[derive(Debug, Clone, PartialEq)]
pub struct MaxPool {
    pub width: usize,
    pub stride: usize,
    input: Option<Tensor>,
}

impl MaxPool {
    pub fn output_len(&self, l: usize) -> Result<usize> {
        if l < self.width {
            return Err(Error::Shape(format!(
                "max-pool width {} exceeds length {l}",
                self.width
            )));
        }
        Ok((l - self.width) / self.stride + 1)
    }

    fn argmax(&self, row: &[f64], j: usize) -> usize {
        let start = j * self.stride;
        let mut best = start;
        for i in start + 1..start + self.width {
            if row[i] > row[best] {
                best = i;
            }
        }
        best
    }

    fn apply(&self, x: &Tensor) -> Result<Tensor> {
        let (b, c, l) = x.dims3()?;
        let lo = self.output_len(l)?;
        let mut out = Tensor::zeros(&[b, c, lo]);
        for (row, orow) in x.data().chunks(l).zip(out.data_mut().chunks_mut(lo)) {
            for (j, o) in orow.iter_mut().enumerate() {
                *o = row[self.argmax(row, j)];
            }
        }
        Ok(out)
    }

    fn backward(&mut self, dout: &Tensor) -> Result<Tensor> {
        let x = self.input.as_ref().ok_or_else(no_forward)?;
        let (b, c, l) = x.dims3()?;
        let lo = self.output_len(l)?;
        if dout.shape() != [b, c, lo] {
            return Err(Error::Shape(format!(
                "max-pool gradient shape {:?}, expected {:?}",
                dout.shape(),
                [b, c, lo]
            )));
        }
        let mut dx = Tensor::zeros(&[b, c, l]);
        for ((row, grow), dxrow) in x
            .data()
            .chunks(l)
            .zip(dout.data().chunks(lo))
            .zip(dx.data_mut().chunks_mut(l))
        {
            for (j, &g) in grow.iter().enumerate() {
                dxrow[self.argmax(row, j)] += g;
            }
        }
        Ok(dx)
    }
}

/// Inverted dropout: in training, units are zeroed with probability `p` and
/// survivors scaled by 1/(1−p); evaluation is the identity.
#[derive(Debug, Clone, PartialEq)]
pub struct Dropout {
    pub p: f64,
    mask: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Flatten {
    input_shape: Option<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Layer {
    Conv1d(Conv1d),
    Relu(Relu),
    MaxPool(MaxPool),
    Dropout(Dropout),
    Flatten(Flatten),
    Dense(Dense),
}

fn no_forward() -> Error {
    Error::InvalidInput("backward called before forward".into())
}

impl Layer {
    pub fn relu() -> Self {
        Layer::Relu(Relu::default())
    }

    pub fn max_pool(width: usize, stride: usize) -> Self {
        assert!(width >= 1 && stride >= 1);
        Layer::MaxPool(MaxPool {
            width,
            stride,
            input: None,
        })
    }

    pub fn dropout(p: f64) -> Self {
        assert!((0.0..1.0).contains(&p), "dropout p must be in [0, 1), got {p}");
        Layer::Dropout(Dropout { p, mask: None })
    }

    pub fn flatten() -> Self {
        Layer::Flatten(Flatten::default())
    }

    pub fn name(&self) -> &'static str {
        match self {
            Layer::Conv1d(_) => "conv1d",
            Layer::Relu(_) => "relu",
            Layer::MaxPool(_) => "maxpool",
            Layer::Dropout(_) => "dropout",
            Layer::Flatten(_) => "flatten",
            Layer::Dense(_) => "dense",
        }
    }

    pub fn output_shape(&self, input: Shape) -> Result<Shape> {
        let bad = || Error::Shape(format!("{} cannot take input {input:?}", self.name()));
        match (self, input) {
            (Layer::Conv1d(c), Shape::Seq(ch, l)) if ch == c.in_channels => Ok(Shape::Seq(c.out_channels, l)),
            (Layer::Relu(_) | Layer::Dropout(_), s) => Ok(s),
            (Layer::MaxPool(p), Shape::Seq(ch, l)) => Ok(Shape::Seq(ch, p.output_len(l)?)),
            (Layer::Flatten(_), Shape::Seq(ch, l)) => Ok(Shape::Flat(ch * l)),
            (Layer::Dense(d), Shape::Flat(f)) if f == d.inputs => Ok(Shape::Flat(d.outputs)),
            _ => Err(bad()),
        }
    }

    /// Forward pass without touching the backward caches; dropout is the
    /// identity.
    pub fn infer(&self, x: &Tensor) -> Result<Tensor> {
        match self {
            Layer::Conv1d(c) => c.apply(x),
            Layer::Relu(_) => Ok(relu(x)),
            Layer::MaxPool(p) => p.apply(x),
            Layer::Dropout(_) => Ok(x.clone()),
            Layer::Flatten(_) => flatten(x),
            Layer::Dense(d) => d.apply(x),
        }
    }

    /// Forward pass that records what the backward pass needs.
    pub fn forward(&mut self, x: &Tensor, mode: Mode, rng: &mut Rng) -> Result<Tensor> {
        let out = match self {
            Layer::Conv1d(c) => {
                let y = c.apply(x)?;
                c.input = Some(x.clone());
                y
            }
            Layer::Relu(r) => {
                r.input = Some(x.clone());
                relu(x)
            }
            Layer::MaxPool(p) => {
                let y = p.apply(x)?;
                p.input = Some(x.clone());
                y
            }
            Layer::Dropout(d) => {
                if mode == Mode::Eval || d.p == 0.0 {
                    d.mask = None;
                    x.clone()
                } else {
                    let keep = 1.0 / (1.0 - d.p);
                    let mask: Vec<f64> = (0..x.len())
                        .map(|_| if rng.gen::<f64>() < d.p { 0.0 } else { keep })
                        .collect();
                    let mut y = x.clone();
                    for (v, m) in y.data_mut().iter_mut().zip(&mask) {
                        *v *= m;
                    }
                    d.mask = Some(mask);
                    y
                }
            }
            Layer::Flatten(f) => {
                f.input_shape = Some(x.shape().to_vec());
                flatten(x)?
            }
            Layer::Dense(d) => {
                let y = d.apply(x)?;
                d.input = Some(x.clone());
                y
            }
        };
        debug_assert!(
            !x.all_finite() || out.all_finite(),
            "{} produced non-finite output",
            self.name()
        );
        Ok(out)
    }

    /// Gradient w.r.t. the input of the last `forward`; parameter gradients
    /// are accumulated.
    pub fn backward(&mut self, dout: &Tensor) -> Result<Tensor> {
        match self {
            Layer::Conv1d(c) => c.backward(dout),
            Layer::Relu(r) => {
                let x = r.input.as_ref().ok_or_else(no_forward)?;
                if x.shape() != dout.shape() {
                    return Err(Error::Shape("relu gradient shape".into()));
                }
                let mut dx = dout.clone();
                for (g, &xv) in dx.data_mut().iter_mut().zip(x.data()) {
                    if xv <= 0.0 {
                        *g = 0.0;
                    }
                }
                Ok(dx)
            }
            Layer::MaxPool(p) => p.backward(dout),
            Layer::Dropout(d) => {
                let mut dx = dout.clone();
                if let Some(mask) = &d.mask {
                    if mask.len() != dx.len() {
                        return Err(Error::Shape("dropout gradient shape".into()));
                    }
                    for (g, m) in dx.data_mut().iter_mut().zip(mask) {
                        *g *= m;
                    }
                }
                Ok(dx)
            }
            Layer::Flatten(f) => {
                let shape = f.input_shape.clone().ok_or_else(no_forward)?;
                dout.clone().reshape(shape)
            }
            Layer::Dense(d) => d.backward(dout),
        }
    }

    pub fn params(&self) -> Vec<&Param> {
        match self {
            Layer::Conv1d(c) => vec![&c.weight, &c.bias],
            Layer::Dense(d) => vec![&d.weight, &d.bias],
            _ => Vec::new(),
        }
    }

    pub fn params_mut(&mut self) -> Vec<&mut Param> {
        match self {
            Layer::Conv1d(c) => vec![&mut c.weight, &mut c.bias],
            Layer::Dense(d) => vec![&mut d.weight, &mut d.bias],
            _ => Vec::new(),
        }
    }

    pub fn zero_grad(&mut self) {
        for p in self.params_mut() {
            p.grad.fill(0.0);
        }
    }

    /// Drop cached activations.
    pub fn clear_cache(&mut self) {
        match self {
            Layer::Conv1d(c) => c.input = None,
            Layer::Relu(r) => r.input = None,
            Layer::MaxPool(p) => p.input = None,
            Layer::Dropout(d) => d.mask = None,
            Layer::Flatten(f) => f.input_shape = None,
            Layer::Dense(d) => d.input = None,
        }
    }
}

fn relu(x: &Tensor) -> Tensor {
    let mut y = x.clone();
    for v in y.data_mut() {
        *v = v.max(0.0);
    }
    y
}

fn flatten(x: &Tensor) -> Result<Tensor> {
    let (b, c, l) = x.dims3()?;
    x.clone().reshape(vec![b, c * l])
}
