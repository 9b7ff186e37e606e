use super::{init_layer, loss, Layer, Mode, Param, Shape, Tensor};
use crate::error::{Error, Result};
use crate::seed::Rng;

/// A feed-forward stack taking (B, C, L) input and producing (B, K) logits.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    in_channels: usize,
    input_len: usize,
    layers: Vec<Layer>,
}

impl Network {
    /// Checks that the layers compose for input (C, L) and end in a flat
    /// output.
    pub fn new(in_channels: usize, input_len: usize, layers: Vec<Layer>) -> Result<Self> {
        let net = Network {
            in_channels,
            input_len,
            layers,
        };
        match net.output_shape()? {
            Shape::Flat(_) => Ok(net),
            s => Err(Error::Shape(format!("network must end in a flat output, got {s:?}"))),
        }
    }

    pub fn in_channels(&self) -> usize {
        self.in_channels
    }

    pub fn input_len(&self) -> usize {
        self.input_len
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }

    /// Shape after every layer, starting with the input.
    pub fn shapes(&self) -> Result<Vec<Shape>> {
        let mut shapes = vec![Shape::Seq(self.in_channels, self.input_len)];
        for (i, layer) in self.layers.iter().enumerate() {
            let next = layer
                .output_shape(*shapes.last().unwrap())
                .map_err(|e| Error::Shape(format!("layer {i}: {e}")))?;
            shapes.push(next);
        }
        Ok(shapes)
    }

    pub fn output_shape(&self) -> Result<Shape> {
        Ok(*self.shapes()?.last().unwrap())
    }

    pub fn num_classes(&self) -> usize {
        match self.output_shape() {
            Ok(Shape::Flat(k)) => k,
            _ => 0,
        }
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().flat_map(|l| l.params()).map(|p| p.value.len()).sum()
    }

    /// Glorot weights, zero biases.
    pub fn init(&mut self, rng: &mut Rng) {
        for layer in &mut self.layers {
            init_layer(layer, rng);
        }
    }

    fn check_input(&self, x: &Tensor) -> Result<()> {
        let (_, c, l) = x.dims3()?;
        if c != self.in_channels || l != self.input_len {
            return Err(Error::Shape(format!(
                "network takes (B, {}, {}) input, got {:?}",
                self.in_channels,
                self.input_len,
                x.shape()
            )));
        }
        Ok(())
    }

    pub fn forward(&mut self, x: &Tensor, mode: Mode, rng: &mut Rng) -> Result<Tensor> {
        self.check_input(x)?;
        let mut h = x.clone();
        for layer in &mut self.layers {
            h = layer.forward(&h, mode, rng)?;
        }
        Ok(h)
    }

    /// Evaluation-mode logits; leaves the training caches alone.
    pub fn infer(&self, x: &Tensor) -> Result<Tensor> {
        self.check_input(x)?;
        let mut h = x.clone();
        for layer in &self.layers {
            h = layer.infer(&h)?;
        }
        Ok(h)
    }

    /// Evaluation-mode class probabilities, (B, K).
    pub fn predict_proba(&self, x: &Tensor) -> Result<Tensor> {
        loss::softmax(&self.infer(x)?)
    }

    pub fn backward(&mut self, dlogits: &Tensor) -> Result<()> {
        let mut g = dlogits.clone();
        for layer in self.layers.iter_mut().rev() {
            g = layer.backward(&g)?;
        }
        Ok(())
    }

    pub fn zero_grad(&mut self) {
        for layer in &mut self.layers {
            layer.zero_grad();
        }
    }

    pub fn clear_cache(&mut self) {
        for layer in &mut self.layers {
            layer.clear_cache();
        }
    }

    /// Parameters named `kind[index].weight` / `kind[index].bias`.
    pub fn params_mut(&mut self) -> Vec<(String, &mut Param)> {
        let mut out = Vec::new();
        for (i, layer) in self.layers.iter_mut().enumerate() {
            let name = layer.name();
            for (j, p) in layer.params_mut().into_iter().enumerate() {
                let which = if j == 0 { "weight" } else { "bias" };
                out.push((format!("{name}[{i}].{which}"), p));
            }
        }
        out
    }

    /// Same layer kinds and dimensions, ignoring parameter values.
    pub fn same_architecture(&self, other: &Network) -> bool {
        self.in_channels == other.in_channels
            && self.input_len == other.input_len
            && self.layers.len() == other.layers.len()
            && self.layers.iter().zip(&other.layers).all(|(a, b)| match (a, b) {
                (Layer::Conv1d(x), Layer::Conv1d(y)) => {
                    (x.in_channels, x.out_channels, x.kernel) == (y.in_channels, y.out_channels, y.kernel)
                }
                (Layer::Dense(x), Layer::Dense(y)) => (x.inputs, x.outputs) == (y.inputs, y.outputs),
                (Layer::MaxPool(x), Layer::MaxPool(y)) => (x.width, x.stride) == (y.width, y.stride),
                (Layer::Dropout(x), Layer::Dropout(y)) => x.p == y.p,
                (Layer::Relu(_), Layer::Relu(_)) | (Layer::Flatten(_), Layer::Flatten(_)) => true,
                _ => false,
            })
    }
}
