use rand::Rng as _;

use super::Layer;
use crate::seed::Rng;

pub fn glorot_bound(fan_in: usize, fan_out: usize) -> f64 {
    (6.0 / (fan_in + fan_out) as f64).sqrt()
}

/// `n` draws from U(−b, b) with b = √(6 / (fan_in + fan_out)).
pub fn glorot_init(fan_in: usize, fan_out: usize, n: usize, rng: &mut Rng) -> Vec<f64> {
    let b = glorot_bound(fan_in, fan_out);
    (0..n).map(|_| rng.gen_range(-b..=b)).collect()
}

/// Glorot weights and zero biases. Convolution fans count every tap:
/// kernel width times channels.
pub fn init_layer(layer: &mut Layer, rng: &mut Rng) {
    match layer {
        Layer::Conv1d(c) => {
            let n = c.weight.value.len();
            c.weight.value = glorot_init(c.kernel * c.in_channels, c.kernel * c.out_channels, n, rng);
            c.bias.value.fill(0.0);
        }
        Layer::Dense(d) => {
            let n = d.weight.value.len();
            d.weight.value = glorot_init(d.inputs, d.outputs, n, rng);
            d.bias.value.fill(0.0);
        }
        _ => {}
    }
}
