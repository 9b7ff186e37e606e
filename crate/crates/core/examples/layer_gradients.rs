//! Finite-difference check of a convolution layer's weight gradient.

use modewise::nn::{Conv1d, Layer, Mode, Tensor};
use modewise::seed::Rng;
use rand::{Rng as _, SeedableRng};

fn objective(layer: &mut Layer, x: &Tensor) -> modewise::Result<f64> {
    let y = layer.forward(x, Mode::Train, &mut Rng::seed_from_u64(0))?;
    Ok(y.data().iter().map(|v| v * v).sum::<f64>() / 2.0)
}

fn main() -> modewise::Result<()> {
    let mut rng = Rng::seed_from_u64(5);
    let mut layer = Layer::Conv1d(Conv1d::new(2, 3, 3));
    for p in layer.params_mut() {
        p.value.iter_mut().for_each(|v| *v = rng.gen_range(-1.0..1.0));
    }
    let x = Tensor::new(vec![1, 2, 6], (0..12).map(|_| rng.gen_range(-1.0..1.0)).collect())?;

    // d(|y|^2/2)/dy = y
    let y = layer.forward(&x, Mode::Train, &mut Rng::seed_from_u64(0))?;
    layer.zero_grad();
    layer.backward(&y)?;
    let analytic = layer.params_mut()[0].grad.clone();

    let h = 1e-6;
    for (j, g) in analytic.iter().enumerate() {
        let orig = layer.params_mut()[0].value[j];
        layer.params_mut()[0].value[j] = orig + h;
        let fp = objective(&mut layer, &x)?;
        layer.params_mut()[0].value[j] = orig - h;
        let fm = objective(&mut layer, &x)?;
        layer.params_mut()[0].value[j] = orig;
        let numeric = (fp - fm) / (2.0 * h);
        println!(
            "w[{j:>2}] analytic {g:>10.6} numeric {numeric:>10.6} diff {:.1e}",
            (g - numeric).abs()
        );
    }
    Ok(())
}
