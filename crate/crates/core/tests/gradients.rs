//! Central finite differences (f64, h = 1e-6) against the analytic
//! backward pass of every layer, 20+ random instances each.

use modewise::nn::{softmax_xent, Conv1d, Dense, Layer, Mode, Network, Tensor};
use modewise::seed::{self, Rng};
use rand::{Rng as _, SeedableRng};

const H: f64 = 1e-6;
const TOL: f64 = 1e-4;
const INSTANCES: u64 = 24;

/// Relative error with a small absolute floor so components that are
/// exactly zero analytically do not divide by zero.
fn rel_err(a: f64, n: f64) -> f64 {
    (a - n).abs() / a.abs().max(n.abs()).max(1e-3)
}

fn random_tensor(rng: &mut Rng, shape: &[usize]) -> Tensor {
    let n = shape.iter().product();
    Tensor::new(shape.to_vec(), (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap()
}

/// Objective Σ r·layer(x) for a fixed random projection r. `mask_seed`
/// reseeds the RNG for every evaluation so dropout masks stay fixed.
fn objective(layer: &mut Layer, x: &Tensor, r: &Tensor, mask_seed: u64) -> f64 {
    let mut rng = Rng::seed_from_u64(mask_seed);
    let y = layer.forward(x, Mode::Train, &mut rng).unwrap();
    y.data().iter().zip(r.data()).map(|(a, b)| a * b).sum()
}

/// Checks ∂/∂x and ∂/∂θ of one layer; returns the worst relative error.
fn check_layer(layer: &mut Layer, x: &Tensor, rng: &mut Rng) -> f64 {
    let mask_seed = rng.gen();
    let mut frng = Rng::seed_from_u64(mask_seed);
    let y = layer.forward(x, Mode::Train, &mut frng).unwrap();
    let r = random_tensor(rng, y.shape());
    layer.zero_grad();
    let dx = layer.backward(&r).unwrap();
    let mut worst: f64 = 0.0;

    let mut xp = x.clone();
    for i in 0..x.len() {
        let orig = xp.data()[i];
        xp.data_mut()[i] = orig + H;
        let fp = objective(layer, &xp, &r, mask_seed);
        xp.data_mut()[i] = orig - H;
        let fm = objective(layer, &xp, &r, mask_seed);
        xp.data_mut()[i] = orig;
        worst = worst.max(rel_err(dx.data()[i], (fp - fm) / (2.0 * H)));
    }

    let analytic: Vec<Vec<f64>> = layer.params_mut().iter().map(|p| p.grad.clone()).collect();
    for (pi, grads) in analytic.iter().enumerate() {
        for j in 0..grads.len() {
            let orig = layer.params_mut()[pi].value[j];
            layer.params_mut()[pi].value[j] = orig + H;
            let fp = objective(layer, x, &r, mask_seed);
            layer.params_mut()[pi].value[j] = orig - H;
            let fm = objective(layer, x, &r, mask_seed);
            layer.params_mut()[pi].value[j] = orig;
            worst = worst.max(rel_err(grads[j], (fp - fm) / (2.0 * H)));
        }
    }
    worst
}

fn randomize_params(layer: &mut Layer, rng: &mut Rng) {
    for p in layer.params_mut() {
        for v in p.value.iter_mut() {
            *v = rng.gen_range(-1.0..1.0);
        }
    }
}

fn run_suite(name: &str, mut make: impl FnMut(&mut Rng) -> (Layer, Tensor)) {
    let mut worst: f64 = 0.0;
    for i in 0..INSTANCES {
        let mut rng = seed::rng(42, 100, i);
        let (mut layer, x) = make(&mut rng);
        randomize_params(&mut layer, &mut rng);
        worst = worst.max(check_layer(&mut layer, &x, &mut rng));
    }
    assert!(worst < TOL, "{name}: max relative error {worst:e}");
}

#[test]
fn conv1d_gradients() {
    run_suite("conv1d", |rng| {
        let (b, c, d, l) = (
            rng.gen_range(1..3),
            rng.gen_range(1..4),
            rng.gen_range(1..4),
            rng.gen_range(3..9),
        );
        (Layer::Conv1d(Conv1d::new(c, d, 3)), random_tensor(rng, &[b, c, l]))
    });
}

#[test]
fn dense_gradients() {
    run_suite("dense", |rng| {
        let (b, f, o) = (rng.gen_range(1..4), rng.gen_range(1..8), rng.gen_range(1..6));
        (Layer::Dense(Dense::new(f, o)), random_tensor(rng, &[b, f]))
    });
}

#[test]
fn relu_gradients() {
    run_suite("relu", |rng| {
        let mut x = random_tensor(rng, &[2, 3, 6]);
        // keep away from the kink
        for v in x.data_mut() {
            if v.abs() < 1e-2 {
                *v += 0.05;
            }
        }
        (Layer::relu(), x)
    });
}

#[test]
fn maxpool_gradients() {
    run_suite("maxpool", |rng| {
        let l = rng.gen_range(2..10);
        // distinct values spaced well beyond h, shuffled
        let n = 2 * 3 * l;
        let mut vals: Vec<f64> = (0..n).map(|i| i as f64 * 0.01).collect();
        for i in (1..n).rev() {
            vals.swap(i, rng.gen_range(0..=i));
        }
        (Layer::max_pool(2, 2), Tensor::new(vec![2, 3, l], vals).unwrap())
    });
}

#[test]
fn dropout_gradients() {
    run_suite("dropout", |rng| {
        let p = rng.gen_range(0.0..0.9);
        (Layer::dropout(p), random_tensor(rng, &[3, 2, 5]))
    });
}

#[test]
fn flatten_gradients() {
    run_suite("flatten", |rng| (Layer::flatten(), random_tensor(rng, &[2, 3, 4])));
}

#[test]
fn softmax_xent_gradients() {
    let mut worst: f64 = 0.0;
    for i in 0..INSTANCES {
        let mut rng = seed::rng(42, 101, i);
        let b = rng.gen_range(1..5);
        let mut logits = random_tensor(&mut rng, &[b, 5]);
        for v in logits.data_mut() {
            *v *= 4.0;
        }
        let labels: Vec<u8> = (0..b).map(|_| rng.gen_range(0..5)).collect();
        let (_, grad) = softmax_xent(&logits, &labels).unwrap();
        for j in 0..logits.len() {
            let orig = logits.data()[j];
            logits.data_mut()[j] = orig + H;
            let fp = softmax_xent(&logits, &labels).unwrap().0;
            logits.data_mut()[j] = orig - H;
            let fm = softmax_xent(&logits, &labels).unwrap().0;
            logits.data_mut()[j] = orig;
            worst = worst.max(rel_err(grad.data()[j], (fp - fm) / (2.0 * H)));
        }
    }
    assert!(worst < 1e-6, "softmax_xent: max relative error {worst:e}");
}

#[test]
fn whole_network_gradients() {
    // conv, relu, pool, flatten, dense through the loss
    for i in 0..INSTANCES {
        let mut rng = seed::rng(42, 102, i);
        let mut net = Network::new(
            2,
            8,
            vec![
                Layer::Conv1d(Conv1d::new(2, 3, 3)),
                Layer::relu(),
                Layer::max_pool(2, 2),
                Layer::flatten(),
                Layer::Dense(Dense::new(12, 5)),
            ],
        )
        .unwrap();
        for layer in net.layers_mut() {
            randomize_params(layer, &mut rng);
        }
        let x = random_tensor(&mut rng, &[2, 2, 8]);
        let labels = [rng.gen_range(0..5u8), rng.gen_range(0..5u8)];
        let loss = |net: &mut Network| {
            let mut r = Rng::seed_from_u64(0);
            let logits = net.forward(&x, Mode::Train, &mut r).unwrap();
            softmax_xent(&logits, &labels).unwrap()
        };
        net.zero_grad();
        let (_, dlogits) = loss(&mut net);
        net.backward(&dlogits).unwrap();
        let analytic: Vec<Vec<f64>> = net.params_mut().iter().map(|(_, p)| p.grad.clone()).collect();
        let mut worst: f64 = 0.0;
        for (pi, grads) in analytic.iter().enumerate() {
            for j in 0..grads.len() {
                let orig = net.params_mut()[pi].1.value[j];
                net.params_mut()[pi].1.value[j] = orig + H;
                let fp = loss(&mut net).0;
                net.params_mut()[pi].1.value[j] = orig - H;
                let fm = loss(&mut net).0;
                net.params_mut()[pi].1.value[j] = orig;
                worst = worst.max(rel_err(grads[j], (fp - fm) / (2.0 * H)));
            }
        }
        assert!(worst < TOL, "instance {i}: max relative error {worst:e}");
    }
}
