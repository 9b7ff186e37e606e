//! Savitzky-Golay smoothing of a noisy speed trace.

use modewise::pipeline::SavitzkyGolay;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rms(a: &[f64], b: &[f64]) -> f64 {
    (a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>() / a.len() as f64).sqrt()
}

fn main() -> modewise::Result<()> {
    let mut sg = SavitzkyGolay::new(9, 3)?;
    println!(
        "centre weights x231: {:?}",
        sg.center_coefficients()
            .iter()
            .map(|w| (w * 231.0).round())
            .collect::<Vec<_>>()
    );

    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let clean: Vec<f64> = (0..200).map(|i| 8.0 + 3.0 * (i as f64 / 15.0).sin()).collect();
    let noisy: Vec<f64> = clean.iter().map(|v| v + rng.gen_range(-1.0..1.0)).collect();
    let smooth = sg.smooth(&noisy);
    println!(
        "rms error, raw {:.3} m/s, smoothed {:.3} m/s",
        rms(&noisy, &clean),
        rms(&smooth, &clean)
    );
    Ok(())
}
