use modewise::pipeline::{savgol_smooth, SavitzkyGolay};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

const WINDOW: usize = 9;
const ORDER: usize = 3;

/// Window extent around `i`: truncated at the ends, widened inwards when it
/// cannot determine the polynomial.
fn extent(i: usize, n: usize) -> (usize, usize) {
    let h = WINDOW / 2;
    let (mut l, mut r) = (h.min(i), h.min(n - 1 - i));
    while l + r < ORDER {
        if i + r + 1 < n {
            r += 1;
        } else {
            l += 1;
        }
    }
    (l, r)
}

/// Fit the polynomial by SVD least squares and evaluate it at offset 0.
fn lstsq_smooth(y: &[f64]) -> Vec<f64> {
    let n = y.len();
    (0..n)
        .map(|i| {
            let (l, r) = extent(i, n);
            let rows = l + r + 1;
            let a = DMatrix::from_fn(rows, ORDER + 1, |row, col| (row as f64 - l as f64).powi(col as i32));
            let b = DVector::from_iterator(rows, y[i - l..=i + r].iter().copied());
            let coef = a.svd(true, true).solve(&b, 1e-14).unwrap();
            coef[0]
        })
        .collect()
}

fn scale(v: &[f64]) -> f64 {
    v.iter().fold(1.0f64, |m, x| m.max(x.abs()))
}

#[test]
fn center_weights_are_the_classic_table() {
    // 9-point cubic: (-21, 14, 39, 54, 59, 54, 39, 14, -21) / 231
    let w = SavitzkyGolay::new(WINDOW, ORDER).unwrap().center_coefficients();
    let expect = [-21.0, 14.0, 39.0, 54.0, 59.0, 54.0, 39.0, 14.0, -21.0];
    for (a, b) in w.iter().zip(expect) {
        assert!((a - b / 231.0).abs() < 1e-12);
    }
}

proptest! {
    #[test]
    fn agrees_with_least_squares_oracle(y in prop::collection::vec(-50.0..50.0f64, 5..80)) {
        let got = savgol_smooth(&y, WINDOW, ORDER).unwrap();
        let want = lstsq_smooth(&y);
        let s = scale(&y);
        for (g, w) in got.iter().zip(&want) {
            prop_assert!((g - w).abs() <= 1e-9 * s, "{} vs {}", g, w);
        }
    }

    #[test]
    fn reproduces_cubics(c in prop::array::uniform4(-3.0..3.0f64), n in 5usize..120, x0 in -50.0..50.0f64) {
        let y: Vec<f64> = (0..n)
            .map(|i| {
                let x = (x0 + i as f64) / 10.0;
                c[0] + c[1] * x + c[2] * x * x + c[3] * x * x * x
            })
            .collect();
        let got = savgol_smooth(&y, WINDOW, ORDER).unwrap();
        let s = scale(&y);
        for (g, w) in got.iter().zip(&y) {
            prop_assert!((g - w).abs() <= 1e-9 * s, "{} vs {}", g, w);
        }
    }

    #[test]
    fn is_linear(
        xy in prop::collection::vec((-100.0..100.0f64, -100.0..100.0f64), 5..80),
        alpha in -5.0..5.0f64,
        beta in -5.0..5.0f64,
    ) {
        let x: Vec<f64> = xy.iter().map(|p| p.0).collect();
        let y: Vec<f64> = xy.iter().map(|p| p.1).collect();
        let mix: Vec<f64> = x.iter().zip(&y).map(|(a, b)| alpha * a + beta * b).collect();
        let (sx, sy, sm) = (
            savgol_smooth(&x, WINDOW, ORDER).unwrap(),
            savgol_smooth(&y, WINDOW, ORDER).unwrap(),
            savgol_smooth(&mix, WINDOW, ORDER).unwrap(),
        );
        let s = scale(&mix).max(alpha.abs() * scale(&x)).max(beta.abs() * scale(&y));
        for i in 0..x.len() {
            prop_assert!((sm[i] - (alpha * sx[i] + beta * sy[i])).abs() <= 1e-9 * s);
        }
    }
}
