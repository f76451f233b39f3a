//! Orthonormal DCT-II of arbitrary length, the baseline the graph transform
//! is measured against.

use std::f64::consts::PI;

fn scale(k: usize, n: usize) -> f64 {
    if k == 0 {
        (1.0 / n as f64).sqrt()
    } else {
        (2.0 / n as f64).sqrt()
    }
}

fn basis(k: usize, i: usize, n: usize) -> f64 {
    scale(k, n) * (PI * (i as f64 + 0.5) * k as f64 / n as f64).cos()
}

pub fn forward_dct(signal: &[f64]) -> Vec<f64> {
    let n = signal.len();
    (0..n)
        .map(|k| signal.iter().enumerate().map(|(i, &y)| y * basis(k, i, n)).sum())
        .collect()
}

/// Inverse of [`forward_dct`] (its transpose, DCT-III).
pub fn inverse_dct(coeffs: &[f64]) -> Vec<f64> {
    let n = coeffs.len();
    (0..n)
        .map(|i| coeffs.iter().enumerate().map(|(k, &c)| c * basis(k, i, n)).sum())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_point_closed_form() {
        let c = forward_dct(&[1.0, -1.0]);
        assert!(c[0].abs() < 1e-12);
        assert!((c[1] - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn constant_signal_is_dc_only() {
        for n in [1, 2, 7, 64, 187] {
            let c = forward_dct(&vec![3.5; n]);
            assert!((c[0] - 3.5 * (n as f64).sqrt()).abs() < 1e-9);
            assert!(c[1..].iter().all(|v| v.abs() < 1e-9));
        }
    }

    #[test]
    fn orthonormal_round_trip() {
        for n in [1, 3, 16, 101, 200] {
            let y: Vec<f64> = (0..n).map(|i| ((i * 37 % 11) as f64) - 4.2).collect();
            let c = forward_dct(&y);
            let energy_y: f64 = y.iter().map(|v| v * v).sum();
            let energy_c: f64 = c.iter().map(|v| v * v).sum();
            assert!((energy_y - energy_c).abs() < 1e-9 * energy_y.max(1.0));
            let back = inverse_dct(&c);
            for (a, b) in y.iter().zip(&back) {
                assert!((a - b).abs() < 1e-9);
            }
        }
    }
}
