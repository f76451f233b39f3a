/// Keeps the first `min(x, N)` coefficients and zeroes the rest.
pub fn truncate_dims(coeffs: &[f64], x: usize) -> Vec<f64> {
    coeffs
        .iter()
        .enumerate()
        .map(|(j, &c)| if j < x { c } else { 0.0 })
        .collect()
}

/// Uniform quantizer with step `qp`, rounding half away from zero.
pub fn quantize(coeff: f64, qp: u16) -> i32 {
    (coeff / qp as f64).round() as i32
}

pub fn dequantize(q: i32, qp: u16) -> f64 {
    q as f64 * qp as f64
}

/// `m * 2^(qp/6)`.
pub fn lambda_from_qp(qp: u16, m: f64) -> f64 {
    m * (qp as f64 / 6.0).exp2()
}

/// Squared error of a block in the coefficient domain: kept dimensions
/// contribute their quantization error, dropped ones their full energy.
/// Equal to the signal-domain SSD for an orthonormal transform.
pub fn block_distortion(coeffs: &[f64], kept: &[i32], qp: u16) -> f64 {
    coeffs
        .iter()
        .enumerate()
        .map(|(j, &c)| {
            let rec = kept.get(j).map_or(0.0, |&q| dequantize(q, qp));
            (c - rec) * (c - rec)
        })
        .sum()
}
