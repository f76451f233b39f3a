//! Static per-dimension Laplacian model of quantized coefficients and the
//! integer frequency tables the range coder uses.

use crate::error::{Error, Result};

/// Scales are never smaller than this.
pub const MIN_SCALE: f64 = 1e-4;
/// Frequency tables sum to `1 << PROB_BITS`.
pub const PROB_BITS: u32 = 16;
pub const PROB_TOTAL: u32 = 1 << PROB_BITS;
/// Largest codable magnitude: keeps every alphabet at most half the table,
/// so each symbol gets a nonzero frequency with room to spare.
pub const MAX_MAGNITUDE: u16 = (PROB_TOTAL / 4 - 1) as u16;

/// Per-dimension zero-mean Laplacian scales `b_j` and alphabet bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct LaplacianModel {
    pub scales: Vec<f32>,
    pub max_mags: Vec<u16>,
}

impl LaplacianModel {
    pub fn dims(&self) -> usize {
        self.scales.len()
    }

    pub fn tables(&self) -> Vec<FreqTable> {
        self.scales
            .iter()
            .zip(&self.max_mags)
            .map(|(&b, &m)| FreqTable::laplacian(b, m))
            .collect()
    }
}

/// Fits one scale per dimension `j < x` as the mean absolute value over the
/// blocks that have that dimension (the zero-mean Laplacian MLE).
pub fn estimate_model(blocks: &[Vec<i32>], x: usize) -> Result<LaplacianModel> {
    let mut sums = vec![0u64; x];
    let mut counts = vec![0u64; x];
    let mut max_mags = vec![0u32; x];
    for block in blocks {
        for (j, &q) in block.iter().take(x).enumerate() {
            let a = q.unsigned_abs();
            sums[j] += a as u64;
            counts[j] += 1;
            max_mags[j] = max_mags[j].max(a);
        }
    }
    let scales = sums
        .iter()
        .zip(&counts)
        .map(|(&s, &c)| {
            let mean = if c == 0 { 0.0 } else { s as f64 / c as f64 };
            mean.max(MIN_SCALE) as f32
        })
        .collect();
    let max_mags = max_mags
        .into_iter()
        .enumerate()
        .map(|(j, m)| {
            u16::try_from(m).ok().filter(|&m| m <= MAX_MAGNITUDE).ok_or_else(|| {
                Error::InvalidParameter(format!(
                    "quantized magnitude {m} in dimension {j} exceeds {MAX_MAGNITUDE}; use a larger qp"
                ))
            })
        })
        .collect::<Result<_>>()?;
    Ok(LaplacianModel { scales, max_mags })
}

/// Cumulative frequency table over `[-max_mag, max_mag]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FreqTable {
    max_mag: u16,
    cum: Vec<u32>,
}

impl FreqTable {
    /// `P(q) ∝ exp(-|q|/b)`, each mass floored at `2^-16`, renormalized and
    /// rounded to integer frequencies summing to `PROB_TOTAL`.
    pub fn laplacian(scale: f32, max_mag: u16) -> Self {
        let k = max_mag as usize;
        let alphabet = 2 * k + 1;
        if alphabet == 1 {
            return Self {
                max_mag,
                cum: vec![0, PROB_TOTAL],
            };
        }
        let b = scale as f64;
        let mass: Vec<f64> = (0..alphabet).map(|s| (-(s.abs_diff(k) as f64) / b).exp()).collect();
        let z: f64 = mass.iter().sum();
        let floor = 1.0 / PROB_TOTAL as f64;
        let p: Vec<f64> = mass.iter().map(|m| (m / z).max(floor)).collect();
        let z2: f64 = p.iter().sum();
        let mut freq: Vec<u32> = p
            .iter()
            .map(|v| ((v / z2) * PROB_TOTAL as f64).floor().max(1.0) as u32)
            .collect();

        let sum: i64 = freq.iter().map(|&f| f as i64).sum();
        let mut diff = PROB_TOTAL as i64 - sum;
        if diff > 0 {
            freq[k] += diff as u32;
        }
        while diff < 0 {
            let mut top = 0;
            for (i, &f) in freq.iter().enumerate() {
                if f > freq[top] {
                    top = i;
                }
            }
            let take = (-diff).min(freq[top] as i64 - 1);
            freq[top] -= take as u32;
            diff += take;
        }

        let mut cum = Vec::with_capacity(alphabet + 1);
        cum.push(0);
        let mut acc = 0;
        for f in freq {
            acc += f;
            cum.push(acc);
        }
        debug_assert_eq!(acc, PROB_TOTAL);
        Self { max_mag, cum }
    }

    pub fn max_mag(&self) -> u16 {
        self.max_mag
    }

    /// True when the alphabet has one symbol and coding it costs nothing.
    pub fn is_trivial(&self) -> bool {
        self.max_mag == 0
    }

    fn index(&self, q: i32) -> Option<usize> {
        let m = self.max_mag as i32;
        (-m..=m).contains(&q).then(|| (q + m) as usize)
    }

    /// `(cumulative, frequency)` of symbol `q`, or `None` if out of range.
    pub fn lookup(&self, q: i32) -> Option<(u32, u32)> {
        let s = self.index(q)?;
        Some((self.cum[s], self.cum[s + 1] - self.cum[s]))
    }

    /// Symbol whose interval contains `target` (< `PROB_TOTAL`).
    pub fn symbol_at(&self, target: u32) -> (i32, u32, u32) {
        let s = self.cum.partition_point(|&c| c <= target) - 1;
        (
            s as i32 - self.max_mag as i32,
            self.cum[s],
            self.cum[s + 1] - self.cum[s],
        )
    }

    pub fn probability(&self, q: i32) -> Option<f64> {
        self.lookup(q).map(|(_, f)| f as f64 / PROB_TOTAL as f64)
    }
}
