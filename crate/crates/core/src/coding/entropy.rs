//! Symbol-stream coding: block-by-block in leaf order, dimension `j` of
//! every block coded with the table of dimension `j`.

use super::model::{FreqTable, LaplacianModel};
use super::range_coder::{RangeDecoder, RangeEncoder};
use crate::error::{Error, Result};

/// Encodes the kept symbols of every block. Dimensions whose alphabet is a
/// single symbol are implied and cost nothing; if no symbol needs coding the
/// payload is empty.
pub fn entropy_encode(blocks: &[Vec<i32>], model: &LaplacianModel) -> Result<Vec<u8>> {
    let tables = model.tables();
    let mut enc = RangeEncoder::new();
    let mut coded = 0usize;
    for (b, block) in blocks.iter().enumerate() {
        if block.len() > tables.len() {
            return Err(Error::LengthMismatch {
                expected: tables.len(),
                got: block.len(),
            });
        }
        for (j, (&q, table)) in block.iter().zip(&tables).enumerate() {
            let (cum, freq) = table.lookup(q).ok_or_else(|| {
                Error::InvalidParameter(format!(
                    "symbol {q} outside model alphabet (block {b}, dimension {j}, max {})",
                    table.max_mag()
                ))
            })?;
            if !table.is_trivial() {
                enc.encode(cum, freq);
                coded += 1;
            }
        }
    }
    Ok(if coded == 0 { Vec::new() } else { enc.finish() })
}

/// Inverse of [`entropy_encode`]; `counts[b]` is the number of symbols in
/// block `b`. Errors if the payload is short, has trailing bytes or drives
/// the decoder out of range.
pub fn entropy_decode(payload: &[u8], model: &LaplacianModel, counts: &[usize]) -> Result<Vec<Vec<i32>>> {
    let tables = model.tables();
    let needs_coding = counts.iter().any(|&c| tables.iter().take(c).any(|t| !t.is_trivial()));
    let mut dec = if needs_coding {
        Some(RangeDecoder::new(payload)?)
    } else if !payload.is_empty() {
        return Err(Error::CorruptBitstream(
            "payload present but no symbols to decode".into(),
        ));
    } else {
        None
    };

    let mut blocks = Vec::with_capacity(counts.len());
    for &count in counts {
        if count > tables.len() {
            return Err(Error::LengthMismatch {
                expected: tables.len(),
                got: count,
            });
        }
        let mut block = Vec::with_capacity(count);
        for table in &tables[..count] {
            let q = match (&mut dec, table.is_trivial()) {
                (_, true) => 0,
                (Some(d), false) => d.decode(table)?,
                (None, false) => unreachable!(),
            };
            block.push(q);
        }
        blocks.push(block);
    }
    if let Some(d) = dec {
        d.finish()?;
    }
    Ok(blocks)
}

/// Ideal code length of the symbols under the integer tables, in bits.
pub fn cross_entropy_bits(blocks: &[Vec<i32>], model: &LaplacianModel) -> f64 {
    let tables: Vec<FreqTable> = model.tables();
    blocks
        .iter()
        .flat_map(|b| b.iter().zip(&tables))
        .map(|(&q, t)| t.probability(q).map_or(f64::INFINITY, |p| -p.log2()))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coding::model::estimate_model;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn laplace_sample(rng: &mut ChaCha8Rng, b: f64) -> i32 {
        let u: f64 = rng.gen_range(-0.5..0.5);
        (-b * u.signum() * (1.0 - 2.0 * u.abs()).ln()).round() as i32
    }

    fn random_blocks(seed: u64, nblocks: usize, dims: usize) -> Vec<Vec<i32>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..nblocks)
            .map(|_| {
                let len = rng.gen_range(1..=dims);
                (0..len)
                    .map(|j| laplace_sample(&mut rng, 40.0 / (j + 1) as f64))
                    .collect()
            })
            .collect()
    }

    #[test]
    fn round_trip_and_efficiency() {
        let blocks = random_blocks(11, 3000, 32);
        let model = estimate_model(&blocks, 32).unwrap();
        let bytes = entropy_encode(&blocks, &model).unwrap();
        let counts: Vec<usize> = blocks.iter().map(Vec::len).collect();
        assert_eq!(entropy_decode(&bytes, &model, &counts).unwrap(), blocks);
        let ideal = cross_entropy_bits(&blocks, &model);
        let actual = bytes.len() as f64 * 8.0;
        assert!(actual <= 1.02 * ideal + 64.0, "{actual} vs {ideal}");
    }

    #[test]
    fn all_zero_stream_is_nearly_free() {
        let blocks = vec![vec![0; 4]; 25_000];
        let mut model = estimate_model(&blocks, 4).unwrap();
        assert_eq!(model.scales, vec![1e-4; 4]);
        // Widen the alphabet so the coder actually runs.
        model.max_mags = vec![1; 4];
        let bytes = entropy_encode(&blocks, &model).unwrap();
        let symbols = 100_000.0;
        assert!(
            (bytes.len() as f64 * 8.0) < 0.02 * symbols + 64.0,
            "{} bytes",
            bytes.len()
        );
        let counts = vec![4; blocks.len()];
        assert_eq!(entropy_decode(&bytes, &model, &counts).unwrap(), blocks);

        // With the fitted alphabet nothing is coded at all.
        let model = estimate_model(&blocks, 4).unwrap();
        assert!(entropy_encode(&blocks, &model).unwrap().is_empty());
        assert_eq!(entropy_decode(&[], &model, &counts).unwrap(), blocks);
        assert!(entropy_decode(&[0], &model, &counts).is_err());
    }

    #[test]
    fn out_of_alphabet_symbol_is_rejected() {
        let model = estimate_model(&[vec![3]], 1).unwrap();
        assert!(entropy_encode(&[vec![4]], &model).is_err());
        assert!(entropy_encode(&[vec![1, 1]], &model).is_err());
    }

    #[test]
    fn truncated_and_padded_payloads_fail() {
        let blocks = random_blocks(5, 200, 16);
        let model = estimate_model(&blocks, 16).unwrap();
        let bytes = entropy_encode(&blocks, &model).unwrap();
        let counts: Vec<usize> = blocks.iter().map(Vec::len).collect();
        assert!(entropy_decode(&bytes[..bytes.len() - 1], &model, &counts).is_err());
        assert!(entropy_decode(&bytes[..3], &model, &counts).is_err());
        let mut padded = bytes.clone();
        padded.push(0);
        assert!(entropy_decode(&padded, &model, &counts).is_err());
    }

    #[test]
    fn tampering_is_detected_or_changes_output() {
        let blocks = random_blocks(9, 300, 16);
        let model = estimate_model(&blocks, 16).unwrap();
        let bytes = entropy_encode(&blocks, &model).unwrap();
        let counts: Vec<usize> = blocks.iter().map(Vec::len).collect();
        for pos in (0..bytes.len()).step_by(7) {
            let mut bad = bytes.clone();
            bad[pos] ^= 0x5A;
            match entropy_decode(&bad, &model, &counts) {
                Err(_) => {}
                Ok(decoded) => assert_ne!(decoded, blocks, "tamper at {pos} went unnoticed"),
            }
        }
    }
}
