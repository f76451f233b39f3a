//! Z-order serialization of a block, used to feed the 1-D DCT baseline.

const BITS: u32 = 21;
const MAX_COORD: u64 = (1 << BITS) - 1;

/// Spreads the low 21 bits of `v` so that bit `i` lands on bit `3i`.
fn spread(v: u64) -> u64 {
    let mut x = v & MAX_COORD;
    x = (x | (x << 32)) & 0x001f_0000_0000_ffff;
    x = (x | (x << 16)) & 0x001f_0000_ff00_00ff;
    x = (x | (x << 8)) & 0x100f_00f0_0f00_f00f;
    x = (x | (x << 4)) & 0x10c3_0c30_c30c_30c3;
    x = (x | (x << 2)) & 0x1249_2492_4924_9249;
    x
}

/// Interleaved key with x in the lowest bit of each triple.
pub fn morton_key(x: u64, y: u64, z: u64) -> u64 {
    spread(x) | (spread(y) << 1) | (spread(z) << 2)
}

/// Permutation sorting the points by Morton key of their min-shifted,
/// floored integer coordinates. Equal keys keep their input order.
pub fn morton_order(positions: &[[f64; 3]]) -> Vec<usize> {
    let mut lo = [f64::INFINITY; 3];
    for p in positions {
        for a in 0..3 {
            lo[a] = lo[a].min(p[a]);
        }
    }
    let quant = |v: f64, a: usize| -> u64 {
        let s = (v - lo[a]).floor();
        if s.is_finite() && s > 0.0 {
            (s as u64).min(MAX_COORD)
        } else {
            0
        }
    };
    let keys: Vec<u64> = positions
        .iter()
        .map(|p| morton_key(quant(p[0], 0), quant(p[1], 1), quant(p[2], 2)))
        .collect();
    let mut order: Vec<usize> = (0..positions.len()).collect();
    order.sort_by_key(|&i| keys[i]);
    order
}
