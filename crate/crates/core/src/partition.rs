//! Median k-d tree partition of a cloud into transform blocks.
//!
//! Every node splits along the axis with the widest coordinate range and
//! sends the first `ceil(n/2)` points (in a total order over coordinates and
//! original index) to the left child. The leaves, read depth-first left to
//! right, are the transform blocks. The whole construction depends on
//! positions alone, so the decoder rebuilds the same blocks.

use std::cmp::Ordering;

use crate::error::{Error, Result};

/// Upper bound on points per transform block.
pub const MAX_BLOCK_POINTS: usize = 200;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KdPartition {
    pub depth: u32,
    pub blocks: Vec<Vec<usize>>,
}

impl KdPartition {
    pub fn block_count(&self) -> usize {
        self.blocks.len()
    }

    pub fn max_block_size(&self) -> usize {
        self.blocks.iter().map(Vec::len).max().unwrap_or(0)
    }
}

/// Smallest depth `d` with `point_count / 2^d <= 200`.
pub fn choose_depth(point_count: usize) -> u32 {
    let mut depth = 0u32;
    while point_count > MAX_BLOCK_POINTS << depth {
        depth += 1;
    }
    depth
}

/// Index of the axis with the largest `max - min`; ties go to the lower axis.
fn widest_axis(positions: &[[f64; 3]], indices: &[usize]) -> usize {
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for &i in indices {
        for a in 0..3 {
            lo[a] = lo[a].min(positions[i][a]);
            hi[a] = hi[a].max(positions[i][a]);
        }
    }
    let mut best = 0;
    for a in 1..3 {
        if hi[a] - lo[a] > hi[best] - lo[best] {
            best = a;
        }
    }
    best
}

fn split_order(positions: &[[f64; 3]], axis: usize, a: usize, b: usize) -> Ordering {
    let (pa, pb) = (&positions[a], &positions[b]);
    pa[axis]
        .total_cmp(&pb[axis])
        .then_with(|| pa[0].total_cmp(&pb[0]))
        .then_with(|| pa[1].total_cmp(&pb[1]))
        .then_with(|| pa[2].total_cmp(&pb[2]))
        .then_with(|| a.cmp(&b))
}

fn split(positions: &[[f64; 3]], mut indices: Vec<usize>, depth: u32, out: &mut Vec<Vec<usize>>) {
    if depth == 0 {
        out.push(indices);
        return;
    }
    let axis = widest_axis(positions, &indices);
    indices.sort_unstable_by(|&a, &b| split_order(positions, axis, a, b));
    let right = indices.split_off(indices.len().div_ceil(2));
    split(positions, indices, depth - 1, out);
    split(positions, right, depth - 1, out);
}

/// Builds the `2^depth` leaf blocks. Fails when there are fewer points than
/// leaves, since that would produce empty blocks.
pub fn build_kdtree(positions: &[[f64; 3]], depth: u32) -> Result<KdPartition> {
    let leaves = 1usize
        .checked_shl(depth)
        .filter(|&l| l <= positions.len())
        .ok_or(Error::DepthTooDeep {
            depth,
            points: positions.len(),
        })?;
    let mut blocks = Vec::with_capacity(leaves);
    split(positions, (0..positions.len()).collect(), depth, &mut blocks);
    Ok(KdPartition { depth, blocks })
}

/// `choose_depth` followed by `build_kdtree`.
pub fn partition_cloud(positions: &[[f64; 3]]) -> Result<KdPartition> {
    if positions.is_empty() {
        return Err(Error::InvalidParameter("cannot partition an empty cloud".into()));
    }
    build_kdtree(positions, choose_depth(positions.len()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn published_depths() {
        assert_eq!(choose_depth(765_821), 12);
        assert_eq!(choose_depth(857_966), 13);
        assert_eq!(choose_depth(757_691), 12);
        assert_eq!(choose_depth(805_285), 12);
        assert_eq!(choose_depth(1_089_091), 13);
        assert_eq!(choose_depth(150), 0);
        assert_eq!(choose_depth(200), 0);
        assert_eq!(choose_depth(201), 1);
        assert_eq!(choose_depth(1), 0);
    }

    #[test]
    fn collinear_split() {
        let xs = [5.0, 1.0, 7.0, 3.0, 0.0, 6.0, 2.0, 4.0];
        let pos: Vec<[f64; 3]> = xs.iter().map(|&x| [x, 0.0, 0.0]).collect();
        let part = build_kdtree(&pos, 1).unwrap();
        let mut left = part.blocks[0].clone();
        left.sort();
        let mut right = part.blocks[1].clone();
        right.sort();
        // x in {0,1,2,3} -> indices 4,1,6,3
        assert_eq!(left, vec![1, 3, 4, 6]);
        assert_eq!(right, vec![0, 2, 5, 7]);
    }

    #[test]
    fn odd_count_left_gets_ceiling() {
        let pos: Vec<[f64; 3]> = (0..7).map(|i| [i as f64, 0.0, 0.0]).collect();
        let part = build_kdtree(&pos, 1).unwrap();
        assert_eq!(part.blocks[0].len(), 4);
        assert_eq!(part.blocks[1].len(), 3);
    }

    #[test]
    fn splits_on_widest_axis() {
        let pos = vec![[0.0, 0.0, 0.0], [1.0, 10.0, 0.5], [0.5, 2.0, 1.0], [0.2, 8.0, 0.1]];
        let part = build_kdtree(&pos, 1).unwrap();
        assert_eq!(part.blocks[0], vec![0, 2]);
        assert_eq!(part.blocks[1], vec![3, 1]);
    }

    #[test]
    fn too_deep() {
        let pos = vec![[0.0; 3]; 3];
        assert!(matches!(
            build_kdtree(&pos, 2),
            Err(Error::DepthTooDeep { depth: 2, points: 3 })
        ));
        assert!(build_kdtree(&pos, 64).is_err());
    }

    #[test]
    fn duplicates_split_by_index() {
        let pos = vec![[1.0; 3]; 5];
        let part = build_kdtree(&pos, 1).unwrap();
        assert_eq!(part.blocks, vec![vec![0, 1, 2], vec![3, 4]]);
    }

    fn cloud_strategy() -> impl Strategy<Value = Vec<[f64; 3]>> {
        prop::collection::vec(
            (0i32..64, 0i32..64, 0i32..64).prop_map(|(x, y, z)| [x as f64, y as f64, z as f64]),
            1..600,
        )
    }

    proptest! {
        #[test]
        fn blocks_cover_and_balance(pos in cloud_strategy(), extra in 0u32..3) {
            let n = pos.len();
            let depth = choose_depth(n).max(extra.min(n.ilog2()));
            let part = build_kdtree(&pos, depth).unwrap();
            prop_assert_eq!(part.blocks.len(), 1 << depth);
            let mut all: Vec<usize> = part.blocks.concat();
            all.sort_unstable();
            prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
            let lo = n >> depth;
            let hi = n.div_ceil(1 << depth);
            for b in &part.blocks {
                prop_assert!(b.len() == lo || b.len() == hi);
            }
            if n > MAX_BLOCK_POINTS && depth == choose_depth(n) {
                let mean = n as f64 / (1u64 << depth) as f64;
                prop_assert!(mean > 100.0 && mean <= 200.0);
                for b in &part.blocks {
                    prop_assert!(b.len() >= 100 && b.len() <= 200);
                }
            }
            prop_assert_eq!(build_kdtree(&pos, depth).unwrap(), part);
        }

        #[test]
        fn block_sets_ignore_input_order(
            pos in prop::collection::hash_set((0i32..1000, 0i32..1000, 0i32..1000), 2..300),
            seed in any::<u64>(),
        ) {
            let pos: Vec<[f64; 3]> = pos.into_iter().map(|(x, y, z)| [x as f64, y as f64, z as f64]).collect();
            let mut perm: Vec<usize> = (0..pos.len()).collect();
            let mut s = seed;
            for i in (1..perm.len()).rev() {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                perm.swap(i, (s >> 33) as usize % (i + 1));
            }
            let shuffled: Vec<[f64; 3]> = perm.iter().map(|&i| pos[i]).collect();
            let depth = choose_depth(pos.len()).max(1);
            let a = build_kdtree(&pos, depth).unwrap();
            let b = build_kdtree(&shuffled, depth).unwrap();
            for (ba, bb) in a.blocks.iter().zip(&b.blocks) {
                let mut sa: Vec<_> = ba.iter().map(|&i| pos[i].map(f64::to_bits)).collect();
                let mut sb: Vec<_> = bb.iter().map(|&i| shuffled[i].map(f64::to_bits)).collect();
                sa.sort_unstable();
                sb.sort_unstable();
                prop_assert_eq!(sa, sb);
            }
        }
    }
}
