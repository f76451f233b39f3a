//! Grid search for the graph parameters `(f, t)`.

use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::cloud::PointCloud;
use crate::color::luma;
use crate::error::{Error, Result};
use crate::partition::partition_cloud;
use crate::transform::{block_transform, forward_gt, gather_positions, gather_values, GraphParams};

pub const DEFAULT_K: usize = 20;
pub const DEFAULT_GRID_STEP: f64 = 0.05;
pub const DEFAULT_SAMPLE_BLOCKS: usize = 64;

/// Share of the absolute coefficient mass held by the `k` largest
/// magnitudes. An all-zero block counts as perfectly compact.
pub fn compaction_ratio(coeffs: &[f64], k: usize) -> f64 {
    let mut mags: Vec<f64> = coeffs.iter().map(|c| c.abs()).collect();
    mags.sort_by(|a, b| b.total_cmp(a));
    let total: f64 = mags.iter().sum();
    if total == 0.0 {
        return 1.0;
    }
    let top: f64 = mags.iter().take(k).sum();
    (top / total).min(1.0)
}

/// Mean [`compaction_ratio`] over `blocks`.
pub fn compaction_objective(blocks: &[Vec<f64>], k: usize) -> Result<f64> {
    if k == 0 {
        return Err(Error::InvalidParameter("k must be at least 1".into()));
    }
    if blocks.is_empty() {
        return Err(Error::InvalidParameter("no blocks to evaluate".into()));
    }
    Ok(blocks.iter().map(|b| compaction_ratio(b, k)).sum::<f64>() / blocks.len() as f64)
}

/// Grid values `step, 2·step, ...` strictly inside (0, 1). When `1/step` is
/// an integer `n` the values are computed as `i/n` so that e.g. 0.3 lands
/// exactly on the binary64 nearest 0.3.
pub fn grid_values(step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0 && step < 1.0) {
        return Err(Error::InvalidParameter(format!("grid step {step} must lie in (0, 1)")));
    }
    let n = (1.0 / step).round();
    if ((1.0 / step) - n).abs() < 1e-9 {
        let n = n as u32;
        return Ok((1..n).map(|i| i as f64 / n as f64).collect());
    }
    Ok((1..).map(|i| i as f64 * step).take_while(|&v| v < 1.0).collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridCell {
    pub f: f64,
    pub t: f64,
    pub objective: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub best: GraphParams,
    pub best_objective: f64,
    /// Row-major over `f`, then `t`.
    pub grid: Vec<GridCell>,
    pub objective_kind: String,
}

impl TrainReport {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["f", "t", "objective"])?;
        for c in &self.grid {
            w.write_record([c.f.to_string(), c.t.to_string(), c.objective.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Positions and signal of one transform block.
struct TrainingBlock {
    positions: Vec<[f64; 3]>,
    signal: Vec<f64>,
}

fn channel_signal(cloud: &PointCloud, channel: &str) -> Result<Vec<f64>> {
    if channel == "Y" {
        luma(cloud)
    } else {
        Ok(cloud.require_channel(channel)?.to_vec())
    }
}

fn collect_blocks(cloud: &PointCloud, channel: &str, subset: Option<&[usize]>) -> Result<Vec<TrainingBlock>> {
    let signal = channel_signal(cloud, channel)?;
    let partition = partition_cloud(cloud.positions())?;
    let all: Vec<usize>;
    let ids = match subset {
        Some(s) => s,
        None => {
            all = (0..partition.block_count()).collect();
            &all
        }
    };
    Ok(ids
        .iter()
        .map(|&b| TrainingBlock {
            positions: gather_positions(cloud.positions(), &partition.blocks[b]),
            signal: gather_values(&signal, &partition.blocks[b]),
        })
        .collect())
}

fn search(sets: &[Vec<TrainingBlock>], k: usize, grid_step: f64) -> Result<TrainReport> {
    if k == 0 {
        return Err(Error::InvalidParameter("k must be at least 1".into()));
    }
    if sets.is_empty() || sets.iter().any(Vec::is_empty) {
        return Err(Error::InvalidParameter(
            "training needs at least one block per cloud".into(),
        ));
    }
    let values = grid_values(grid_step)?;
    let cells: Vec<(f64, f64)> = values
        .iter()
        .flat_map(|&f| values.iter().map(move |&t| (f, t)))
        .collect();

    let grid: Vec<GridCell> = cells
        .par_iter()
        .map(|&(f, t)| {
            let params = GraphParams::new(f, t)?;
            let mut total = 0.0;
            for blocks in sets {
                let mut sum = 0.0;
                for b in blocks {
                    let tr = block_transform(&b.positions, &params)?;
                    sum += compaction_ratio(&forward_gt(&b.signal, &tr)?, k);
                }
                total += sum / blocks.len() as f64;
            }
            Ok(GridCell {
                f,
                t,
                objective: total / sets.len() as f64,
            })
        })
        .collect::<Result<_>>()?;

    // Cells are ordered by (f, t), so the first maximum is the tie-break winner.
    let mut best = grid[0];
    for c in &grid[1..] {
        if c.objective > best.objective {
            best = *c;
        }
    }
    Ok(TrainReport {
        best: GraphParams::new(best.f, best.t)?,
        best_objective: best.objective,
        grid,
        objective_kind: format!("compaction@{k}"),
    })
}

/// Picks the `(f, t)` maximizing the mean compaction objective over every
/// block of every training cloud.
pub fn train_offline(clouds: &[PointCloud], channel: &str, k: usize, grid_step: f64) -> Result<TrainReport> {
    if clouds.is_empty() {
        return Err(Error::InvalidParameter("no training clouds".into()));
    }
    let sets = clouds
        .iter()
        .map(|c| collect_blocks(c, channel, None))
        .collect::<Result<Vec<_>>>()?;
    search(&sets, k, grid_step)
}

/// `min(count, block_count)` distinct block ids drawn with a seeded
/// generator, ascending.
pub fn sample_block_ids(block_count: usize, count: usize, seed: u64) -> Vec<usize> {
    if count >= block_count {
        return (0..block_count).collect();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ids = rand::seq::index::sample(&mut rng, block_count, count).into_vec();
    ids.sort_unstable();
    ids
}

/// Grid search restricted to a seeded sample of the cloud's own blocks.
pub fn train_online(
    cloud: &PointCloud,
    channel: &str,
    sample_blocks: usize,
    seed: u64,
    k: usize,
    grid_step: f64,
) -> Result<TrainReport> {
    if sample_blocks == 0 {
        return Err(Error::InvalidParameter("sample at least one block".into()));
    }
    let partition = partition_cloud(cloud.positions())?;
    let ids = sample_block_ids(partition.block_count(), sample_blocks, seed);
    search(&[collect_blocks(cloud, channel, Some(&ids))?], k, grid_step)
}
