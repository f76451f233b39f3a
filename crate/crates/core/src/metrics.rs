//! Quality, rate and transform-efficiency measurements.

use std::io::Write;

use rayon::prelude::*;

use crate::cloud::PointCloud;
use crate::coding::codec::{analyze, ChannelSet};
use crate::error::{Error, Result};
use crate::partition::partition_cloud;
use crate::trainer::{compaction_ratio, sample_block_ids};
use crate::transform::{
    block_transform, forward_dct, forward_gt, gather_positions, gather_values, morton_order, GraphParams,
};

pub const PEAK: f64 = 255.0;

pub fn psnr_from_mse(mse: f64, peak: f64) -> f64 {
    if mse == 0.0 {
        f64::INFINITY
    } else {
        10.0 * (peak * peak / mse).log10()
    }
}

pub fn psnr_from_ssd(ssd: f64, count: usize) -> f64 {
    psnr_from_mse(ssd / count as f64, PEAK)
}

pub fn sum_squared_error(reference: &[f64], test: &[f64]) -> Result<f64> {
    if reference.len() != test.len() {
        return Err(Error::LengthMismatch {
            expected: reference.len(),
            got: test.len(),
        });
    }
    Ok(reference.iter().zip(test).map(|(a, b)| (a - b) * (a - b)).sum())
}

pub fn psnr(reference: &[f64], test: &[f64], peak: f64) -> Result<f64> {
    if reference.is_empty() {
        return Err(Error::InvalidParameter("PSNR of an empty signal".into()));
    }
    Ok(psnr_from_mse(
        sum_squared_error(reference, test)? / reference.len() as f64,
        peak,
    ))
}

/// Luminance PSNR with peak 255; `+inf` when the signals are identical.
pub fn y_psnr(reference: &[f64], test: &[f64]) -> Result<f64> {
    psnr(reference, test, PEAK)
}

pub fn bits_per_point(total_bits: u64, point_count: usize) -> Result<f64> {
    if point_count == 0 {
        return Err(Error::InvalidParameter("bits per point of an empty cloud".into()));
    }
    Ok(total_bits as f64 / point_count as f64)
}

/// `inf` for infinite values, shortest round-trip decimal otherwise.
pub fn format_db(v: f64) -> String {
    if v == f64::INFINITY {
        "inf".into()
    } else {
        v.to_string()
    }
}

/// Population variance of `c_j` over the blocks that have dimension `j`,
/// for `j < max_dim`. Dimensions no block reaches are left out, so the
/// result has `min(max_dim, longest block)` entries.
pub fn residual_variance_profile(blocks: &[Vec<f64>], max_dim: usize) -> Vec<f64> {
    let dims = blocks.iter().map(Vec::len).max().unwrap_or(0).min(max_dim);
    (0..dims)
        .map(|j| {
            let values: Vec<f64> = blocks.iter().filter_map(|b| b.get(j).copied()).collect();
            let mean = values.iter().sum::<f64>() / values.len() as f64;
            values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / values.len() as f64
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompactionRow {
    pub block_id: usize,
    pub gt_ratio: f64,
    pub dct_ratio: f64,
}

/// Graph transform against DCT on the same sampled blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct TransformComparison {
    pub rows: Vec<CompactionRow>,
    pub gt_variance: Vec<f64>,
    pub dct_variance: Vec<f64>,
}

impl TransformComparison {
    pub fn gt_wins(&self) -> usize {
        self.rows.iter().filter(|r| r.gt_ratio >= r.dct_ratio).count()
    }

    pub fn write_compaction_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["block_id", "gt_ratio", "dct_ratio"])?;
        for r in &self.rows {
            w.write_record([r.block_id.to_string(), r.gt_ratio.to_string(), r.dct_ratio.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_variance_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["dim", "var_gt", "var_dct"])?;
        for (j, (g, d)) in self.gt_variance.iter().zip(&self.dct_variance).enumerate() {
            w.write_record([j.to_string(), g.to_string(), d.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Samples `num_blocks` blocks with `seed` and compares the compaction of
/// the graph transform against a DCT of the Morton-ordered block signal.
/// Variance profiles cover the same sample.
pub fn compaction_comparison(
    cloud: &PointCloud,
    channel: &str,
    params: &GraphParams,
    num_blocks: usize,
    k: usize,
    seed: u64,
) -> Result<TransformComparison> {
    if k == 0 || num_blocks == 0 {
        return Err(Error::InvalidParameter("k and the block count must be positive".into()));
    }
    let signal = if channel == "Y" {
        crate::color::luma(cloud)?
    } else {
        cloud.require_channel(channel)?.to_vec()
    };
    let partition = partition_cloud(cloud.positions())?;
    let ids = sample_block_ids(partition.block_count(), num_blocks, seed);

    let coeffs: Vec<(Vec<f64>, Vec<f64>)> = ids
        .par_iter()
        .map(|&b| {
            let idx = &partition.blocks[b];
            let pos = gather_positions(cloud.positions(), idx);
            let values = gather_values(&signal, idx);
            let gt = forward_gt(&values, &block_transform(&pos, params)?)?;
            let ordered: Vec<f64> = morton_order(&pos).into_iter().map(|i| values[i]).collect();
            Ok((gt, forward_dct(&ordered)))
        })
        .collect::<Result<_>>()?;

    let rows = ids
        .iter()
        .zip(&coeffs)
        .map(|(&block_id, (gt, dct))| CompactionRow {
            block_id,
            gt_ratio: compaction_ratio(gt, k),
            dct_ratio: compaction_ratio(dct, k),
        })
        .collect();
    let (gt, dct): (Vec<_>, Vec<_>) = coeffs.into_iter().unzip();
    Ok(TransformComparison {
        rows,
        gt_variance: residual_variance_profile(&gt, usize::MAX),
        dct_variance: residual_variance_profile(&dct, usize::MAX),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RdPoint {
    pub qp: u16,
    pub mode: u16,
    pub bpp: f64,
    pub psnr_db: f64,
    /// Y-channel squared error summed over points.
    pub distortion_ssd: f64,
}

/// Codes `cloud` at every `(qp, mode)` pair, qp-major. Rate counts the
/// whole bitstream; quality is Y only.
pub fn rd_sweep(
    cloud: &PointCloud,
    channels: ChannelSet,
    params: &GraphParams,
    qps: &[u16],
    modes: &[u16],
) -> Result<Vec<RdPoint>> {
    let analyzed = analyze(cloud, channels, params)?;
    let n = analyzed.point_count();
    let reference = analyzed.signal(0);
    let mut points = Vec::with_capacity(qps.len() * modes.len());
    for &qp in qps {
        for &mode in modes {
            let enc = analyzed.encode_mode(qp, mode)?;
            let rec = analyzed.reconstruct(&enc)?;
            let ssd = sum_squared_error(reference, rec.channel("Y").unwrap())?;
            points.push(RdPoint {
                qp,
                mode,
                bpp: bits_per_point(enc.rate_bits(), n)?,
                psnr_db: psnr_from_ssd(ssd, n),
                distortion_ssd: ssd,
            });
        }
    }
    Ok(points)
}

pub fn write_rd_csv<W: Write>(points: &[RdPoint], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["qp", "x", "bpp", "psnr"])?;
    for p in points {
        w.write_record([
            p.qp.to_string(),
            p.mode.to_string(),
            p.bpp.to_string(),
            format_db(p.psnr_db),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn psnr_examples() {
        let a = [10.0, 20.0, 30.0];
        assert_eq!(y_psnr(&a, &a).unwrap(), f64::INFINITY);
        assert_eq!(y_psnr(&[0.0; 4], &[255.0; 4]).unwrap(), 0.0);
        let v = y_psnr(&[0.0, 0.0], &[1.0, -1.0]).unwrap();
        assert!((v - 48.1308036086791).abs() < 1e-12);
        assert!(y_psnr(&a, &a[..2]).is_err());
        assert!(y_psnr(&[], &[]).is_err());
        assert!(psnr_from_mse(1.0, PEAK) > psnr_from_mse(1.5, PEAK));
        assert_eq!(format_db(f64::INFINITY), "inf");
    }

    #[test]
    fn bpp_examples() {
        assert_eq!(bits_per_point(1000, 500).unwrap(), 2.0);
        assert_eq!(bits_per_point(0, 7).unwrap(), 0.0);
        assert!(bits_per_point(8, 0).is_err());
    }

    #[test]
    fn variance_profiles() {
        let same = vec![vec![1.0, 2.0, 3.0]; 4];
        assert_eq!(residual_variance_profile(&same, 10), vec![0.0; 3]);
        let ragged = vec![vec![1.0, 5.0], vec![3.0]];
        assert_eq!(residual_variance_profile(&ragged, 10), vec![1.0, 0.0]);
        assert_eq!(residual_variance_profile(&ragged, 1), vec![1.0]);
    }

    fn flat_cloud(value: f64) -> PointCloud {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let pos: Vec<[f64; 3]> = (0..1200)
            .map(|_| {
                [
                    rng.gen_range(0..100) as f64,
                    rng.gen_range(0..100) as f64,
                    rng.gen_range(0..4) as f64,
                ]
            })
            .collect();
        PointCloud::new(pos).with_channel("Y", vec![value; 1200]).unwrap()
    }

    #[test]
    fn constant_signal_is_fully_compact() {
        let cmp = compaction_comparison(&flat_cloud(90.0), "Y", &GraphParams::default(), 50, 20, 1).unwrap();
        assert_eq!(cmp.rows.len(), 8);
        for r in &cmp.rows {
            assert!((r.gt_ratio - 1.0).abs() < 1e-9, "{r:?}");
            assert!((r.dct_ratio - 1.0).abs() < 1e-9, "{r:?}");
        }
        let tail: f64 = cmp.gt_variance[1..].iter().sum();
        assert!(tail < 1e-18);
        let mut csv = Vec::new();
        cmp.write_compaction_csv(&mut csv).unwrap();
        assert_eq!(String::from_utf8(csv).unwrap().lines().count(), 9);
    }

    #[test]
    fn rd_points_are_consistent() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let mut cloud = flat_cloud(0.0);
        let y = cloud
            .positions()
            .iter()
            .map(|p| p[0] * 2.0 + rng.gen_range(-5.0..5.0))
            .collect();
        cloud.set_channel("Y", y).unwrap();
        let pts = rd_sweep(&cloud, ChannelSet::Luma, &GraphParams::default(), &[8, 32], &[4, 16]).unwrap();
        assert_eq!(pts.len(), 4);
        for p in &pts {
            assert!((psnr_from_ssd(p.distortion_ssd, 1200) - p.psnr_db).abs() < 1e-9);
        }
        let mut csv = Vec::new();
        write_rd_csv(&pts, &mut csv).unwrap();
        let mut r = csv::Reader::from_reader(csv.as_slice());
        let rows: Vec<csv::StringRecord> = r.records().collect::<std::result::Result<_, _>>().unwrap();
        for (row, p) in rows.iter().zip(&pts) {
            assert_eq!(row[0].parse::<u16>().unwrap(), p.qp);
            assert_eq!(row[2].parse::<f64>().unwrap(), p.bpp);
            assert_eq!(row[3].parse::<f64>().unwrap(), p.psnr_db);
        }
    }
}
