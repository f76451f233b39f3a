//! Encoder and decoder pipelines.
//!
//! Encoding is split in two: [`analyze`] partitions the cloud and computes
//! every block's graph transform coefficients once, then
//! [`AnalyzedCloud::encode_mode`] quantizes and entropy-codes them for a
//! given `(qp, x)`. Mode selection evaluates many `(qp, x)` pairs against one
//! analysis.

use rayon::prelude::*;

use super::bitstream::{Bitstream, ChannelPayload, Header};
use super::entropy::{entropy_decode, entropy_encode};
use super::model::estimate_model;
use super::quant::{block_distortion, dequantize, quantize};
use super::rdo::{rdo_select_constrained, rdo_select_lagrangian, ConstrainedChoice, LagrangianChoice};
use crate::cloud::PointCloud;
use crate::color::{luma, rgb_to_ycbcr};
use crate::error::{Error, Result};
use crate::partition::{build_kdtree, partition_cloud, KdPartition};
use crate::transform::{
    block_transform, forward_gt, gather_positions, gather_values, inverse_gt, GraphParams, GraphTransform,
};

/// Transforms are kept in memory between analysis and reconstruction when
/// they fit in this budget, and recomputed otherwise.
pub const TRANSFORM_CACHE_BYTES: usize = 256 << 20;

pub const DEFAULT_M: f64 = 0.85;
pub const DEFAULT_MODE_CANDIDATES: [u16; 5] = [4, 8, 16, 32, 64];

/// Which attribute channels are coded.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChannelSet {
    Luma,
    YCbCr,
}

impl ChannelSet {
    pub fn names(self) -> &'static [&'static str] {
        match self {
            ChannelSet::Luma => &["Y"],
            ChannelSet::YCbCr => &["Y", "Cb", "Cr"],
        }
    }

    pub fn count(self) -> u8 {
        self.names().len() as u8
    }

    pub fn from_count(count: u8) -> Option<Self> {
        match count {
            1 => Some(ChannelSet::Luma),
            3 => Some(ChannelSet::YCbCr),
            _ => None,
        }
    }

    /// Pulls the channel signals from `cloud`, converting from RGB if the
    /// cloud has no YCbCr channels.
    pub fn extract(self, cloud: &PointCloud) -> Result<Vec<Vec<f64>>> {
        match self {
            ChannelSet::Luma => Ok(vec![luma(cloud)?]),
            ChannelSet::YCbCr => {
                let source = if ["Y", "Cb", "Cr"].iter().all(|c| cloud.has_channel(c)) {
                    cloud.clone()
                } else {
                    rgb_to_ycbcr(cloud)?
                };
                Ok(["Y", "Cb", "Cr"]
                    .iter()
                    .map(|c| source.channel(c).unwrap().to_vec())
                    .collect())
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ModeSelection {
    /// Use exactly this many leading dimensions.
    Fixed(u16),
    /// Minimize `D + λR` over the candidate list.
    Lagrangian,
    /// Minimize `D` subject to `R / points <= max_bpp`.
    Constrained { max_bpp: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuantConfig {
    pub qp: u16,
    pub mode: ModeSelection,
    pub m: f64,
    pub candidates: Vec<u16>,
}

impl QuantConfig {
    pub fn new(qp: u16, mode: ModeSelection) -> Self {
        Self {
            qp,
            mode,
            m: DEFAULT_M,
            candidates: DEFAULT_MODE_CANDIDATES.to_vec(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.qp == 0 {
            return Err(Error::InvalidParameter("qp must be at least 1".into()));
        }
        if !self.m.is_finite() || self.m < 0.0 {
            return Err(Error::InvalidParameter(format!("m={} must be non-negative", self.m)));
        }
        match self.mode {
            ModeSelection::Fixed(0) => Err(Error::InvalidParameter("mode must be at least 1".into())),
            ModeSelection::Fixed(_) => Ok(()),
            ModeSelection::Lagrangian | ModeSelection::Constrained { .. } if self.candidates.is_empty() => Err(
                Error::InvalidParameter("automatic mode selection needs candidates".into()),
            ),
            _ if self.candidates.contains(&0) => {
                Err(Error::InvalidParameter("mode candidates must be at least 1".into()))
            }
            ModeSelection::Constrained { max_bpp } if max_bpp.is_nan() || max_bpp < 0.0 => {
                Err(Error::InvalidParameter(format!("rate limit {max_bpp} bpp")))
            }
            _ => Ok(()),
        }
    }
}

/// A cloud after partitioning and transformation, ready to be coded at any
/// `(qp, x)`.
#[derive(Debug, Clone)]
pub struct AnalyzedCloud {
    positions: Vec<[f64; 3]>,
    channels: ChannelSet,
    params: GraphParams,
    partition: KdPartition,
    signals: Vec<Vec<f64>>,
    /// `[channel][block][dimension]`
    coeffs: Vec<Vec<Vec<f64>>>,
    transforms: Option<Vec<GraphTransform>>,
}

fn transform_bytes(partition: &KdPartition) -> usize {
    partition
        .blocks
        .iter()
        .map(|b| (b.len() * b.len() + b.len()) * std::mem::size_of::<f64>())
        .sum()
}

fn transform_for_block(
    positions: &[[f64; 3]],
    partition: &KdPartition,
    params: &GraphParams,
    block: usize,
) -> Result<GraphTransform> {
    block_transform(&gather_positions(positions, &partition.blocks[block]), params).map_err(|e| match e {
        Error::NoConvergence { .. } => Error::NoConvergence { block: Some(block) },
        other => other,
    })
}

/// Partitions `cloud` and computes every block's coefficients.
///
/// `params` are rounded to binary32 first, exactly as the decoder will read
/// them from the header.
pub fn analyze(cloud: &PointCloud, channels: ChannelSet, params: &GraphParams) -> Result<AnalyzedCloud> {
    let params = params.wire_rounded();
    let params = GraphParams::new(params.f(), params.t())?;
    if u32::try_from(cloud.point_count()).is_err() {
        return Err(Error::InvalidParameter("too many points for the container".into()));
    }
    let signals = channels.extract(cloud)?;
    let positions = cloud.positions().to_vec();
    let partition = partition_cloud(&positions)?;
    let keep = transform_bytes(&partition) <= TRANSFORM_CACHE_BYTES;

    let per_block: Vec<(Option<GraphTransform>, Vec<Vec<f64>>)> = (0..partition.block_count())
        .into_par_iter()
        .map(|b| {
            let tr = transform_for_block(&positions, &partition, &params, b)?;
            let coeffs = signals
                .iter()
                .map(|s| forward_gt(&gather_values(s, &partition.blocks[b]), &tr))
                .collect::<Result<Vec<_>>>()?;
            Ok((keep.then_some(tr), coeffs))
        })
        .collect::<Result<_>>()?;

    let mut coeffs = vec![Vec::with_capacity(partition.block_count()); signals.len()];
    let mut transforms = keep.then(|| Vec::with_capacity(partition.block_count()));
    for (tr, block_coeffs) in per_block {
        if let (Some(all), Some(tr)) = (transforms.as_mut(), tr) {
            all.push(tr);
        }
        for (c, v) in block_coeffs.into_iter().enumerate() {
            coeffs[c].push(v);
        }
    }

    Ok(AnalyzedCloud {
        positions,
        channels,
        params,
        partition,
        signals,
        coeffs,
        transforms,
    })
}

/// One coded operating point.
#[derive(Debug, Clone)]
pub struct EncodedMode {
    pub qp: u16,
    pub mode: u16,
    pub bitstream: Bitstream,
    pub bytes: Vec<u8>,
    /// `[channel][block]` kept quantized coefficients.
    pub quantized: Vec<Vec<Vec<i32>>>,
    /// Total squared error over all coded channels, coefficient domain.
    pub distortion: f64,
}

impl EncodedMode {
    pub fn rate_bits(&self) -> u64 {
        self.bytes.len() as u64 * 8
    }
}

impl AnalyzedCloud {
    pub fn point_count(&self) -> usize {
        self.positions.len()
    }

    pub fn positions(&self) -> &[[f64; 3]] {
        &self.positions
    }

    pub fn channels(&self) -> ChannelSet {
        self.channels
    }

    pub fn params(&self) -> &GraphParams {
        &self.params
    }

    pub fn partition(&self) -> &KdPartition {
        &self.partition
    }

    /// Original per-point values of channel `c`.
    pub fn signal(&self, c: usize) -> &[f64] {
        &self.signals[c]
    }

    /// Per-block coefficients of channel `c`.
    pub fn coefficients(&self, c: usize) -> &[Vec<f64>] {
        &self.coeffs[c]
    }

    pub fn max_block_size(&self) -> usize {
        self.partition.max_block_size()
    }

    pub fn header(&self, qp: u16, mode: u16) -> Header {
        Header {
            channel_count: self.channels.count(),
            qp,
            mode,
            depth: self.partition.depth as u8,
            point_count: self.point_count() as u32,
            f: self.params.f() as f32,
            t: self.params.t() as f32,
        }
    }

    /// Truncates to `mode` dimensions, quantizes with step `qp`, fits the
    /// model and entropy-codes every channel.
    pub fn encode_mode(&self, qp: u16, mode: u16) -> Result<EncodedMode> {
        if qp == 0 || mode == 0 {
            return Err(Error::InvalidParameter("qp and mode must be positive".into()));
        }
        let x = mode as usize;
        let mut quantized = Vec::with_capacity(self.coeffs.len());
        let mut channels = Vec::with_capacity(self.coeffs.len());
        let mut distortion = 0.0;
        for blocks in &self.coeffs {
            let q: Vec<Vec<i32>> = blocks
                .iter()
                .map(|c| c.iter().take(x).map(|&v| quantize(v, qp)).collect())
                .collect();
            distortion += blocks
                .iter()
                .zip(&q)
                .map(|(c, q)| block_distortion(c, q, qp))
                .sum::<f64>();
            let model = estimate_model(&q, x)?;
            let payload = entropy_encode(&q, &model)?;
            channels.push(ChannelPayload { model, payload });
            quantized.push(q);
        }
        let bitstream = Bitstream {
            header: self.header(qp, mode),
            channels,
        };
        let bytes = bitstream.to_bytes();
        Ok(EncodedMode {
            qp,
            mode,
            bitstream,
            bytes,
            quantized,
            distortion,
        })
    }

    /// The attributes the decoder will produce for `encoded`.
    pub fn reconstruct(&self, encoded: &EncodedMode) -> Result<PointCloud> {
        let values = synthesize(
            &self.positions,
            &self.partition,
            &self.params,
            self.transforms.as_deref(),
            &encoded.quantized,
            encoded.qp,
        )?;
        assemble(&self.positions, self.channels, values)
    }
}

/// Dequantizes and inverse-transforms every block of every channel.
fn synthesize(
    positions: &[[f64; 3]],
    partition: &KdPartition,
    params: &GraphParams,
    cache: Option<&[GraphTransform]>,
    quantized: &[Vec<Vec<i32>>],
    qp: u16,
) -> Result<Vec<Vec<f64>>> {
    let per_block: Vec<Vec<Vec<f64>>> = (0..partition.block_count())
        .into_par_iter()
        .map(|b| {
            let owned;
            let tr = match cache {
                Some(all) => &all[b],
                None => {
                    owned = transform_for_block(positions, partition, params, b)?;
                    &owned
                }
            };
            quantized
                .iter()
                .map(|channel| {
                    let mut c = vec![0.0; tr.size()];
                    for (dst, &q) in c.iter_mut().zip(&channel[b]) {
                        *dst = dequantize(q, qp);
                    }
                    inverse_gt(&c, tr)
                })
                .collect()
        })
        .collect::<Result<_>>()?;

    let mut out = vec![vec![0.0; positions.len()]; quantized.len()];
    for (indices, values) in partition.blocks.iter().zip(per_block) {
        for (channel, v) in out.iter_mut().zip(values) {
            for (&i, y) in indices.iter().zip(v) {
                channel[i] = y;
            }
        }
    }
    Ok(out)
}

fn assemble(positions: &[[f64; 3]], channels: ChannelSet, values: Vec<Vec<f64>>) -> Result<PointCloud> {
    let mut cloud = PointCloud::new(positions.to_vec());
    for (name, v) in channels.names().iter().zip(values) {
        cloud.set_channel(*name, v)?;
    }
    Ok(cloud)
}

#[derive(Debug, Clone)]
pub enum Selection {
    Lagrangian(LagrangianChoice),
    Constrained(ConstrainedChoice),
}

#[derive(Debug, Clone)]
pub struct EncodeOutput {
    pub encoded: EncodedMode,
    /// Encoder-side reconstruction; equals the decoder output bit for bit.
    pub reconstruction: PointCloud,
    pub selection: Option<Selection>,
}

impl EncodeOutput {
    pub fn bytes(&self) -> &[u8] {
        &self.encoded.bytes
    }

    pub fn mode(&self) -> u16 {
        self.encoded.mode
    }
}

/// Selects the mode as configured and codes `cloud`.
pub fn encode_analyzed(analyzed: &AnalyzedCloud, config: &QuantConfig) -> Result<EncodeOutput> {
    config.validate()?;
    let (mode, selection) = match config.mode {
        ModeSelection::Fixed(x) => (x, None),
        ModeSelection::Lagrangian => {
            let choice = rdo_select_lagrangian(analyzed, config.qp, config.m, &config.candidates)?;
            (choice.selected, Some(Selection::Lagrangian(choice)))
        }
        ModeSelection::Constrained { max_bpp } => {
            let choice = rdo_select_constrained(analyzed, config.qp, &config.candidates, max_bpp)?;
            (choice.selected, Some(Selection::Constrained(choice)))
        }
    };
    let encoded = analyzed.encode_mode(config.qp, mode)?;
    let reconstruction = analyzed.reconstruct(&encoded)?;
    Ok(EncodeOutput {
        encoded,
        reconstruction,
        selection,
    })
}

pub fn encode_cloud(
    cloud: &PointCloud,
    channels: ChannelSet,
    params: &GraphParams,
    config: &QuantConfig,
) -> Result<EncodeOutput> {
    config.validate()?;
    encode_analyzed(&analyze(cloud, channels, params)?, config)
}

struct GeometryState {
    key: (u8, u32, u32),
    params: GraphParams,
    partition: KdPartition,
    transforms: Option<Vec<GraphTransform>>,
}

/// Decodes bitstreams against one geometry. Partition and transforms are
/// derived from the geometry and header and reused across bitstreams that
/// share `(d, f, t)`.
pub struct Decoder<'g> {
    positions: &'g [[f64; 3]],
    state: Option<GeometryState>,
}

impl<'g> Decoder<'g> {
    pub fn new(geometry: &'g PointCloud) -> Self {
        Self::from_positions(geometry.positions())
    }

    pub fn from_positions(positions: &'g [[f64; 3]]) -> Self {
        Self { positions, state: None }
    }

    fn prepare(&mut self, header: &Header) -> Result<&GeometryState> {
        let key = (header.depth, header.f.to_bits(), header.t.to_bits());
        if self.state.as_ref().is_none_or(|s| s.key != key) {
            let params = GraphParams::new(header.f as f64, header.t as f64)
                .map_err(|e| Error::CorruptBitstream(e.to_string()))?;
            let partition = build_kdtree(self.positions, header.depth as u32)?;
            let transforms = if transform_bytes(&partition) <= TRANSFORM_CACHE_BYTES {
                let positions = self.positions;
                Some(
                    (0..partition.block_count())
                        .into_par_iter()
                        .map(|b| transform_for_block(positions, &partition, &params, b))
                        .collect::<Result<Vec<_>>>()?,
                )
            } else {
                None
            };
            self.state = Some(GeometryState {
                key,
                params,
                partition,
                transforms,
            });
        }
        Ok(self.state.as_ref().unwrap())
    }

    pub fn decode(&mut self, bytes: &[u8]) -> Result<PointCloud> {
        let bitstream = Bitstream::from_bytes(bytes)?;
        let header = bitstream.header;
        if header.point_count as usize != self.positions.len() {
            return Err(Error::PointCountMismatch {
                expected: header.point_count as usize,
                got: self.positions.len(),
            });
        }
        let channels = ChannelSet::from_count(header.channel_count)
            .ok_or_else(|| Error::CorruptBitstream("channel count".into()))?;
        let positions = self.positions;
        let state = self.prepare(&header)?;
        let counts: Vec<usize> = state
            .partition
            .blocks
            .iter()
            .map(|b| b.len().min(header.mode as usize))
            .collect();
        let quantized = bitstream
            .channels
            .iter()
            .map(|ch| entropy_decode(&ch.payload, &ch.model, &counts))
            .collect::<Result<Vec<_>>>()?;
        let values = synthesize(
            positions,
            &state.partition,
            &state.params,
            state.transforms.as_deref(),
            &quantized,
            header.qp,
        )?;
        assemble(positions, channels, values)
    }
}

/// Reconstructs the coded attributes on `geometry`, which must list the
/// same points in the same order the encoder saw.
pub fn decode_cloud(geometry: &PointCloud, bytes: &[u8]) -> Result<PointCloud> {
    Decoder::new(geometry).decode(bytes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn smooth_cloud(n: usize, seed: u64) -> PointCloud {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pos: Vec<[f64; 3]> = (0..n)
            .map(|_| {
                [
                    rng.gen_range(0..256) as f64,
                    rng.gen_range(0..256) as f64,
                    rng.gen_range(0..64) as f64,
                ]
            })
            .collect();
        let y = pos
            .iter()
            .map(|p| 128.0 + 60.0 * (p[0] / 40.0).sin() + 0.2 * p[1] + rng.gen_range(-3.0..3.0))
            .collect();
        PointCloud::new(pos).with_channel("Y", y).unwrap()
    }

    #[test]
    fn decode_matches_encoder_reconstruction() {
        let cloud = smooth_cloud(1500, 1);
        let params = GraphParams::default();
        let out = encode_cloud(
            &cloud,
            ChannelSet::Luma,
            &params,
            &QuantConfig::new(8, ModeSelection::Fixed(16)),
        )
        .unwrap();
        let dec = decode_cloud(&cloud.geometry(), out.bytes()).unwrap();
        assert_eq!(dec, out.reconstruction);
        let again = encode_cloud(
            &cloud,
            ChannelSet::Luma,
            &params,
            &QuantConfig::new(8, ModeSelection::Fixed(16)),
        )
        .unwrap();
        assert_eq!(again.bytes(), out.bytes());
    }

    #[test]
    fn constant_cloud_is_reproduced() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let pos: Vec<[f64; 3]> = (0..900)
            .map(|_| [rng.gen_range(0.0..50.0), rng.gen_range(0.0..50.0), 0.0])
            .collect();
        let k = 77.0;
        let cloud = PointCloud::new(pos).with_channel("Y", vec![k; 900]).unwrap();
        for qp in [1u16, 8, 32] {
            let out = encode_cloud(
                &cloud,
                ChannelSet::Luma,
                &GraphParams::new(0.5, 0.05).unwrap(),
                &QuantConfig::new(qp, ModeSelection::Fixed(1)),
            )
            .unwrap();
            let analyzed = analyze(&cloud, ChannelSet::Luma, &GraphParams::new(0.5, 0.05).unwrap()).unwrap();
            let n_min = analyzed.partition().blocks.iter().map(Vec::len).min().unwrap() as f64;
            let bound = qp as f64 / (2.0 * n_min.sqrt()) + 1e-9;
            for &y in out.reconstruction.channel("Y").unwrap() {
                assert!((y - k).abs() <= bound, "qp={qp}: {y}");
            }
        }
    }

    #[test]
    fn ycbcr_from_rgb() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 400;
        let pos: Vec<[f64; 3]> = (0..n)
            .map(|_| [rng.gen_range(0..40) as f64, rng.gen_range(0..40) as f64, 1.0])
            .collect();
        let mut cloud = PointCloud::new(pos);
        for c in ["R", "G", "B"] {
            cloud
                .set_channel(c, (0..n).map(|_| rng.gen_range(0..=255) as f64).collect())
                .unwrap();
        }
        let out = encode_cloud(
            &cloud,
            ChannelSet::YCbCr,
            &GraphParams::default(),
            &QuantConfig::new(4, ModeSelection::Fixed(200)),
        )
        .unwrap();
        assert_eq!(out.encoded.bitstream.header.channel_count, 3);
        let dec = decode_cloud(&cloud.geometry(), out.bytes()).unwrap();
        assert_eq!(dec, out.reconstruction);
        assert_eq!(dec.channel_names().collect::<Vec<_>>(), ["Y", "Cb", "Cr"]);
    }

    #[test]
    fn config_validation() {
        let cloud = smooth_cloud(300, 4);
        let p = GraphParams::default();
        let mut cfg = QuantConfig::new(8, ModeSelection::Lagrangian);
        cfg.candidates.clear();
        assert!(encode_cloud(&cloud, ChannelSet::Luma, &p, &cfg).is_err());
        assert!(encode_cloud(
            &cloud,
            ChannelSet::Luma,
            &p,
            &QuantConfig::new(0, ModeSelection::Fixed(4))
        )
        .is_err());
        assert!(encode_cloud(
            &cloud,
            ChannelSet::Luma,
            &p,
            &QuantConfig::new(8, ModeSelection::Fixed(0))
        )
        .is_err());
        let no_y = PointCloud::new(vec![[0.0; 3]; 3]);
        assert!(matches!(
            encode_cloud(
                &no_y,
                ChannelSet::Luma,
                &p,
                &QuantConfig::new(8, ModeSelection::Fixed(4))
            ),
            Err(Error::MissingChannel(_))
        ));
    }

    #[test]
    fn decoder_rejects_mismatched_geometry() {
        let cloud = smooth_cloud(500, 5);
        let out = encode_cloud(
            &cloud,
            ChannelSet::Luma,
            &GraphParams::default(),
            &QuantConfig::new(8, ModeSelection::Fixed(8)),
        )
        .unwrap();
        let short = PointCloud::new(cloud.positions()[..499].to_vec());
        assert!(matches!(
            decode_cloud(&short, out.bytes()),
            Err(Error::PointCountMismatch {
                expected: 500,
                got: 499
            })
        ));
        let mut reversed = cloud.positions().to_vec();
        reversed.reverse();
        let dec = decode_cloud(&PointCloud::new(reversed), out.bytes()).unwrap();
        assert_ne!(dec.channel("Y"), out.reconstruction.channel("Y"));
    }

    #[test]
    fn single_point_cloud() {
        let cloud = PointCloud::new(vec![[1.0, 2.0, 3.0]])
            .with_channel("Y", vec![100.0])
            .unwrap();
        let out = encode_cloud(
            &cloud,
            ChannelSet::Luma,
            &GraphParams::default(),
            &QuantConfig::new(1, ModeSelection::Fixed(4)),
        )
        .unwrap();
        assert_eq!(out.reconstruction.channel("Y").unwrap(), &[100.0]);
        assert_eq!(
            decode_cloud(&cloud.geometry(), out.bytes()).unwrap(),
            out.reconstruction
        );
    }
}
