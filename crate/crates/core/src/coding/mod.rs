//! Quantization, entropy coding, container format and the codec pipeline.

pub mod bitstream;
pub mod codec;
pub mod entropy;
pub mod model;
pub mod quant;
pub mod range_coder;
pub mod rdo;

pub use bitstream::{Bitstream, Header};
pub use codec::{
    analyze, decode_cloud, encode_analyzed, encode_cloud, AnalyzedCloud, ChannelSet, Decoder, EncodeOutput,
    EncodedMode, ModeSelection, QuantConfig, Selection,
};
pub use model::LaplacianModel;
pub use rdo::{rdo_select_constrained, rdo_select_lagrangian, ConstrainedChoice, LagrangianChoice, RdoCandidate};
