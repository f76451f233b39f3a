//! Container format. All multi-byte fields are little-endian.
//!
//! ```text
//! 0..4   magic "PCGT"
//! 4      version (1)
//! 5      channel count (1 = Y, 3 = Y Cb Cr)
//! 6..8   qp            u16
//! 8..10  mode x        u16
//! 10     k-d depth     u8
//! 11..15 point count   u32
//! 15..19 f             f32
//! 19..23 t             f32
//! per channel:
//!   u16 dim_count (= x), dim_count x [f32 scale, u16 max_mag],
//!   u32 payload length, payload bytes
//! ```

use super::model::LaplacianModel;
use crate::error::{Error, Result};

pub const MAGIC: [u8; 4] = *b"PCGT";
pub const VERSION: u8 = 1;
pub const HEADER_LEN: usize = 23;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Header {
    pub channel_count: u8,
    pub qp: u16,
    pub mode: u16,
    pub depth: u8,
    pub point_count: u32,
    pub f: f32,
    pub t: f32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelPayload {
    pub model: LaplacianModel,
    pub payload: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Bitstream {
    pub header: Header,
    pub channels: Vec<ChannelPayload>,
}

impl Header {
    pub fn write(&self, out: &mut Vec<u8>) {
        out.extend_from_slice(&MAGIC);
        out.push(VERSION);
        out.push(self.channel_count);
        out.extend_from_slice(&self.qp.to_le_bytes());
        out.extend_from_slice(&self.mode.to_le_bytes());
        out.push(self.depth);
        out.extend_from_slice(&self.point_count.to_le_bytes());
        out.extend_from_slice(&self.f.to_le_bytes());
        out.extend_from_slice(&self.t.to_le_bytes());
    }

    pub fn read(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 4 || bytes[..4] != MAGIC {
            return Err(Error::BadMagic);
        }
        if bytes.len() < HEADER_LEN {
            return Err(Error::BitstreamTruncated("header".into()));
        }
        if bytes[4] != VERSION {
            return Err(Error::UnsupportedVersion(bytes[4]));
        }
        let header = Self {
            channel_count: bytes[5],
            qp: u16::from_le_bytes([bytes[6], bytes[7]]),
            mode: u16::from_le_bytes([bytes[8], bytes[9]]),
            depth: bytes[10],
            point_count: u32::from_le_bytes(bytes[11..15].try_into().unwrap()),
            f: f32::from_le_bytes(bytes[15..19].try_into().unwrap()),
            t: f32::from_le_bytes(bytes[19..23].try_into().unwrap()),
        };
        if !matches!(header.channel_count, 1 | 3) {
            return Err(Error::CorruptBitstream(format!(
                "channel count {} (expected 1 or 3)",
                header.channel_count
            )));
        }
        if header.qp == 0 || header.mode == 0 {
            return Err(Error::CorruptBitstream("qp and mode must be positive".into()));
        }
        Ok(header)
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| Error::BitstreamTruncated(what.to_string()))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u16(&mut self, what: &str) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2, what)?.try_into().unwrap()))
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn f32(&mut self, what: &str) -> Result<f32> {
        Ok(f32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }
}

impl Bitstream {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        self.header.write(&mut out);
        for ch in &self.channels {
            out.extend_from_slice(&(ch.model.dims() as u16).to_le_bytes());
            for (b, m) in ch.model.scales.iter().zip(&ch.model.max_mags) {
                out.extend_from_slice(&b.to_le_bytes());
                out.extend_from_slice(&m.to_le_bytes());
            }
            out.extend_from_slice(&(ch.payload.len() as u32).to_le_bytes());
            out.extend_from_slice(&ch.payload);
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let header = Header::read(bytes)?;
        let mut r = Reader { bytes, pos: HEADER_LEN };
        let mut channels = Vec::with_capacity(header.channel_count as usize);
        for c in 0..header.channel_count {
            let dims = r.u16("dimension count")?;
            if dims != header.mode {
                return Err(Error::CorruptBitstream(format!(
                    "channel {c} carries {dims} model dimensions, header mode is {}",
                    header.mode
                )));
            }
            let mut scales = Vec::with_capacity(dims as usize);
            let mut max_mags = Vec::with_capacity(dims as usize);
            for _ in 0..dims {
                let b = r.f32("model scale")?;
                if !b.is_finite() || b <= 0.0 {
                    return Err(Error::CorruptBitstream(format!("model scale {b}")));
                }
                scales.push(b);
                max_mags.push(r.u16("model bound")?);
            }
            let len = r.u32("payload length")? as usize;
            let payload = r.take(len, "payload")?.to_vec();
            channels.push(ChannelPayload {
                model: LaplacianModel { scales, max_mags },
                payload,
            });
        }
        if r.pos != bytes.len() {
            return Err(Error::CorruptBitstream(format!(
                "{} bytes after last channel",
                bytes.len() - r.pos
            )));
        }
        Ok(Self { header, channels })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sample() -> Bitstream {
        Bitstream {
            header: Header {
                channel_count: 1,
                qp: 8,
                mode: 2,
                depth: 12,
                point_count: 765_821,
                f: 0.3,
                t: 0.6,
            },
            channels: vec![ChannelPayload {
                model: LaplacianModel {
                    scales: vec![12.5, 1e-4],
                    max_mags: vec![40, 0],
                },
                payload: vec![0, 1, 2, 3, 4, 5],
            }],
        }
    }

    #[test]
    fn layout_is_fixed() {
        let bytes = sample().to_bytes();
        assert_eq!(&bytes[..4], b"PCGT");
        assert_eq!(bytes[4], 1);
        assert_eq!(bytes[5], 1);
        assert_eq!(&bytes[6..8], &8u16.to_le_bytes());
        assert_eq!(&bytes[8..10], &2u16.to_le_bytes());
        assert_eq!(bytes[10], 12);
        assert_eq!(&bytes[11..15], &765_821u32.to_le_bytes());
        assert_eq!(&bytes[15..19], &0.3f32.to_le_bytes());
        assert_eq!(&bytes[19..23], &0.6f32.to_le_bytes());
        assert_eq!(&bytes[23..25], &2u16.to_le_bytes());
        assert_eq!(bytes.len(), HEADER_LEN + 2 + 2 * 6 + 4 + 6);
    }

    #[test]
    fn rejects_bad_input() {
        let bytes = sample().to_bytes();
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(Bitstream::from_bytes(&bad), Err(Error::BadMagic)));
        let mut bad = bytes.clone();
        bad[4] = 2;
        assert!(matches!(Bitstream::from_bytes(&bad), Err(Error::UnsupportedVersion(2))));
        assert!(matches!(
            Bitstream::from_bytes(&bytes[..bytes.len() - 1]),
            Err(Error::BitstreamTruncated(_))
        ));
        assert!(matches!(
            Bitstream::from_bytes(&bytes[..10]),
            Err(Error::BitstreamTruncated(_))
        ));
        let mut long = bytes.clone();
        long.push(0);
        assert!(matches!(Bitstream::from_bytes(&long), Err(Error::CorruptBitstream(_))));
        let mut bad = bytes;
        bad[8] = 3;
        assert!(matches!(Bitstream::from_bytes(&bad), Err(Error::CorruptBitstream(_))));
    }

    proptest! {
        #[test]
        fn header_round_trip(
            cc in prop::sample::select(vec![1u8, 3]),
            qp in 1u16.., mode in 1u16.., depth in any::<u8>(), n in any::<u32>(),
            f in 0.0f32..1.0, t in 0.0f32..1.0,
        ) {
            let h = Header { channel_count: cc, qp, mode, depth, point_count: n, f, t };
            let mut out = Vec::new();
            h.write(&mut out);
            prop_assert_eq!(out.len(), HEADER_LEN);
            prop_assert_eq!(Header::read(&out).unwrap(), h);
        }
    }

    #[test]
    fn bitstream_round_trip() {
        let b = sample();
        assert_eq!(Bitstream::from_bytes(&b.to_bytes()).unwrap(), b);
    }
}
