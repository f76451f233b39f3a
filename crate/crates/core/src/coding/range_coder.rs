//! Byte-oriented range coder with a 32-bit range and carry propagation
//! (the LZMA construction), driven by 16-bit cumulative frequency tables.

use super::model::{FreqTable, PROB_BITS, PROB_TOTAL};
use crate::error::{Error, Result};

const TOP: u32 = 1 << 24;

pub struct RangeEncoder {
    low: u64,
    range: u32,
    cache: u8,
    cache_size: u64,
    out: Vec<u8>,
}

impl Default for RangeEncoder {
    fn default() -> Self {
        Self::new()
    }
}

impl RangeEncoder {
    pub fn new() -> Self {
        Self {
            low: 0,
            range: u32::MAX,
            cache: 0,
            cache_size: 1,
            out: Vec::new(),
        }
    }

    pub fn encode(&mut self, cum: u32, freq: u32) {
        debug_assert!(freq > 0 && cum + freq <= PROB_TOTAL);
        let r = self.range >> PROB_BITS;
        self.low += r as u64 * cum as u64;
        self.range = r * freq;
        while self.range < TOP {
            self.range <<= 8;
            self.shift_low();
        }
    }

    fn shift_low(&mut self) {
        if (self.low as u32) < 0xFF00_0000 || (self.low >> 32) != 0 {
            let carry = (self.low >> 32) as u8;
            let mut byte = self.cache;
            loop {
                self.out.push(byte.wrapping_add(carry));
                byte = 0xFF;
                self.cache_size -= 1;
                if self.cache_size == 0 {
                    break;
                }
            }
            self.cache = (self.low >> 24) as u8;
        }
        self.cache_size += 1;
        self.low = (self.low & 0x00FF_FFFF) << 8;
    }

    pub fn finish(mut self) -> Vec<u8> {
        for _ in 0..5 {
            self.shift_low();
        }
        self.out
    }
}

pub struct RangeDecoder<'a> {
    data: &'a [u8],
    pos: usize,
    range: u32,
    code: u32,
}

impl<'a> RangeDecoder<'a> {
    pub fn new(data: &'a [u8]) -> Result<Self> {
        if data.len() < 5 {
            return Err(Error::BitstreamTruncated(
                "range coder payload shorter than 5 bytes".into(),
            ));
        }
        if data[0] != 0 {
            return Err(Error::CorruptBitstream("range coder lead byte is not zero".into()));
        }
        let code = u32::from_be_bytes([data[1], data[2], data[3], data[4]]);
        Ok(Self {
            data,
            pos: 5,
            range: u32::MAX,
            code,
        })
    }

    pub fn decode(&mut self, table: &FreqTable) -> Result<i32> {
        let r = self.range >> PROB_BITS;
        let target = self.code / r;
        if target >= PROB_TOTAL {
            return Err(Error::CorruptBitstream("range coder state out of bounds".into()));
        }
        let (symbol, cum, freq) = table.symbol_at(target);
        self.code -= r * cum;
        self.range = r * freq;
        while self.range < TOP {
            let byte = *self
                .data
                .get(self.pos)
                .ok_or_else(|| Error::BitstreamTruncated("range coder ran out of payload bytes".into()))?;
            self.pos += 1;
            self.range <<= 8;
            self.code = (self.code << 8) | byte as u32;
        }
        Ok(symbol)
    }

    /// Checks that the whole payload was consumed by the expected symbols.
    /// The encoder flushes `low` verbatim, so a clean stream leaves the
    /// code register at exactly zero.
    pub fn finish(self) -> Result<()> {
        if self.code != 0 {
            return Err(Error::CorruptBitstream("range coder final state mismatch".into()));
        }
        if self.pos != self.data.len() {
            return Err(Error::CorruptBitstream(format!(
                "{} trailing payload bytes",
                self.data.len() - self.pos
            )));
        }
        Ok(())
    }
}
