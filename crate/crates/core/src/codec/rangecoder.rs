//! Byte-oriented arithmetic (range) coder with adaptive frequency
//! models, plus Elias-gamma escape coding for outlier magnitudes.
//!
//! The coder keeps a 32-bit range and renormalizes a byte at a time,
//! deferring carry propagation through a cached byte. Encoder and
//! decoder mirror each other exactly, so any sequence of model calls
//! that matches on both sides round-trips losslessly.

use crate::{Error, Result};

const TOP: u32 = 1 << 24;

/// Largest allowed model total; keeps `range / total` nonzero after
/// renormalization.
pub const MAX_TOTAL: u32 = 1 << 16;

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
        RangeEncoder {
            low: 0,
            range: u32::MAX,
            cache: 0,
            cache_size: 1,
            out: Vec::new(),
        }
    }

    /// Encode a symbol occupying `[cum, cum + freq)` of `total`.
    pub fn encode(&mut self, cum: u32, freq: u32, total: u32) {
        debug_assert!(freq > 0 && cum + freq <= total && total <= MAX_TOTAL);
        let r = self.range / total;
        self.low += r as u64 * cum as u64;
        self.range = r * freq;
        while self.range < TOP {
            self.range <<= 8;
            self.shift_low();
        }
    }

    /// One equiprobable bit.
    pub fn encode_bit_raw(&mut self, bit: bool) {
        self.encode(bit as u32, 1, 2);
    }

    fn shift_low(&mut self) {
        if self.low < 0xFF00_0000 || self.low > 0xFFFF_FFFF {
            let carry = (self.low >> 32) as u8;
            let mut byte = self.cache;
            while self.cache_size > 0 {
                self.out.push(byte.wrapping_add(carry));
                byte = 0xFF;
                self.cache_size -= 1;
            }
            self.cache = (self.low >> 24) as u8;
        }
        self.cache_size += 1;
        self.low = (self.low << 8) & 0xFFFF_FFFF;
    }

    /// Flush and return the byte stream.
    pub fn finish(mut self) -> Vec<u8> {
        for _ in 0..5 {
            self.shift_low();
        }
        self.out
    }
}

pub struct RangeDecoder<'a> {
    code: u32,
    range: u32,
    r_div: u32,
    data: &'a [u8],
    pos: usize,
    overrun: bool,
}

impl<'a> RangeDecoder<'a> {
    pub fn new(data: &'a [u8]) -> Self {
        let mut dec = RangeDecoder {
            code: 0,
            range: u32::MAX,
            r_div: 0,
            data,
            pos: 0,
        overrun: false,
        };
        // First byte is the encoder's carry slot; its bits fall off the
        // 32-bit window after the next four reads.
        for _ in 0..5 {
            dec.code = (dec.code << 8) | dec.next_byte() as u32;
        }
        dec
    }

    fn next_byte(&mut self) -> u8 {
        if self.pos < self.data.len() {
            let b = self.data[self.pos];
            self.pos += 1;
            b
        } else {
            self.overrun = true;
            0
        }
    }

    /// True if decoding consumed more bytes than the stream held, which
    /// only happens on truncated or corrupt input.
    pub fn overran(&self) -> bool {
        self.overrun
    }

    /// Where the symbol's cumulative frequency must fall; follow with
    /// [`RangeDecoder::advance`] for the located symbol.
    pub fn target(&mut self, total: u32) -> u32 {
        debug_assert!(total <= MAX_TOTAL);
        self.r_div = self.range / total;
        (self.code / self.r_div).min(total - 1)
    }

    pub fn advance(&mut self, cum: u32, freq: u32) {
        self.code = self.code.wrapping_sub(self.r_div * cum);
        self.range = self.r_div * freq;
        while self.range < TOP {
            self.code = (self.code << 8) | self.next_byte() as u32;
            self.range <<= 8;
        }
    }

    pub fn decode_bit_raw(&mut self) -> bool {
        let t = self.target(2);
        let bit = t >= 1;
        self.advance(bit as u32, 1);
        bit
    }
}

/// Adaptive frequency table over a small alphabet. Counts grow by a
/// fixed increment per observed symbol and are halved when the total
/// exceeds a cap, so the model tracks local statistics.
#[derive(Debug, Clone)]
pub struct AdaptiveModel {
    freqs: Vec<u32>,
    total: u32,
    increment: u32,
    cap: u32,
}

impl AdaptiveModel {
    pub fn uniform(symbols: usize) -> Self {
        Self::with_init(vec![1; symbols])
    }

    /// Start from explicit prior counts (all must be positive).
    pub fn with_init(freqs: Vec<u32>) -> Self {
        assert!(!freqs.is_empty() && freqs.iter().all(|&f| f > 0));
        let total = freqs.iter().sum();
        let model = AdaptiveModel {
            freqs,
            total,
            increment: 24,
            cap: 1 << 13,
        };
        assert!(model.total <= MAX_TOTAL);
        model
    }

    pub fn symbols(&self) -> usize {
        self.freqs.len()
    }

    pub fn encode(&mut self, enc: &mut RangeEncoder, symbol: usize) {
        let cum: u32 = self.freqs[..symbol].iter().sum();
        enc.encode(cum, self.freqs[symbol], self.total);
        self.update(symbol);
    }

    pub fn decode(&mut self, dec: &mut RangeDecoder) -> usize {
        let target = dec.target(self.total);
        let mut cum = 0u32;
        let mut symbol = self.freqs.len() - 1;
        for (s, &f) in self.freqs.iter().enumerate() {
            if target < cum + f {
                symbol = s;
                break;
            }
            cum += f;
        }
        dec.advance(cum, self.freqs[symbol]);
        self.update(symbol);
        symbol
    }

    fn update(&mut self, symbol: usize) {
        self.freqs[symbol] += self.increment;
        self.total += self.increment;
        if self.total > self.cap {
            self.total = 0;
            for f in self.freqs.iter_mut() {
                *f = (*f + 1) >> 1;
                self.total += *f;
            }
        }
    }
}

/// Elias-gamma code for `n ≥ 1`, sent as equiprobable bits.
pub fn encode_gamma(enc: &mut RangeEncoder, n: u32) {
    debug_assert!(n >= 1);
    let bits = 32 - n.leading_zeros();
    for _ in 0..bits - 1 {
        enc.encode_bit_raw(false);
    }
    for i in (0..bits).rev() {
        enc.encode_bit_raw((n >> i) & 1 == 1);
    }
}

pub fn decode_gamma(dec: &mut RangeDecoder) -> Result<u32> {
    let mut zeros = 0u32;
    while !dec.decode_bit_raw() {
        zeros += 1;
        if zeros > 31 {
            return Err(Error::CorruptPayload("gamma code run too long".into()));
        }
    }
    let mut value = 1u32;
    for _ in 0..zeros {
        value = (value << 1) | dec.decode_bit_raw() as u32;
    }
    Ok(value)
}
