//! Binary arithmetic coder on 62-bit integer ranges.
//!
//! The encoder keeps `low ∈ [0, 2^62)` and `range ∈ (2^60, 2^62]`. Symbols are
//! weighted by `(w0, w1)`; with `p` the smaller of the two normalised
//! weights, that side receives `floor(range · round(p · 2^53) / 2^53)`,
//! clamped to `[1, range - 1]`, and the other side the remainder. A zero
//! weight gives its symbol an empty subrange. Bit 0 keeps `[low, low + r0)`,
//! bit 1 keeps the rest.
//! Overflow of `low` past `2^62` is carried into the bits already emitted.
//! While `range ≤ 2^60` the top bit of `low` is shifted out.
//!
//! Termination emits the top `j` bits of the smallest multiple `v` of
//! `2^(62-j)` with `[v, v + 2^(62-j)) ⊆ [low, low + range)`, for the least
//! such `j ≤ 3`. Whatever follows the codeword therefore decodes to the same
//! symbols, and the decoder recovers the exact codeword length from its own
//! copy of `low` and `range`.

use super::{BitReader, BitString, CodecError};

const PRECISION: u32 = 62;
const FULL: u64 = 1 << PRECISION;
const MASK: u64 = FULL - 1;
const QUARTER: u64 = 1 << (PRECISION - 2);
const PROB_BITS: u32 = 53;

/// Width of the zero-symbol subrange for symbol weights `(w0, w1)`. The
/// smaller side is rounded to 53 bits first so that it keeps its precision.
fn split(range: u64, w0: f64, w1: f64) -> Result<u64, CodecError> {
    let total = w0 + w1;
    if !(w0 >= 0.0 && w1 >= 0.0 && total > 0.0 && total.is_finite()) {
        return Err(CodecError::InvalidProbability(w0 / total));
    }
    if w1 == 0.0 {
        return Ok(range);
    }
    if w0 == 0.0 {
        return Ok(0);
    }
    let small = w0.min(w1) / total;
    let q = (small * (1u64 << PROB_BITS) as f64).round() as u128;
    let r_small = (((range as u128 * q) >> PROB_BITS) as u64).clamp(1, range - 1);
    Ok(if w0 <= w1 { r_small } else { range - r_small })
}

/// Number of termination bits for the final `(low, range)`.
fn termination_bits(low: u64, range: u64) -> (u32, u64) {
    for j in 0..=3u32 {
        let block = 1u64 << (PRECISION - j);
        let v = low.div_ceil(block) * block;
        if v + block <= low + range {
            return (j, v);
        }
    }
    unreachable!("range invariant violated: range = {range}")
}

pub struct ArithmeticEncoder {
    low: u64,
    range: u64,
    bits: BitString,
}

impl Default for ArithmeticEncoder {
    fn default() -> Self {
        Self::new()
    }
}

impl ArithmeticEncoder {
    pub fn new() -> Self {
        Self { low: 0, range: FULL, bits: BitString::new() }
    }

    /// Codes `bit`, where `p0` is the probability of a zero.
    pub fn encode(&mut self, bit: bool, p0: f64) -> Result<(), CodecError> {
        self.encode_weighted(bit, p0, 1.0 - p0)
    }

    /// Codes `bit` with unnormalised symbol weights.
    pub fn encode_weighted(&mut self, bit: bool, w0: f64, w1: f64) -> Result<(), CodecError> {
        let r0 = split(self.range, w0, w1)?;
        if bit {
            if r0 == self.range {
                return Err(CodecError::PrecisionExhausted);
            }
            self.low += r0;
            self.range -= r0;
            if self.low >= FULL {
                self.low -= FULL;
                self.bits.propagate_carry(0);
            }
        } else {
            if r0 == 0 {
                return Err(CodecError::PrecisionExhausted);
            }
            self.range = r0;
        }
        while self.range <= QUARTER {
            self.bits.push(self.low >> (PRECISION - 1) == 1);
            self.low = (self.low << 1) & MASK;
            self.range <<= 1;
        }
        Ok(())
    }

    /// Terminates the session and appends the codeword to `out`.
    pub fn finish_into(mut self, out: &mut BitString) {
        let (j, mut v) = termination_bits(self.low, self.range);
        if v >= FULL {
            v -= FULL;
            self.bits.propagate_carry(0);
        }
        if j > 0 {
            self.bits.push_bits(v >> (PRECISION - j), j);
        }
        out.extend_from(&self.bits);
    }

    pub fn finish(self) -> BitString {
        let mut out = BitString::new();
        self.finish_into(&mut out);
        out
    }
}

/// Mirror of [`ArithmeticEncoder`] reading from a shared [`BitReader`].
pub struct ArithmeticDecoder<'r, 'a> {
    reader: &'r mut BitReader<'a>,
    start: usize,
    shifts: usize,
    low: u64,
    range: u64,
    value: u64,
}

impl<'r, 'a> ArithmeticDecoder<'r, 'a> {
    pub fn new(reader: &'r mut BitReader<'a>) -> Self {
        let start = reader.position();
        let value = (0..PRECISION as usize).fold(0u64, |v, i| (v << 1) | reader.bit_at(start + i) as u64);
        Self { reader, start, shifts: 0, low: 0, range: FULL, value }
    }

    pub fn decode(&mut self, p0: f64) -> Result<bool, CodecError> {
        self.decode_weighted(p0, 1.0 - p0)
    }

    pub fn decode_weighted(&mut self, w0: f64, w1: f64) -> Result<bool, CodecError> {
        let r0 = split(self.range, w0, w1)?;
        let offset = self.value.wrapping_sub(self.low) & MASK;
        let bit = offset >= r0;
        if bit {
            self.low = (self.low + r0) & MASK;
            self.range -= r0;
        } else {
            self.range = r0;
        }
        while self.range <= QUARTER {
            let next = self.reader.bit_at(self.start + self.shifts + PRECISION as usize);
            self.shifts += 1;
            self.low = (self.low << 1) & MASK;
            self.value = ((self.value << 1) & MASK) | next as u64;
            self.range <<= 1;
        }
        Ok(bit)
    }

    /// Ends the session, leaving the reader just past the codeword.
    pub fn finish(self) -> Result<(), CodecError> {
        let (j, _) = termination_bits(self.low, self.range);
        self.reader.seek(self.start + self.shifts + j as usize)
    }
}
