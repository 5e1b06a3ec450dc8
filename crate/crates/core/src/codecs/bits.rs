use std::fmt;
use std::str::FromStr;

use super::CodecError;

/// Growable bit sequence, most significant bit first when packed to bytes.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct BitString {
    bits: Vec<bool>,
}

impl BitString {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn push(&mut self, bit: bool) {
        self.bits.push(bit);
    }

    /// Appends the low `width` bits of `value`, most significant first.
    pub fn push_bits(&mut self, value: u64, width: u32) {
        for i in (0..width).rev() {
            self.bits.push((value >> i) & 1 == 1);
        }
    }

    pub fn extend_from(&mut self, other: &BitString) {
        self.bits.extend_from_slice(&other.bits);
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.bits
    }

    pub fn reader(&self) -> BitReader<'_> {
        BitReader::new(&self.bits)
    }

    /// Packs MSB-first; the final byte is zero-padded.
    pub fn to_bytes(&self) -> Vec<u8> {
        self.bits
            .chunks(8)
            .map(|chunk| {
                chunk
                    .iter()
                    .enumerate()
                    .fold(0u8, |acc, (i, &b)| acc | ((b as u8) << (7 - i)))
            })
            .collect()
    }

    /// Unpacks every bit of `bytes`, padding included.
    pub fn from_bytes(bytes: &[u8]) -> Self {
        let bits = bytes
            .iter()
            .flat_map(|&byte| (0..8).rev().map(move |i| (byte >> i) & 1 == 1))
            .collect();
        Self { bits }
    }

    /// Carry into the trailing bits: flips trailing ones to zero and the last
    /// zero to one.
    pub(crate) fn propagate_carry(&mut self, from: usize) {
        for bit in self.bits[from..].iter_mut().rev() {
            if *bit {
                *bit = false;
            } else {
                *bit = true;
                return;
            }
        }
        panic!("arithmetic coder carry ran past the start of its session");
    }
}

impl From<Vec<bool>> for BitString {
    fn from(bits: Vec<bool>) -> Self {
        Self { bits }
    }
}

impl FromIterator<bool> for BitString {
    fn from_iter<I: IntoIterator<Item = bool>>(iter: I) -> Self {
        Self { bits: iter.into_iter().collect() }
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.bits {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl FromStr for BitString {
    type Err = CodecError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                _ => Err(CodecError::InvalidBitChar(c)),
            })
            .collect::<Result<Vec<_>, _>>()
            .map(Self::from)
    }
}

/// Cursor over a bit slice.
#[derive(Clone, Debug)]
pub struct BitReader<'a> {
    bits: &'a [bool],
    pos: usize,
}

impl<'a> BitReader<'a> {
    pub fn new(bits: &'a [bool]) -> Self {
        Self { bits, pos: 0 }
    }

    pub fn position(&self) -> usize {
        self.pos
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn remaining(&self) -> usize {
        self.bits.len() - self.pos
    }

    pub fn read_bit(&mut self) -> Result<bool, CodecError> {
        let bit = *self.bits.get(self.pos).ok_or(CodecError::Truncated)?;
        self.pos += 1;
        Ok(bit)
    }

    pub fn read_bits(&mut self, width: u32) -> Result<u64, CodecError> {
        let mut v = 0u64;
        for _ in 0..width {
            v = (v << 1) | self.read_bit()? as u64;
        }
        Ok(v)
    }

    /// Bit at an absolute position, reading zeros past the end.
    pub(crate) fn bit_at(&self, pos: usize) -> bool {
        self.bits.get(pos).copied().unwrap_or(false)
    }

    pub(crate) fn seek(&mut self, pos: usize) -> Result<(), CodecError> {
        if pos > self.bits.len() {
            return Err(CodecError::Truncated);
        }
        self.pos = pos;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_round_trip() {
        let b: BitString = "0010101".parse().unwrap();
        assert_eq!(b.len(), 7);
        assert_eq!(b.to_string(), "0010101");
        assert!("01a".parse::<BitString>().is_err());
    }

    #[test]
    fn byte_packing_is_msb_first_and_zero_padded() {
        let b: BitString = "1010011".parse().unwrap();
        assert_eq!(b.to_bytes(), vec![0b1010_0110]);
        let back = BitString::from_bytes(&[0b1010_0110]);
        assert_eq!(back.to_string(), "10100110");
    }

    #[test]
    fn concatenation_is_associative() {
        let (a, b, c): (BitString, BitString, BitString) =
            ("10".parse().unwrap(), "0".parse().unwrap(), "111".parse().unwrap());
        let mut left = a.clone();
        left.extend_from(&b);
        left.extend_from(&c);
        let mut bc = b.clone();
        bc.extend_from(&c);
        let mut right = a;
        right.extend_from(&bc);
        assert_eq!(left, right);
    }

    #[test]
    fn carry_propagation() {
        let mut b: BitString = "0100111".parse().unwrap();
        b.propagate_carry(0);
        assert_eq!(b.to_string(), "0101000");
    }

    #[test]
    fn reader_reports_truncation() {
        let b: BitString = "10".parse().unwrap();
        let mut r = b.reader();
        assert_eq!(r.read_bits(2).unwrap(), 2);
        assert!(matches!(r.read_bit(), Err(CodecError::Truncated)));
        assert!(!r.bit_at(10));
    }
}
