//! Codewords for heap indices and the v1 container.
//!
//! Payloads, with `D` the depth of the index:
//!
//! * dyadic: `γ(D + 1)` followed by the `D` path bits;
//! * sample-splitting: `γ(D + 1)` followed by one arithmetic-coding session
//!   over the path bits, each weighted by the proposal masses of the two
//!   children of its parent (omitted when `D = 0`);
//! * global: `γ(D + 1)`.
//!
//! The container prefixes a payload with the magic nibble `1010` and a 2-bit
//! rule tag.

use num_bigint::BigUint;

use super::elias::{read_gamma, write_gamma};
use super::{ArithmeticDecoder, ArithmeticEncoder, BitReader, BitString, CodecError};
use crate::distributions::Distribution1D;
use crate::engine::{node_randoms, RecResult};
use crate::partition::{split_sample, HeapIndex, Interval, SplitRule};

pub const MAGIC: u64 = 0b1010;
pub const HEADER_BITS: usize = 6;

fn write_depth(depth: u64, out: &mut BitString) -> Result<(), CodecError> {
    write_gamma(depth.checked_add(1).ok_or(CodecError::Overflow)?, out)
}

fn read_depth(reader: &mut BitReader<'_>) -> Result<u64, CodecError> {
    Ok(read_gamma(reader)? - 1)
}

fn check_rule(result: &RecResult, rule: SplitRule) -> Result<(), CodecError> {
    if result.rule != rule {
        return Err(CodecError::WrongRule { expected: rule, found: result.rule });
    }
    Ok(())
}

/// Proposal masses of the two children of `parent` split at `x`, the symbol
/// weights of the path bit.
fn child_masses(proposal: &Distribution1D, parent: &Interval, x: f64) -> Result<(f64, f64), CodecError> {
    let (left, right) = split_sample(parent, x).map_err(|_| CodecError::PrecisionExhausted)?;
    let masses = (proposal.mass(&left), proposal.mass(&right));
    if masses.0 + masses.1 <= 0.0 {
        return Err(CodecError::PrecisionExhausted);
    }
    Ok(masses)
}

pub fn write_grcd_code(result: &RecResult, out: &mut BitString) -> Result<(), CodecError> {
    check_rule(result, SplitRule::Dyadic)?;
    write_depth(result.depth, out)?;
    for bit in result.heap_index.path_bits() {
        out.push(bit);
    }
    Ok(())
}

pub fn encode_grcd_code(result: &RecResult) -> Result<BitString, CodecError> {
    let mut out = BitString::new();
    write_grcd_code(result, &mut out)?;
    Ok(out)
}

pub fn decode_grcd_code(reader: &mut BitReader<'_>) -> Result<HeapIndex, CodecError> {
    let depth = read_depth(reader)?;
    if depth > reader.remaining() as u64 {
        return Err(CodecError::Truncated);
    }
    let path = (0..depth).map(|_| reader.read_bit()).collect::<Result<Vec<_>, _>>()?;
    Ok(HeapIndex::from_path(&path))
}

/// Encodes a sample-splitting result from its bound trace: the split point
/// at each node is the endpoint shared by the parent and the chosen child.
pub fn write_grcs_code(result: &RecResult, proposal: &Distribution1D, out: &mut BitString) -> Result<(), CodecError> {
    check_rule(result, SplitRule::SampleSplit)?;
    if result.bound_trace.len() as u64 != result.depth + 1 {
        return Err(CodecError::MissingTrace);
    }
    write_depth(result.depth, out)?;
    if result.depth == 0 {
        return Ok(());
    }
    let mut enc = ArithmeticEncoder::new();
    for (level, pair) in result.bound_trace.windows(2).enumerate() {
        let (parent, child) = (&pair[0], &pair[1]);
        let bit = result.heap_index.path_bit(level as u64);
        let x = if bit { child.lo() } else { child.hi() };
        let (w0, w1) = child_masses(proposal, parent, x)?;
        enc.encode_weighted(bit, w0, w1)?;
    }
    enc.finish_into(out);
    Ok(())
}

pub fn encode_grcs_code(result: &RecResult, proposal: &Distribution1D) -> Result<BitString, CodecError> {
    let mut out = BitString::new();
    write_grcs_code(result, proposal, &mut out)?;
    Ok(out)
}

/// Decodes a sample-splitting codeword, rebuilding every split point from the
/// shared randomness.
pub fn decode_grcs_code(
    reader: &mut BitReader<'_>,
    proposal: &Distribution1D,
    seed: u64,
) -> Result<HeapIndex, CodecError> {
    let depth = read_depth(reader)?;
    let mut node = HeapIndex::ROOT;
    if depth == 0 {
        return Ok(node);
    }
    let mut interval = Interval::REAL_LINE;
    let mut dec = ArithmeticDecoder::new(reader);
    for _ in 0..depth {
        let x = proposal.quantile_within(&interval, node_randoms(seed, &node).u_sample);
        let (w0, w1) = child_masses(proposal, &interval, x)?;
        let bit = dec.decode_weighted(w0, w1)?;
        let (left, right) = split_sample(&interval, x).map_err(|_| CodecError::PrecisionExhausted)?;
        interval = if bit { right } else { left };
        node = node.child(bit);
    }
    dec.finish()?;
    Ok(node)
}

pub fn write_grcg_code(result: &RecResult, out: &mut BitString) -> Result<(), CodecError> {
    check_rule(result, SplitRule::Global)?;
    write_depth(result.depth, out)
}

pub fn encode_grcg_code(result: &RecResult) -> Result<BitString, CodecError> {
    let mut out = BitString::new();
    write_grcg_code(result, &mut out)?;
    Ok(out)
}

/// The global process only visits the leftmost spine: depth `D` is index `2^D`.
pub fn decode_grcg_code(reader: &mut BitReader<'_>) -> Result<HeapIndex, CodecError> {
    let depth = read_depth(reader)?;
    Ok(match 1u64.checked_shl(depth as u32).filter(|_| depth < 63) {
        Some(n) => HeapIndex::new(n).expect("nonzero"),
        None => HeapIndex::from_biguint(BigUint::from(1u8) << depth).expect("nonzero"),
    })
}

/// Appends the payload for `result` under its own rule.
pub fn write_payload(result: &RecResult, proposal: &Distribution1D, out: &mut BitString) -> Result<(), CodecError> {
    match result.rule {
        SplitRule::Global => write_grcg_code(result, out),
        SplitRule::SampleSplit => write_grcs_code(result, proposal, out),
        SplitRule::Dyadic => write_grcd_code(result, out),
    }
}

pub fn read_payload(
    reader: &mut BitReader<'_>,
    rule: SplitRule,
    proposal: &Distribution1D,
    seed: u64,
) -> Result<HeapIndex, CodecError> {
    match rule {
        SplitRule::Global => decode_grcg_code(reader),
        SplitRule::SampleSplit => decode_grcs_code(reader, proposal, seed),
        SplitRule::Dyadic => decode_grcd_code(reader),
    }
}

/// Payload only, the quantity bounded by the codelength guarantees.
pub fn payload(result: &RecResult, proposal: &Distribution1D) -> Result<BitString, CodecError> {
    let mut out = BitString::new();
    write_payload(result, proposal, &mut out)?;
    Ok(out)
}

/// Full v1 codeword: magic, rule tag, payload.
pub fn serialize(result: &RecResult, proposal: &Distribution1D) -> Result<BitString, CodecError> {
    let mut out = BitString::new();
    out.push_bits(MAGIC, 4);
    out.push_bits(result.rule.tag() as u64, 2);
    write_payload(result, proposal, &mut out)?;
    Ok(out)
}

/// Reads one v1 codeword, leaving the reader just past it.
pub fn deserialize(
    reader: &mut BitReader<'_>,
    proposal: &Distribution1D,
    seed: u64,
) -> Result<(SplitRule, HeapIndex), CodecError> {
    if reader.read_bits(4)? != MAGIC {
        return Err(CodecError::BadMagic);
    }
    let tag = reader.read_bits(2)? as u8;
    let rule = SplitRule::from_tag(tag).ok_or(CodecError::BadRuleTag(tag))?;
    let index = read_payload(reader, rule, proposal, seed)?;
    Ok((rule, index))
}
