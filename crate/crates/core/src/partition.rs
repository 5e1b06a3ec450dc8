//! Binary-tree bookkeeping for the partitioning processes.
//!
//! Every node of the infinite binary tree is addressed by its heap index:
//! the root is `1` and the children of `n` are `2n` and `2n + 1`. Each node
//! carries a real interval, and the three split rules decide how a node's
//! interval is divided between its children.

use std::fmt;

use num_bigint::BigUint;
use thiserror::Error;

use crate::distributions::Distribution1D;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PartitionError {
    #[error("split point {x} lies outside [{lo}, {hi}]")]
    OutOfBounds { x: f64, lo: f64, hi: f64 },
    #[error("interval [{lo}, {hi}] has no proposal mass left to split")]
    ZeroMass { lo: f64, hi: f64 },
    #[error("heap indices start at 1")]
    ZeroIndex,
    #[error("invalid interval bounds [{lo}, {hi}]")]
    InvalidBounds { lo: f64, hi: f64 },
}

/// A closed interval of the extended real line, or the empty set.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Interval {
    lo: f64,
    hi: f64,
}

impl Interval {
    pub const REAL_LINE: Interval = Interval {
        lo: f64::NEG_INFINITY,
        hi: f64::INFINITY,
    };

    const EMPTY: Interval = Interval {
        lo: f64::INFINITY,
        hi: f64::NEG_INFINITY,
    };

    pub fn new(lo: f64, hi: f64) -> Result<Self, PartitionError> {
        if lo.is_nan() || hi.is_nan() || lo > hi {
            return Err(PartitionError::InvalidBounds { lo, hi });
        }
        Ok(Self { lo, hi })
    }

    pub fn empty() -> Self {
        Self::EMPTY
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn is_empty(&self) -> bool {
        self.lo > self.hi
    }

    pub fn contains(&self, x: f64) -> bool {
        !self.is_empty() && self.lo <= x && x <= self.hi
    }

    pub fn intersect(&self, other: &Interval) -> Interval {
        if self.is_empty() || other.is_empty() {
            return Self::EMPTY;
        }
        let lo = self.lo.max(other.lo);
        let hi = self.hi.min(other.hi);
        if lo > hi {
            Self::EMPTY
        } else {
            Interval { lo, hi }
        }
    }

    /// `self ⊆ other`.
    pub fn is_subset_of(&self, other: &Interval) -> bool {
        self.is_empty() || (!other.is_empty() && other.lo <= self.lo && self.hi <= other.hi)
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_empty() {
            write!(f, "∅")
        } else {
            write!(f, "[{}, {}]", self.lo, self.hi)
        }
    }
}

/// Position of a node in the infinite binary tree.
///
/// Indices up to depth 62 live in a machine word; deeper nodes switch to an
/// arbitrary-precision representation. The representation is canonical, so
/// derived equality is value equality.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct HeapIndex(Repr);

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
enum Repr {
    Word(u64),
    Wide(BigUint),
}

/// Deepest node kept in the word representation.
const WORD_DEPTH_LIMIT: u32 = 62;

impl HeapIndex {
    pub const ROOT: HeapIndex = HeapIndex(Repr::Word(1));

    pub fn new(n: u64) -> Result<Self, PartitionError> {
        match n {
            0 => Err(PartitionError::ZeroIndex),
            n if n.ilog2() <= WORD_DEPTH_LIMIT => Ok(HeapIndex(Repr::Word(n))),
            n => Ok(HeapIndex(Repr::Wide(BigUint::from(n)))),
        }
    }

    pub fn from_biguint(n: BigUint) -> Result<Self, PartitionError> {
        if n.bits() == 0 {
            return Err(PartitionError::ZeroIndex);
        }
        if n.bits() - 1 <= u64::from(WORD_DEPTH_LIMIT) {
            let v = n.iter_u64_digits().next().unwrap_or(0);
            Ok(HeapIndex(Repr::Word(v)))
        } else {
            Ok(HeapIndex(Repr::Wide(n)))
        }
    }

    /// Builds the node reached from the root by following `bits`.
    pub fn from_path(bits: &[bool]) -> Self {
        bits.iter().fold(Self::ROOT, |n, &b| n.child(b))
    }

    /// `floor(log2 n)`.
    pub fn depth(&self) -> u64 {
        match &self.0 {
            Repr::Word(n) => u64::from(n.ilog2()),
            Repr::Wide(n) => n.bits() - 1,
        }
    }

    pub fn is_root(&self) -> bool {
        matches!(self.0, Repr::Word(1))
    }

    pub fn to_u64(&self) -> Option<u64> {
        match &self.0 {
            Repr::Word(n) => Some(*n),
            Repr::Wide(_) => None,
        }
    }

    pub fn to_biguint(&self) -> BigUint {
        match &self.0 {
            Repr::Word(n) => BigUint::from(*n),
            Repr::Wide(n) => n.clone(),
        }
    }

    /// Little-endian 64-bit limbs of the index value.
    pub fn limbs(&self) -> Limbs<'_> {
        match &self.0 {
            Repr::Word(n) => Limbs::Word(Some(*n)),
            Repr::Wide(n) => Limbs::Wide(n.iter_u64_digits()),
        }
    }

    /// `2n + b`.
    pub fn child(&self, bit: bool) -> HeapIndex {
        let b = u64::from(bit);
        match &self.0 {
            Repr::Word(n) if n.ilog2() < WORD_DEPTH_LIMIT => HeapIndex(Repr::Word(2 * n + b)),
            Repr::Word(n) => HeapIndex(Repr::Wide((BigUint::from(*n) << 1u32) + b)),
            Repr::Wide(n) => HeapIndex(Repr::Wide((n << 1u32) + b)),
        }
    }

    /// Branch bit taken at depth `level` (0-based) on the way to this node.
    pub fn path_bit(&self, level: u64) -> bool {
        let depth = self.depth();
        debug_assert!(level < depth);
        let shift = depth - 1 - level;
        match &self.0 {
            Repr::Word(n) => (n >> shift) & 1 == 1,
            Repr::Wide(n) => n.bit(shift),
        }
    }

    /// Branch bits from the root to this node: the binary expansion without
    /// its leading one.
    pub fn path_bits(&self) -> Vec<bool> {
        (0..self.depth()).map(|l| self.path_bit(l)).collect()
    }
}

impl fmt::Display for HeapIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.0 {
            Repr::Word(n) => write!(f, "{n}"),
            Repr::Wide(n) => write!(f, "{n}"),
        }
    }
}

pub enum Limbs<'a> {
    Word(Option<u64>),
    Wide(num_bigint::U64Digits<'a>),
}

impl Iterator for Limbs<'_> {
    type Item = u64;

    fn next(&mut self) -> Option<u64> {
        match self {
            Limbs::Word(v) => v.take(),
            Limbs::Wide(it) => it.next(),
        }
    }
}

/// Choice of partitioning process, fixed for a whole encode/decode run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SplitRule {
    /// Every left child equals its parent, every right child is empty.
    Global,
    /// Split at the node's own proposal sample.
    SampleSplit,
    /// Split into two halves of equal proposal mass.
    Dyadic,
}

impl SplitRule {
    pub const ALL: [SplitRule; 3] = [SplitRule::Global, SplitRule::SampleSplit, SplitRule::Dyadic];

    pub fn name(&self) -> &'static str {
        match self {
            SplitRule::Global => "GRCG",
            SplitRule::SampleSplit => "GRCS",
            SplitRule::Dyadic => "GRCD",
        }
    }

    /// Two-bit tag used by the bitstream container.
    pub fn tag(&self) -> u8 {
        match self {
            SplitRule::Global => 0,
            SplitRule::SampleSplit => 1,
            SplitRule::Dyadic => 2,
        }
    }

    pub fn from_tag(tag: u8) -> Option<Self> {
        match tag {
            0 => Some(SplitRule::Global),
            1 => Some(SplitRule::SampleSplit),
            2 => Some(SplitRule::Dyadic),
            _ => None,
        }
    }
}

impl fmt::Display for SplitRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for SplitRule {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "GRCG" | "GLOBAL" => Ok(SplitRule::Global),
            "GRCS" | "SAMPLE" | "SAMPLESPLIT" => Ok(SplitRule::SampleSplit),
            "GRCD" | "DYADIC" => Ok(SplitRule::Dyadic),
            other => Err(format!("unknown variant `{other}`")),
        }
    }
}

pub fn split_global(s: &Interval) -> (Interval, Interval) {
    (*s, Interval::empty())
}

/// Splits `s` at `x`; both children keep `x` as a shared endpoint.
pub fn split_sample(s: &Interval, x: f64) -> Result<(Interval, Interval), PartitionError> {
    if !s.contains(x) {
        return Err(PartitionError::OutOfBounds {
            x,
            lo: s.lo,
            hi: s.hi,
        });
    }
    Ok((Interval { lo: s.lo, hi: x }, Interval { lo: x, hi: s.hi }))
}

/// Proposal-median split point of `s`.
pub fn dyadic_split_point(s: &Interval, proposal: &Distribution1D) -> Result<f64, PartitionError> {
    let zero_mass = || PartitionError::ZeroMass { lo: s.lo, hi: s.hi };
    if s.is_empty() || proposal.mass(s) <= 0.0 {
        return Err(zero_mass());
    }
    let c = proposal.quantile_within(s, 0.5);
    // Both halves must be non-degenerate for the split to be usable.
    if !(c > s.lo && c < s.hi) {
        return Err(zero_mass());
    }
    Ok(c)
}

pub fn split_dyadic(
    s: &Interval,
    proposal: &Distribution1D,
) -> Result<(Interval, Interval), PartitionError> {
    let c = dyadic_split_point(s, proposal)?;
    split_sample(s, c)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn iv(lo: f64, hi: f64) -> Interval {
        Interval::new(lo, hi).unwrap()
    }

    #[test]
    fn global_split_keeps_parent() {
        assert_eq!(split_global(&Interval::REAL_LINE), (Interval::REAL_LINE, Interval::empty()));
        let (l, r) = split_global(&iv(0.0, 1.0));
        assert_eq!(l, iv(0.0, 1.0));
        assert!(r.is_empty());
        let (l, r) = split_global(&Interval::empty());
        assert!(l.is_empty() && r.is_empty());
    }

    #[test]
    fn sample_split_examples() {
        assert_eq!(split_sample(&iv(0.0, 1.0), 0.25).unwrap(), (iv(0.0, 0.25), iv(0.25, 1.0)));
        let (l, r) = split_sample(&Interval::REAL_LINE, 0.0).unwrap();
        assert_eq!(l, iv(f64::NEG_INFINITY, 0.0));
        assert_eq!(r, iv(0.0, f64::INFINITY));
        assert!(matches!(
            split_sample(&iv(0.0, 1.0), 2.0),
            Err(PartitionError::OutOfBounds { .. })
        ));
    }

    #[test]
    fn dyadic_split_of_real_line_is_median() {
        let p = Distribution1D::gaussian(0.0, 1.0).unwrap();
        let (l, r) = split_dyadic(&Interval::REAL_LINE, &p).unwrap();
        assert!(l.hi().abs() < 1e-12);
        assert_eq!(l.hi(), r.lo());
    }

    #[test]
    fn dyadic_split_of_positive_half_line() {
        let p = Distribution1D::gaussian(0.0, 1.0).unwrap();
        let (l, r) = split_dyadic(&iv(0.0, f64::INFINITY), &p).unwrap();
        let oracle = grc_testkit::bisect(
            |c| grc_testkit::gaussian_cdf_by_quadrature(c, 0.0, 1.0) - 0.75,
            0.0,
            2.0,
            1e-10,
        );
        assert!((l.hi() - oracle).abs() < 1e-6, "{} vs {}", l.hi(), oracle);
        assert!((p.mass(&l) - p.mass(&r)).abs() < 1e-9);
    }

    #[test]
    fn dyadic_split_rejects_massless_interval() {
        let p = Distribution1D::gaussian(0.0, 1.0).unwrap();
        assert!(matches!(
            split_dyadic(&iv(1.0, 1.0), &p),
            Err(PartitionError::ZeroMass { .. })
        ));
    }

    #[test]
    fn path_bits_examples() {
        assert!(HeapIndex::ROOT.path_bits().is_empty());
        assert_eq!(HeapIndex::new(6).unwrap().path_bits(), vec![true, false]);
        let c = HeapIndex::new(5).unwrap().child(true);
        assert_eq!(c, HeapIndex::new(11).unwrap());
        assert_eq!(c.path_bits(), vec![false, true, true]);
        assert_eq!(HeapIndex::new(0), Err(PartitionError::ZeroIndex));
    }

    #[test]
    fn deep_indices_switch_representation() {
        let mut n = HeapIndex::ROOT;
        for _ in 0..62 {
            n = n.child(true);
        }
        assert_eq!(n.to_u64(), Some(u64::MAX >> 1));
        let deeper = n.child(false);
        assert_eq!(deeper.depth(), 63);
        assert!(deeper.to_u64().is_none());
        assert_eq!(deeper.to_biguint(), BigUint::from(u64::MAX - 1));
        assert_eq!(HeapIndex::from_biguint(deeper.to_biguint()).unwrap(), deeper);
        assert_eq!(HeapIndex::new(u64::MAX - 1).unwrap(), deeper);
        let mut bits = deeper.path_bits();
        assert_eq!(bits.len(), 63);
        assert!(!bits.pop().unwrap());
        assert!(bits.iter().all(|&b| b));
    }
}
