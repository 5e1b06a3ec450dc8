//! Greedy rejection coding for one-dimensional unimodal density ratios.
//!
//! A sender holding a target `Q` and a receiver sharing a proposal `P` and a
//! seed can communicate an exact sample of `Q` by transmitting only the heap
//! index of the accepted node in a binary search tree over proposal draws.

pub mod distributions;
pub mod codecs;
pub mod engine;
pub mod partition;

pub use distributions::{gaussian_pair_for_targets, Distribution1D, DistributionError, DistributionPair};
pub use engine::{decode, encode, EncoderState, EngineError, RecResult};
pub use partition::{HeapIndex, Interval, PartitionError, SplitRule};
