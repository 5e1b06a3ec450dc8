//! Serialization of GRC outputs: universal integer codes, ζ index coding,
//! path bits and the arithmetic bound coder.

use thiserror::Error;

use crate::partition::SplitRule;

mod arith;
mod bits;
pub mod elias;
pub mod rec;
pub mod zeta;

pub use arith::{ArithmeticDecoder, ArithmeticEncoder};
pub use bits::{BitReader, BitString};
pub use elias::{delta_len, elias_delta_encode, elias_gamma_encode, gamma_len, read_delta, read_gamma, write_delta, write_gamma};
pub use rec::{
    decode_grcd_code, decode_grcg_code, decode_grcs_code, deserialize, encode_grcd_code, encode_grcg_code,
    encode_grcs_code, payload, serialize,
};
pub use zeta::{fit_zeta, zeta_decode, zeta_decode_sequence, zeta_encode, zeta_encode_sequence, ZetaModel};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CodecError {
    #[error("input ended inside a codeword")]
    Truncated,
    #[error("integer codes require n >= 1")]
    ZeroInput,
    #[error("decoded integer does not fit in 64 bits")]
    Overflow,
    #[error("invalid bit character {0:?}")]
    InvalidBitChar(char),
    #[error("branch probability {0} outside [0, 1]")]
    InvalidProbability(f64),
    #[error("symbol probability underflows the coder's range")]
    PrecisionExhausted,
    #[error("zeta exponent must exceed 1, got {0}")]
    InvalidExponent(f64),
    #[error("index {n} outside the model support 1..={max}")]
    OutOfRange { n: u64, max: u64 },
    #[error("log-index samples must be a nonempty set of finite values >= 0")]
    InvalidSample,
    #[error("mean log2 index {mean} exceeds the model maximum {max}")]
    Unfittable { mean: f64, max: f64 },
    #[error("expected a {expected} result, got {found}")]
    WrongRule { expected: SplitRule, found: SplitRule },
    #[error("result carries no bound trace")]
    MissingTrace,
    #[error("missing container magic")]
    BadMagic,
    #[error("unknown rule tag {0}")]
    BadRuleTag(u8),
}
