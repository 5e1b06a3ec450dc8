//! Elias universal integer codes.

use super::{BitReader, BitString, CodecError};

fn floor_log2(n: u64) -> u32 {
    63 - n.leading_zeros()
}

/// Appends the γ code of `n ≥ 1`: `floor(log2 n)` zeros, then `n` in binary.
pub fn write_gamma(n: u64, out: &mut BitString) -> Result<(), CodecError> {
    if n == 0 {
        return Err(CodecError::ZeroInput);
    }
    let k = floor_log2(n);
    out.push_bits(0, k);
    out.push_bits(n, k + 1);
    Ok(())
}

pub fn read_gamma(reader: &mut BitReader<'_>) -> Result<u64, CodecError> {
    let mut k = 0u32;
    while !reader.read_bit()? {
        k += 1;
        if k > 63 {
            return Err(CodecError::Overflow);
        }
    }
    Ok((1u64 << k) | reader.read_bits(k)?)
}

pub fn elias_gamma_encode(n: u64) -> Result<BitString, CodecError> {
    let mut out = BitString::new();
    write_gamma(n, &mut out)?;
    Ok(out)
}

/// Length of the γ code, `2 floor(log2 n) + 1`.
pub fn gamma_len(n: u64) -> usize {
    2 * floor_log2(n) as usize + 1
}

/// Appends the δ code of `n ≥ 1`: γ of the bit length, then the bits of `n`
/// below its leading one.
pub fn write_delta(n: u64, out: &mut BitString) -> Result<(), CodecError> {
    if n == 0 {
        return Err(CodecError::ZeroInput);
    }
    let k = floor_log2(n);
    write_gamma(k as u64 + 1, out)?;
    out.push_bits(n, k);
    Ok(())
}

pub fn read_delta(reader: &mut BitReader<'_>) -> Result<u64, CodecError> {
    let len = read_gamma(reader)?;
    if len > 64 {
        return Err(CodecError::Overflow);
    }
    let k = (len - 1) as u32;
    Ok((1u64 << k) | reader.read_bits(k)?)
}

pub fn elias_delta_encode(n: u64) -> Result<BitString, CodecError> {
    let mut out = BitString::new();
    write_delta(n, &mut out)?;
    Ok(out)
}

/// Length of the δ code, `floor(log2 n) + 2 floor(log2(floor(log2 n) + 1)) + 1`.
pub fn delta_len(n: u64) -> usize {
    let k = floor_log2(n) as u64;
    k as usize + gamma_len(k + 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gamma_examples() {
        assert_eq!(elias_gamma_encode(1).unwrap().to_string(), "1");
        assert_eq!(elias_gamma_encode(5).unwrap().to_string(), "00101");
        assert!(matches!(elias_gamma_encode(0), Err(CodecError::ZeroInput)));
    }

    #[test]
    fn delta_examples() {
        assert_eq!(elias_delta_encode(1).unwrap().to_string(), "1");
        assert_eq!(elias_delta_encode(17).unwrap().to_string(), "001010001");
    }

    #[test]
    fn round_trips() {
        for n in 1..=10_000u64 {
            let g = elias_gamma_encode(n).unwrap();
            assert_eq!(read_gamma(&mut g.reader()).unwrap(), n);
            let d = elias_delta_encode(n).unwrap();
            assert_eq!(read_delta(&mut d.reader()).unwrap(), n);
        }
        for n in [u64::MAX, u64::MAX - 1, 1 << 63, 1 << 62] {
            let d = elias_delta_encode(n).unwrap();
            assert_eq!(read_delta(&mut d.reader()).unwrap(), n);
            let g = elias_gamma_encode(n).unwrap();
            assert_eq!(read_gamma(&mut g.reader()).unwrap(), n);
        }
    }

    #[test]
    fn lengths_match_closed_forms() {
        for n in 1..=100_000u64 {
            let lg = (n as f64).log2().floor() as usize;
            assert_eq!(elias_gamma_encode(n).unwrap().len(), 2 * lg + 1);
            assert_eq!(gamma_len(n), 2 * lg + 1);
            let llg = ((lg + 1) as f64).log2().floor() as usize;
            assert_eq!(elias_delta_encode(n).unwrap().len(), lg + 2 * llg + 1);
            assert_eq!(delta_len(n), lg + 2 * llg + 1);
        }
    }

    #[test]
    fn truncated_input_is_an_error() {
        let g = elias_gamma_encode(37).unwrap();
        let cut: BitString = g.as_slice()[..g.len() - 1].to_vec().into();
        assert!(matches!(read_gamma(&mut cut.reader()), Err(CodecError::Truncated)));
        let d = elias_delta_encode(37).unwrap();
        let cut: BitString = d.as_slice()[..3].to_vec().into();
        assert!(matches!(read_delta(&mut cut.reader()), Err(CodecError::Truncated)));
    }
}
