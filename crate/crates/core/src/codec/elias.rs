//! Elias Gamma coding for positive integers, plus a zigzag-mapped signed
//! variant. Both codes are prefix-free, so codewords concatenate without
//! separators.

use super::bitstream::{BitReader, BitStream};
use crate::error::{Error, Result};

/// Codeword length `2 floor(log2 n) + 1` of the Elias Gamma code.
pub fn eg_len(n: u64) -> usize {
    debug_assert!(n >= 1);
    2 * (63 - n.leading_zeros() as usize) + 1
}

/// Append the Elias Gamma code of `n >= 1`: `floor(log2 n)` zeros followed by
/// the binary digits of `n` (leading one included), MSB first.
pub fn eg_encode_into(out: &mut BitStream, n: u64) -> Result<()> {
    if n == 0 {
        return Err(Error::ZeroOrNegative(0));
    }
    let width = 63 - n.leading_zeros() as usize; // floor(log2 n)
    for _ in 0..width {
        out.push(false);
    }
    for i in (0..=width).rev() {
        out.push(n & (1 << i) != 0);
    }
    Ok(())
}

pub fn eg_encode(n: u64) -> Result<BitStream> {
    let mut s = BitStream::new();
    eg_encode_into(&mut s, n)?;
    Ok(s)
}

pub fn eg_decode(reader: &mut BitReader<'_>) -> Result<u64> {
    let mut zeros = 0usize;
    while !reader.read_bit()? {
        zeros += 1;
        if zeros > 63 {
            return Err(Error::Decode("Elias Gamma prefix too long".into()));
        }
    }
    let mut value: u64 = 1;
    for _ in 0..zeros {
        value = (value << 1) | u64::from(reader.read_bit()?);
    }
    Ok(value)
}

/// Zigzag map `0, -1, 1, -2, 2, ... -> 0, 1, 2, 3, 4, ...`.
pub fn zigzag(z: i64) -> u64 {
    if z >= 0 {
        2 * z as u64
    } else {
        2 * (-(z + 1)) as u64 + 1
    }
}

pub fn unzigzag(u: u64) -> i64 {
    if u.is_multiple_of(2) {
        (u / 2) as i64
    } else {
        -((u / 2) as i64) - 1
    }
}

/// Signed Elias Gamma: zigzag then shift by one so zero is encodable.
pub fn signed_eg_encode_into(out: &mut BitStream, z: i64) -> Result<()> {
    eg_encode_into(out, zigzag(z) + 1)
}

pub fn signed_eg_encode(z: i64) -> Result<BitStream> {
    let mut s = BitStream::new();
    signed_eg_encode_into(&mut s, z)?;
    Ok(s)
}

pub fn signed_eg_decode(reader: &mut BitReader<'_>) -> Result<i64> {
    let u = eg_decode(reader)?;
    if u == 0 {
        return Err(Error::Decode("invalid signed Elias Gamma codeword".into()));
    }
    Ok(unzigzag(u - 1))
}

/// Codeword length of the signed variant.
pub fn signed_eg_len(z: i64) -> usize {
    eg_len(zigzag(z) + 1)
}
