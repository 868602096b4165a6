//! Bit-level stream primitives.
//!
//! Bits are MSB-first within each byte when rendered to hex; the stream is
//! byte-padded with zeros only at render time and the padding never counts
//! toward any bit ledger.

use crate::error::{Error, Result};

/// An append-only bit sequence.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BitStream {
    bits: Vec<bool>,
}

impl BitStream {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, bit: bool) {
        self.bits.push(bit);
    }

    pub fn extend(&mut self, other: &BitStream) {
        self.bits.extend_from_slice(&other.bits);
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn reader(&self) -> BitReader<'_> {
        BitReader {
            bits: &self.bits,
            pos: 0,
        }
    }

    /// `"0"`/`"1"` rendering, no padding.
    pub fn to_bit_string(&self) -> String {
        self.bits.iter().map(|&b| if b { '1' } else { '0' }).collect()
    }

    pub fn from_bit_string(s: &str) -> Result<Self> {
        let mut bits = Vec::with_capacity(s.len());
        for c in s.chars() {
            match c {
                '0' => bits.push(false),
                '1' => bits.push(true),
                c if c.is_whitespace() => {}
                c => return Err(Error::Decode(format!("invalid bit character `{c}`"))),
            }
        }
        Ok(Self { bits })
    }

    /// Hex rendering, MSB-first per byte, zero-padded to a byte boundary.
    pub fn to_hex(&self) -> String {
        let mut out = String::new();
        for chunk in self.bits.chunks(8) {
            let mut byte = 0u8;
            for (i, &b) in chunk.iter().enumerate() {
                if b {
                    byte |= 1 << (7 - i);
                }
            }
            out.push_str(&format!("{byte:02x}"));
        }
        out
    }

    /// Parse hex back into exactly `bit_len` bits; the padding must be zero.
    pub fn from_hex(hex: &str, bit_len: usize) -> Result<Self> {
        let hex: String = hex.chars().filter(|c| !c.is_whitespace()).collect();
        if !hex.len().is_multiple_of(2) {
            return Err(Error::Decode("hex string must have even length".into()));
        }
        let mut bits = Vec::with_capacity(hex.len() * 4);
        for i in (0..hex.len()).step_by(2) {
            let byte = u8::from_str_radix(&hex[i..i + 2], 16)
                .map_err(|e| Error::Decode(format!("invalid hex byte: {e}")))?;
            for j in 0..8 {
                bits.push(byte & (1 << (7 - j)) != 0);
            }
        }
        if bit_len > bits.len() {
            return Err(Error::Decode(format!(
                "bit length {bit_len} exceeds {} available bits",
                bits.len()
            )));
        }
        if bits[bit_len..].iter().any(|&b| b) {
            return Err(Error::Decode("nonzero padding bits".into()));
        }
        bits.truncate(bit_len);
        Ok(Self { bits })
    }
}

/// Cursor over a bit slice.
#[derive(Debug)]
pub struct BitReader<'a> {
    bits: &'a [bool],
    pos: usize,
}

impl<'a> BitReader<'a> {
    pub fn new(bits: &'a [bool]) -> Self {
        Self { bits, pos: 0 }
    }

    pub fn read_bit(&mut self) -> Result<bool> {
        let b = self
            .bits
            .get(self.pos)
            .copied()
            .ok_or_else(|| Error::Decode("unexpected end of stream".into()))?;
        self.pos += 1;
        Ok(b)
    }

    pub fn position(&self) -> usize {
        self.pos
    }

    pub fn remaining(&self) -> usize {
        self.bits.len() - self.pos
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hex_round_trip_with_padding() {
        let mut s = BitStream::new();
        for b in [true, false, true, true, false] {
            s.push(b);
        }
        assert_eq!(s.to_bit_string(), "10110");
        let hex = s.to_hex();
        assert_eq!(hex, "b0");
        let back = BitStream::from_hex(&hex, 5).unwrap();
        assert_eq!(back, s);
        // nonzero padding is rejected
        assert!(BitStream::from_hex("b1", 5).is_err());
    }
}
