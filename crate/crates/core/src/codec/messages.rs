//! Uplink message formats and their bit-exact encodings.
//!
//! Wire format, in transmission order within an epoch:
//!
//! - `SafeFlag`: a single bit. Every pre-safe epoch sends one; the epoch that
//!   fires the trigger sends `1` and follows it immediately with `Init`, so
//!   the stream stays prefix-decodable without message-type headers.
//! - `Init`: Elias Gamma exponent `E`, then `ds` signed Elias Gamma grid
//!   integers `z_i`. Reconstruction is `z_i * 2^-E`.
//! - `Track`: Elias Gamma multiplier `m_k`, then the codeword index as a
//!   fixed-width big-endian field of `index_bits` bits.
//! - `CoordTrack`: per coordinate, a sign bit (`1` = negative) followed by the
//!   Elias Gamma code of `index + 1`.

use nalgebra::DVector;

use super::bitstream::{BitReader, BitStream};
use super::elias::{
    eg_decode, eg_encode_into, eg_len, signed_eg_decode, signed_eg_encode_into, signed_eg_len,
};
use crate::error::{Error, Result};

/// One uplink message.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum UplinkMessage {
    /// Pre-safe epoch flag; `true` announces that `Init` follows.
    SafeFlag(bool),
    /// Absolute dyadic initialization of the shared estimate.
    Init { exponent: u32, z: Vec<i64> },
    /// Differential update: adaptive multiplier plus codeword index.
    Track { multiplier: u64, index: usize },
    /// Coordinate-wise differential update: `(negative, index)` per coordinate.
    CoordTrack { coords: Vec<(bool, u64)> },
}

impl UplinkMessage {
    /// Documented bit cost of this message.
    pub fn bit_cost(&self, index_bits: usize) -> usize {
        match self {
            UplinkMessage::SafeFlag(_) => 1,
            UplinkMessage::Init { exponent, z } => {
                eg_len(u64::from(*exponent)) + z.iter().map(|&zi| signed_eg_len(zi)).sum::<usize>()
            }
            UplinkMessage::Track { multiplier, .. } => eg_len(*multiplier) + index_bits,
            UplinkMessage::CoordTrack { coords } => {
                coords.iter().map(|&(_, idx)| 1 + eg_len(idx + 1)).sum()
            }
        }
    }

    /// Ledger category the message bits belong to.
    pub fn category(&self) -> BitCategory {
        match self {
            UplinkMessage::SafeFlag(_) => BitCategory::Flags,
            UplinkMessage::Init { .. } => BitCategory::Init,
            // Track splits between multiplier and index at encode time
            UplinkMessage::Track { .. } => BitCategory::Indices,
            UplinkMessage::CoordTrack { .. } => BitCategory::Indices,
        }
    }

    pub fn encode(&self, index_bits: usize) -> Result<BitStream> {
        let mut out = BitStream::new();
        match self {
            UplinkMessage::SafeFlag(b) => out.push(*b),
            UplinkMessage::Init { exponent, z } => {
                eg_encode_into(&mut out, u64::from(*exponent))?;
                for &zi in z {
                    signed_eg_encode_into(&mut out, zi)?;
                }
            }
            UplinkMessage::Track { multiplier, index } => {
                eg_encode_into(&mut out, *multiplier)?;
                if index_bits < usize::BITS as usize && *index >= (1usize << index_bits) {
                    return Err(Error::Decode(format!(
                        "index {index} does not fit in {index_bits} bits"
                    )));
                }
                for i in (0..index_bits).rev() {
                    out.push(index & (1 << i) != 0);
                }
            }
            UplinkMessage::CoordTrack { coords } => {
                for &(negative, idx) in coords {
                    out.push(negative);
                    eg_encode_into(&mut out, idx + 1)?;
                }
            }
        }
        debug_assert_eq!(out.len(), self.bit_cost(index_bits));
        Ok(out)
    }

    pub fn decode_safe_flag(reader: &mut BitReader<'_>) -> Result<Self> {
        Ok(UplinkMessage::SafeFlag(reader.read_bit()?))
    }

    pub fn decode_init(reader: &mut BitReader<'_>, ds: usize) -> Result<Self> {
        let exponent = u32::try_from(eg_decode(reader)?)
            .map_err(|_| Error::Decode("init exponent out of range".into()))?;
        let mut z = Vec::with_capacity(ds);
        for _ in 0..ds {
            z.push(signed_eg_decode(reader)?);
        }
        Ok(UplinkMessage::Init { exponent, z })
    }

    pub fn decode_track(reader: &mut BitReader<'_>, index_bits: usize) -> Result<Self> {
        let multiplier = eg_decode(reader)?;
        let mut index = 0usize;
        for _ in 0..index_bits {
            index = (index << 1) | usize::from(reader.read_bit()?);
        }
        Ok(UplinkMessage::Track { multiplier, index })
    }

    pub fn decode_coord_track(reader: &mut BitReader<'_>, ds: usize) -> Result<Self> {
        let mut coords = Vec::with_capacity(ds);
        for _ in 0..ds {
            let negative = reader.read_bit()?;
            let idx = eg_decode(reader)? - 1;
            coords.push((negative, idx));
        }
        Ok(UplinkMessage::CoordTrack { coords })
    }
}

/// Uplink bit category for the cumulative ledger.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BitCategory {
    Flags,
    Init,
    Multipliers,
    Indices,
}

/// Cumulative per-category bit counts.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct BitLedger {
    pub flags: u64,
    pub init: u64,
    pub multipliers: u64,
    pub indices: u64,
}

impl BitLedger {
    pub fn add(&mut self, category: BitCategory, bits: u64) {
        match category {
            BitCategory::Flags => self.flags += bits,
            BitCategory::Init => self.init += bits,
            BitCategory::Multipliers => self.multipliers += bits,
            BitCategory::Indices => self.indices += bits,
        }
    }

    /// Record one message, splitting `Track` between multiplier and index.
    pub fn add_message(&mut self, msg: &UplinkMessage, index_bits: usize) {
        match msg {
            UplinkMessage::Track { multiplier, .. } => {
                self.multipliers += eg_len(*multiplier) as u64;
                self.indices += index_bits as u64;
            }
            other => self.add(other.category(), other.bit_cost(index_bits) as u64),
        }
    }

    pub fn total(&self) -> u64 {
        self.flags + self.init + self.multipliers + self.indices
    }
}

/// Dyadic-grid absolute initialization of a parameter vector.
///
/// Per-coordinate step `2^-E` with `E = max(1, ceil(log2(sqrt(ds)/(2 eps))))`
/// guarantees total reconstruction error `||rec - theta||_2 <= eps_target`.
pub fn absolute_init(theta: &DVector<f64>, eps_target: f64) -> Result<(UplinkMessage, DVector<f64>)> {
    if !(eps_target > 0.0 && eps_target.is_finite()) {
        return Err(Error::Config(format!(
            "init precision must be positive, got {eps_target}"
        )));
    }
    let ds = theta.len();
    let delta_max = 2.0 * eps_target / (ds as f64).sqrt();
    let exponent = (1.0 / delta_max).log2().ceil().max(1.0) as u32;
    let delta = 2f64.powi(-(exponent as i32));
    let mut z = Vec::with_capacity(ds);
    for &v in theta.iter() {
        let scaled = v / delta;
        if !scaled.is_finite() || scaled.abs() >= 9.0e15 {
            return Err(Error::Config(format!(
                "coordinate {v} exceeds the dyadic grid range at step {delta}"
            )));
        }
        z.push(scaled.round_ties_even() as i64);
    }
    let msg = UplinkMessage::Init { exponent, z };
    let rec = decode_init_reconstruction(&msg)?;
    Ok((msg, rec))
}

/// Reconstruction `z_i * 2^-E` of an `Init` message.
pub fn decode_init_reconstruction(msg: &UplinkMessage) -> Result<DVector<f64>> {
    match msg {
        UplinkMessage::Init { exponent, z } => {
            let delta = 2f64.powi(-(*exponent as i32));
            Ok(DVector::from_iterator(
                z.len(),
                z.iter().map(|&zi| zi as f64 * delta),
            ))
        }
        _ => Err(Error::Decode("expected an Init message".into())),
    }
}

/// Coordinate-wise uniform quantization with step `1/sqrt(tau_k)`.
///
/// Coordinate `i` maps to `ceil(|d_i| sqrt(tau))`; the midpoint reconstruction
/// is `sign * max(0, index - 1/2) / sqrt(tau)`.
pub fn coord_quantize(delta: &DVector<f64>, tau_k: usize) -> Result<(UplinkMessage, DVector<f64>)> {
    if tau_k < 1 {
        return Err(Error::Config("epoch length must be at least 1".into()));
    }
    let sqrt_tau = (tau_k as f64).sqrt();
    let mut coords = Vec::with_capacity(delta.len());
    for &v in delta.iter() {
        let idx = (v.abs() * sqrt_tau).ceil();
        if !idx.is_finite() || idx >= 9.0e15 {
            return Err(Error::Config(format!(
                "coordinate {v} out of range for step 1/sqrt({tau_k})"
            )));
        }
        coords.push((v < 0.0, idx as u64));
    }
    let msg = UplinkMessage::CoordTrack { coords };
    let rec = decode_coord_reconstruction(&msg, tau_k)?;
    Ok((msg, rec))
}

/// Reconstruction of a `CoordTrack` message at epoch length `tau_k`.
pub fn decode_coord_reconstruction(msg: &UplinkMessage, tau_k: usize) -> Result<DVector<f64>> {
    match msg {
        UplinkMessage::CoordTrack { coords } => {
            let sqrt_tau = (tau_k as f64).sqrt();
            Ok(DVector::from_iterator(
                coords.len(),
                coords.iter().map(|&(negative, idx)| {
                    let mag = ((idx as f64) - 0.5).max(0.0) / sqrt_tau;
                    if negative {
                        -mag
                    } else {
                        mag
                    }
                }),
            ))
        }
        _ => Err(Error::Decode("expected a CoordTrack message".into())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn absolute_init_worked_example() {
        let theta = DVector::from_column_slice(&[0.3, -0.1, 0.0, 1.0]);
        let (msg, rec) = absolute_init(&theta, 0.25).unwrap();
        match &msg {
            UplinkMessage::Init { exponent, z } => {
                assert_eq!(*exponent, 2); // step 0.25
                assert_eq!(z, &vec![1, 0, 0, 4]);
            }
            _ => panic!("wrong variant"),
        }
        let expected = DVector::from_column_slice(&[0.25, 0.0, 0.0, 1.0]);
        assert_eq!(rec, expected);
        let err = (&rec - &theta).norm();
        assert!((err - 0.111803).abs() < 1e-5);
        assert!(err <= 0.25);
    }

    #[test]
    fn absolute_init_zero_vector() {
        let theta = DVector::zeros(3);
        let (msg, rec) = absolute_init(&theta, 0.1).unwrap();
        assert_eq!(rec, theta);
        match msg {
            UplinkMessage::Init { z, .. } => assert!(z.iter().all(|&zi| zi == 0)),
            _ => panic!("wrong variant"),
        }
    }

    #[test]
    fn coord_quantize_worked_example() {
        let delta = DVector::from_element(1, 0.27);
        let (msg, rec) = coord_quantize(&delta, 100).unwrap();
        match &msg {
            UplinkMessage::CoordTrack { coords } => assert_eq!(coords[0], (false, 3)),
            _ => panic!("wrong variant"),
        }
        assert!((rec[0] - 0.25).abs() < 1e-12);
        assert!((rec[0] - 0.27f64).abs() <= 0.05);

        let (msg, rec) = coord_quantize(&DVector::zeros(2), 16).unwrap();
        assert_eq!(rec, DVector::zeros(2));
        assert_eq!(msg.bit_cost(0), 2 * (1 + 1)); // sign + eg(1) per coordinate
    }

    #[test]
    fn message_round_trips_and_costs() {
        let msgs = [
            UplinkMessage::SafeFlag(false),
            UplinkMessage::SafeFlag(true),
            UplinkMessage::Init {
                exponent: 13,
                z: vec![9011, -8192, 0, 3],
            },
            UplinkMessage::Track {
                multiplier: 5,
                index: 11,
            },
            UplinkMessage::CoordTrack {
                coords: vec![(false, 0), (true, 3), (false, 127)],
            },
        ];
        let index_bits = 4;
        for msg in &msgs {
            let bits = msg.encode(index_bits).unwrap();
            assert_eq!(bits.len(), msg.bit_cost(index_bits));
            let mut r = bits.reader();
            let decoded = match msg {
                UplinkMessage::SafeFlag(_) => UplinkMessage::decode_safe_flag(&mut r).unwrap(),
                UplinkMessage::Init { z, .. } => {
                    UplinkMessage::decode_init(&mut r, z.len()).unwrap()
                }
                UplinkMessage::Track { .. } => {
                    UplinkMessage::decode_track(&mut r, index_bits).unwrap()
                }
                UplinkMessage::CoordTrack { coords } => {
                    UplinkMessage::decode_coord_track(&mut r, coords.len()).unwrap()
                }
            };
            assert_eq!(&decoded, msg);
            assert_eq!(r.remaining(), 0);
        }
    }

    #[test]
    fn ledger_reconciles() {
        let mut ledger = BitLedger::default();
        let flag = UplinkMessage::SafeFlag(false);
        let track = UplinkMessage::Track {
            multiplier: 3,
            index: 2,
        };
        ledger.add_message(&flag, 4);
        ledger.add_message(&track, 4);
        assert_eq!(ledger.flags, 1);
        assert_eq!(ledger.multipliers, 3);
        assert_eq!(ledger.indices, 4);
        assert_eq!(
            ledger.total(),
            (flag.bit_cost(4) + track.bit_cost(4)) as u64
        );
    }

    proptest! {
        #[test]
        fn absolute_init_error_bound(
            coords in proptest::collection::vec(-10.0f64..10.0, 1..12),
            eps in 1e-4f64..2.0,
        ) {
            let theta = DVector::from_vec(coords);
            let (_, rec) = absolute_init(&theta, eps).unwrap();
            prop_assert!((&rec - &theta).norm() <= eps * (1.0 + 1e-12));
        }

        #[test]
        fn coord_track_round_trip(
            coords in proptest::collection::vec(-5.0f64..5.0, 1..12),
            tau in 1usize..100_000,
        ) {
            let delta = DVector::from_vec(coords);
            let (msg, rec) = coord_quantize(&delta, tau).unwrap();
            let bits = msg.encode(0).unwrap();
            let mut r = bits.reader();
            let decoded = UplinkMessage::decode_coord_track(&mut r, delta.len()).unwrap();
            prop_assert_eq!(&decoded, &msg);
            let rec2 = decode_coord_reconstruction(&decoded, tau).unwrap();
            prop_assert_eq!(rec, rec2);
            // per-coordinate error bound
            let sqrt_tau = (tau as f64).sqrt();
            let rec3 = decode_coord_reconstruction(&msg, tau).unwrap();
            for i in 0..delta.len() {
                prop_assert!((rec3[i] - delta[i]).abs() <= 1.0 / sqrt_tau + 1e-12);
            }
        }
    }
}
