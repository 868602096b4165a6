//! Bit-exact uplink encoding.
//!
//! Every bit that crosses the uplink is produced here and accounted for in a
//! [`BitLedger`]. The submodules provide the raw bit stream, the Elias Gamma
//! integer codes, the lattice covering codebook, and the epoch message
//! formats built from them.

mod bitstream;
mod codebook;
mod elias;
mod messages;

pub use bitstream::{BitReader, BitStream};
pub use codebook::{
    adaptive_multiplier, build_codebook, quantize_innovation, reconstruct, CodebookConfig,
};
pub use elias::{
    eg_decode, eg_encode, eg_encode_into, eg_len, signed_eg_decode, signed_eg_encode,
    signed_eg_encode_into, signed_eg_len, unzigzag, zigzag,
};
pub use messages::{
    absolute_init, coord_quantize, decode_coord_reconstruction, decode_init_reconstruction,
    BitCategory, BitLedger, UplinkMessage,
};
