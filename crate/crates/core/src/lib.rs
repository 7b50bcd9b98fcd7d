//! Low density lattice codes (LDLC).
//!
//! The crate covers the whole pipeline: parity-check construction,
//! hypercube-shaped encoding, an AWGN channel with reproducible per-frame
//! randomness, and two Gaussian-approximation message-passing decoders:
//!
//! * [`Variant::Reference`] keeps the two replicas of every check message
//!   closest to the channel observation and expands all `2^(d-1)` products at
//!   each variable node.
//! * [`Variant::Proposed`] keeps only the all-left and all-right products,
//!   computed once per variable node as a two-component *mother message*, and
//!   derives each outgoing message by dividing one factor back out. Its cost is
//!   linear in the degree.
//!
//! [`convergence`] tracks how quickly message variances shrink and
//! [`sim`] drives Monte Carlo symbol-error-rate experiments.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod code;
pub mod convergence;
pub mod decoder;
pub mod error;
pub mod gaussian;
pub mod shaping;
pub mod sim;

pub use channel::{awgn_transmit, snr_to_sigma, RngStream, StreamPurpose};
pub use code::{
    build_generating_sequence, generate_parity_check, parse_h, serialize_h, validate_parity_check,
    GeneratingSequence, SparseParityCheck, Structure, ValidationReport,
};
pub use decoder::{decode, DecodeResult, DecoderConfig, SelectionWindow, Variant};
pub use error::{Error, Result};
pub use gaussian::{Gaussian, PeriodicGaussian, ScaledGaussian, VAR_FLOOR};
pub use shaping::{encode, hypercube_shape, recover_integers, Shaper};
