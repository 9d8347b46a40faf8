//! Simulator for a phase-encoded temporal GHZ blockchain.
//!
//! * [`quantum`]: exact dense state vectors, unitaries and projective measurement.
//! * [`encoding`]: payload codec, phase schedule and per-block Bell states.
//! * [`chain`]: the two-branch GHZ chain, its validity measurement, tampering,
//!   reconstruction and local-unitary obfuscation.
//! * [`oracle`]: brute-force tensor-and-project chain construction used to
//!   cross-check the symbolic chain.
//! * [`consensus`]: discrete-event simulation of block proposal, validation,
//!   cross-comparison and majority tally.
//! * [`config`]: scenario configuration parsing.

pub mod encoding;
pub mod error;
pub mod quantum;

pub use error::{Error, Result};
pub mod chain;
pub mod oracle;
pub mod config;
pub mod consensus;
