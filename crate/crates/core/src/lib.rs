//! Broadcast throughput planning with time sharing and hierarchical modulation.
//!
//! The crate derives per-stream decoding thresholds for a hierarchical
//! (non-uniform) 16-QAM from constellation-constrained capacities, builds the
//! achievable rate region of a receiver pair, and allocates channel time so
//! that every receiver of a broadcast gets the same average rate.
//!
//! Pipeline, bottom-up:
//!
//! - [`constellation`]: QPSK, uniform 16-QAM and the α-parameterized
//!   hierarchical 16-QAM.
//! - [`capacity`]: mutual information per stream over complex AWGN, its
//!   normalized form and the inverse (SNR for a target normalized capacity).
//! - [`thresholds`]: QPSK reference operating points and the modcod table.
//! - [`rate_region`]: two-receiver achievable region and equal-rate mix.
//! - [`allocation`]: equal-rate time fractions, receiver pairing and plans.
//! - [`scenario`]: configuration, beam model and the experiment drivers used
//!   by the `hiermod` binary.

pub mod allocation;
pub mod capacity;
pub mod constellation;
mod error;
pub mod quadrature;
pub mod rate_region;
pub mod scenario;
pub mod thresholds;

pub use error::{Error, Result};
