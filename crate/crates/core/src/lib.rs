//! Coded-modulation simulation toolkit.
//!
//! The crate computes the three candidate predictors of soft-decision FEC
//! performance (pre-FEC BER, mutual information and generalized mutual
//! information) for QAM constellations over an AWGN channel and over a
//! simulated dual-polarization WDM fiber link, and runs LDPC and turbo codes
//! end to end on the same channel realizations so that post-FEC BER can be
//! plotted against each predictor.
//!
//! Module map:
//!
//! - [`constellation`]: labeled QAM constellations and the bit mapper.
//! - [`demapper`]: exact and max-log L-values, hard decisions, pre-FEC BER.
//! - [`rates`]: Monte-Carlo MI and GMI estimators, the `s` search and the
//!   symmetrized L-value histogram.
//! - [`fec`]: LDPC and turbo codecs, bit interleaver, post-FEC BER.
//! - [`fiber`]: split-step Fourier fiber model and the receiver DSP chain.
//! - [`harness`]: sweeps, threshold crossings, reference data and reports.
//!
//! L-values follow one convention everywhere: `L = ln P(bit = 1 | y) / P(bit = 0 | y)`,
//! so a positive L-value means bit 1.

pub mod constellation;
pub mod demapper;
mod error;
pub mod fec;
pub mod fiber;
pub mod harness;
pub mod math;
pub mod rates;
pub mod seed;

pub use error::{Error, Result};

/// Magnitude at which L-values are clamped (nats).
pub const LLR_CLAMP: f64 = 50.0;

/// Target BER after soft-decision decoding that lets the outer staircase code
/// reach an output BER of 1e-15.
pub const TARGET_POST_FEC_BER: f64 = 4.7e-3;
