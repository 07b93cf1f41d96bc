//! Acoustic unit discovery and query-by-example spoken term detection.
//!
//! The pipeline runs in five stages:
//!
//! 1. [`features`]: PCM audio to 39-dimensional MFCC streams.
//! 2. [`npb`]: sticky HDP-HMM / DHDP-HMM models trained by blocked Gibbs sampling.
//! 3. [`transducer`]: trained models used as a mapper from features to unit
//!    strings (Viterbi) and posteriorgrams (forward-backward).
//! 4. [`search`]: subsequence DTW over posteriorgrams.
//! 5. [`eval`]: P@N, EER / DET curves and unit-to-phoneme confusion matrices.
//!
//! [`cli`] ties the stages together behind the `adu` binary.

pub mod cli;
pub mod error;
pub mod eval;
pub mod features;
pub mod npb;
pub mod search;
pub mod transducer;

pub use error::{Error, Result};
