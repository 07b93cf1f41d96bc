//! Audio input and the 39-dimensional MFCC front end.

mod audio;
pub(crate) mod file;
mod mfcc;

pub use audio::{read_audio, write_wav, AudioClip};
pub use file::{read_feature_file, write_feature_file, FEATURE_MAGIC};
pub use mfcc::{apply_cepstral_mean_norm, deltas, extract_mfcc, FeatureConfig};

use crate::{Error, Result};

/// Dimension of every feature frame: 12 cepstra, log energy, deltas, delta-deltas.
pub const FEATURE_DIM: usize = 39;
/// Number of static coefficients (12 cepstra + log energy).
pub const STATIC_DIM: usize = 13;

/// Per-utterance feature matrix, row-major `T x 39`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSequence {
    pub utterance_id: String,
    frames: Vec<f32>,
    pub frame_shift_ms: f32,
    pub frame_length_ms: f32,
}

impl FeatureSequence {
    pub fn new(
        utterance_id: impl Into<String>,
        frames: Vec<f32>,
        frame_shift_ms: f32,
        frame_length_ms: f32,
    ) -> Result<Self> {
        if frames.is_empty() {
            return Err(Error::InvalidArgument("feature sequence needs at least one frame".into()));
        }
        if !frames.len().is_multiple_of(FEATURE_DIM) {
            return Err(Error::DimensionMismatch {
                expected: FEATURE_DIM,
                found: frames.len() % FEATURE_DIM,
            });
        }
        if let Some(bad) = frames.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "non-finite feature value at frame {}",
                bad / FEATURE_DIM
            )));
        }
        if !(frame_shift_ms > 0.0 && frame_length_ms > 0.0) {
            return Err(Error::InvalidArgument("frame shift and length must be positive".into()));
        }
        Ok(Self {
            utterance_id: utterance_id.into(),
            frames,
            frame_shift_ms,
            frame_length_ms,
        })
    }

    /// Builds a sequence from `f64` rows, using the default 10 ms / 25 ms geometry.
    pub fn from_rows(utterance_id: impl Into<String>, rows: &[Vec<f64>]) -> Result<Self> {
        let mut frames = Vec::with_capacity(rows.len() * FEATURE_DIM);
        for row in rows {
            if row.len() != FEATURE_DIM {
                return Err(Error::DimensionMismatch {
                    expected: FEATURE_DIM,
                    found: row.len(),
                });
            }
            frames.extend(row.iter().map(|&v| v as f32));
        }
        Self::new(utterance_id, frames, 10.0, 25.0)
    }

    pub fn len(&self) -> usize {
        self.frames.len() / FEATURE_DIM
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn frame(&self, t: usize) -> &[f32] {
        &self.frames[t * FEATURE_DIM..(t + 1) * FEATURE_DIM]
    }

    pub fn frames(&self) -> impl Iterator<Item = &[f32]> {
        self.frames.chunks_exact(FEATURE_DIM)
    }

    pub fn as_slice(&self) -> &[f32] {
        &self.frames
    }

    pub fn as_mut_slice(&mut self) -> &mut [f32] {
        &mut self.frames
    }

    /// Frames widened to `f64`, row-major.
    pub fn to_f64(&self) -> Vec<f64> {
        self.frames.iter().map(|&v| v as f64).collect()
    }
}
