//! The trained model as a transducer from feature strings to unit strings
//! (Viterbi) and posteriorgrams (forward-backward).

mod hmm;
mod posteriorgram;
mod train;

pub use hmm::{forward_backward, forward_backward_log, viterbi};
pub use posteriorgram::{read_posteriorgram_file, write_posteriorgram_file, Posteriorgram, POSTERIORGRAM_MAGIC};
pub use train::{train_transducer, DataPrior, TrainingOptions, TrainingOutcome};

use serde::{Deserialize, Serialize};

use crate::features::FeatureSequence;
use crate::npb::TransducerModel;
use crate::{Error, Result};

/// Probability floor applied to posteriorgram entries before any `-log` cost.
pub const POSTERIOR_FLOOR: f64 = 1e-6;

/// How posteriorgram rows are produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PosteriorMode {
    /// Smoothed state posteriors.
    #[default]
    ForwardBackward,
    /// One-hot rows on the Viterbi path.
    ViterbiOneHot,
}

/// Run-length encoded unit string; `end_frame` is exclusive.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UnitRun {
    pub unit: u32,
    pub start_frame: usize,
    pub end_frame: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UnitSequence {
    pub utterance_id: String,
    pub runs: Vec<UnitRun>,
}

impl UnitSequence {
    pub fn from_labels(utterance_id: impl Into<String>, labels: &[u32]) -> Self {
        let mut runs: Vec<UnitRun> = Vec::new();
        for (t, &unit) in labels.iter().enumerate() {
            match runs.last_mut() {
                Some(run) if run.unit == unit => run.end_frame = t + 1,
                _ => runs.push(UnitRun {
                    unit,
                    start_frame: t,
                    end_frame: t + 1,
                }),
            }
        }
        Self {
            utterance_id: utterance_id.into(),
            runs,
        }
    }

    pub fn num_frames(&self) -> usize {
        self.runs.last().map_or(0, |r| r.end_frame)
    }

    /// Unit label of every frame.
    pub fn labels(&self) -> Vec<u32> {
        self.runs
            .iter()
            .flat_map(|r| std::iter::repeat_n(r.unit, r.end_frame - r.start_frame))
            .collect()
    }

    /// TSV rows `unit<TAB>start_frame<TAB>end_frame`.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("unit\tstart_frame\tend_frame\n");
        for r in &self.runs {
            out.push_str(&format!("{}\t{}\t{}\n", r.unit, r.start_frame, r.end_frame));
        }
        out
    }

    pub fn from_tsv(utterance_id: impl Into<String>, text: &str) -> Result<Self> {
        let mut runs = Vec::new();
        for (n, line) in text.lines().enumerate().skip(1) {
            if line.trim().is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split('\t').collect();
            let parse = |i: usize| -> Result<usize> {
                cols.get(i)
                    .and_then(|c| c.trim().parse().ok())
                    .ok_or_else(|| Error::MalformedHeader(format!("unit table line {}", n + 1)))
            };
            runs.push(UnitRun {
                unit: parse(0)? as u32,
                start_frame: parse(1)?,
                end_frame: parse(2)?,
            });
        }
        let seq = Self {
            utterance_id: utterance_id.into(),
            runs,
        };
        let tiles = seq.runs.windows(2).all(|w| w[0].end_frame == w[1].start_frame && w[0].unit != w[1].unit)
            && seq.runs.first().is_none_or(|r| r.start_frame == 0)
            && seq.runs.iter().all(|r| r.start_frame < r.end_frame);
        if !tiles {
            return Err(Error::MalformedHeader("unit runs do not tile the utterance".into()));
        }
        Ok(seq)
    }
}

fn check_features(model: &TransducerModel, features: &FeatureSequence) -> Result<Vec<f64>> {
    if features.frame(0).len() != model.dim {
        return Err(Error::DimensionMismatch {
            expected: model.dim,
            found: features.frame(0).len(),
        });
    }
    Ok(features.to_f64())
}

fn log_matrix(model: &TransducerModel) -> (Vec<f64>, Vec<f64>) {
    (
        model.initial.iter().map(|p| p.ln()).collect(),
        model.transitions.iter().flatten().map(|p| p.ln()).collect(),
    )
}

/// Most likely state path, labelled with the model's unit ids.
pub fn decode(model: &TransducerModel, features: &FeatureSequence) -> Result<UnitSequence> {
    let frames = check_features(model, features)?;
    let table = model.log_emission_table(&frames);
    let (log_init, log_trans) = log_matrix(model);
    let (path, _) = viterbi(&log_init, &log_trans, &table);
    let labels: Vec<u32> = path.iter().map(|&j| model.unit_ids[j]).collect();
    Ok(UnitSequence::from_labels(features.utterance_id.clone(), &labels))
}

/// Unfloored per-frame state posteriors, row-major `T x K`.
pub fn state_posteriors(model: &TransducerModel, features: &FeatureSequence) -> Result<Vec<f64>> {
    let frames = check_features(model, features)?;
    let table = model.log_emission_table(&frames);
    let transitions: Vec<f64> = model.transitions.iter().flatten().copied().collect();
    let (post, log_lik) = forward_backward(&model.initial, &transitions, &table);
    if !log_lik.is_finite() {
        return Err(Error::NonFiniteLikelihood(features.utterance_id.clone()));
    }
    Ok(post)
}

/// Floored posteriorgram over the model's units.
pub fn posteriorgram(model: &TransducerModel, features: &FeatureSequence) -> Result<Posteriorgram> {
    posteriorgram_with(model, features, PosteriorMode::ForwardBackward)
}

pub fn posteriorgram_with(
    model: &TransducerModel,
    features: &FeatureSequence,
    mode: PosteriorMode,
) -> Result<Posteriorgram> {
    let k = model.num_states();
    let values = match mode {
        PosteriorMode::ForwardBackward => state_posteriors(model, features)?,
        PosteriorMode::ViterbiOneHot => {
            let frames = check_features(model, features)?;
            let table = model.log_emission_table(&frames);
            let (log_init, log_trans) = log_matrix(model);
            let (path, _) = viterbi(&log_init, &log_trans, &table);
            let mut v = vec![0.0; path.len() * k];
            for (t, &j) in path.iter().enumerate() {
                v[t * k + j] = 1.0;
            }
            v
        }
    };
    Posteriorgram::new(
        features.utterance_id.clone(),
        model.unit_ids.clone(),
        features.frame_shift_ms,
        values,
    )?
    .floored(POSTERIOR_FLOOR)
}
