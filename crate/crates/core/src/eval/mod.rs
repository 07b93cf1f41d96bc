//! Retrieval metrics (P@N, EER) and the unit/phoneme confusion matrix.

mod confusion;
mod det;
mod truth;

pub use confusion::{align_confusion, frames_for_duration, ConfusionMatrix, PhoneTranscript, TimedPhone};
pub use det::{eer, DetCurve, DetPoint};
pub use truth::{stem, GroundTruth, WordOccurrence};

use crate::search::SearchResult;
use crate::{Error, Result};

/// Precision over the top `n` hits of one keyword.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrecisionAtN {
    pub value: f64,
    pub n: usize,
    /// Fewer than `n` hits were available; `value` uses the hits present.
    pub truncated: bool,
}

/// Fraction of the top `n` hits whose utterance contains a word with the
/// keyword's stem. `n` defaults to the number of utterances that do.
pub fn precision_at_n(result: &SearchResult, truth: &GroundTruth, keyword: &str, n: Option<usize>) -> Result<PrecisionAtN> {
    let target = stem(keyword);
    let n = n.unwrap_or_else(|| truth.utterances_with_stem(&target));
    if n == 0 {
        return Err(Error::InvalidArgument(format!(
            "P@N needs n >= 1; keyword {keyword:?} has no true occurrences"
        )));
    }
    let considered = n.min(result.hits.len());
    let correct = result.hits[..considered]
        .iter()
        .filter(|h| truth.contains_stem(&h.utterance_id, &target))
        .count();
    let truncated = considered < n;
    if truncated {
        log::warn!("only {considered} hits available for P@{n} of {keyword:?}");
    }
    Ok(PrecisionAtN {
        value: if considered == 0 { 0.0 } else { correct as f64 / considered as f64 },
        n,
        truncated,
    })
}

/// Unweighted means of per-keyword `(P@N, EER)` pairs.
pub fn average_keyword_metrics(per_keyword: &[(f64, f64)]) -> Result<(f64, f64)> {
    if per_keyword.is_empty() {
        return Err(Error::InvalidArgument("no keywords to average".into()));
    }
    let k = per_keyword.len() as f64;
    let p = per_keyword.iter().map(|m| m.0).sum::<f64>() / k;
    let e = per_keyword.iter().map(|m| m.1).sum::<f64>() / k;
    Ok((p, e))
}

/// `(score, is_correct)` for every hit of a search result.
pub fn labelled_scores(result: &SearchResult, truth: &GroundTruth, keyword: &str) -> Vec<(f64, bool)> {
    let target = stem(keyword);
    result
        .hits
        .iter()
        .map(|h| (h.score, truth.contains_stem(&h.utterance_id, &target)))
        .collect()
}
