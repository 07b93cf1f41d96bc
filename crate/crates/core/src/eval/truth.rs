use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use crate::{Error, Result};

const MIN_STEM: usize = 2;

/// Light suffix stripper: one of `ing`, `ed`, `es` (after a sibilant) or `s`
/// (not `ss`), then a trailing `e`. Stems keep at least two letters.
///
/// `year`/`years` share a stem, as do `age`/`ages` and `surface`/`surfaced`.
pub fn stem(word: &str) -> String {
    let mut w = word.trim().to_lowercase();
    let strip = |w: &mut String, suffix: &str| -> bool {
        if w.ends_with(suffix) && w.len() - suffix.len() >= MIN_STEM {
            w.truncate(w.len() - suffix.len());
            true
        } else {
            false
        }
    };
    let sibilant_es = w.ends_with("es")
        && ["ses", "xes", "zes", "ches", "shes"].iter().any(|s| w.ends_with(s));
    let _ = strip(&mut w, "ing")
        || strip(&mut w, "ed")
        || (sibilant_es && strip(&mut w, "es"))
        || (!w.ends_with("ss") && strip(&mut w, "s"));
    strip(&mut w, "e");
    w
}

#[derive(Debug, Clone, PartialEq)]
pub struct WordOccurrence {
    pub word: String,
    pub stem: String,
    pub start_ms: f64,
    pub end_ms: f64,
}

/// Word occurrences per utterance.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct GroundTruth {
    pub utterances: BTreeMap<String, Vec<WordOccurrence>>,
}

impl GroundTruth {
    pub fn add(&mut self, utterance_id: &str, word: &str, start_ms: f64, end_ms: f64) {
        let word = word.to_lowercase();
        self.utterances
            .entry(utterance_id.to_string())
            .or_default()
            .push(WordOccurrence {
                stem: stem(&word),
                word,
                start_ms,
                end_ms,
            });
    }

    /// Parses `utterance_id, word, start_ms, end_ms` rows with a header line.
    pub fn from_tsv(text: &str) -> Result<Self> {
        let mut truth = Self::default();
        for (i, line) in text.lines().enumerate().skip(1) {
            if line.trim().is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split('\t').collect();
            let parse = |s: &str| s.trim().parse::<f64>().ok();
            match f.as_slice() {
                [utt, word, start, end] => match (parse(start), parse(end)) {
                    (Some(s), Some(e)) if e >= s => truth.add(utt, word, s, e),
                    _ => return Err(Error::InvalidArgument(format!("ground truth line {}: bad times", i + 1))),
                },
                _ => {
                    return Err(Error::InvalidArgument(format!(
                        "ground truth line {}: expected 4 tab-separated fields",
                        i + 1
                    )))
                }
            }
        }
        Ok(truth)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_tsv(&text)
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::from("utterance_id\tword\tstart_ms\tend_ms\n");
        for (utt, words) in &self.utterances {
            for w in words {
                out.push_str(&format!("{utt}\t{}\t{}\t{}\n", w.word, w.start_ms, w.end_ms));
            }
        }
        out
    }

    pub fn contains_stem(&self, utterance_id: &str, stem: &str) -> bool {
        self.utterances
            .get(utterance_id)
            .is_some_and(|ws| ws.iter().any(|w| w.stem == stem))
    }

    pub fn utterances_with_stem(&self, stem: &str) -> usize {
        self.utterances
            .values()
            .filter(|ws| ws.iter().any(|w| w.stem == stem))
            .count()
    }
}
