//! Index over a TIMIT-style directory tree.
//!
//! Expected layout: `<root>/{TRAIN,TEST}/<dialect>/<speaker>/<utt>.WAV` with
//! `.WRD` and `.PHN` timing files beside each audio file. Names are matched
//! case-insensitively and timings are in samples at 16 kHz.

use std::fs;
use std::path::{Path, PathBuf};

use crate::eval::{GroundTruth, PhoneTranscript};
use crate::features::{read_audio, AudioClip};
use crate::{Error, Result};

pub const TIMIT_SAMPLE_RATE: u32 = 16_000;

/// Query words with their training and test counts in the classic TIMIT
/// query-by-example setup.
pub const QUERY_WORDS: [(&str, usize, usize); 10] = [
    ("age", 3, 8),
    ("warm", 10, 5),
    ("year", 11, 5),
    ("problem", 22, 13),
    ("artists", 7, 6),
    ("money", 19, 9),
    ("organizations", 7, 6),
    ("development", 9, 8),
    ("surface", 3, 8),
    ("children", 18, 10),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Train,
    Test,
}

#[derive(Debug, Clone)]
pub struct TimitUtterance {
    pub id: String,
    pub split: Split,
    pub audio: PathBuf,
    /// `(word, start_ms, end_ms)`.
    pub words: Vec<(String, f64, f64)>,
    pub phones: PhoneTranscript,
}

#[derive(Debug, Clone)]
pub struct TimitIndex {
    pub utterances: Vec<TimitUtterance>,
    /// Audio files left out because a timing file was missing or unreadable.
    pub skipped: Vec<PathBuf>,
}

impl TimitIndex {
    pub fn split(&self, split: Split) -> impl Iterator<Item = &TimitUtterance> {
        self.utterances.iter().filter(move |u| u.split == split)
    }

    pub fn truth(&self, split: Split) -> GroundTruth {
        let mut t = GroundTruth::default();
        for u in self.split(split) {
            for (w, s, e) in &u.words {
                t.add(&u.id, w, *s, *e);
            }
            t.utterances.entry(u.id.clone()).or_default();
        }
        t
    }

    /// Audio of every timed instance of `word` in `split`, in index order.
    pub fn query_clips(&self, word: &str, split: Split) -> Result<Vec<AudioClip>> {
        let word = word.to_lowercase();
        let mut clips = Vec::new();
        for u in self.split(split) {
            let hits: Vec<_> = u.words.iter().filter(|w| w.0 == word).collect();
            if hits.is_empty() {
                continue;
            }
            let audio = read_audio(&u.audio)?;
            for (i, (_, s, e)) in hits.into_iter().enumerate() {
                clips.push(audio.slice_ms(format!("{word}_{}_{i}", u.id), *s, *e)?);
            }
        }
        Ok(clips)
    }
}

fn find_ci(dir: &Path, name: &str) -> Option<PathBuf> {
    fs::read_dir(dir)
        .ok()?
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .find(|p| p.file_name().and_then(|n| n.to_str()).is_some_and(|n| n.eq_ignore_ascii_case(name)))
}

fn sorted_entries(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut v: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .collect();
    v.sort();
    Ok(v)
}

fn parse_words(text: &str, path: &Path) -> Result<Vec<(String, f64, f64)>> {
    let per_ms = TIMIT_SAMPLE_RATE as f64 / 1000.0;
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|line| {
            let f: Vec<&str> = line.split_whitespace().collect();
            match f.as_slice() {
                [s, e, w] => match (s.parse::<u64>(), e.parse::<u64>()) {
                    (Ok(s), Ok(e)) if e >= s => Ok((w.to_lowercase(), s as f64 / per_ms, e as f64 / per_ms)),
                    _ => Err(Error::InvalidArgument(format!("bad word line {line:?} in {}", path.display()))),
                },
                _ => Err(Error::InvalidArgument(format!("bad word line {line:?} in {}", path.display()))),
            }
        })
        .collect()
}

fn load_utterance(audio: &Path, split: Split, id: String) -> Result<TimitUtterance> {
    let stem = audio.file_stem().and_then(|s| s.to_str()).unwrap_or_default();
    let dir = audio.parent().unwrap_or(Path::new("."));
    let wrd = find_ci(dir, &format!("{stem}.wrd"))
        .ok_or_else(|| Error::MissingInput(format!("no word timing file for {}", audio.display())))?;
    let phn = find_ci(dir, &format!("{stem}.phn"))
        .ok_or_else(|| Error::MissingInput(format!("no phone timing file for {}", audio.display())))?;
    let words_text = fs::read_to_string(&wrd).map_err(|e| Error::io(&wrd, e))?;
    let phones_text = fs::read_to_string(&phn).map_err(|e| Error::io(&phn, e))?;
    Ok(TimitUtterance {
        words: parse_words(&words_text, &wrd)?,
        phones: PhoneTranscript::parse_timit(&id, &phones_text, TIMIT_SAMPLE_RATE)?,
        id,
        split,
        audio: audio.to_path_buf(),
    })
}

/// Walks `root` and indexes every utterance with complete timing files.
/// Utterances lacking one are skipped with a warning.
pub fn ingest_timit_layout(root: &Path) -> Result<TimitIndex> {
    let mut utterances = Vec::new();
    let mut skipped = Vec::new();
    for (name, split) in [("train", Split::Train), ("test", Split::Test)] {
        let Some(split_dir) = find_ci(root, name) else {
            continue;
        };
        let mut stack = vec![split_dir.clone()];
        while let Some(dir) = stack.pop() {
            for path in sorted_entries(&dir)?.into_iter().rev() {
                if path.is_dir() {
                    stack.push(path);
                    continue;
                }
                let is_audio = path
                    .extension()
                    .and_then(|e| e.to_str())
                    .is_some_and(|e| e.eq_ignore_ascii_case("wav"));
                if !is_audio {
                    continue;
                }
                let rel = path.with_extension("");
                let rel = rel.strip_prefix(root).unwrap_or(&rel);
                let id = rel
                    .components()
                    .map(|c| c.as_os_str().to_string_lossy().to_uppercase())
                    .collect::<Vec<_>>()
                    .join("_");
                match load_utterance(&path, split, id) {
                    Ok(u) => utterances.push(u),
                    Err(e) => {
                        log::warn!("skipping {}: {e}", path.display());
                        skipped.push(path);
                    }
                }
            }
        }
    }
    if utterances.is_empty() {
        return Err(Error::MissingInput(format!(
            "no usable TIMIT utterances under {}",
            root.display()
        )));
    }
    utterances.sort_by(|a, b| a.id.cmp(&b.id));
    Ok(TimitIndex { utterances, skipped })
}
