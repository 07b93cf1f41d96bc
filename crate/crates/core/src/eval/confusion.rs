use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use crate::transducer::UnitSequence;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct TimedPhone {
    pub label: String,
    pub start_ms: f64,
    pub end_ms: f64,
}

/// Phone labels of one utterance, sorted by start time.
#[derive(Debug, Clone, PartialEq)]
pub struct PhoneTranscript {
    pub utterance_id: String,
    pub phones: Vec<TimedPhone>,
}

impl PhoneTranscript {
    pub fn new(utterance_id: impl Into<String>, mut phones: Vec<TimedPhone>) -> Result<Self> {
        let utterance_id = utterance_id.into();
        if phones.is_empty() {
            return Err(Error::MissingInput(format!("empty phone transcript for {utterance_id}")));
        }
        phones.sort_by(|a, b| a.start_ms.total_cmp(&b.start_ms));
        Ok(Self { utterance_id, phones })
    }

    /// TIMIT `.PHN` text: `start_sample end_sample label` per line.
    pub fn parse_timit(utterance_id: &str, text: &str, sample_rate_hz: u32) -> Result<Self> {
        let per_ms = sample_rate_hz as f64 / 1000.0;
        let phones = text
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(|line| {
                let f: Vec<&str> = line.split_whitespace().collect();
                match f.as_slice() {
                    [s, e, label] => match (s.parse::<u64>(), e.parse::<u64>()) {
                        (Ok(s), Ok(e)) if e >= s => Ok(TimedPhone {
                            label: label.to_string(),
                            start_ms: s as f64 / per_ms,
                            end_ms: e as f64 / per_ms,
                        }),
                        _ => Err(Error::InvalidArgument(format!("bad phone line {line:?} in {utterance_id}"))),
                    },
                    _ => Err(Error::InvalidArgument(format!("bad phone line {line:?} in {utterance_id}"))),
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(utterance_id, phones)
    }

    pub fn end_ms(&self) -> f64 {
        self.phones.iter().map(|p| p.end_ms).fold(0.0, f64::max)
    }

    /// Phone whose interval holds `time_ms`; gaps belong to the phone before.
    fn label_at(&self, time_ms: f64) -> &str {
        let i = self.phones.partition_point(|p| p.start_ms <= time_ms);
        &self.phones[i.saturating_sub(1)].label
    }
}

/// Frames the feature extractor produces for `duration_ms` of audio.
pub fn frames_for_duration(duration_ms: f64, frame_shift_ms: f64, frame_length_ms: f64) -> usize {
    if duration_ms < frame_length_ms {
        0
    } else {
        ((duration_ms - frame_length_ms) / frame_shift_ms + 1e-9).floor() as usize + 1
    }
}

/// Frame counts per (phone, unit) pair; rows are phones.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfusionMatrix {
    pub phoneme_ids: Vec<String>,
    pub unit_ids: Vec<u32>,
    counts: Vec<u64>,
}

impl ConfusionMatrix {
    pub fn get(&self, phone: usize, unit: usize) -> u64 {
        self.counts[phone * self.unit_ids.len() + unit]
    }

    pub fn row(&self, phone: usize) -> &[u64] {
        let u = self.unit_ids.len();
        &self.counts[phone * u..(phone + 1) * u]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Share of a phone's frames that fall in its most frequent unit.
    pub fn dominant_fraction(&self, phone: usize) -> f64 {
        let row = self.row(phone);
        let total: u64 = row.iter().sum();
        if total == 0 {
            0.0
        } else {
            *row.iter().max().unwrap() as f64 / total as f64
        }
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::from("phoneme");
        for u in &self.unit_ids {
            let _ = write!(out, "\tu{u}");
        }
        out.push('\n');
        for (p, label) in self.phoneme_ids.iter().enumerate() {
            out.push_str(label);
            for c in self.row(p) {
                let _ = write!(out, "\t{c}");
            }
            out.push('\n');
        }
        out
    }
}

/// Counts, for every frame, the phone covering the frame centre against the
/// unit decoded there.
pub fn align_confusion(
    units: &[UnitSequence],
    transcripts: &[PhoneTranscript],
    frame_shift_ms: f64,
    frame_length_ms: f64,
) -> Result<ConfusionMatrix> {
    let by_id: BTreeMap<&str, &PhoneTranscript> =
        transcripts.iter().map(|t| (t.utterance_id.as_str(), t)).collect();
    let mut pairs = Vec::with_capacity(units.len());
    for seq in units {
        let tr = by_id
            .get(seq.utterance_id.as_str())
            .ok_or_else(|| Error::MissingInput(format!("no phone transcript for {}", seq.utterance_id)))?;
        let frames = seq.num_frames();
        let expected = frames_for_duration(tr.end_ms(), frame_shift_ms, frame_length_ms);
        if frames.abs_diff(expected) > 1 {
            return Err(Error::TimeBaseMismatch {
                utterance: seq.utterance_id.clone(),
                frames,
                transcript_frames: expected,
            });
        }
        pairs.push((seq, *tr));
    }
    let phones: BTreeSet<&str> = pairs
        .iter()
        .flat_map(|(_, tr)| tr.phones.iter().map(|p| p.label.as_str()))
        .collect();
    let unit_set: BTreeSet<u32> = pairs.iter().flat_map(|(s, _)| s.runs.iter().map(|r| r.unit)).collect();
    let phoneme_ids: Vec<String> = phones.iter().map(|s| s.to_string()).collect();
    let unit_ids: Vec<u32> = unit_set.into_iter().collect();
    let phone_index: BTreeMap<&str, usize> = phones.iter().enumerate().map(|(i, p)| (*p, i)).collect();
    let unit_index: BTreeMap<u32, usize> = unit_ids.iter().enumerate().map(|(i, &u)| (u, i)).collect();
    let mut counts = vec![0u64; phoneme_ids.len() * unit_ids.len()];
    for (seq, tr) in pairs {
        for run in &seq.runs {
            let u = unit_index[&run.unit];
            for t in run.start_frame..run.end_frame {
                let centre = t as f64 * frame_shift_ms + frame_length_ms / 2.0;
                let p = phone_index[tr.label_at(centre)];
                counts[p * unit_ids.len() + u] += 1;
            }
        }
    }
    Ok(ConfusionMatrix {
        phoneme_ids,
        unit_ids,
        counts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transducer::UnitRun;

    fn phones(entries: &[(&str, f64, f64)]) -> PhoneTranscript {
        PhoneTranscript::new(
            "u",
            entries.iter()
                .map(|&(l, s, e)| TimedPhone {
                    label: l.into(),
                    start_ms: s,
                    end_ms: e,
                })
                .collect(),
        )
        .unwrap()
    }

    fn units(entries: &[(u32, usize, usize)]) -> UnitSequence {
        UnitSequence {
            utterance_id: "u".into(),
            runs: entries
                .iter()
                .map(|&(unit, start_frame, end_frame)| UnitRun {
                    unit,
                    start_frame,
                    end_frame,
                })
                .collect(),
        }
    }

    #[test]
    fn single_cell() {
        // 1015 ms of audio -> 100 frames.
        let m = align_confusion(&[units(&[(7, 0, 100)])], &[phones(&[("aa", 0.0, 1015.0)])], 10.0, 25.0).unwrap();
        assert_eq!(m.total(), 100);
        assert_eq!(m.get(0, 0), 100);
        assert_eq!(m.to_tsv(), "phoneme\tu7\naa\t100\n");
    }

    #[test]
    fn tiled_boundaries_give_a_permutation() {
        // Frame t is centred at 10 t + 12.5 ms.
        let tr = phones(&[("b", 0.0, 300.0), ("a", 300.0, 615.0)]);
        let seq = units(&[(5, 0, 29), (2, 29, 60)]);
        let m = align_confusion(&[seq], &[tr], 10.0, 25.0).unwrap();
        assert_eq!(m.phoneme_ids, ["a", "b"]);
        assert_eq!(m.unit_ids, [2, 5]);
        assert_eq!((m.get(0, 0), m.get(0, 1), m.get(1, 0), m.get(1, 1)), (31, 0, 0, 29));
        assert_eq!(m.dominant_fraction(1), 1.0);
    }

    #[test]
    fn gaps_go_to_the_preceding_phone() {
        let tr = phones(&[("a", 0.0, 100.0), ("b", 200.0, 315.0)]);
        assert_eq!(tr.label_at(150.0), "a");
        assert_eq!(tr.label_at(250.0), "b");
        assert_eq!(tr.label_at(-1.0), "a");
    }

    #[test]
    fn time_base_mismatch() {
        let tr = phones(&[("a", 0.0, 1015.0)]);
        assert!(align_confusion(&[units(&[(0, 0, 101)])], &[tr.clone()], 10.0, 25.0).is_ok());
        assert!(matches!(
            align_confusion(&[units(&[(0, 0, 103)])], &[tr], 10.0, 25.0),
            Err(Error::TimeBaseMismatch { .. })
        ));
        assert!(align_confusion(&[units(&[(0, 0, 3)])], &[], 10.0, 25.0).is_err());
    }

    #[test]
    fn timit_phones() {
        let tr = PhoneTranscript::parse_timit("u", "0 3200 h#\n3200 4800 ae\n", 16000).unwrap();
        assert_eq!(tr.phones[1].start_ms, 200.0);
        assert_eq!(tr.end_ms(), 300.0);
        assert!(PhoneTranscript::parse_timit("u", "0 x h#", 16000).is_err());
    }
}
