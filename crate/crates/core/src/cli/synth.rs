//! Synthetic corpus with known answers.
//!
//! Every "phone" is a stationary pair of tones, every word a phone sequence.
//! Keywords are rendered once and pasted verbatim into the utterances that
//! contain them; fillers are rendered fresh each time and never contain a
//! phone bigram that occurs inside a keyword. Phone durations are multiples
//! of the frame shift so a pasted keyword keeps its frame alignment.

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::eval::{GroundTruth, PhoneTranscript, TimedPhone};
use crate::features::{write_wav, AudioClip};
use crate::{Error, Result};

pub const SILENCE: &str = "sil";
/// Names for planted keywords, taken from a classic query list.
const KEYWORD_NAMES: [&str; 10] = [
    "age", "warm", "year", "problem", "artists", "money", "organizations", "development", "surface", "children",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub seed: u64,
    pub sample_rate_hz: u32,
    pub num_phones: usize,
    pub num_keywords: usize,
    pub phones_per_keyword: usize,
    /// Utterances containing each keyword once.
    pub occurrences_per_keyword: usize,
    /// Utterances without any keyword.
    pub distractors: usize,
    pub fillers_per_utterance: (usize, usize),
    pub phones_per_filler: (usize, usize),
    /// Phone duration range in 10 ms steps.
    pub phone_steps: (usize, usize),
    /// Leading and trailing silence in 10 ms steps.
    pub silence_steps: usize,
    /// White noise standard deviation in PCM16 units.
    pub noise: f64,
    pub amplitude: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            seed: 7,
            sample_rate_hz: 16_000,
            num_phones: 10,
            num_keywords: 5,
            phones_per_keyword: 4,
            occurrences_per_keyword: 4,
            distractors: 20,
            fillers_per_utterance: (2, 3),
            phones_per_filler: (2, 3),
            phone_steps: (8, 12),
            silence_steps: 10,
            noise: 60.0,
            amplitude: 6000.0,
        }
    }
}

impl SynthConfig {
    /// A corpus of bare phone strings for unit/phone alignment checks.
    pub fn phones_only(num_phones: usize, utterances: usize, seed: u64) -> Self {
        Self {
            seed,
            num_phones,
            num_keywords: 0,
            occurrences_per_keyword: 0,
            distractors: utterances,
            fillers_per_utterance: (3, 5),
            phone_steps: (30, 50),
            silence_steps: 30,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(format!("synthetic corpus: {m}")));
        if self.num_phones < 2 || self.num_phones > 40 {
            return bad("num_phones must lie in 2..=40");
        }
        if self.num_keywords > KEYWORD_NAMES.len() {
            return bad("at most 10 keywords");
        }
        if self.num_keywords > 0 && self.phones_per_keyword < 2 {
            return bad("keywords need at least two phones");
        }
        for (name, (lo, hi)) in [
            ("fillers_per_utterance", self.fillers_per_utterance),
            ("phones_per_filler", self.phones_per_filler),
            ("phone_steps", self.phone_steps),
        ] {
            if lo == 0 || lo > hi {
                return bad(&format!("{name} must be a nonempty range of positive values"));
            }
        }
        if ![8000, 16000].contains(&self.sample_rate_hz) {
            return Err(Error::UnsupportedSampleRate(self.sample_rate_hz));
        }
        if self.distractors + self.num_keywords * self.occurrences_per_keyword == 0 {
            return bad("no utterances requested");
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SynthUtterance {
    pub audio: AudioClip,
    pub phones: PhoneTranscript,
    /// `(word, start_ms, end_ms)`.
    pub words: Vec<(String, f64, f64)>,
}

#[derive(Debug, Clone)]
pub struct SynthCorpus {
    pub utterances: Vec<SynthUtterance>,
    pub keywords: Vec<String>,
    /// The exact waveform planted for each keyword.
    pub queries: Vec<AudioClip>,
}

impl SynthCorpus {
    pub fn truth(&self) -> GroundTruth {
        let mut t = GroundTruth::default();
        for u in &self.utterances {
            for (w, s, e) in &u.words {
                t.add(&u.audio.id, w, *s, *e);
            }
        }
        t
    }

    /// Writes `audio/`, `queries/`, `phones/`, `truth.tsv` and `keywords.txt`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        for sub in ["audio", "queries", "phones"] {
            let p = dir.join(sub);
            fs::create_dir_all(&p).map_err(|e| Error::io(&p, e))?;
        }
        for u in &self.utterances {
            write_wav(&u.audio, &dir.join("audio").join(format!("{}.wav", u.audio.id)))?;
            let per_ms = u.audio.sample_rate_hz as f64 / 1000.0;
            let phn: String = u
                .phones
                .phones
                .iter()
                .map(|p| {
                    format!(
                        "{} {} {}\n",
                        (p.start_ms * per_ms).round() as u64,
                        (p.end_ms * per_ms).round() as u64,
                        p.label
                    )
                })
                .collect();
            let path = dir.join("phones").join(format!("{}.phn", u.audio.id));
            fs::write(&path, phn).map_err(|e| Error::io(&path, e))?;
        }
        for q in &self.queries {
            write_wav(q, &dir.join("queries").join(format!("{}.wav", q.id)))?;
        }
        let path = dir.join("truth.tsv");
        fs::write(&path, self.truth().to_tsv()).map_err(|e| Error::io(&path, e))?;
        let path = dir.join("keywords.txt");
        fs::write(&path, self.keywords.join("\n") + "\n").map_err(|e| Error::io(&path, e))
    }
}

struct Voice {
    sample_rate: f64,
    amplitude: f64,
    noise: f64,
}

impl Voice {
    /// Two tones per phone, spread on a log scale so phones stay distinct
    /// in the mel cepstrum.
    fn formants(&self, phone: usize, num_phones: usize) -> (f64, f64) {
        let span = (self.sample_rate / 2.0 * 0.8 / 200.0).ln();
        let f1 = 200.0 * (span * phone as f64 / num_phones as f64).exp();
        // Half a scale away from f1, so the two tones never beat.
        let pos2 = (phone as f64 + num_phones as f64 / 2.0 + 0.5) % num_phones as f64;
        let f2 = 200.0 * (span * pos2 / num_phones as f64).exp();
        (f1, f2)
    }

    fn render(&self, phones: &[(usize, usize)], num_phones: usize, rng: &mut ChaCha8Rng, out: &mut Vec<i16>) {
        let step = (self.sample_rate / 100.0) as usize;
        for &(phone, steps) in phones {
            let n = steps * step;
            let (f1, f2) = self.formants(phone, num_phones);
            let gain = self.amplitude;
            let ramp = (0.005 * self.sample_rate) as usize;
            for i in 0..n {
                let t = i as f64 / self.sample_rate;
                let env = if i < ramp {
                    i as f64 / ramp as f64
                } else if n - i < ramp {
                    (n - i) as f64 / ramp as f64
                } else {
                    1.0
                };
                let tau = std::f64::consts::TAU;
                let s = (tau * f1 * t).sin() + 0.6 * (tau * f2 * t).sin();
                out.push(self.sample(gain * env * s / 1.6, rng));
            }
        }
    }

    fn silence(&self, steps: usize, rng: &mut ChaCha8Rng, out: &mut Vec<i16>) {
        let n = steps * (self.sample_rate / 100.0) as usize;
        out.extend((0..n).map(|_| self.sample(0.0, rng)));
    }

    fn sample(&self, x: f64, rng: &mut ChaCha8Rng) -> i16 {
        let noise: f64 = rng.sample(rand_distr::StandardNormal);
        (x + self.noise * noise).round().clamp(i16::MIN as f64, i16::MAX as f64) as i16
    }
}

fn random_phones(cfg: &SynthConfig, count: usize, rng: &mut ChaCha8Rng) -> Vec<(usize, usize)> {
    (0..count)
        .map(|_| {
            (
                rng.random_range(0..cfg.num_phones),
                rng.random_range(cfg.phone_steps.0..=cfg.phone_steps.1),
            )
        })
        .collect()
}

pub fn generate(cfg: &SynthConfig) -> Result<SynthCorpus> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let voice = Voice {
        sample_rate: cfg.sample_rate_hz as f64,
        amplitude: cfg.amplitude,
        noise: cfg.noise,
    };
    let ms_per_sample = 1000.0 / cfg.sample_rate_hz as f64;

    // Keywords: distinct phone strings without repeated neighbours.
    let mut keyword_phones: Vec<Vec<(usize, usize)>> = Vec::new();
    let mut seen = BTreeSet::new();
    while keyword_phones.len() < cfg.num_keywords {
        let mut p = random_phones(cfg, cfg.phones_per_keyword, &mut rng);
        p.dedup_by_key(|x| x.0);
        let labels: Vec<usize> = p.iter().map(|x| x.0).collect();
        if p.len() == cfg.phones_per_keyword && seen.insert(labels) {
            keyword_phones.push(p);
        }
    }
    let banned: BTreeSet<(usize, usize)> = keyword_phones
        .iter()
        .flat_map(|k| k.windows(2).map(|w| (w[0].0, w[1].0)).collect::<Vec<_>>())
        .collect();
    let keywords: Vec<String> = KEYWORD_NAMES[..cfg.num_keywords].iter().map(|s| s.to_string()).collect();
    let mut queries = Vec::new();
    let mut keyword_audio = Vec::new();
    for (name, phones) in keywords.iter().zip(&keyword_phones) {
        let mut samples = Vec::new();
        voice.render(phones, cfg.num_phones, &mut rng, &mut samples);
        queries.push(AudioClip::new(name.clone(), samples.clone(), cfg.sample_rate_hz)?);
        keyword_audio.push(samples);
    }

    let mut plan: Vec<Option<usize>> = (0..cfg.num_keywords)
        .flat_map(|k| std::iter::repeat_n(Some(k), cfg.occurrences_per_keyword))
        .chain(std::iter::repeat_n(None, cfg.distractors))
        .collect();
    plan.shuffle(&mut rng);

    let mut utterances = Vec::with_capacity(plan.len());
    let mut filler_count = 0usize;
    for (u, keyword) in plan.into_iter().enumerate() {
        let id = format!("synth{u:03}");
        let fillers = rng.random_range(cfg.fillers_per_utterance.0..=cfg.fillers_per_utterance.1);
        let slot = keyword.map(|_| rng.random_range(0..=fillers));
        let mut samples = Vec::new();
        let mut phones = Vec::new();
        let mut words = Vec::new();
        let mut last: Option<usize> = None;
        let now = |samples: &Vec<i16>| samples.len() as f64 * ms_per_sample;
        let mut push_phone = |label: String, start: f64, end: f64| phones.push(TimedPhone { label, start_ms: start, end_ms: end });

        let start = now(&samples);
        voice.silence(cfg.silence_steps, &mut rng, &mut samples);
        push_phone(SILENCE.into(), start, now(&samples));
        for w in 0..=fillers {
            if slot == Some(w) {
                let k = keyword.unwrap();
                let start = now(&samples);
                let mut t = start;
                for &(p, steps) in &keyword_phones[k] {
                    let end = t + steps as f64 * 10.0;
                    push_phone(format!("p{p}"), t, end);
                    t = end;
                }
                samples.extend_from_slice(&keyword_audio[k]);
                words.push((keywords[k].clone(), start, now(&samples)));
                last = keyword_phones[k].last().map(|x| x.0);
            }
            if w == fillers {
                break;
            }
            let count = rng.random_range(cfg.phones_per_filler.0..=cfg.phones_per_filler.1);
            let next_keyword_first = if slot == Some(w + 1) {
                keyword.map(|k| keyword_phones[k][0].0)
            } else {
                None
            };
            let mut filler = Vec::with_capacity(count);
            let mut attempts = 0;
            while filler.len() < count {
                attempts += 1;
                if attempts > 10_000 {
                    return Err(Error::Config("synthetic corpus: too few phones to build fillers".into()));
                }
                let (p, steps) = random_phones(cfg, 1, &mut rng)[0];
                let prev = filler.last().map(|x: &(usize, usize)| x.0).or(last);
                let is_last = filler.len() + 1 == count;
                let clash = prev.is_some_and(|q| q == p || banned.contains(&(q, p)))
                    || (is_last && next_keyword_first.is_some_and(|n| n == p || banned.contains(&(p, n))));
                if !clash {
                    filler.push((p, steps));
                }
            }
            let start = now(&samples);
            let mut t = start;
            for &(p, steps) in &filler {
                let end = t + steps as f64 * 10.0;
                push_phone(format!("p{p}"), t, end);
                t = end;
            }
            voice.render(&filler, cfg.num_phones, &mut rng, &mut samples);
            filler_count += 1;
            words.push((format!("filler{filler_count:04}"), start, now(&samples)));
            last = filler.last().map(|x| x.0);
        }
        let start = now(&samples);
        voice.silence(cfg.silence_steps, &mut rng, &mut samples);
        push_phone(SILENCE.into(), start, now(&samples));

        utterances.push(SynthUtterance {
            audio: AudioClip::new(id.clone(), samples, cfg.sample_rate_hz)?,
            phones: PhoneTranscript::new(id, phones)?,
            words,
        });
    }
    Ok(SynthCorpus {
        utterances,
        keywords,
        queries,
    })
}
