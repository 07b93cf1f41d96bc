use std::f64::consts::PI;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use super::{AudioClip, FeatureSequence, FEATURE_DIM, STATIC_DIM};
use crate::{Error, Result};

const SUPPORTED_RATES: [u32; 2] = [8000, 16000];
const LOG_FLOOR: f64 = 1e-10;

/// MFCC front-end parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeatureConfig {
    pub frame_length_ms: f64,
    pub frame_shift_ms: f64,
    pub num_filters: usize,
    pub pre_emphasis: f64,
    /// Half-width of the delta regression window.
    pub delta_window: usize,
    pub low_freq_hz: f64,
    /// Upper filterbank edge; Nyquist when absent.
    pub high_freq_hz: Option<f64>,
    /// Subtract the corpus mean of the static coefficients.
    pub cepstral_mean_norm: bool,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        Self {
            frame_length_ms: 25.0,
            frame_shift_ms: 10.0,
            num_filters: 23,
            pre_emphasis: 0.97,
            delta_window: 2,
            low_freq_hz: 0.0,
            high_freq_hz: None,
            cepstral_mean_norm: false,
        }
    }
}

impl FeatureConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.frame_length_ms > 0.0 && self.frame_shift_ms > 0.0) {
            return Err(Error::Config("frame length and shift must be positive".into()));
        }
        if self.num_filters < STATIC_DIM {
            return Err(Error::Config(format!(
                "need more than {} mel filters for 12 cepstra",
                STATIC_DIM - 1
            )));
        }
        if self.delta_window == 0 {
            return Err(Error::Config("delta window must be at least 1".into()));
        }
        if !(0.0..1.0).contains(&self.pre_emphasis) {
            return Err(Error::Config("pre-emphasis must lie in [0, 1)".into()));
        }
        Ok(())
    }

    fn samples(&self, ms: f64, rate: u32) -> usize {
        (ms * rate as f64 / 1000.0).round() as usize
    }
}

fn hz_to_mel(hz: f64) -> f64 {
    1127.0 * (1.0 + hz / 700.0).ln()
}

/// Triangular filters over FFT bins `0..=fft_len/2`, each row one filter.
fn mel_filterbank(num_filters: usize, fft_len: usize, rate: u32, low: f64, high: f64) -> Vec<Vec<f64>> {
    let bins = fft_len / 2 + 1;
    let (mel_lo, mel_hi) = (hz_to_mel(low), hz_to_mel(high));
    let centers: Vec<f64> = (0..num_filters + 2)
        .map(|i| mel_lo + (mel_hi - mel_lo) * i as f64 / (num_filters + 1) as f64)
        .collect();
    (0..num_filters)
        .map(|m| {
            let (left, center, right) = (centers[m], centers[m + 1], centers[m + 2]);
            (0..bins)
                .map(|k| {
                    let mel = hz_to_mel(k as f64 * rate as f64 / fft_len as f64);
                    if mel > left && mel < right {
                        if mel <= center {
                            (mel - left) / (center - left)
                        } else {
                            (right - mel) / (right - center)
                        }
                    } else {
                        0.0
                    }
                })
                .collect()
        })
        .collect()
}

/// Regression deltas over a `±window` span with edge replication.
pub fn deltas(rows: &[Vec<f64>], window: usize) -> Vec<Vec<f64>> {
    let t_len = rows.len() as isize;
    let norm: f64 = 2.0 * (1..=window).map(|n| (n * n) as f64).sum::<f64>();
    let clamp = |t: isize| t.clamp(0, t_len - 1) as usize;
    (0..t_len)
        .map(|t| {
            let dim = rows[t as usize].len();
            (0..dim)
                .map(|d| {
                    (1..=window as isize)
                        .map(|n| n as f64 * (rows[clamp(t + n)][d] - rows[clamp(t - n)][d]))
                        .sum::<f64>()
                        / norm
                })
                .collect()
        })
        .collect()
}

/// 12 cepstra, log energy, and their first and second regression deltas.
pub fn extract_mfcc(clip: &AudioClip, config: &FeatureConfig) -> Result<FeatureSequence> {
    config.validate()?;
    let rate = clip.sample_rate_hz;
    if !SUPPORTED_RATES.contains(&rate) {
        return Err(Error::UnsupportedSampleRate(rate));
    }
    let frame_len = config.samples(config.frame_length_ms, rate);
    let shift = config.samples(config.frame_shift_ms, rate).max(1);
    if clip.samples.len() < frame_len || frame_len == 0 {
        return Err(Error::AudioTooShort {
            samples: clip.samples.len(),
            needed: frame_len,
        });
    }
    let n_frames = (clip.samples.len() - frame_len) / shift + 1;
    let fft_len = frame_len.next_power_of_two();
    let nyquist = rate as f64 / 2.0;
    let high = config.high_freq_hz.unwrap_or(nyquist).min(nyquist);
    if config.low_freq_hz < 0.0 || config.low_freq_hz >= high {
        return Err(Error::Config("filterbank band is empty".into()));
    }
    let filters = mel_filterbank(config.num_filters, fft_len, rate, config.low_freq_hz, high);
    let window: Vec<f64> = (0..frame_len)
        .map(|n| 0.54 - 0.46 * (2.0 * PI * n as f64 / (frame_len - 1).max(1) as f64).cos())
        .collect();
    let m = config.num_filters as f64;
    let dct: Vec<Vec<f64>> = (1..STATIC_DIM)
        .map(|i| {
            (0..config.num_filters)
                .map(|j| (2.0 / m).sqrt() * (PI * i as f64 * (j as f64 + 0.5) / m).cos())
                .collect()
        })
        .collect();
    let fft = FftPlanner::new().plan_fft_forward(fft_len);

    let mut buffer = vec![Complex::new(0.0, 0.0); fft_len];
    let mut statics = Vec::with_capacity(n_frames);
    for t in 0..n_frames {
        let raw: Vec<f64> = clip.samples[t * shift..t * shift + frame_len]
            .iter()
            .map(|&s| s as f64)
            .collect();
        let log_energy = raw.iter().map(|x| x * x).sum::<f64>().max(LOG_FLOOR).ln();

        buffer.fill(Complex::new(0.0, 0.0));
        for n in 0..frame_len {
            let prev = if n == 0 { raw[0] } else { raw[n - 1] };
            buffer[n].re = (raw[n] - config.pre_emphasis * prev) * window[n];
        }
        fft.process(&mut buffer);
        let power: Vec<f64> = buffer[..fft_len / 2 + 1].iter().map(|c| c.norm_sqr()).collect();
        let log_mel: Vec<f64> = filters
            .iter()
            .map(|f| f.iter().zip(&power).map(|(w, p)| w * p).sum::<f64>().max(LOG_FLOOR).ln())
            .collect();
        let mut row: Vec<f64> = dct
            .iter()
            .map(|basis| basis.iter().zip(&log_mel).map(|(b, l)| b * l).sum())
            .collect();
        row.push(log_energy);
        statics.push(row);
    }

    let d1 = deltas(&statics, config.delta_window);
    let d2 = deltas(&d1, config.delta_window);
    let mut frames = Vec::with_capacity(n_frames * FEATURE_DIM);
    for t in 0..n_frames {
        for block in [&statics[t], &d1[t], &d2[t]] {
            frames.extend(block.iter().map(|&v| v as f32));
        }
    }
    FeatureSequence::new(
        clip.id.clone(),
        frames,
        config.frame_shift_ms as f32,
        config.frame_length_ms as f32,
    )
}

/// Subtracts the corpus-wide mean of the 13 static dimensions from every frame.
pub fn apply_cepstral_mean_norm(corpus: &mut [FeatureSequence]) {
    let mut sum = [0.0f64; STATIC_DIM];
    let mut count = 0usize;
    for seq in corpus.iter() {
        for frame in seq.frames() {
            for (s, &v) in sum.iter_mut().zip(frame) {
                *s += v as f64;
            }
            count += 1;
        }
    }
    if count == 0 {
        return;
    }
    let mean: Vec<f32> = sum.iter().map(|s| (s / count as f64) as f32).collect();
    for seq in corpus.iter_mut() {
        for frame in seq.as_mut_slice().chunks_exact_mut(FEATURE_DIM) {
            for (v, m) in frame.iter_mut().zip(&mean) {
                *v -= m;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tone(freq: f64, secs: f64, rate: u32) -> AudioClip {
        let n = (secs * rate as f64) as usize;
        let samples = (0..n)
            .map(|i| (8000.0 * (2.0 * PI * freq * i as f64 / rate as f64).sin()).round() as i16)
            .collect();
        AudioClip::new("tone", samples, rate).unwrap()
    }

    #[test]
    fn one_second_gives_98_frames() {
        let clip = AudioClip::new("s", vec![100; 16000], 16000).unwrap();
        let seq = extract_mfcc(&clip, &FeatureConfig::default()).unwrap();
        assert_eq!(seq.len(), 98);
        assert!(seq.frames().all(|f| f.len() == FEATURE_DIM));
    }

    #[test]
    fn silence_is_stationary() {
        let clip = AudioClip::new("z", vec![0; 8000], 16000).unwrap();
        let seq = extract_mfcc(&clip, &FeatureConfig::default()).unwrap();
        let first = seq.frame(0)[12];
        for f in seq.frames() {
            assert_eq!(f[12], first);
            for d in &f[STATIC_DIM..] {
                assert!(d.abs() < 1e-9);
            }
        }
    }

    #[test]
    fn short_clip_rejected() {
        let clip = AudioClip::new("s", vec![1; 399], 16000).unwrap();
        assert!(matches!(
            extract_mfcc(&clip, &FeatureConfig::default()),
            Err(Error::AudioTooShort { samples: 399, needed: 400 })
        ));
        let exact = AudioClip::new("s", vec![1; 400], 16000).unwrap();
        assert_eq!(extract_mfcc(&exact, &FeatureConfig::default()).unwrap().len(), 1);
    }

    #[test]
    fn unsupported_rate_named() {
        let clip = AudioClip::new("s", vec![1; 44100], 44100).unwrap();
        let err = extract_mfcc(&clip, &FeatureConfig::default()).unwrap_err();
        assert!(err.to_string().contains("44100"));
    }

    #[test]
    fn deterministic() {
        let clip = tone(440.0, 0.3, 8000);
        let cfg = FeatureConfig::default();
        assert_eq!(extract_mfcc(&clip, &cfg).unwrap(), extract_mfcc(&clip, &cfg).unwrap());
    }

    #[test]
    fn deltas_of_linear_ramp() {
        let rows: Vec<Vec<f64>> = (0..10).map(|t| vec![2.0 * t as f64]).collect();
        let d = deltas(&rows, 2);
        for row in &d[2..8] {
            assert!((row[0] - 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn deltas_of_constant_vanish() {
        let rows = vec![vec![3.5, -1.0]; 7];
        for row in deltas(&rows, 2) {
            assert!(row.iter().all(|v| v.abs() < 1e-9));
        }
    }

    #[test]
    fn mean_norm_zeroes_static_mean() {
        let clip = tone(700.0, 0.5, 16000);
        let mut corpus = vec![extract_mfcc(&clip, &FeatureConfig::default()).unwrap()];
        apply_cepstral_mean_norm(&mut corpus);
        let n = corpus[0].len() as f64;
        for d in 0..STATIC_DIM {
            let mean: f64 = corpus[0].frames().map(|f| f[d] as f64).sum::<f64>() / n;
            assert!(mean.abs() < 1e-3, "dim {d} mean {mean}");
        }
    }
}
