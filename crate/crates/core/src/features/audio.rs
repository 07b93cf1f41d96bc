use std::fs;
use std::path::Path;

use crate::{Error, Result};

/// Mono PCM16 audio.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioClip {
    pub samples: Vec<i16>,
    pub sample_rate_hz: u32,
    pub id: String,
}

impl AudioClip {
    pub fn new(id: impl Into<String>, samples: Vec<i16>, sample_rate_hz: u32) -> Result<Self> {
        if sample_rate_hz == 0 {
            return Err(Error::InvalidArgument("sample rate must be positive".into()));
        }
        if samples.is_empty() {
            return Err(Error::InvalidArgument("audio clip has no samples".into()));
        }
        Ok(Self {
            samples,
            sample_rate_hz,
            id: id.into(),
        })
    }

    pub fn duration_ms(&self) -> f64 {
        self.samples.len() as f64 * 1000.0 / self.sample_rate_hz as f64
    }

    /// Sub-clip covering `[start_ms, end_ms)`, clamped to the clip.
    pub fn slice_ms(&self, id: impl Into<String>, start_ms: f64, end_ms: f64) -> Result<Self> {
        let rate = self.sample_rate_hz as f64 / 1000.0;
        let start = ((start_ms * rate).round().max(0.0) as usize).min(self.samples.len());
        let end = ((end_ms * rate).round().max(0.0) as usize).min(self.samples.len());
        if end <= start {
            return Err(Error::InvalidArgument(format!(
                "empty slice [{start_ms}, {end_ms}) ms of {}",
                self.id
            )));
        }
        Self::new(id, self.samples[start..end].to_vec(), self.sample_rate_hz)
    }
}

/// Reads a mono PCM16 file. RIFF/WAVE and uncompressed NIST SPHERE are accepted.
pub fn read_audio(path: &Path) -> Result<AudioClip> {
    let id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.starts_with(b"NIST_1A") {
        return read_sphere(path, id, &bytes);
    }
    let reader = hound::WavReader::new(std::io::Cursor::new(bytes))?;
    let spec = reader.spec();
    if spec.channels != 1 {
        return Err(Error::MultiChannel {
            path: path.to_path_buf(),
            channels: spec.channels,
        });
    }
    if spec.sample_format != hound::SampleFormat::Int || spec.bits_per_sample != 16 {
        return Err(Error::UnsupportedAudio {
            path: path.to_path_buf(),
            reason: format!("{:?} {}-bit, expected PCM16", spec.sample_format, spec.bits_per_sample),
        });
    }
    let samples = reader.into_samples::<i16>().collect::<std::result::Result<Vec<_>, _>>()?;
    AudioClip::new(id, samples, spec.sample_rate)
}

fn read_sphere(path: &Path, id: String, bytes: &[u8]) -> Result<AudioClip> {
    let bad = |reason: &str| Error::UnsupportedAudio {
        path: path.to_path_buf(),
        reason: reason.to_string(),
    };
    let preamble = std::str::from_utf8(&bytes[..bytes.len().min(16)]).map_err(|_| bad("bad SPHERE preamble"))?;
    let header_len: usize = preamble
        .lines()
        .nth(1)
        .and_then(|l| l.trim().parse().ok())
        .ok_or_else(|| bad("bad SPHERE header length"))?;
    if bytes.len() < header_len {
        return Err(Error::TruncatedPayload {
            expected: header_len,
            found: bytes.len(),
        });
    }
    let header = String::from_utf8_lossy(&bytes[..header_len]);
    let mut rate = None;
    let mut channels = 1u16;
    let mut width = 2usize;
    let mut big_endian = false;
    for line in header.lines() {
        let mut parts = line.split_whitespace();
        let (Some(key), Some(_ty), Some(value)) = (parts.next(), parts.next(), parts.next()) else {
            continue;
        };
        match key {
            "sample_rate" => rate = value.parse::<u32>().ok(),
            "channel_count" => channels = value.parse().map_err(|_| bad("bad channel_count"))?,
            "sample_n_bytes" => width = value.parse().map_err(|_| bad("bad sample_n_bytes"))?,
            "sample_byte_format" => big_endian = value == "10",
            "sample_coding" if !value.starts_with("pcm") => {
                return Err(bad("compressed SPHERE audio; decompress first"))
            }
            _ => {}
        }
    }
    if channels != 1 {
        return Err(Error::MultiChannel {
            path: path.to_path_buf(),
            channels,
        });
    }
    if width != 2 {
        return Err(bad("expected 2-byte samples"));
    }
    let rate = rate.ok_or_else(|| bad("missing sample_rate"))?;
    let samples = bytes[header_len..]
        .chunks_exact(2)
        .map(|b| {
            if big_endian {
                i16::from_be_bytes([b[0], b[1]])
            } else {
                i16::from_le_bytes([b[0], b[1]])
            }
        })
        .collect();
    AudioClip::new(id, samples, rate)
}

pub fn write_wav(clip: &AudioClip, path: &Path) -> Result<()> {
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate: clip.sample_rate_hz,
        bits_per_sample: 16,
        sample_format: hound::SampleFormat::Int,
    };
    let mut writer = hound::WavWriter::create(path, spec)?;
    for &s in &clip.samples {
        writer.write_sample(s)?;
    }
    writer.finalize()?;
    Ok(())
}
