//! Binary feature file.
//!
//! Layout, all little-endian:
//!
//! ```text
//! magic      8 bytes  "ADUFEAT\0"
//! version    u32      1
//! dim        u32      39
//! frames     u32      T
//! shift_ms   f32
//! length_ms  f32
//! id_len     u32
//! id         id_len bytes, UTF-8
//! data       T * dim f32, row-major
//! ```

use std::fs;
use std::path::Path;

use super::{FeatureSequence, FEATURE_DIM};
use crate::{Error, Result};

pub const FEATURE_MAGIC: &[u8; 8] = b"ADUFEAT\0";
const VERSION: u32 = 1;

pub fn write_feature_file(seq: &FeatureSequence, path: &Path) -> Result<()> {
    let id = seq.utterance_id.as_bytes();
    let mut out = Vec::with_capacity(32 + id.len() + seq.as_slice().len() * 4);
    out.extend_from_slice(FEATURE_MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(FEATURE_DIM as u32).to_le_bytes());
    out.extend_from_slice(&(seq.len() as u32).to_le_bytes());
    out.extend_from_slice(&seq.frame_shift_ms.to_le_bytes());
    out.extend_from_slice(&seq.frame_length_ms.to_le_bytes());
    out.extend_from_slice(&(id.len() as u32).to_le_bytes());
    out.extend_from_slice(id);
    for v in seq.as_slice() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

pub fn read_feature_file(path: &Path) -> Result<FeatureSequence> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes)
}

pub(crate) struct Reader<'a> {
    pub bytes: &'a [u8],
    pub pos: usize,
}

impl<'a> Reader<'a> {
    pub fn header_u32(&mut self, field: &str) -> Result<u32> {
        let b = self.header_bytes(4, field)?;
        Ok(u32::from_le_bytes(b.try_into().unwrap()))
    }

    pub fn header_f32(&mut self, field: &str) -> Result<f32> {
        let b = self.header_bytes(4, field)?;
        Ok(f32::from_le_bytes(b.try_into().unwrap()))
    }

    pub fn header_bytes(&mut self, n: usize, field: &str) -> Result<&'a [u8]> {
        if self.pos + n > self.bytes.len() {
            return Err(Error::MalformedHeader(format!("missing {field}")));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    pub fn payload(&mut self, n: usize) -> Result<&'a [u8]> {
        let rest = &self.bytes[self.pos..];
        if rest.len() < n {
            return Err(Error::TruncatedPayload {
                expected: n,
                found: rest.len(),
            });
        }
        if rest.len() > n {
            return Err(Error::MalformedHeader(format!(
                "{} trailing bytes after payload",
                rest.len() - n
            )));
        }
        self.pos += n;
        Ok(rest)
    }
}

fn decode(bytes: &[u8]) -> Result<FeatureSequence> {
    let mut r = Reader { bytes, pos: 0 };
    if r.header_bytes(8, "magic")? != FEATURE_MAGIC {
        return Err(Error::MalformedHeader("bad magic".into()));
    }
    let version = r.header_u32("version")?;
    if version != VERSION {
        return Err(Error::MalformedHeader(format!("unsupported version {version}")));
    }
    let dim = r.header_u32("dim")? as usize;
    if dim != FEATURE_DIM {
        return Err(Error::DimensionMismatch {
            expected: FEATURE_DIM,
            found: dim,
        });
    }
    let frames = r.header_u32("frame count")? as usize;
    let shift = r.header_f32("frame shift")?;
    let length = r.header_f32("frame length")?;
    let id_len = r.header_u32("id length")? as usize;
    let id = std::str::from_utf8(r.header_bytes(id_len, "utterance id")?)
        .map_err(|_| Error::MalformedHeader("utterance id is not UTF-8".into()))?
        .to_string();
    let data = r.payload(frames * dim * 4)?;
    let values = data
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes(b.try_into().unwrap()))
        .collect();
    FeatureSequence::new(id, values, shift, length)
        .map_err(|e| Error::MalformedHeader(format!("invalid feature payload: {e}")))
}
