//! Posteriorgram type and its binary file.
//!
//! File layout, little-endian:
//!
//! ```text
//! magic      8 bytes  "ADUPGRM\0"
//! version    u32      1
//! dim        u32      U
//! frames     u32      T
//! shift_ms   f32
//! id_len     u32
//! id         id_len bytes, UTF-8
//! unit_ids   U * u32
//! data       T * U f64, row-major
//! ```

use std::fs;
use std::path::Path;

use crate::features::file::Reader;
use crate::{Error, Result};

pub const POSTERIORGRAM_MAGIC: &[u8; 8] = b"ADUPGRM\0";
const VERSION: u32 = 1;
const ROW_TOLERANCE: f64 = 1e-6;

/// Per-frame posterior distribution over units, row-major `T x U`.
#[derive(Debug, Clone, PartialEq)]
pub struct Posteriorgram {
    pub utterance_id: String,
    unit_ids: Vec<u32>,
    pub frame_shift_ms: f32,
    values: Vec<f64>,
}

impl Posteriorgram {
    /// Validates that every row is a probability distribution within 1e-6.
    pub fn new(utterance_id: impl Into<String>, unit_ids: Vec<u32>, frame_shift_ms: f32, values: Vec<f64>) -> Result<Self> {
        let u = unit_ids.len();
        if u == 0 {
            return Err(Error::InvalidArgument("posteriorgram needs at least one unit".into()));
        }
        if values.is_empty() || !values.len().is_multiple_of(u) {
            return Err(Error::DimensionMismatch {
                expected: u,
                found: values.len() % u.max(1),
            });
        }
        for (t, row) in values.chunks_exact(u).enumerate() {
            let sum: f64 = row.iter().sum();
            if row.iter().any(|p| !(p.is_finite() && *p >= 0.0)) || (sum - 1.0).abs() > ROW_TOLERANCE {
                return Err(Error::InvalidArgument(format!("posteriorgram row {t} sums to {sum}")));
            }
        }
        Ok(Self {
            utterance_id: utterance_id.into(),
            unit_ids,
            frame_shift_ms,
            values,
        })
    }

    /// Mixes every row with the uniform floor: `p' = (1 - U * floor) * p + floor`.
    ///
    /// Every entry ends up at least `floor` and rows stay normalized.
    pub fn floored(mut self, floor: f64) -> Result<Self> {
        let u = self.dim() as f64;
        if !(floor >= 0.0 && floor * u < 1.0) {
            return Err(Error::InvalidArgument(format!("floor {floor} too large for {u} units")));
        }
        let scale = 1.0 - u * floor;
        for v in self.values.iter_mut() {
            *v = scale * *v + floor;
        }
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.unit_ids.len()
    }

    pub fn len(&self) -> usize {
        self.values.len() / self.dim()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn unit_ids(&self) -> &[u32] {
        &self.unit_ids
    }

    pub fn row(&self, t: usize) -> &[f64] {
        let u = self.dim();
        &self.values[t * u..(t + 1) * u]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.dim())
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    /// Frames `start..end` as a new posteriorgram.
    pub fn slice(&self, id: impl Into<String>, start: usize, end: usize) -> Result<Self> {
        if start >= end || end > self.len() {
            return Err(Error::InvalidArgument(format!("bad frame range {start}..{end}")));
        }
        let u = self.dim();
        Ok(Self {
            utterance_id: id.into(),
            unit_ids: self.unit_ids.clone(),
            frame_shift_ms: self.frame_shift_ms,
            values: self.values[start * u..end * u].to_vec(),
        })
    }
}

pub fn write_posteriorgram_file(pg: &Posteriorgram, path: &Path) -> Result<()> {
    let id = pg.utterance_id.as_bytes();
    let mut out = Vec::with_capacity(28 + id.len() + pg.dim() * 4 + pg.values.len() * 8);
    out.extend_from_slice(POSTERIORGRAM_MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(pg.dim() as u32).to_le_bytes());
    out.extend_from_slice(&(pg.len() as u32).to_le_bytes());
    out.extend_from_slice(&pg.frame_shift_ms.to_le_bytes());
    out.extend_from_slice(&(id.len() as u32).to_le_bytes());
    out.extend_from_slice(id);
    for u in &pg.unit_ids {
        out.extend_from_slice(&u.to_le_bytes());
    }
    for v in &pg.values {
        out.extend_from_slice(&v.to_le_bytes());
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

pub fn read_posteriorgram_file(path: &Path) -> Result<Posteriorgram> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let mut r = Reader { bytes: &bytes, pos: 0 };
    if r.header_bytes(8, "magic")? != POSTERIORGRAM_MAGIC {
        return Err(Error::MalformedHeader("bad posteriorgram magic".into()));
    }
    let version = r.header_u32("version")?;
    if version != VERSION {
        return Err(Error::MalformedHeader(format!("unsupported version {version}")));
    }
    let dim = r.header_u32("dim")? as usize;
    let frames = r.header_u32("frame count")? as usize;
    let shift = r.header_f32("frame shift")?;
    let id_len = r.header_u32("id length")? as usize;
    let id = std::str::from_utf8(r.header_bytes(id_len, "utterance id")?)
        .map_err(|_| Error::MalformedHeader("utterance id is not UTF-8".into()))?
        .to_string();
    let units = r
        .header_bytes(dim * 4, "unit table")?
        .chunks_exact(4)
        .map(|b| u32::from_le_bytes(b.try_into().unwrap()))
        .collect();
    let values = r
        .payload(frames * dim * 8)?
        .chunks_exact(8)
        .map(|b| f64::from_le_bytes(b.try_into().unwrap()))
        .collect();
    Posteriorgram::new(id, units, shift, values)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floor_keeps_rows_normalized() {
        let pg = Posteriorgram::new("u", vec![0, 1], 10.0, vec![1.0, 0.0, 0.3, 0.7]).unwrap();
        let f = pg.floored(1e-6).unwrap();
        assert!((f.row(0)[0] - (1.0 - 1e-6)).abs() < 1e-15 && (f.row(0)[1] - 1e-6).abs() < 1e-18);
        for row in f.rows() {
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert!(row.iter().all(|&p| p >= 1e-6));
        }
    }

    #[test]
    fn rejects_unnormalized_rows() {
        assert!(Posteriorgram::new("u", vec![0, 1], 10.0, vec![0.5, 0.4]).is_err());
        assert!(Posteriorgram::new("u", vec![0, 1], 10.0, vec![0.5]).is_err());
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("u.pgram");
        let pg = Posteriorgram::new("utt", vec![4, 9, 2], 10.0, vec![0.2, 0.3, 0.5, 1.0, 0.0, 0.0])
            .unwrap()
            .floored(1e-6)
            .unwrap();
        write_posteriorgram_file(&pg, &path).unwrap();
        assert_eq!(read_posteriorgram_file(&path).unwrap(), pg);
        let bytes = fs::read(&path).unwrap();
        fs::write(&path, &bytes[..bytes.len() - 3]).unwrap();
        assert!(matches!(read_posteriorgram_file(&path), Err(Error::TruncatedPayload { .. })));
    }
}
