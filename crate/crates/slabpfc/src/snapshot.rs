//! Binary snapshot files.
//!
//! Layout, all little endian:
//!
//! | bytes | content |
//! |-------|---------|
//! | 8     | magic `PFCSNAP1` |
//! | 3 × 8 | `nx, ny, nz` as `u64` |
//! | 8     | step as `u64` |
//! | 8     | simulation time as `f64` |
//! | 8 · nx·ny·nz | values as `f64`, `x` fastest, then `y`, then `z` |
//!
//! A 2×2×2 snapshot is therefore exactly 112 bytes. Each snapshot has a
//! plain-text `.meta` sidecar with the run metadata and config hash.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

pub const MAGIC: &[u8; 8] = b"PFCSNAP1";
pub const HEADER_BYTES: usize = 48;

#[derive(Debug, thiserror::Error)]
pub enum SnapshotError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: not a snapshot (bad magic)")]
    BadMagic { path: PathBuf },
    #[error("{path}: header declares {expected} values but the file holds {found}")]
    Truncated { path: PathBuf, expected: usize, found: usize },
    #[error("dims {dims:?} describe {expected} values but {found} were given")]
    DimsMismatch { dims: [usize; 3], expected: usize, found: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub dims: [usize; 3],
    pub step: u64,
    pub time: f64,
    /// `x`-fastest values.
    pub data: Vec<f64>,
}

/// Summary printed by `snapshot dump`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnapshotStats {
    pub min: f64,
    pub max: f64,
    pub mean: f64,
}

impl Snapshot {
    pub fn stats(&self) -> SnapshotStats {
        let (mut min, mut max, mut sum) = (f64::INFINITY, f64::NEG_INFINITY, 0.0);
        for &v in &self.data {
            min = min.min(v);
            max = max.max(v);
            sum += v;
        }
        let mean = if self.data.is_empty() { 0.0 } else { sum / self.data.len() as f64 };
        SnapshotStats { min, max, mean }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> SnapshotError + '_ {
    move |source| SnapshotError::Io { path: path.to_path_buf(), source }
}

/// Writes a snapshot; refuses when `dims` do not match `data`.
pub fn write_snapshot(path: &Path, dims: [usize; 3], step: u64, time: f64, data: &[f64]) -> Result<(), SnapshotError> {
    let expected = dims.iter().product::<usize>();
    if expected != data.len() {
        return Err(SnapshotError::DimsMismatch { dims, expected, found: data.len() });
    }
    let mut w = BufWriter::new(File::create(path).map_err(io_err(path))?);
    let mut header = Vec::with_capacity(HEADER_BYTES);
    header.extend_from_slice(MAGIC);
    for d in dims {
        header.extend_from_slice(&(d as u64).to_le_bytes());
    }
    header.extend_from_slice(&step.to_le_bytes());
    header.extend_from_slice(&time.to_le_bytes());
    w.write_all(&header).map_err(io_err(path))?;
    for v in data {
        w.write_all(&v.to_le_bytes()).map_err(io_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

pub fn read_snapshot(path: &Path) -> Result<Snapshot, SnapshotError> {
    let mut bytes = Vec::new();
    BufReader::new(File::open(path).map_err(io_err(path))?).read_to_end(&mut bytes).map_err(io_err(path))?;
    if bytes.len() < HEADER_BYTES || &bytes[..8] != MAGIC {
        return Err(SnapshotError::BadMagic { path: path.to_path_buf() });
    }
    let word = |i: usize| -> [u8; 8] { bytes[8 + 8 * i..16 + 8 * i].try_into().unwrap() };
    let dims = [0, 1, 2].map(|i| u64::from_le_bytes(word(i)) as usize);
    let step = u64::from_le_bytes(word(3));
    let time = f64::from_le_bytes(word(4));
    let body = &bytes[HEADER_BYTES..];
    let expected = dims.iter().try_fold(1usize, |acc, &d| acc.checked_mul(d)).unwrap_or(usize::MAX);
    if body.len() % 8 != 0 || body.len() / 8 != expected {
        return Err(SnapshotError::Truncated { path: path.to_path_buf(), expected, found: body.len() / 8 });
    }
    let data = body.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
    Ok(Snapshot { dims, step, time, data })
}

/// Writes `key = value` lines next to a snapshot as `<path>.meta`.
pub fn write_meta(path: &Path, entries: &[(&str, String)]) -> Result<PathBuf, SnapshotError> {
    let mut meta = path.as_os_str().to_owned();
    meta.push(".meta");
    let meta = PathBuf::from(meta);
    let mut text = String::new();
    for (k, v) in entries {
        text.push_str(&format!("{k} = {v}\n"));
    }
    std::fs::write(&meta, text).map_err(io_err(&meta))?;
    Ok(meta)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_layout() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.bin");
        write_snapshot(&p, [1, 1, 1], 7, 0.5, &[2.0]).unwrap();
        let b = std::fs::read(&p).unwrap();
        assert_eq!(b.len(), 56);
        assert_eq!(&b[..8], b"PFCSNAP1");
        assert_eq!(u64::from_le_bytes(b[32..40].try_into().unwrap()), 7);
        assert_eq!(f64::from_le_bytes(b[48..56].try_into().unwrap()), 2.0);
    }

    #[test]
    fn garbage_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("junk");
        std::fs::write(&p, b"not a snapshot at all, definitely not one, no no no").unwrap();
        assert!(matches!(read_snapshot(&p), Err(SnapshotError::BadMagic { .. })));
        write_snapshot(&p, [2, 1, 1], 0, 0.0, &[1.0, 2.0]).unwrap();
        let mut b = std::fs::read(&p).unwrap();
        b.truncate(b.len() - 8);
        std::fs::write(&p, b).unwrap();
        assert!(matches!(read_snapshot(&p), Err(SnapshotError::Truncated { expected: 2, found: 1, .. })));
    }
}
