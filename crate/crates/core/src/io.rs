//! Little-endian binary containers: snapshots (`ERSN`), bases (`ERPB`) and
//! ROM trajectories (`ERTJ`). The encoders for bases and trajectories live
//! next to their types; this module holds the shared byte plumbing and the
//! snapshot format.
//!
//! Snapshot payload rows follow the field layout: row `c·(d+2) + q` is
//! component `q` of cell `c`, cells ordered with `x₁` fastest.

use std::path::Path;

use crate::error::{Error, Result};
use crate::problems::{ProblemConfig, SnapshotSet};

pub const SNAPSHOT_MAGIC: &[u8; 4] = b"ERSN";
pub const SNAPSHOT_VERSION: u32 = 1;

#[derive(Default)]
pub(crate) struct ByteWriter {
    pub buf: Vec<u8>,
}

impl ByteWriter {
    pub fn bytes(&mut self, b: &[u8]) {
        self.buf.extend_from_slice(b);
    }
    pub fn u8(&mut self, x: u8) {
        self.buf.push(x);
    }
    pub fn u32(&mut self, x: u32) {
        self.bytes(&x.to_le_bytes());
    }
    pub fn u64(&mut self, x: u64) {
        self.bytes(&x.to_le_bytes());
    }
    pub fn f64(&mut self, x: f64) {
        self.bytes(&x.to_le_bytes());
    }
    pub fn f64s(&mut self, xs: &[f64]) {
        self.buf.reserve(8 * xs.len());
        for &x in xs {
            self.f64(x);
        }
    }
}

pub(crate) struct ByteReader<'a> {
    data: &'a [u8],
    pos: usize,
    what: &'static str,
}

impl<'a> ByteReader<'a> {
    pub fn new(data: &'a [u8], what: &'static str) -> Self {
        Self { data, pos: 0, what }
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.data.len());
        let end = end.ok_or_else(|| Error::Format(format!("{}: truncated file", self.what)))?;
        let s = &self.data[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    pub fn magic(&mut self, expected: &[u8; 4]) -> Result<()> {
        if self.take(4)? != expected {
            return Err(Error::Format(format!("{}: bad magic bytes", self.what)));
        }
        Ok(())
    }

    pub fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }
    pub fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
    pub fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    pub fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    pub fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        let bytes = self.take(n.checked_mul(8).ok_or_else(|| self.err("size overflow"))?)?;
        Ok(bytes.chunks_exact(8).map(|b| f64::from_le_bytes(b.try_into().unwrap())).collect())
    }
    pub fn count(&mut self) -> Result<usize> {
        usize::try_from(self.u64()?).map_err(|_| self.err("count overflow"))
    }
    pub fn err(&self, msg: &str) -> Error {
        Error::Format(format!("{}: {msg}", self.what))
    }
    pub fn finish(&self) -> Result<()> {
        if self.pos != self.data.len() {
            return Err(self.err("trailing bytes"));
        }
        Ok(())
    }
}

/// Snapshot matrix as stored on disk, before it is tied to a configuration.
#[derive(Clone, Debug, PartialEq)]
pub struct RawSnapshots {
    pub dim: u32,
    pub n_cells: usize,
    pub components: usize,
    /// One column per snapshot.
    pub columns: Vec<Vec<f64>>,
    pub times: Vec<f64>,
}

impl RawSnapshots {
    pub fn from_set(set: &SnapshotSet) -> Self {
        Self {
            dim: set.config.dim() as u32,
            n_cells: set.rows() / set.config.nvar(),
            components: set.config.nvar(),
            columns: set.columns.clone(),
            times: set.times.clone(),
        }
    }

    /// Attach the configuration that produced the data, checking shapes.
    pub fn into_set(self, config: ProblemConfig) -> Result<SnapshotSet> {
        let mesh = config.mesh()?;
        if self.dim as usize != config.dim()
            || self.n_cells != mesh.n_cells()
            || self.components != config.nvar()
        {
            return Err(Error::Dimension(format!(
                "snapshot file holds d={} with {} cells × {} components; config expects d={} with {} cells",
                self.dim,
                self.n_cells,
                self.components,
                config.dim(),
                mesh.n_cells()
            )));
        }
        SnapshotSet::new(config, self.columns, self.times)
    }
}

pub fn encode_snapshots(raw: &RawSnapshots) -> Vec<u8> {
    let rows = raw.n_cells * raw.components;
    let mut w = ByteWriter::default();
    w.bytes(SNAPSHOT_MAGIC);
    w.u32(SNAPSHOT_VERSION);
    w.u32(raw.dim);
    w.u64(raw.n_cells as u64);
    w.u64(raw.columns.len() as u64);
    w.u64(raw.components as u64);
    w.buf.reserve(8 * rows * raw.columns.len());
    for i in 0..rows {
        for col in &raw.columns {
            w.f64(col[i]);
        }
    }
    w.f64s(&raw.times);
    w.buf
}

pub fn decode_snapshots(bytes: &[u8]) -> Result<RawSnapshots> {
    let mut r = ByteReader::new(bytes, "snapshot file");
    r.magic(SNAPSHOT_MAGIC)?;
    let version = r.u32()?;
    if version != SNAPSHOT_VERSION {
        return Err(r.err(&format!("unsupported version {version}")));
    }
    let dim = r.u32()?;
    if !(1..=2).contains(&dim) {
        return Err(r.err(&format!("unsupported dimension {dim}")));
    }
    let n_cells = r.count()?;
    let n_snap = r.count()?;
    let components = r.count()?;
    let rows = n_cells
        .checked_mul(components)
        .ok_or_else(|| r.err("size overflow"))?;
    let payload = r.f64s(rows.checked_mul(n_snap).ok_or_else(|| r.err("size overflow"))?)?;
    let times = r.f64s(n_snap)?;
    r.finish()?;
    let columns = (0..n_snap)
        .map(|j| (0..rows).map(|i| payload[i * n_snap + j]).collect())
        .collect();
    Ok(RawSnapshots { dim, n_cells, components, columns, times })
}

pub fn write_snapshots(path: impl AsRef<Path>, set: &SnapshotSet) -> Result<()> {
    std::fs::write(path, encode_snapshots(&RawSnapshots::from_set(set)))?;
    Ok(())
}

pub fn read_snapshots(path: impl AsRef<Path>) -> Result<RawSnapshots> {
    decode_snapshots(&std::fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> RawSnapshots {
        RawSnapshots {
            dim: 1,
            n_cells: 2,
            components: 3,
            columns: vec![vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0], vec![-1.0, 0.5, 0.25, 8.0, 9.0, 1e300]],
            times: vec![0.0, 0.125],
        }
    }

    #[test]
    fn header_layout_is_fixed() {
        let bytes = encode_snapshots(&sample());
        assert_eq!(&bytes[..4], b"ERSN");
        assert_eq!(u32::from_le_bytes(bytes[4..8].try_into().unwrap()), 1);
        assert_eq!(u32::from_le_bytes(bytes[8..12].try_into().unwrap()), 1);
        assert_eq!(u64::from_le_bytes(bytes[12..20].try_into().unwrap()), 2);
        assert_eq!(u64::from_le_bytes(bytes[20..28].try_into().unwrap()), 2);
        assert_eq!(u64::from_le_bytes(bytes[28..36].try_into().unwrap()), 3);
        // row-major: row 0 holds the first entry of each snapshot
        assert_eq!(f64::from_le_bytes(bytes[36..44].try_into().unwrap()), 1.0);
        assert_eq!(f64::from_le_bytes(bytes[44..52].try_into().unwrap()), -1.0);
        assert_eq!(bytes.len(), 36 + 8 * 12 + 8 * 2);
    }

    #[test]
    fn roundtrip_and_corruption() {
        let raw = sample();
        let bytes = encode_snapshots(&raw);
        assert_eq!(decode_snapshots(&bytes).unwrap(), raw);
        assert!(decode_snapshots(&bytes[..bytes.len() - 1]).is_err());
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(decode_snapshots(&bad).is_err());
        let mut long = bytes;
        long.push(0);
        assert!(decode_snapshots(&long).is_err());
    }
}
