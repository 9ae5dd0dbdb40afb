//! Self-describing binary container for [`Dataset`].
//!
//! Layout, all integers and floats little-endian:
//!
//! ```text
//! offset  size          field
//! 0       8             magic "ULRNDST1"
//! 8       4             format version (u32, currently 1)
//! 12      8             rows (u64)
//! 20      8             cols (u64)
//! 28      rows*cols*8   features, row-major f64
//! ...     rows          labels, one u8 each (0 or 1)
//! ...     rows*8        row ids, u64 each
//! ```
//!
//! `load(save(ds))` reproduces `ds` exactly: feature bits, label bytes,
//! row ids, and row order all survive the round trip.

use std::fs;
use std::path::Path;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::wire::{put_f64, put_u32, put_u64, Reader};

const MAGIC: &[u8; 8] = b"ULRNDST1";
const VERSION: u32 = 1;

// Length guard against corrupted headers; generous for desk-scale data.
const MAX_ELEMENTS: usize = 1 << 33;

impl Dataset {
    /// Encode into the container format.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut buf = Vec::with_capacity(28 + self.n_rows() * (self.n_cols() * 8 + 9));
        buf.extend_from_slice(MAGIC);
        put_u32(&mut buf, VERSION);
        put_u64(&mut buf, self.n_rows() as u64);
        put_u64(&mut buf, self.n_cols() as u64);
        for i in 0..self.n_rows() {
            for &v in self.row(i) {
                put_f64(&mut buf, v);
            }
        }
        for i in 0..self.n_rows() {
            buf.push(self.label(i));
        }
        for i in 0..self.n_rows() {
            put_u64(&mut buf, self.row_id(i));
        }
        buf
    }

    /// Decode a full container, rejecting trailing bytes.
    pub fn from_bytes(bytes: &[u8]) -> Result<Dataset> {
        let mut r = Reader::new(bytes);
        let ds = read_dataset(&mut r)?;
        r.expect_eof()?;
        Ok(ds)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Dataset> {
        let bytes = fs::read(path)?;
        Dataset::from_bytes(&bytes)
    }

    /// Export as CSV with columns `row_id,label,f0..f{d-1}`. Floats use
    /// the shortest round-trip decimal form, so `import_csv` restores
    /// them bit-exactly.
    pub fn export_csv(&self, path: &Path) -> Result<()> {
        let mut out = String::new();
        out.push_str("row_id,label");
        for j in 0..self.n_cols() {
            out.push_str(&format!(",f{j}"));
        }
        out.push('\n');
        for i in 0..self.n_rows() {
            out.push_str(&format!("{},{}", self.row_id(i), self.label(i)));
            for &v in self.row(i) {
                out.push_str(&format!(",{v}"));
            }
            out.push('\n');
        }
        fs::write(path, out)?;
        Ok(())
    }

    /// Inverse of [`Dataset::export_csv`].
    pub fn import_csv(path: &Path) -> Result<Dataset> {
        let file = fs::File::open(path)?;
        let mut reader = csv::Reader::from_reader(file);
        let headers = reader.headers()?.clone();
        if headers.len() < 3 || &headers[0] != "row_id" || &headers[1] != "label" {
            return Err(Error::Schema(
                "expected dataset CSV header row_id,label,f0,...".to_string(),
            ));
        }
        let d = headers.len() - 2;
        let mut features = Vec::new();
        let mut labels = Vec::new();
        let mut row_ids = Vec::new();
        for row in reader.records() {
            let row = row?;
            if row.len() != d + 2 {
                return Err(Error::Schema(format!(
                    "dataset CSV row has {} fields, expected {}",
                    row.len(),
                    d + 2
                )));
            }
            row_ids.push(
                row[0]
                    .parse::<u64>()
                    .map_err(|e| Error::Schema(format!("bad row_id {:?}: {e}", &row[0])))?,
            );
            labels.push(
                row[1]
                    .parse::<u8>()
                    .map_err(|e| Error::Schema(format!("bad label {:?}: {e}", &row[1])))?,
            );
            for j in 0..d {
                features.push(row[j + 2].parse::<f64>().map_err(|e| {
                    Error::Schema(format!("bad feature value {:?}: {e}", &row[j + 2]))
                })?);
            }
        }
        Dataset::new(features, d, labels, row_ids)
    }
}

/// Decode one dataset starting at the reader's position; used directly
/// by model checkpoints that embed training data.
pub(crate) fn read_dataset(r: &mut Reader<'_>) -> Result<Dataset> {
    r.expect_magic(MAGIC, "dataset container")?;
    let at = r.pos();
    let version = r.u32("container version")?;
    if version != VERSION {
        return Err(Error::format(
            at,
            format!("unsupported container version {version}"),
        ));
    }
    let rows = r.len(MAX_ELEMENTS, "row count")?;
    let cols_at = r.pos();
    let cols = r.len(MAX_ELEMENTS, "column count")?;
    if cols == 0 {
        return Err(Error::format(cols_at, "column count must be at least 1"));
    }
    if rows.checked_mul(cols).is_none_or(|n| n > MAX_ELEMENTS) {
        return Err(Error::format(cols_at, "feature matrix too large"));
    }
    let mut features = Vec::with_capacity(rows * cols);
    for _ in 0..rows * cols {
        let at = r.pos();
        let v = r.f64("feature value")?;
        if !v.is_finite() {
            return Err(Error::format(at, "non-finite feature value"));
        }
        features.push(v);
    }
    let mut labels = Vec::with_capacity(rows);
    for _ in 0..rows {
        let at = r.pos();
        let l = r.u8("label")?;
        if l > 1 {
            return Err(Error::format(at, format!("label {l} outside {{0, 1}}")));
        }
        labels.push(l);
    }
    let ids_at = r.pos();
    let mut row_ids = Vec::with_capacity(rows);
    for _ in 0..rows {
        row_ids.push(r.u64("row id")?);
    }
    Dataset::new(features, cols, labels, row_ids)
        .map_err(|e| Error::format(ids_at, format!("invalid dataset contents: {e}")))
}

/// Encode one dataset into `buf`; inverse of [`read_dataset`].
pub(crate) fn write_dataset(buf: &mut Vec<u8>, ds: &Dataset) {
    buf.extend_from_slice(&ds.to_bytes());
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Dataset {
        Dataset::generate_synthetic(17, 5, 1.3, 42).unwrap()
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let ds = sample();
        let bytes = ds.to_bytes();
        let back = Dataset::from_bytes(&bytes).unwrap();
        assert_eq!(ds, back);
        assert_eq!(bytes, back.to_bytes());
    }

    #[test]
    fn file_round_trip() {
        let ds = sample();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("data.bin");
        ds.save(&path).unwrap();
        assert_eq!(Dataset::load(&path).unwrap(), ds);
    }

    #[test]
    fn truncated_input_names_offset() {
        let ds = sample();
        let bytes = ds.to_bytes();
        let err = Dataset::from_bytes(&bytes[..bytes.len() - 3]).unwrap_err();
        match err {
            Error::Format { offset, .. } => assert!(offset > 0),
            other => panic!("expected format error, got {other}"),
        }
    }

    #[test]
    fn empty_and_garbage_inputs_fail() {
        assert!(matches!(
            Dataset::from_bytes(&[]),
            Err(Error::Format { offset: 0, .. })
        ));
        assert!(Dataset::from_bytes(b"not a container at all").is_err());
    }

    #[test]
    fn trailing_bytes_rejected() {
        let ds = sample();
        let mut bytes = ds.to_bytes();
        bytes.push(0);
        assert!(matches!(
            Dataset::from_bytes(&bytes),
            Err(Error::Format { .. })
        ));
    }

    #[test]
    fn csv_round_trip_is_bit_exact() {
        let ds = sample();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("data.csv");
        ds.export_csv(&path).unwrap();
        assert_eq!(Dataset::import_csv(&path).unwrap(), ds);
    }
}
