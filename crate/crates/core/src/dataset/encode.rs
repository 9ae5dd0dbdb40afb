//! CSV ingestion of raw labeled text and hashed feature encoding.

use std::fs::File;
use std::path::Path;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::hash::token_hash;

/// One labeled text row as read from a source CSV.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawRecord {
    pub user_id: String,
    /// 1 = spam/positive, 0 = ham/negative.
    pub label: u8,
    pub text: String,
}

/// Column-name mapping for [`ingest_csv`].
#[derive(Debug, Clone)]
pub struct CsvSchema {
    pub user_id_col: String,
    pub label_col: String,
    pub text_col: String,
}

impl Default for CsvSchema {
    fn default() -> Self {
        CsvSchema {
            user_id_col: "user_id".to_string(),
            label_col: "label".to_string(),
            text_col: "text".to_string(),
        }
    }
}

/// Hashed-feature encoding settings.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EncodingConfig {
    /// Number of hash buckets; at least 2.
    pub num_hash_features: usize,
    pub seed: u64,
    /// When set, a bucket is 1.0 if any token landed there; otherwise
    /// buckets hold token counts.
    pub binarize: bool,
}

impl Default for EncodingConfig {
    fn default() -> Self {
        EncodingConfig {
            num_hash_features: 64,
            seed: 0,
            binarize: true,
        }
    }
}

/// Read records from a header-mapped CSV. Rows whose label is not 0 or 1,
/// or whose text is empty after trimming, are skipped; the skip count is
/// returned alongside the surviving records.
pub fn ingest_csv(path: &Path, schema: &CsvSchema) -> Result<(Vec<RawRecord>, usize)> {
    let file = File::open(path)?;
    let mut reader = csv::Reader::from_reader(file);
    let headers = reader.headers()?.clone();
    let col = |name: &str| -> Result<usize> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Schema(format!("column {name:?} not found in CSV header")))
    };
    let user_id_idx = col(&schema.user_id_col)?;
    let label_idx = col(&schema.label_col)?;
    let text_idx = col(&schema.text_col)?;

    let mut records = Vec::new();
    let mut skipped = 0usize;
    for row in reader.records() {
        let row = row?;
        let label = match row
            .get(label_idx)
            .map(str::trim)
            .and_then(|s| s.parse::<i64>().ok())
        {
            Some(0) => 0u8,
            Some(1) => 1u8,
            _ => {
                skipped += 1;
                continue;
            }
        };
        let text = row.get(text_idx).map(str::trim).unwrap_or("");
        if text.is_empty() {
            skipped += 1;
            continue;
        }
        records.push(RawRecord {
            user_id: row.get(user_id_idx).unwrap_or("").trim().to_string(),
            label,
            text: text.to_string(),
        });
    }
    Ok((records, skipped))
}

/// Hash each record's text into `num_hash_features` buckets. Tokens are
/// whitespace-separated and lowercased; no stemming or stop words. Row
/// ids are the record positions.
pub fn encode(records: &[RawRecord], cfg: &EncodingConfig) -> Result<Dataset> {
    if records.is_empty() {
        return Err(Error::invalid("cannot encode an empty record set"));
    }
    if cfg.num_hash_features < 2 {
        return Err(Error::invalid("num_hash_features must be at least 2"));
    }
    let d = cfg.num_hash_features;
    let mut features = Vec::with_capacity(records.len() * d);
    let mut labels = Vec::with_capacity(records.len());
    for record in records {
        let mut row = vec![0.0f64; d];
        for token in record.text.split_whitespace() {
            let bucket = (token_hash(cfg.seed, &token.to_lowercase()) % d as u64) as usize;
            if cfg.binarize {
                row[bucket] = 1.0;
            } else {
                row[bucket] += 1.0;
            }
        }
        features.extend_from_slice(&row);
        labels.push(record.label);
    }
    let row_ids = (0..records.len() as u64).collect();
    Dataset::new(features, d, labels, row_ids)
}
