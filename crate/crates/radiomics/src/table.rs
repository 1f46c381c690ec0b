//! Feature tables: CSV rows keyed by subject/nodule with a binary label,
//! plus a schema file that pins feature order and extraction settings.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{RadiomicsError, Result};
use crate::extract::ExtractionConfig;

pub const SCHEMA_VERSION: u32 = 1;
const KEY_COLUMNS: [&str; 3] = ["subject_id", "nodule_id", "label"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureRow {
    pub subject_id: String,
    pub nodule_id: String,
    pub label: u8,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct FeatureTable {
    pub names: Vec<String>,
    pub rows: Vec<FeatureRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSchema {
    pub schema_version: u32,
    pub features: Vec<String>,
    pub config: ExtractionConfig,
    /// sha256 over the feature names and the serialized config.
    pub hash: String,
}

impl FeatureSchema {
    pub fn new(features: Vec<String>, config: ExtractionConfig) -> Result<Self> {
        let hash = schema_hash(&features, &config)?;
        Ok(FeatureSchema {
            schema_version: SCHEMA_VERSION,
            features,
            config,
            hash,
        })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        serde_json::to_writer_pretty(&mut w, self)?;
        w.write_all(b"\n")?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        let s: FeatureSchema = serde_json::from_reader(File::open(path)?)?;
        if schema_hash(&s.features, &s.config)? != s.hash {
            return Err(RadiomicsError::Table("schema hash does not match its contents".into()));
        }
        Ok(s)
    }
}

pub fn schema_hash(features: &[String], config: &ExtractionConfig) -> Result<String> {
    let mut h = Sha256::new();
    for f in features {
        h.update(f.as_bytes());
        h.update(b"\n");
    }
    h.update(serde_json::to_vec(config)?);
    Ok(hex::encode(h.finalize()))
}

impl FeatureTable {
    pub fn new(names: Vec<String>) -> Self {
        FeatureTable { names, rows: Vec::new() }
    }

    pub fn push(&mut self, row: FeatureRow) -> Result<()> {
        if row.values.len() != self.names.len() {
            return Err(RadiomicsError::Table(format!(
                "row {}/{} has {} values for {} features",
                row.subject_id,
                row.nodule_id,
                row.values.len(),
                self.names.len()
            )));
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn labels(&self) -> Vec<u8> {
        self.rows.iter().map(|r| r.label).collect()
    }

    /// Values of feature `j` across rows.
    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r.values[j]).collect()
    }

    /// Floats are written with Rust's shortest round-trip formatting, so a
    /// write/read cycle is lossless.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(KEY_COLUMNS.iter().copied().chain(self.names.iter().map(String::as_str)))?;
        for r in &self.rows {
            let mut rec = vec![r.subject_id.clone(), r.nodule_id.clone(), r.label.to_string()];
            rec.extend(r.values.iter().map(|v| format!("{v:?}")));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let mut r = csv::Reader::from_path(path)?;
        let header = r.headers()?.clone();
        if header.len() < 3 || header.iter().take(3).ne(KEY_COLUMNS.iter().copied()) {
            return Err(RadiomicsError::Table(format!(
                "expected leading columns {KEY_COLUMNS:?}"
            )));
        }
        let mut table = FeatureTable::new(header.iter().skip(3).map(String::from).collect());
        for (line, rec) in r.records().enumerate() {
            let rec = rec?;
            let label: u8 = rec[2]
                .parse()
                .ok()
                .filter(|l| *l <= 1)
                .ok_or_else(|| RadiomicsError::Table(format!("row {}: label must be 0 or 1", line + 1)))?;
            let values = rec
                .iter()
                .skip(3)
                .map(|s| s.parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| RadiomicsError::Table(format!("row {}: {e}", line + 1)))?;
            table.push(FeatureRow {
                subject_id: rec[0].to_string(),
                nodule_id: rec[1].to_string(),
                label,
                values,
            })?;
        }
        Ok(table)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("f.csv");
        let mut t = FeatureTable::new(vec!["a".into(), "b".into()]);
        t.push(FeatureRow { subject_id: "s1".into(), nodule_id: "n1".into(), label: 1, values: vec![0.1, -1e-300] })
            .unwrap();
        t.push(FeatureRow { subject_id: "s2".into(), nodule_id: "n1".into(), label: 0, values: vec![1.0 / 3.0, 7.0] })
            .unwrap();
        assert!(t
            .push(FeatureRow { subject_id: "x".into(), nodule_id: "y".into(), label: 0, values: vec![] })
            .is_err());
        t.write_csv(&p).unwrap();
        assert_eq!(FeatureTable::read_csv(&p).unwrap(), t);
    }

    #[test]
    fn schema_hash_tracks_content() {
        let names = vec!["a".to_string()];
        let cfg = ExtractionConfig::default();
        let h = schema_hash(&names, &cfg).unwrap();
        assert_eq!(h, schema_hash(&names, &cfg).unwrap());
        let other = ExtractionConfig { bins: 16, ..cfg.clone() };
        assert_ne!(h, schema_hash(&names, &other).unwrap());
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("schema.json");
        let s = FeatureSchema::new(names, cfg).unwrap();
        s.write(&p).unwrap();
        assert_eq!(FeatureSchema::read(&p).unwrap(), s);
    }
}
