//! Feature cache files: one record per encoded edge, prefixed by a header
//! that pins the exact configuration the features were computed under.
//!
//! Format: a first line `#selo-cache-v1 {json header}`, then CSV rows
//! `src,dst,label,f0,...`. Floats are written in Rust's shortest round-trip
//! form, so a read-back reproduces the feature bits exactly. A cache is only
//! used when every key field matches the requested configuration.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::encoder::{EncodeStats, Sample};
use crate::error::{Result, SeloError};

pub const CACHE_MAGIC: &str = "#selo-cache-v1 ";

/// Identity of a feature cache. Two caches are interchangeable iff their
/// keys are equal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CacheKey {
    /// What the records are: "full" (all edges of a dataset), "train" or
    /// "test" (one side of a split).
    pub role: String,
    pub k: usize,
    pub alpha: f64,
    /// Resolved beta value, not the mode.
    pub beta: f64,
    pub variant: String,
    pub ordering: String,
    pub dataset_hash: String,
    pub fraction: Option<f64>,
    pub split_seed: Option<u64>,
    pub feature_width: usize,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct CacheHeader {
    pub key: CacheKey,
    pub stats: EncodeStats,
}

impl Default for CacheKey {
    fn default() -> Self {
        CacheKey {
            role: "full".to_string(),
            k: 5,
            alpha: 0.005,
            beta: 1.0,
            variant: "concat".to_string(),
            ordering: "selo".to_string(),
            dataset_hash: String::new(),
            fraction: None,
            split_seed: None,
            feature_width: 75,
        }
    }
}

pub fn write_cache(path: &Path, header: &CacheHeader, samples: &[Sample]) -> Result<()> {
    let file = File::create(path).map_err(|e| SeloError::io(path, e))?;
    let mut out = BufWriter::new(file);
    let mut write = || -> std::io::Result<()> {
        writeln!(
            out,
            "{CACHE_MAGIC}{}",
            serde_json::to_string(header).expect("header serializes")
        )?;
        for s in samples {
            write!(out, "{},{},{}", s.edge.0, s.edge.1, s.label)?;
            for v in &s.features {
                write!(out, ",{v}")?;
            }
            writeln!(out)?;
        }
        Ok(())
    };
    write().map_err(|e| SeloError::io(path, e))
}

pub fn read_cache(path: &Path) -> Result<(CacheHeader, Vec<Sample>)> {
    let file = File::open(path).map_err(|e| SeloError::io(path, e))?;
    let reader = BufReader::new(file);
    let mut lines = reader.lines().enumerate();

    let header: CacheHeader = match lines.next() {
        Some((_, Ok(line))) => {
            let json = line.strip_prefix(CACHE_MAGIC).ok_or_else(|| {
                SeloError::Data(format!("{}: not a feature cache", path.display()))
            })?;
            serde_json::from_str(json)
                .map_err(|e| SeloError::Data(format!("{}: bad cache header: {e}", path.display())))?
        }
        Some((_, Err(e))) => return Err(SeloError::io(path, e)),
        None => return Err(SeloError::Data(format!("{}: empty cache", path.display()))),
    };

    let mut samples = Vec::new();
    for (idx, line) in lines {
        let lineno = idx + 1;
        let line = line.map_err(|e| SeloError::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split(',');
        let mut next = |what: &str| -> Result<&str> {
            fields.next().ok_or_else(|| SeloError::Parse {
                line: lineno,
                msg: format!("missing {what}"),
            })
        };
        let src: usize = next("src")?.parse().map_err(|_| SeloError::Parse {
            line: lineno,
            msg: "bad src".to_string(),
        })?;
        let dst: usize = next("dst")?.parse().map_err(|_| SeloError::Parse {
            line: lineno,
            msg: "bad dst".to_string(),
        })?;
        let label: i8 = next("label")?.parse().map_err(|_| SeloError::Parse {
            line: lineno,
            msg: "bad label".to_string(),
        })?;
        let features: std::result::Result<Vec<f64>, _> =
            fields.map(|f| f.parse::<f64>()).collect();
        let features = features.map_err(|_| SeloError::Parse {
            line: lineno,
            msg: "bad feature value".to_string(),
        })?;
        if features.len() != header.key.feature_width {
            return Err(SeloError::Parse {
                line: lineno,
                msg: format!(
                    "{} features, header says {}",
                    features.len(),
                    header.key.feature_width
                ),
            });
        }
        samples.push(Sample {
            features,
            label,
            edge: (src, dst),
        });
    }
    Ok((header, samples))
}

/// Reads a cache only when it exists and its key matches; a missing file or
/// a key mismatch both mean "recompute".
pub fn read_matching(path: &Path, key: &CacheKey) -> Result<Option<(CacheHeader, Vec<Sample>)>> {
    if !path.exists() {
        return Ok(None);
    }
    let (header, samples) = read_cache(path)?;
    if &header.key == key {
        Ok(Some((header, samples)))
    } else {
        Ok(None)
    }
}
