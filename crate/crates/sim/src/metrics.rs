//! CSV metric files.
//!
//! Every experiment writes rows with the header
//! `snr_db,metric,variant,value,sample_count`. `sample_count` is the number
//! of samples (or bits, for `ber`) behind `value`.

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{Context, Result};
use isac_core::cnn::TrainRecord;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub snr_db: f64,
    pub metric: String,
    pub variant: String,
    pub value: f64,
    pub sample_count: u64,
}

impl MetricRow {
    pub fn new(snr_db: f64, metric: &str, variant: impl Into<String>, value: f64, sample_count: u64) -> Self {
        Self {
            snr_db,
            metric: metric.to_string(),
            variant: variant.into(),
            value,
            sample_count,
        }
    }
}

pub fn write_rows<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_rows(path: &Path) -> Result<Vec<MetricRow>> {
    let mut r = csv::Reader::from_path(path).with_context(|| format!("opening {}", path.display()))?;
    r.deserialize()
        .collect::<Result<Vec<MetricRow>, _>>()
        .with_context(|| format!("reading {}", path.display()))
}

pub fn write_training(path: &Path, records: &[TrainRecord]) -> Result<()> {
    write_rows(path, records)
}

/// One wide table per metric: an `snr_db` column, then one column per
/// variant in first-seen order, then the smallest sample count in the row.
/// Missing cells are left empty.
pub fn pivot(rows: &[MetricRow]) -> BTreeMap<String, String> {
    let mut by_metric: BTreeMap<&str, Vec<&MetricRow>> = BTreeMap::new();
    for r in rows {
        by_metric.entry(&r.metric).or_default().push(r);
    }
    let mut tables = BTreeMap::new();
    for (metric, rs) in by_metric {
        let mut variants: Vec<&str> = Vec::new();
        let mut snrs: Vec<f64> = Vec::new();
        for r in &rs {
            if !variants.contains(&r.variant.as_str()) {
                variants.push(&r.variant);
            }
            if !snrs.contains(&r.snr_db) {
                snrs.push(r.snr_db);
            }
        }
        snrs.sort_by(f64::total_cmp);
        let mut text = String::from("snr_db");
        for v in &variants {
            text.push(',');
            text.push_str(v);
        }
        text.push_str(",min_sample_count\n");
        for snr in snrs {
            text.push_str(&snr.to_string());
            let mut min_count = u64::MAX;
            for v in &variants {
                text.push(',');
                if let Some(r) = rs.iter().find(|r| r.snr_db == snr && r.variant == *v) {
                    text.push_str(&r.value.to_string());
                    min_count = min_count.min(r.sample_count);
                }
            }
            text.push(',');
            if min_count != u64::MAX {
                text.push_str(&min_count.to_string());
            }
            text.push('\n');
        }
        tables.insert(metric.to_string(), text);
    }
    tables
}
