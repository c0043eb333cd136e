//! Ensemble outputs: `samples.csv` with one row per realization and
//! `summary.json` with the aggregate statistics.
//!
//! Failed realizations keep their row in `samples.csv` with empty `R`,
//! `r_std` and `freq_sync` fields; their reasons are listed in the summary.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{EnsembleStats, SampleRecord};
use crate::error::{Error, Result};

pub const SAMPLES_FILE: &str = "samples.csv";
pub const SUMMARY_FILE: &str = "summary.json";

/// One `samples.csv` row.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleRow {
    pub sample_id: usize,
    #[serde(rename = "R")]
    pub r: Option<f64>,
    pub r_std: Option<f64>,
    pub freq_sync: Option<bool>,
    pub seed: u64,
    pub perturbation: String,
}

impl From<&SampleRecord> for SampleRow {
    fn from(rec: &SampleRecord) -> Self {
        SampleRow {
            sample_id: rec.sample_id,
            r: rec.summary.as_ref().map(|s| s.r_mean),
            r_std: rec.summary.as_ref().map(|s| s.r_std),
            freq_sync: rec.summary.as_ref().map(|s| s.freq_sync),
            seed: rec.seed,
            perturbation: rec.perturbation.clone(),
        }
    }
}

pub fn write_samples_csv(path: &Path, records: &[SampleRecord]) -> Result<()> {
    let csv_err = |e: csv::Error| Error::invalid(format!("writing {}: {e}", path.display()));
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    for rec in records {
        w.serialize(SampleRow::from(rec)).map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_samples_csv(path: &Path) -> Result<Vec<SampleRow>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| Error::Parse {
        context: path.display().to_string(),
        line: 0,
        message: e.to_string(),
    })?;
    r.deserialize()
        .map(|row| {
            row.map_err(|e| Error::Parse {
                context: path.display().to_string(),
                line: e.position().map_or(0, |p| p.line() as usize),
                message: e.to_string(),
            })
        })
        .collect()
}

#[derive(Serialize, Deserialize)]
struct SummaryFile {
    failure_count: usize,
    #[serde(flatten)]
    stats: EnsembleStats,
}

pub fn write_summary_json(path: &Path, stats: &EnsembleStats) -> Result<()> {
    let text = serde_json::to_string_pretty(&SummaryFile {
        failure_count: stats.failures.len(),
        stats: stats.clone(),
    })?;
    std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

pub fn read_summary_json(path: &Path) -> Result<EnsembleStats> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let file: SummaryFile = serde_json::from_str(&text)?;
    Ok(file.stats)
}

/// Writes `samples.csv` and `summary.json` into `dir`.
pub fn write_ensemble(dir: &Path, records: &[SampleRecord], stats: &EnsembleStats) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_samples_csv(&dir.join(SAMPLES_FILE), records)?;
    write_summary_json(&dir.join(SUMMARY_FILE), stats)
}

/// Serde adapter mapping NaN to `null` and back.
pub(crate) mod nan_as_null {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_nan() {
            s.serialize_none()
        } else {
            s.serialize_f64(*v)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
    }
}
