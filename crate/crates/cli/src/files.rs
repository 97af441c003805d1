//! On-disk formats for stage artifacts.
//!
//! Every artifact is pretty-printed JSON with a trailing newline, written
//! through a temp file and an atomic rename so rerunning a stage either
//! leaves a file untouched or replaces it whole.

use std::path::{Path, PathBuf};

use alarmsift_core::verifier::{Classification, Vote};
use alarmsift_core::{Detection, DetectorParams, Interval, MetricsReport};
use serde::{de::DeserializeOwned, Deserialize, Serialize};

use crate::error::{CliError, Result};

/// Output of the detect stage for one dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionsFile {
    pub dataset: String,
    /// The data file the series came from.
    pub source: PathBuf,
    /// Parameters actually used, including the final threshold.
    pub params: DetectorParams,
    /// True when the threshold was calibrated from the labeled anomaly.
    pub auto_calibrated: bool,
    pub detections: Vec<Detection>,
}

/// One detection's verification outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum VerdictRecord {
    Decided {
        detection: Detection,
        classification: Classification,
        anomalous_vote_count: usize,
        votes: Vec<Vote>,
    },
    /// The judge never answered (for example, the endpoint stayed down).
    Undecided { detection: Detection, reason: String },
}

/// Output of the verify stage for one dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerdictsFile {
    pub dataset: String,
    pub mode: String,
    pub votes: usize,
    pub majority: usize,
    /// Stub name or model identifier that judged the detections.
    pub judge: String,
    pub verdicts: Vec<VerdictRecord>,
    /// Detections kept after filtering (classified true positives).
    pub kept: Vec<Interval>,
}

/// Output of the evaluate stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportFile {
    pub judge: String,
    pub mode: String,
    /// True when detector thresholds were calibrated from ground truth.
    pub auto_calibrated: bool,
    pub report: MetricsReport,
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let parent = path.parent().unwrap_or_else(|| Path::new("."));
    std::fs::create_dir_all(parent)
        .map_err(|e| CliError::Data(format!("cannot create {}: {e}", parent.display())))?;
    let json = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Data(format!("cannot serialize {}: {e}", path.display())))?;
    write_atomic(path, &format!("{json}\n"))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Data(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::Data(format!("bad contents in {}: {e}", path.display())))
}

/// Writes through a temp file in the same directory, then renames over the
/// target.
pub fn write_atomic(path: &Path, text: &str) -> Result<()> {
    write_bytes_atomic(path, text.as_bytes())
}

/// Byte variant of [`write_atomic`] for binary artifacts.
pub fn write_bytes_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let parent = path.parent().unwrap_or_else(|| Path::new("."));
    std::fs::create_dir_all(parent)
        .map_err(|e| CliError::Data(format!("cannot create {}: {e}", parent.display())))?;
    let io_err = |e: std::io::Error| CliError::Data(format!("cannot write {}: {e}", path.display()));
    let tmp = tempfile::NamedTempFile::new_in(parent).map_err(io_err)?;
    std::fs::write(tmp.path(), bytes).map_err(io_err)?;
    tmp.persist(path).map_err(|e| io_err(e.error))?;
    Ok(())
}

/// The `detections/*.json` files under an output directory, sorted by name.
pub fn detection_files(out_dir: &Path) -> Result<Vec<PathBuf>> {
    let dir = out_dir.join("detections");
    let entries = std::fs::read_dir(&dir).map_err(|e| {
        CliError::Data(format!(
            "no detections under {} (run detect first): {e}",
            dir.display()
        ))
    })?;
    let mut files: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    files.sort();
    Ok(files)
}
