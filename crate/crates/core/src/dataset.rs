//! Loading datasets from archive-style data files and JSON manifests.
//!
//! A dataset on disk is a single numeric file holding the training series
//! followed by the test series. Split points and the labeled anomaly come
//! from one of two places:
//!
//! 1. The filename convention
//!    `<id>_UCR_Anomaly_<name>_<trainEnd>_<anomStart>_<anomEnd>.<ext>`,
//!    where `trainEnd` is the number of leading training samples and
//!    `anomStart..=anomEnd` are inclusive 0-based bounds into the whole file.
//! 2. A JSON manifest (either passed directly or found as a sidecar
//!    `<stem>.json` next to the data file) with the same quantities plus an
//!    optional free-text `context` describing the domain. A sidecar manifest
//!    always wins over values derived from the filename.
//!
//! After the split, the anomaly is re-based into test-series coordinates as
//! the half-open interval `[anomStart - trainEnd, anomEnd - trainEnd + 1)`.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::series::{Dataset, Interval, TimeSeries};

/// Sidecar or standalone manifest describing one dataset.
///
/// `anomaly_start` / `anomaly_end` are inclusive indices into the raw file,
/// exactly as they appear in archive filenames.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DatasetManifest {
    /// Data file path, resolved relative to the manifest's directory.
    pub data_file: String,
    /// Number of leading samples that form the training series.
    pub train_end: usize,
    /// First anomalous sample, 0-based index into the raw file.
    pub anomaly_start: usize,
    /// Last anomalous sample (inclusive), 0-based index into the raw file.
    pub anomaly_end: usize,
    /// Domain description forwarded to verification prompts; may be empty.
    #[serde(default)]
    pub context: String,
}

/// Outcome of parsing an archive-convention file stem.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArchiveName {
    pub name: String,
    pub train_end: usize,
    pub anomaly_start: usize,
    pub anomaly_end: usize,
}

/// Parses a file stem of the form
/// `<id>_UCR_Anomaly_<name>_<trainEnd>_<anomStart>_<anomEnd>`.
///
/// The `<name>` part may itself contain underscores; the three trailing
/// numeric fields are taken from the end.
pub fn parse_archive_stem(stem: &str) -> Option<ArchiveName> {
    let tokens: Vec<&str> = stem.split('_').collect();
    // id, "UCR", "Anomaly", at least one name token, three numbers.
    if tokens.len() < 7 || tokens[1] != "UCR" || tokens[2] != "Anomaly" {
        return None;
    }
    let n = tokens.len();
    let train_end: usize = tokens[n - 3].parse().ok()?;
    let anomaly_start: usize = tokens[n - 2].parse().ok()?;
    let anomaly_end: usize = tokens[n - 1].parse().ok()?;
    let name = tokens[3..n - 3].join("_");
    if name.is_empty() {
        return None;
    }
    Some(ArchiveName {
        name,
        train_end,
        anomaly_start,
        anomaly_end,
    })
}

/// Loads a dataset from a data file or a JSON manifest.
///
/// - `*.json` paths are treated as manifests.
/// - Any other path is read as a data file. If a sidecar `<stem>.json`
///   exists it provides the bounds and context; otherwise the filename must
///   follow the archive convention.
pub fn load_ucr_file(path: &Path) -> Result<Dataset, Error> {
    if path.extension().and_then(|e| e.to_str()) == Some("json") {
        let manifest = read_manifest(path)?;
        let dir = path.parent().unwrap_or_else(|| Path::new("."));
        let data_path = dir.join(&manifest.data_file);
        return load_with_bounds(&data_path, &manifest, manifest_name(&data_path));
    }

    let sidecar = path.with_extension("json");
    if sidecar.exists() {
        let manifest = read_manifest(&sidecar)?;
        return load_with_bounds(path, &manifest, manifest_name(path));
    }

    let stem = file_stem(path);
    let parsed =
        parse_archive_stem(&stem).ok_or_else(|| Error::UnrecognizedDatasetFile {
            path: path.to_path_buf(),
        })?;
    let manifest = DatasetManifest {
        data_file: String::new(),
        train_end: parsed.train_end,
        anomaly_start: parsed.anomaly_start,
        anomaly_end: parsed.anomaly_end,
        context: String::new(),
    };
    load_with_bounds(path, &manifest, parsed.name)
}

/// Scans a directory for datasets, returning one path per dataset in
/// filename order.
///
/// JSON manifests are preferred entry points; a data file is listed on its
/// own only when no manifest in the directory references it and its name
/// follows the archive convention.
pub fn discover_dataset_paths(dir: &Path) -> Result<Vec<PathBuf>, Error> {
    let entries = fs::read_dir(dir).map_err(|source| Error::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let mut files = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|source| Error::Io {
            path: dir.to_path_buf(),
            source,
        })?;
        let path = entry.path();
        if path.is_file() {
            files.push(path);
        }
    }
    files.sort();

    let mut datasets = Vec::new();
    let mut referenced = Vec::new();
    for path in &files {
        if path.extension().and_then(|e| e.to_str()) == Some("json") {
            if let Ok(manifest) = read_manifest(path) {
                let dir = path.parent().unwrap_or_else(|| Path::new("."));
                referenced.push(dir.join(&manifest.data_file));
                datasets.push(path.clone());
            }
        }
    }
    for path in &files {
        if path.extension().and_then(|e| e.to_str()) == Some("json") {
            continue;
        }
        if referenced.iter().any(|r| r == path) {
            continue;
        }
        if parse_archive_stem(&file_stem(path)).is_some() {
            datasets.push(path.clone());
        }
    }
    datasets.sort();
    Ok(datasets)
}

fn file_stem(path: &Path) -> String {
    path.file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or_default()
        .to_string()
}

/// Dataset name for a data file: the `<name>` part when the stem follows the
/// archive convention, the whole stem otherwise.
fn manifest_name(data_path: &Path) -> String {
    let stem = file_stem(data_path);
    match parse_archive_stem(&stem) {
        Some(parsed) => parsed.name,
        None => stem,
    }
}

fn read_manifest(path: &Path) -> Result<DatasetManifest, Error> {
    let text = fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|e| Error::BadManifest {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })
}

fn load_with_bounds(
    data_path: &Path,
    manifest: &DatasetManifest,
    name: String,
) -> Result<Dataset, Error> {
    let samples = read_samples(data_path)?;
    split_dataset(
        name,
        samples,
        manifest.train_end,
        manifest.anomaly_start,
        manifest.anomaly_end,
        manifest.context.clone(),
    )
}

/// Reads whitespace-separated samples. Archive files are one value per line,
/// but multiple values per line are accepted as well.
fn read_samples(path: &Path) -> Result<Vec<f64>, Error> {
    let text = fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut samples = Vec::new();
    for (line_no, line) in text.lines().enumerate() {
        for token in line.split_whitespace() {
            let value: f64 = token.parse().map_err(|_| Error::BadSample {
                path: path.to_path_buf(),
                line: line_no + 1,
                text: token.to_string(),
            })?;
            samples.push(value);
        }
    }
    Ok(samples)
}

/// Splits raw samples into train/test and re-bases the inclusive anomaly
/// bounds into a half-open interval over test coordinates.
fn split_dataset(
    name: String,
    samples: Vec<f64>,
    train_end: usize,
    anomaly_start: usize,
    anomaly_end: usize,
    context: String,
) -> Result<Dataset, Error> {
    let len = samples.len();
    let bounds_ok = train_end >= 1
        && train_end < len
        && anomaly_start >= train_end
        && anomaly_start <= anomaly_end
        && anomaly_end < len;
    if !bounds_ok {
        return Err(Error::BadDatasetBounds {
            name,
            train_end,
            anomaly_start,
            anomaly_end,
            len,
        });
    }

    let train = TimeSeries::new(format!("{name}/train"), samples[..train_end].to_vec())?;
    let test = TimeSeries::new(format!("{name}/test"), samples[train_end..].to_vec())?;
    let anomaly = Interval::new(anomaly_start - train_end, anomaly_end - train_end + 1)?;
    Dataset::new(name, train, test, anomaly, context)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_file(dir: &Path, name: &str, contents: &str) -> PathBuf {
        let path = dir.join(name);
        let mut f = fs::File::create(&path).unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        path
    }

    #[test]
    fn stem_parsing_handles_names_with_underscores() {
        let parsed = parse_archive_stem("001_UCR_Anomaly_toy_5_7_8").unwrap();
        assert_eq!(parsed.name, "toy");
        assert_eq!(
            (parsed.train_end, parsed.anomaly_start, parsed.anomaly_end),
            (5, 7, 8)
        );

        let parsed =
            parse_archive_stem("204_UCR_Anomaly_Fantasia_sub_19000_26970_27270").unwrap();
        assert_eq!(parsed.name, "Fantasia_sub");
        assert_eq!(parsed.train_end, 19000);

        assert!(parse_archive_stem("random_file").is_none());
        assert!(parse_archive_stem("001_UCR_Anomaly_5_7_8").is_none()); // no name part
        assert!(parse_archive_stem("001_UCR_Anomaly_toy_x_7_8").is_none()); // bad number
    }

    #[test]
    fn loads_archive_named_file() {
        let dir = tempfile::tempdir().unwrap();
        let body: String = (0..10).map(|i| format!("{i}\n")).collect();
        let path = write_file(dir.path(), "001_UCR_Anomaly_toy_5_7_8.txt", &body);

        let ds = load_ucr_file(&path).unwrap();
        assert_eq!(ds.name(), "toy");
        assert_eq!(ds.train().values(), &[0.0, 1.0, 2.0, 3.0, 4.0]);
        assert_eq!(ds.test().values(), &[5.0, 6.0, 7.0, 8.0, 9.0]);
        // Raw inclusive [7, 8] minus the 5 training samples => [2, 4).
        assert_eq!(ds.anomaly(), Interval::new(2, 4).unwrap());
        assert_eq!(ds.context(), "");
    }

    #[test]
    fn sidecar_manifest_overrides_filename() {
        let dir = tempfile::tempdir().unwrap();
        let body: String = (0..10).map(|i| format!("{i}\n")).collect();
        let data = write_file(dir.path(), "001_UCR_Anomaly_toy_5_7_8.txt", &body);
        write_file(
            dir.path(),
            "001_UCR_Anomaly_toy_5_7_8.json",
            r#"{
                "data_file": "001_UCR_Anomaly_toy_5_7_8.txt",
                "train_end": 4,
                "anomaly_start": 6,
                "anomaly_end": 7,
                "context": "a toy ramp"
            }"#,
        );

        let ds = load_ucr_file(&data).unwrap();
        assert_eq!(ds.train().len(), 4);
        assert_eq!(ds.test().len(), 6);
        assert_eq!(ds.anomaly(), Interval::new(2, 4).unwrap());
        assert_eq!(ds.context(), "a toy ramp");
    }

    #[test]
    fn manifest_path_loads_directly() {
        let dir = tempfile::tempdir().unwrap();
        write_file(dir.path(), "readings.txt", "1.0\n2.0\n3.0\n4.0\n5.0\n6.0\n");
        let manifest = write_file(
            dir.path(),
            "readings.json",
            r#"{"data_file": "readings.txt", "train_end": 3, "anomaly_start": 4, "anomaly_end": 4}"#,
        );

        let ds = load_ucr_file(&manifest).unwrap();
        assert_eq!(ds.name(), "readings");
        assert_eq!(ds.train().values(), &[1.0, 2.0, 3.0]);
        assert_eq!(ds.test().values(), &[4.0, 5.0, 6.0]);
        assert_eq!(ds.anomaly(), Interval::new(1, 2).unwrap());
    }

    #[test]
    fn rejects_out_of_range_bounds() {
        let dir = tempfile::tempdir().unwrap();
        // anomaly_end == len is out of range (inclusive index must exist).
        let p = write_file(dir.path(), "001_UCR_Anomaly_toy_5_7_10.txt", &"1\n".repeat(10));
        assert!(matches!(
            load_ucr_file(&p),
            Err(Error::BadDatasetBounds { .. })
        ));

        // Anomaly inside the training region is rejected.
        let p = write_file(dir.path(), "001_UCR_Anomaly_toy_5_3_4.txt", &"1\n".repeat(10));
        assert!(matches!(
            load_ucr_file(&p),
            Err(Error::BadDatasetBounds { .. })
        ));
    }

    #[test]
    fn rejects_unparseable_samples_with_line_number() {
        let dir = tempfile::tempdir().unwrap();
        let p = write_file(
            dir.path(),
            "001_UCR_Anomaly_toy_2_3_3.txt",
            "1.0\n2.0\noops\n4.0\n",
        );
        match load_ucr_file(&p) {
            Err(Error::BadSample { line, text, .. }) => {
                assert_eq!(line, 3);
                assert_eq!(text, "oops");
            }
            other => panic!("expected BadSample, got {other:?}"),
        }
    }

    #[test]
    fn corrupt_sidecar_is_an_error_not_a_fallback() {
        let dir = tempfile::tempdir().unwrap();
        let data = write_file(dir.path(), "001_UCR_Anomaly_toy_5_7_8.txt", &"1\n".repeat(10));
        write_file(dir.path(), "001_UCR_Anomaly_toy_5_7_8.json", "{ not json");
        assert!(matches!(
            load_ucr_file(&data),
            Err(Error::BadManifest { .. })
        ));
    }

    #[test]
    fn discovery_lists_each_dataset_once_in_order() {
        let dir = tempfile::tempdir().unwrap();
        let body: String = (0..10).map(|i| format!("{i}\n")).collect();
        // Plain archive file.
        write_file(dir.path(), "002_UCR_Anomaly_beta_5_7_8.txt", &body);
        // Archive file with sidecar manifest: the manifest is the entry point.
        write_file(dir.path(), "001_UCR_Anomaly_alpha_5_7_8.txt", &body);
        write_file(
            dir.path(),
            "001_UCR_Anomaly_alpha_5_7_8.json",
            r#"{"data_file": "001_UCR_Anomaly_alpha_5_7_8.txt",
                "train_end": 5, "anomaly_start": 7, "anomaly_end": 8}"#,
        );
        // Unrelated files are ignored.
        write_file(dir.path(), "notes.md", "hello");

        let found = discover_dataset_paths(dir.path()).unwrap();
        let names: Vec<String> = found
            .iter()
            .map(|p| p.file_name().unwrap().to_str().unwrap().to_string())
            .collect();
        assert_eq!(
            names,
            vec![
                "001_UCR_Anomaly_alpha_5_7_8.json",
                "002_UCR_Anomaly_beta_5_7_8.txt"
            ]
        );
    }
}
