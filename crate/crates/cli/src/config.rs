//! Run configuration: TOML file, command-line overrides, and validation.
//!
//! Precedence is command line > config file > defaults. The config file
//! carries everything; the command line exposes the switches that vary
//! between runs (dataset location, stub, mode, vote count, ablations).

use std::path::{Path, PathBuf};
use std::time::Duration;

use alarmsift_core::verifier::{ChatClient, Mode, VerifierConfig};
use alarmsift_core::{AcceptAllStub, OracleStub, RejectAllStub};
use serde::Deserialize;

use crate::error::{CliError, Result};

/// Offline judge selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StubKind {
    /// Answers from ground truth: the perfect judge.
    Oracle,
    /// Keeps every alarm: equivalent to no verification.
    AcceptAll,
    /// Drops every alarm.
    RejectAll,
}

impl StubKind {
    pub fn client(&self) -> Box<dyn ChatClient> {
        match self {
            StubKind::Oracle => Box::new(OracleStub),
            StubKind::AcceptAll => Box::new(AcceptAllStub),
            StubKind::RejectAll => Box::new(RejectAllStub),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            StubKind::Oracle => "oracle",
            StubKind::AcceptAll => "accept_all",
            StubKind::RejectAll => "reject_all",
        }
    }

    /// Parses a stub name; `none` explicitly selects the live endpoint.
    pub fn parse(s: &str) -> Result<Option<StubKind>> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "oracle" => Ok(Some(StubKind::Oracle)),
            "accept_all" => Ok(Some(StubKind::AcceptAll)),
            "reject_all" => Ok(Some(StubKind::RejectAll)),
            "none" => Ok(None),
            other => Err(CliError::Config(format!(
                "unknown stub `{other}` (expected oracle, accept_all, reject_all, or none)"
            ))),
        }
    }
}

// ---------------------------------------------------------------------------
// Config file schema
// ---------------------------------------------------------------------------

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    #[serde(default)]
    pub datasets: DatasetsSection,
    #[serde(default)]
    pub detector: DetectorSection,
    #[serde(default)]
    pub verifier: VerifierSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetsSection {
    /// Directory scanned for data files and manifests.
    pub dir: Option<PathBuf>,
    /// Explicit dataset files (data files or JSON manifests).
    #[serde(default)]
    pub files: Vec<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorSection {
    /// Manual window length; omitted = derived from the labeled anomaly.
    pub window_len: Option<usize>,
    pub k: Option<usize>,
    /// Manual alarm threshold; mutually exclusive with auto-calibration.
    pub threshold: Option<f64>,
    /// Manual test stride; omitted = a third of the window.
    pub stride: Option<usize>,
    /// Calibrate the threshold from the labeled anomaly.
    pub auto_calibrate: Option<bool>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifierSection {
    pub mode: Option<String>,
    pub votes: Option<usize>,
    pub majority: Option<usize>,
    pub model: Option<String>,
    pub endpoint: Option<String>,
    pub temperature: Option<f64>,
    pub max_retries: Option<u32>,
    pub request_timeout_secs: Option<u64>,
    pub verdict_suffix: Option<bool>,
    /// Drop the dataset description from prompts (the no-context ablation).
    pub no_context: Option<bool>,
    /// Offline judge: oracle, accept_all, reject_all, or none (live).
    pub stub: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub out_dir: Option<PathBuf>,
    pub cache_dir: Option<PathBuf>,
    /// Maximum datasets processed concurrently.
    pub concurrency: Option<usize>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            CliError::Config(format!("cannot read config {}: {e}", path.display()))
        })?;
        toml::from_str(&text)
            .map_err(|e| CliError::Config(format!("bad config {}: {e}", path.display())))
    }
}

// ---------------------------------------------------------------------------
// Command-line overrides
// ---------------------------------------------------------------------------

/// The switches shared by every subcommand.
#[derive(Debug, Default, Clone, clap::Args)]
pub struct GlobalOpts {
    /// TOML configuration file.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Dataset directory or file; repeatable.
    #[arg(long, global = true, value_name = "PATH")]
    pub datasets: Vec<PathBuf>,

    /// Offline judge: oracle, accept_all, reject_all, or none (live endpoint).
    #[arg(long, global = true, value_name = "NAME")]
    pub stub: Option<String>,

    /// Presentation mode for the judge: vision or text.
    #[arg(long, global = true, value_name = "MODE")]
    pub mode: Option<String>,

    /// Independent judge samples per detection.
    #[arg(long, global = true, value_name = "N")]
    pub votes: Option<usize>,

    /// Omit the dataset description from prompts (context ablation).
    #[arg(long, global = true)]
    pub no_context: bool,

    /// Ask the judge to end with a single-word Yes/No line.
    #[arg(long, global = true)]
    pub verdict_suffix: bool,

    /// Response cache directory (default: <out-dir>/cache).
    #[arg(long, global = true, value_name = "DIR")]
    pub cache_dir: Option<PathBuf>,

    /// Output directory for all artifacts.
    #[arg(long, global = true, value_name = "DIR")]
    pub out_dir: Option<PathBuf>,

    /// Calibrate detector thresholds from the labeled anomalies. Reads
    /// ground truth — every report produced this way says so.
    #[arg(long, global = true)]
    pub auto_calibrate: bool,
}

// ---------------------------------------------------------------------------
// Resolved configuration
// ---------------------------------------------------------------------------

/// Manual detector overrides; anything unset falls back to derivation.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DetectorOverrides {
    pub window_len: Option<usize>,
    pub k: Option<usize>,
    pub threshold: Option<f64>,
    pub stride: Option<usize>,
}

/// Everything a run needs, after merging defaults, file, and flags.
#[derive(Debug, Clone)]
pub struct RunConfig {
    /// Dataset files and/or directories to scan.
    pub dataset_paths: Vec<PathBuf>,
    pub detector: DetectorOverrides,
    pub auto_calibrate: bool,
    pub verifier: VerifierConfig,
    pub no_context: bool,
    pub stub: Option<StubKind>,
    pub out_dir: PathBuf,
    pub cache_dir: PathBuf,
    pub concurrency: usize,
}

impl RunConfig {
    /// Merges the config file (if any) with command-line switches.
    pub fn resolve(opts: &GlobalOpts) -> Result<RunConfig> {
        let file = match &opts.config {
            Some(path) => FileConfig::load(path)?,
            None => FileConfig::default(),
        };

        let mut dataset_paths: Vec<PathBuf> = Vec::new();
        if let Some(dir) = &file.datasets.dir {
            dataset_paths.push(dir.clone());
        }
        dataset_paths.extend(file.datasets.files.iter().cloned());
        if !opts.datasets.is_empty() {
            dataset_paths = opts.datasets.clone();
        }

        let detector = DetectorOverrides {
            window_len: file.detector.window_len,
            k: file.detector.k,
            threshold: file.detector.threshold,
            stride: file.detector.stride,
        };
        let auto_calibrate = opts.auto_calibrate || file.detector.auto_calibrate.unwrap_or(false);

        let defaults = VerifierConfig::default();
        let mode = match opts.mode.as_deref().or(file.verifier.mode.as_deref()) {
            Some(s) => s.parse::<Mode>().map_err(CliError::from)?,
            None => defaults.mode,
        };
        let votes = opts.votes.or(file.verifier.votes).unwrap_or(defaults.votes);
        let majority = file
            .verifier
            .majority
            .unwrap_or_else(|| VerifierConfig::default_majority(votes));
        let verifier = VerifierConfig {
            mode,
            votes,
            majority,
            model: file.verifier.model.clone().unwrap_or_default(),
            endpoint: file.verifier.endpoint.clone().unwrap_or_default(),
            temperature: file.verifier.temperature.unwrap_or(defaults.temperature),
            max_retries: file.verifier.max_retries.unwrap_or(defaults.max_retries),
            request_timeout: file
                .verifier
                .request_timeout_secs
                .map(Duration::from_secs)
                .unwrap_or(defaults.request_timeout),
            append_verdict_suffix: opts.verdict_suffix
                || file.verifier.verdict_suffix.unwrap_or(false),
        };
        verifier.validate().map_err(CliError::from)?;

        let stub_name = opts.stub.as_deref().or(file.verifier.stub.as_deref());
        let stub = match stub_name {
            Some(s) => StubKind::parse(s)?,
            None => None,
        };
        if stub.is_some() && !verifier.endpoint.is_empty() {
            return Err(CliError::Config(
                "stub and live endpoint are mutually exclusive; drop one of them".into(),
            ));
        }

        if auto_calibrate && detector.threshold.is_some() {
            return Err(CliError::Config(
                "auto-calibration and a manual detector threshold are mutually exclusive".into(),
            ));
        }

        let out_dir = opts
            .out_dir
            .clone()
            .or(file.output.out_dir.clone())
            .unwrap_or_else(|| PathBuf::from("out"));
        let cache_dir = opts
            .cache_dir
            .clone()
            .or(file.output.cache_dir.clone())
            .unwrap_or_else(|| out_dir.join("cache"));
        let concurrency = file.output.concurrency.unwrap_or(4).max(1);

        Ok(RunConfig {
            dataset_paths,
            detector,
            auto_calibrate,
            verifier,
            no_context: opts.no_context || file.verifier.no_context.unwrap_or(false),
            stub,
            out_dir,
            cache_dir,
            concurrency,
        })
    }

    /// Checks the pieces the detect stage needs.
    pub fn validate_for_detect(&self) -> Result<()> {
        if self.dataset_paths.is_empty() {
            return Err(CliError::Config(
                "no datasets given; pass --datasets or set [datasets] in the config".into(),
            ));
        }
        if !self.auto_calibrate && self.detector.threshold.is_none() {
            return Err(CliError::Config(
                "no alarm threshold: pass --auto-calibrate or set detector.threshold".into(),
            ));
        }
        Ok(())
    }

    /// Checks the pieces the verify stage needs. Live mode additionally
    /// requires the API key, checked before any dataset is touched.
    pub fn validate_for_verify(&self) -> Result<()> {
        if self.stub.is_none() {
            if self.verifier.endpoint.is_empty() {
                return Err(CliError::Config(
                    "no judge: pass --stub or set verifier.endpoint in the config".into(),
                ));
            }
            if std::env::var(alarmsift_core::API_KEY_ENV).is_err() {
                return Err(CliError::Config(format!(
                    "live endpoint configured but {} is not set",
                    alarmsift_core::API_KEY_ENV
                )));
            }
        }
        Ok(())
    }

    /// Human-readable judge description for report headers.
    pub fn judge_label(&self) -> String {
        match &self.stub {
            Some(stub) => format!("stub:{}", stub.name()),
            None if self.verifier.model.is_empty() => "live".to_string(),
            None => format!("live:{}", self.verifier.model),
        }
    }
}
