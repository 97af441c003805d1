use std::path::PathBuf;

/// Everything that can go wrong inside the library.
///
/// Variants are grouped by the stage that raises them; callers that only
/// need a coarse category (configuration vs. data vs. network) can match on
/// [`Error::category`].
#[derive(Debug, thiserror::Error)]
pub enum Error {
    // ---- series / interval construction ----
    #[error("time series `{name}` is empty")]
    EmptySeries { name: String },

    #[error("time series `{name}` contains a non-finite value at position {index}")]
    NonFiniteValue { name: String, index: usize },

    #[error("invalid interval: start {start} must be less than end {end}")]
    InvalidInterval { start: usize, end: usize },

    #[error("anomaly interval [{start}, {end}) exceeds test series length {len}")]
    AnomalyOutOfRange { start: usize, end: usize, len: usize },

    // ---- dataset loading ----
    #[error("cannot read `{path}`: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("cannot parse `{path}` line {line}: `{text}` is not a number")]
    BadSample {
        path: PathBuf,
        line: usize,
        text: String,
    },

    #[error(
        "`{path}` does not follow the `<id>_UCR_Anomaly_<name>_<trainEnd>_<anomStart>_<anomEnd>` \
         naming convention and has no JSON manifest"
    )]
    UnrecognizedDatasetFile { path: PathBuf },

    #[error("invalid manifest `{path}`: {reason}")]
    BadManifest { path: PathBuf, reason: String },

    #[error(
        "dataset `{name}`: bounds trainEnd={train_end}, anomaly=[{anomaly_start}, {anomaly_end}] \
         do not fit a file of {len} samples"
    )]
    BadDatasetBounds {
        name: String,
        train_end: usize,
        anomaly_start: usize,
        anomaly_end: usize,
        len: usize,
    },

    // ---- detector ----
    #[error("invalid detector parameters: {reason}")]
    BadDetectorParams { reason: String },

    #[error("series of length {len} is shorter than window length {window_len}")]
    SeriesTooShort { len: usize, window_len: usize },

    #[error("query window has length {query_len} but the index holds windows of length {window_len}")]
    QueryLengthMismatch { query_len: usize, window_len: usize },

    #[error("k = {k} exceeds the {available} windows available in the index")]
    NotEnoughNeighbors { k: usize, available: usize },

    #[error("no scored window overlaps the anomaly [{start}, {end}); cannot calibrate")]
    NoCalibrationWindow { start: usize, end: usize },

    // ---- rendering ----
    #[error("cannot render: {reason}")]
    Render { reason: String },

    #[error("actual slice has {actual} samples but prediction has {prediction}")]
    LengthMismatch { actual: usize, prediction: usize },

    // ---- verification ----
    #[error("invalid verifier configuration: {reason}")]
    BadVerifierConfig { reason: String },

    #[error("detection interval [{start}, {end}) does not fit the test series (length {len})")]
    DetectionOutOfRange { start: usize, end: usize, len: usize },

    #[error(
        "nearest-neighbor window [{start}, {end}) does not fit the training series (length {len})"
    )]
    PredictionOutOfRange { start: usize, end: usize, len: usize },

    #[error("majority vote needs at least one vote")]
    NoVotes,

    // ---- LLM transport ----
    #[error("environment variable {name} is not set; required for live verification")]
    MissingApiKey { name: String },

    #[error("chat request failed after {attempts} attempt(s): {reason}")]
    Transport { attempts: u32, reason: String },

    #[error("chat endpoint returned an unusable response: {reason}")]
    BadApiResponse { reason: String },

    // ---- evaluation ----
    #[error("dataset `{dataset}`: {labels} labels but {outcomes} verdict outcomes")]
    RunShapeMismatch {
        dataset: String,
        labels: usize,
        outcomes: usize,
    },
}

/// Coarse classification used by binaries to pick exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCategory {
    /// Bad parameters, bad configuration, missing credentials.
    Config,
    /// Unreadable, malformed, or out-of-range data.
    Data,
    /// The chat endpoint could not be reached or answered garbage.
    Network,
}

impl Error {
    pub fn category(&self) -> ErrorCategory {
        use Error::*;
        match self {
            BadDetectorParams { .. } | BadVerifierConfig { .. } | MissingApiKey { .. } => {
                ErrorCategory::Config
            }
            Transport { .. } | BadApiResponse { .. } => ErrorCategory::Network,
            _ => ErrorCategory::Data,
        }
    }
}
