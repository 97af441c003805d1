//! Two-stage anomaly triage for univariate time series.
//!
//! Stage one is a classical sliding-window detector: every test window is
//! compared against an index of training windows and scored by the Euclidean
//! distance to its k-th nearest neighbor. Windows whose score clears a
//! threshold become candidate alarms. Stage two renders each alarm next to
//! the training pattern it most resembles and asks a language model (or an
//! offline stub) whether the two shapes differ, keeping the alarm only when
//! a majority of votes says they do.
//!
//! The crate is organized along that pipeline:
//!
//! - [`series`]: time series and interval primitives shared by every stage
//! - [`dataset`]: loading archive-style data files and JSON manifests
//! - [`detector`]: window index, k-NN scoring, calibration and detection
//! - [`render`]: deterministic PNG overlays and plain-text serializations
//! - [`verifier`]: prompts, vote parsing, majority logic, offline stubs
//! - [`llm`]: an HTTP client for OpenAI-compatible chat endpoints
//! - [`eval`]: interval-level metrics over labeled detection runs
//! - [`synthetic`]: seeded dataset generation for tests and demos

pub mod dataset;
pub mod detector;
mod error;
pub mod eval;
pub mod llm;
pub mod render;
pub mod series;
pub mod synthetic;
pub mod verifier;

pub use dataset::{
    discover_dataset_paths, load_ucr_file, parse_archive_stem, ArchiveName, DatasetManifest,
};
pub use detector::{
    build_index, calibrate_from_scores, calibrate_threshold, default_test_stride,
    derive_window_length, detect, detections_from_scores, knn_distance, score_windows, Detection,
    DetectorParams, WindowIndex, WindowScore, DEFAULT_MAX_WINDOW_LEN, DEFAULT_MIN_WINDOW_LEN,
    DEFAULT_NEIGHBOR_COUNT,
};
pub use error::{Error, ErrorCategory};
pub use eval::{
    compute_metrics, label_detections, render_report, AggregateMetrics, DatasetMetrics,
    DatasetRun, DetectionLabel, MetricsReport, ReportFormat, VerdictOutcome,
};
pub use llm::{HttpChatClient, API_KEY_ENV};
pub use render::{
    plot_area, quantize_sigfigs, render_overlay, scale_unit, serialize_text_table, OverlayStyle,
};
pub use series::{is_true_positive, Dataset, Interval, TimeSeries};
pub use synthetic::{generate, write_archive_files, SyntheticSpec};
pub use verifier::{
    build_text_prompt, build_vision_prompt, filter_detections, majority_vote, parse_verdict,
    verify_detection, verify_detections, AcceptAllStub, ChatClient, Classification, Mode,
    OracleStub, RejectAllStub, ShapeAssessment, Verdict, VerifierConfig, Vote, VoteRequest,
    DIFFERENT_SHAPE_RESPONSE, SAME_SHAPE_RESPONSE, VERDICT_SUFFIX,
};
