//! The five subcommands: detect, render, verify, evaluate, and run.
//!
//! Stages communicate through files under the output directory —
//! `detections/`, `plots/`, `tables/`, `verdicts/`, and the two report
//! files — so each stage can be rerun alone and an interrupted pipeline
//! picks up from what is already on disk. Datasets are processed
//! concurrently up to the configured limit; failures in one dataset are
//! reported and do not stop the others.

use std::path::{Path, PathBuf};

use alarmsift_core::verifier::{Classification, VerifierConfig};
use alarmsift_core::{
    build_index, calibrate_from_scores, default_test_stride, detections_from_scores,
    discover_dataset_paths, label_detections, load_ucr_file, render_overlay, render_report,
    score_windows, serialize_text_table, verify_detections, Dataset, DatasetRun, DetectorParams,
    HttpChatClient, OverlayStyle, ReportFormat, VerdictOutcome,
};
use rayon::prelude::*;

use crate::cache::CachedClient;
use crate::config::RunConfig;
use crate::error::{CliError, Result};
use crate::files::{
    detection_files, read_json, write_atomic, write_bytes_atomic, write_json, DetectionsFile,
    ReportFile, VerdictRecord, VerdictsFile,
};

/// Expands the configured paths into concrete dataset files: directories
/// are scanned, files are taken as given.
fn expand_dataset_paths(config: &RunConfig) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    for path in &config.dataset_paths {
        if path.is_dir() {
            let found = discover_dataset_paths(path).map_err(CliError::from)?;
            if found.is_empty() {
                return Err(CliError::Data(format!(
                    "no dataset files found under {}",
                    path.display()
                )));
            }
            files.extend(found);
        } else if path.is_file() {
            files.push(path.clone());
        } else {
            return Err(CliError::Data(format!(
                "dataset path {} does not exist",
                path.display()
            )));
        }
    }
    Ok(files)
}

/// Runs `work` over the items with at most `concurrency` workers.
fn for_each_concurrently<T, R, F>(items: Vec<T>, concurrency: usize, work: F) -> Vec<R>
where
    T: Send,
    R: Send,
    F: Fn(T) -> R + Send + Sync,
{
    if concurrency > 1 && items.len() > 1 {
        if let Ok(pool) = rayon::ThreadPoolBuilder::new()
            .num_threads(concurrency)
            .build()
        {
            return pool.install(|| items.into_par_iter().map(&work).collect());
        }
    }
    items.into_iter().map(work).collect()
}

/// Reports per-dataset failures and turns any failure into a data error.
fn collect_failures(stage: &str, results: Vec<std::result::Result<String, CliError>>) -> Result<()> {
    let mut failed = 0usize;
    for result in &results {
        match result {
            Ok(line) => eprintln!("{stage}: {line}"),
            Err(e) => {
                failed += 1;
                eprintln!("{stage}: {e}");
            }
        }
    }
    if failed > 0 {
        Err(CliError::Data(format!(
            "{failed} of {} datasets failed during {stage}",
            results.len()
        )))
    } else {
        Ok(())
    }
}

fn dataset_label(path: &Path) -> String {
    path.display().to_string()
}

// ---------------------------------------------------------------------------
// detect
// ---------------------------------------------------------------------------

fn detect_one(
    config: &RunConfig,
    path: &Path,
) -> std::result::Result<(String, String), CliError> {
    let with_context = |e: CliError| e.context(dataset_label(path));
    let ds = load_ucr_file(path)
        .map_err(CliError::from)
        .map_err(with_context)?;

    let mut params = DetectorParams::for_anomaly_length(ds.anomaly().len());
    if let Some(w) = config.detector.window_len {
        params.window_len = w;
        params.test_stride = default_test_stride(w);
    }
    if let Some(k) = config.detector.k {
        params.k = k;
    }
    if let Some(s) = config.detector.stride {
        params.test_stride = s;
    }

    let run = || -> std::result::Result<DetectionsFile, alarmsift_core::Error> {
        params.validate()?;
        let index = build_index(ds.train(), params.window_len)?;
        let scores = score_windows(ds.test(), &index, &params)?;
        params.threshold = match config.detector.threshold {
            Some(t) => t,
            None => calibrate_from_scores(&scores, ds.anomaly(), params.window_len)?,
        };
        let detections = detections_from_scores(&scores, params.threshold, params.window_len)?;
        Ok(DetectionsFile {
            dataset: ds.name().to_string(),
            source: path.to_path_buf(),
            params,
            auto_calibrated: config.detector.threshold.is_none(),
            detections,
        })
    };
    let file = run().map_err(CliError::from).map_err(with_context)?;

    let out = config.out_dir.join("detections").join(format!("{}.json", file.dataset));
    write_json(&out, &file).map_err(with_context)?;
    let line = format!(
        "{}: {} detections (h={}, k={}, stride={}, tau={:.4}{})",
        file.dataset,
        file.detections.len(),
        file.params.window_len,
        file.params.k,
        file.params.test_stride,
        file.params.threshold,
        if file.auto_calibrated { ", calibrated" } else { "" },
    );
    Ok((file.dataset, line))
}

/// Stage one: score every dataset and write a detections file each.
pub fn cmd_detect(config: &RunConfig) -> Result<()> {
    config.validate_for_detect()?;
    let paths = expand_dataset_paths(config)?;

    let results = for_each_concurrently(paths, config.concurrency, |path| {
        detect_one(config, &path)
    });

    // Two inputs with one dataset name would have written the same stage
    // file; that must fail loudly, not feed half the data onward.
    let mut seen: Vec<&str> = Vec::new();
    for (name, _) in results.iter().flatten() {
        if seen.contains(&name.as_str()) {
            return Err(CliError::Data(format!(
                "dataset name `{name}` appears more than once; stage files would clobber each other"
            )));
        }
        seen.push(name);
    }

    collect_failures(
        "detect",
        results.into_iter().map(|r| r.map(|(_, line)| line)).collect(),
    )
}

// ---------------------------------------------------------------------------
// render
// ---------------------------------------------------------------------------

/// The two series a detection is judged on: the flagged test window and the
/// training window its score came from.
fn detection_slices<'a>(
    ds: &'a Dataset,
    detection: &alarmsift_core::Detection,
) -> std::result::Result<(&'a [f64], &'a [f64]), alarmsift_core::Error> {
    let interval = detection.interval;
    let test = ds.test().values();
    if interval.end() > test.len() {
        return Err(alarmsift_core::Error::DetectionOutOfRange {
            start: interval.start(),
            end: interval.end(),
            len: test.len(),
        });
    }
    let train = ds.train().values();
    let pred_end = detection.nn_start + interval.len();
    if pred_end > train.len() {
        return Err(alarmsift_core::Error::PredictionOutOfRange {
            start: detection.nn_start,
            end: pred_end,
            len: train.len(),
        });
    }
    Ok((&test[interval.as_range()], &train[detection.nn_start..pred_end]))
}

fn render_one(config: &RunConfig, file: &Path) -> std::result::Result<String, CliError> {
    let df: DetectionsFile = read_json(file)?;
    let with_context = |e: CliError| e.context(&df.dataset);
    let ds = load_ucr_file(&df.source)
        .map_err(CliError::from)
        .map_err(with_context)?;

    for detection in &df.detections {
        let (actual, prediction) = detection_slices(&ds, detection)
            .map_err(CliError::from)
            .map_err(|e| e.context(format!("{} detection {}", df.dataset, detection.interval)))?;

        let style = OverlayStyle {
            x_start: detection.interval.start(),
            ..OverlayStyle::default()
        };
        let png = render_overlay(actual, prediction, &style)
            .map_err(CliError::from)
            .map_err(with_context)?;
        let plot = config
            .out_dir
            .join("plots")
            .join(&df.dataset)
            .join(format!("{:06}.png", detection.interval.start()));
        write_bytes_atomic(&plot, &png).map_err(with_context)?;

        let table = serialize_text_table(actual, prediction, detection.interval.start())
            .map_err(CliError::from)
            .map_err(with_context)?;
        let table_path = config
            .out_dir
            .join("tables")
            .join(&df.dataset)
            .join(format!("{:06}.txt", detection.interval.start()));
        write_atomic(&table_path, &table).map_err(with_context)?;
    }
    Ok(format!(
        "{}: {} plots and tables",
        df.dataset,
        df.detections.len()
    ))
}

/// Stage two: a PNG overlay and a text table for every detection.
pub fn cmd_render(config: &RunConfig) -> Result<()> {
    let files = detection_files(&config.out_dir)?;
    let results = for_each_concurrently(files, config.concurrency, |file| {
        render_one(config, &file)
    });
    collect_failures("render", results)
}

// ---------------------------------------------------------------------------
// verify
// ---------------------------------------------------------------------------

fn verify_one(
    config: &RunConfig,
    verifier: &VerifierConfig,
    client: &CachedClient,
    file: &Path,
) -> std::result::Result<(String, usize), CliError> {
    let df: DetectionsFile = read_json(file)?;
    let with_context = |e: CliError| e.context(&df.dataset);
    let mut ds = load_ucr_file(&df.source)
        .map_err(CliError::from)
        .map_err(with_context)?;
    if config.no_context {
        ds = ds.without_context();
    }

    let outcomes = verify_detections(&df.detections, &ds, client, verifier, 1);
    let mut verdicts = Vec::with_capacity(outcomes.len());
    let mut kept = Vec::new();
    let mut undecided = 0usize;
    for (detection, outcome) in df.detections.iter().zip(outcomes) {
        match outcome {
            Ok(verdict) => {
                if verdict.classification == Classification::TruePositive {
                    kept.push(verdict.detection.interval);
                }
                verdicts.push(VerdictRecord::Decided {
                    detection: verdict.detection,
                    classification: verdict.classification,
                    anomalous_vote_count: verdict.anomalous_vote_count,
                    votes: verdict.votes,
                });
            }
            Err(e) => {
                undecided += 1;
                verdicts.push(VerdictRecord::Undecided {
                    detection: *detection,
                    reason: e.to_string(),
                });
            }
        }
    }

    let out = VerdictsFile {
        dataset: df.dataset.clone(),
        mode: verifier.mode.to_string(),
        votes: verifier.votes,
        majority: verifier.majority,
        judge: config.judge_label(),
        verdicts,
        kept,
    };
    let path = config.out_dir.join("verdicts").join(format!("{}.json", df.dataset));
    write_json(&path, &out).map_err(with_context)?;

    let decided = df.detections.len() - undecided;
    Ok((
        format!(
            "{}: {} verified, {} kept{}",
            df.dataset,
            decided,
            out.kept.len(),
            if undecided > 0 {
                format!(", {undecided} undecided")
            } else {
                String::new()
            }
        ),
        undecided,
    ))
}

/// Stage three: judge every detection, through the response cache.
pub fn cmd_verify(config: &RunConfig) -> Result<()> {
    config.validate_for_verify()?;
    let files = detection_files(&config.out_dir)?;

    let inner: Box<dyn alarmsift_core::verifier::ChatClient> = match &config.stub {
        Some(stub) => stub.client(),
        None => Box::new(HttpChatClient::from_env(&config.verifier).map_err(CliError::from)?),
    };
    let client = CachedClient::new(inner, &config.cache_dir).map_err(CliError::from)?;

    let results = for_each_concurrently(files, config.concurrency, |file| {
        verify_one(config, &config.verifier, &client, &file)
    });

    let mut undecided_total = 0usize;
    let flattened: Vec<std::result::Result<String, CliError>> = results
        .into_iter()
        .map(|r| {
            r.map(|(line, undecided)| {
                undecided_total += undecided;
                line
            })
        })
        .collect();
    collect_failures("verify", flattened)?;

    if undecided_total > 0 {
        return Err(CliError::Network(format!(
            "{undecided_total} detections left undecided; rerun to retry (answered votes are cached)"
        )));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// evaluate
// ---------------------------------------------------------------------------

/// Stage four: fold detections and verdicts into the metrics report.
pub fn cmd_evaluate(config: &RunConfig) -> Result<()> {
    let files = detection_files(&config.out_dir)?;

    let mut runs = Vec::with_capacity(files.len());
    let mut auto_calibrated = false;
    let mut mode = String::new();
    let mut judge = String::new();
    for file in &files {
        let df: DetectionsFile = read_json(file)?;
        auto_calibrated |= df.auto_calibrated;
        let ds = load_ucr_file(&df.source)
            .map_err(CliError::from)
            .map_err(|e| e.context(&df.dataset))?;

        let verdicts_path = config
            .out_dir
            .join("verdicts")
            .join(format!("{}.json", df.dataset));
        let vf: VerdictsFile = read_json(&verdicts_path)
            .map_err(|e| e.context(format!("{} (run verify first)", df.dataset)))?;
        if vf.verdicts.len() != df.detections.len() {
            return Err(CliError::Data(format!(
                "{}: {} detections but {} verdicts; rerun verify",
                df.dataset,
                df.detections.len(),
                vf.verdicts.len()
            )));
        }
        mode = vf.mode.clone();
        judge = vf.judge.clone();

        let labels = label_detections(&df.detections, ds.anomaly());
        let outcomes = vf
            .verdicts
            .iter()
            .zip(&df.detections)
            .map(|(record, detection)| {
                let recorded = match record {
                    VerdictRecord::Decided { detection, .. } => detection,
                    VerdictRecord::Undecided { detection, .. } => detection,
                };
                if recorded != detection {
                    return Err(CliError::Data(format!(
                        "{}: verdict for {} does not match detection {}; rerun verify",
                        df.dataset, recorded.interval, detection.interval
                    )));
                }
                Ok(match record {
                    VerdictRecord::Decided { classification, .. } => VerdictOutcome::Decided {
                        classification: *classification,
                    },
                    VerdictRecord::Undecided { .. } => VerdictOutcome::Undecided,
                })
            })
            .collect::<Result<Vec<_>>>()?;

        runs.push(DatasetRun {
            dataset: df.dataset,
            labels,
            outcomes,
        });
    }

    let report = alarmsift_core::compute_metrics(&runs).map_err(CliError::from)?;
    let report_file = ReportFile {
        judge: judge.clone(),
        mode: mode.clone(),
        auto_calibrated,
        report: report.clone(),
    };
    write_json(&config.out_dir.join("report.json"), &report_file)?;

    let mut text = String::new();
    text.push_str(&format!("judge: {judge}    mode: {mode}\n"));
    text.push_str(if auto_calibrated {
        "thresholds: calibrated from labeled anomalies (reads ground truth)\n"
    } else {
        "thresholds: manual\n"
    });
    text.push('\n');
    text.push_str(&render_report(&report, ReportFormat::Table));
    write_atomic(&config.out_dir.join("report.txt"), &text)?;

    print!("{text}");
    Ok(())
}

// ---------------------------------------------------------------------------
// run
// ---------------------------------------------------------------------------

/// All four stages in order. Because verify answers come from the cache
/// when present, rerunning after a partial failure resumes rather than
/// re-spending requests.
pub fn cmd_run(config: &RunConfig) -> Result<()> {
    cmd_detect(config)?;
    cmd_render(config)?;
    cmd_verify(config)?;
    cmd_evaluate(config)
}
