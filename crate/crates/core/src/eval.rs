//! Interval-level evaluation of a verified detection run.
//!
//! Ground truth labels each detection TP or FP by overlap with the dataset's
//! anomaly; the verifier's verdicts then determine what was kept. Three
//! headline numbers summarize a run:
//!
//! - **FPs reduced**: share of false-positive detections the verifier
//!   discarded — pooled over all intervals from all datasets.
//! - **TPs retained**: share of true-positive detections the verifier kept,
//!   pooled the same way.
//! - **Anomalies detected**: share of datasets that still have at least one
//!   true positive after filtering — per dataset, since one found anomaly
//!   per dataset is what matters operationally.
//!
//! Detections the verifier could not decide (transport failure) are
//! excluded from the pooled numerators and denominators and surfaced in a
//! dedicated column instead of being silently counted either way.

use serde::{Deserialize, Serialize};

use crate::detector::Detection;
use crate::error::Error;
use crate::series::{is_true_positive, Interval};
use crate::verifier::Classification;

/// Ground-truth label of a detection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DetectionLabel {
    TruePositive,
    FalsePositive,
}

/// What verification concluded about one detection — or that it never
/// concluded anything.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum VerdictOutcome {
    Decided { classification: Classification },
    Undecided,
}

/// One dataset's labeled, verified detections, in detection order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetRun {
    pub dataset: String,
    pub labels: Vec<DetectionLabel>,
    pub outcomes: Vec<VerdictOutcome>,
}

/// Per-dataset counters. Totals count only decided detections; undecided
/// ones appear solely in their own column.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetMetrics {
    pub dataset: String,
    pub tp_total: usize,
    pub fp_total: usize,
    pub tp_kept: usize,
    pub fp_kept: usize,
    pub undecided: usize,
    pub anomaly_detected: bool,
}

/// Pooled counters and the three headline percentages.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateMetrics {
    pub datasets: usize,
    pub datasets_detected: usize,
    pub tp_total: usize,
    pub fp_total: usize,
    pub tp_kept: usize,
    pub fp_kept: usize,
    pub undecided: usize,
    pub fps_reduced_pct: f64,
    pub tps_retained_pct: f64,
    pub anomalies_detected_pct: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub per_dataset: Vec<DatasetMetrics>,
    pub aggregate: AggregateMetrics,
}

/// Labels each detection by overlap with the labeled anomaly.
pub fn label_detections(detections: &[Detection], anomaly: Interval) -> Vec<DetectionLabel> {
    detections
        .iter()
        .map(|d| {
            if is_true_positive(&d.interval, &anomaly) {
                DetectionLabel::TruePositive
            } else {
                DetectionLabel::FalsePositive
            }
        })
        .collect()
}

/// Aggregates labeled runs into per-dataset and pooled metrics.
///
/// FP reduction and TP retention are micro-averaged: counters are summed
/// over all datasets before dividing, so datasets with many intervals weigh
/// proportionally. A pooled denominator of zero yields 0% FPs reduced
/// (nothing to discard) and 100% TPs retained (nothing to lose).
pub fn compute_metrics(runs: &[DatasetRun]) -> Result<MetricsReport, Error> {
    let mut per_dataset = Vec::with_capacity(runs.len());

    for run in runs {
        if run.labels.len() != run.outcomes.len() {
            return Err(Error::RunShapeMismatch {
                dataset: run.dataset.clone(),
                labels: run.labels.len(),
                outcomes: run.outcomes.len(),
            });
        }
        let mut m = DatasetMetrics {
            dataset: run.dataset.clone(),
            tp_total: 0,
            fp_total: 0,
            tp_kept: 0,
            fp_kept: 0,
            undecided: 0,
            anomaly_detected: false,
        };
        for (label, outcome) in run.labels.iter().zip(&run.outcomes) {
            let classification = match outcome {
                VerdictOutcome::Undecided => {
                    m.undecided += 1;
                    continue;
                }
                VerdictOutcome::Decided { classification } => *classification,
            };
            let kept = classification == Classification::TruePositive;
            match label {
                DetectionLabel::TruePositive => {
                    m.tp_total += 1;
                    if kept {
                        m.tp_kept += 1;
                    }
                }
                DetectionLabel::FalsePositive => {
                    m.fp_total += 1;
                    if kept {
                        m.fp_kept += 1;
                    }
                }
            }
        }
        m.anomaly_detected = m.tp_kept >= 1;
        per_dataset.push(m);
    }

    let datasets = per_dataset.len();
    let datasets_detected = per_dataset.iter().filter(|m| m.anomaly_detected).count();
    let tp_total: usize = per_dataset.iter().map(|m| m.tp_total).sum();
    let fp_total: usize = per_dataset.iter().map(|m| m.fp_total).sum();
    let tp_kept: usize = per_dataset.iter().map(|m| m.tp_kept).sum();
    let fp_kept: usize = per_dataset.iter().map(|m| m.fp_kept).sum();
    let undecided: usize = per_dataset.iter().map(|m| m.undecided).sum();

    let fps_reduced_pct = if fp_total > 0 {
        100.0 * (fp_total - fp_kept) as f64 / fp_total as f64
    } else {
        0.0
    };
    let tps_retained_pct = if tp_total > 0 {
        100.0 * tp_kept as f64 / tp_total as f64
    } else {
        100.0
    };
    let anomalies_detected_pct = if datasets > 0 {
        100.0 * datasets_detected as f64 / datasets as f64
    } else {
        0.0
    };

    Ok(MetricsReport {
        per_dataset,
        aggregate: AggregateMetrics {
            datasets,
            datasets_detected,
            tp_total,
            fp_total,
            tp_kept,
            fp_kept,
            undecided,
            fps_reduced_pct,
            tps_retained_pct,
            anomalies_detected_pct,
        },
    })
}

/// Output encodings for [`render_report`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    /// Human-readable fixed-width table.
    Table,
    /// Pretty-printed JSON that round-trips through [`MetricsReport`].
    Json,
}

/// Renders the report as a table or as JSON.
pub fn render_report(report: &MetricsReport, format: ReportFormat) -> String {
    match format {
        ReportFormat::Json => {
            let mut s =
                serde_json::to_string_pretty(report).expect("report serialization cannot fail");
            s.push('\n');
            s
        }
        ReportFormat::Table => render_table(report),
    }
}

fn render_table(report: &MetricsReport) -> String {
    let mut out = String::new();
    let name_width = report
        .per_dataset
        .iter()
        .map(|m| m.dataset.len())
        .chain(std::iter::once("dataset".len()))
        .max()
        .unwrap_or(7);

    out.push_str(&format!(
        "{:<name_width$}  {:>8}  {:>8}  {:>8}  {:>8}  {:>9}  {:>8}\n",
        "dataset", "TP total", "FP total", "TP kept", "FP kept", "undecided", "detected"
    ));
    for m in &report.per_dataset {
        out.push_str(&format!(
            "{:<name_width$}  {:>8}  {:>8}  {:>8}  {:>8}  {:>9}  {:>8}\n",
            m.dataset,
            m.tp_total,
            m.fp_total,
            m.tp_kept,
            m.fp_kept,
            m.undecided,
            if m.anomaly_detected { "yes" } else { "no" }
        ));
    }

    out.push('\n');
    out.push_str("FPs reduced  TPs retained  Anomalies detected\n");
    if !report.per_dataset.is_empty() {
        let a = &report.aggregate;
        out.push_str(&format!(
            "{:<11}  {:<12}  {:<18}\n",
            format!("{:.1}%", a.fps_reduced_pct),
            format!("{:.1}%", a.tps_retained_pct),
            format!("{:.1}%", a.anomalies_detected_pct),
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::Interval;

    fn detection(start: usize, end: usize) -> Detection {
        Detection {
            interval: Interval::new(start, end).unwrap(),
            score: 1.0,
            nn_start: 0,
        }
    }

    fn decided(c: Classification) -> VerdictOutcome {
        VerdictOutcome::Decided { classification: c }
    }

    #[test]
    fn labels_follow_overlap() {
        let anomaly = Interval::new(100, 120).unwrap();
        let detections = vec![
            detection(100, 120), // exact cover
            detection(90, 101),  // clips the edge
            detection(120, 140), // touches, no overlap
            detection(0, 50),    // far away
        ];
        let labels = label_detections(&detections, anomaly);
        assert_eq!(
            labels,
            vec![
                DetectionLabel::TruePositive,
                DetectionLabel::TruePositive,
                DetectionLabel::FalsePositive,
                DetectionLabel::FalsePositive,
            ]
        );
    }

    /// Builds a run with the given counts of kept/dropped TPs and FPs.
    fn run(
        name: &str,
        tp_kept: usize,
        tp_dropped: usize,
        fp_kept: usize,
        fp_dropped: usize,
    ) -> DatasetRun {
        let mut labels = Vec::new();
        let mut outcomes = Vec::new();
        for _ in 0..tp_kept {
            labels.push(DetectionLabel::TruePositive);
            outcomes.push(decided(Classification::TruePositive));
        }
        for _ in 0..tp_dropped {
            labels.push(DetectionLabel::TruePositive);
            outcomes.push(decided(Classification::FalsePositive));
        }
        for _ in 0..fp_kept {
            labels.push(DetectionLabel::FalsePositive);
            outcomes.push(decided(Classification::TruePositive));
        }
        for _ in 0..fp_dropped {
            labels.push(DetectionLabel::FalsePositive);
            outcomes.push(decided(Classification::FalsePositive));
        }
        DatasetRun {
            dataset: name.to_string(),
            labels,
            outcomes,
        }
    }

    #[test]
    fn pooled_percentages_match_hand_arithmetic() {
        // Two datasets: 10 FPs with 4 discarded, 5 TPs with 4 kept, 1 of 2
        // datasets detecting.
        let runs = vec![run("a", 4, 1, 6, 4), run("b", 0, 0, 0, 0)];
        let report = compute_metrics(&runs).unwrap();
        assert_eq!(report.aggregate.fp_total, 10);
        assert_eq!(report.aggregate.fp_kept, 6);
        assert_eq!(report.aggregate.tp_total, 5);
        assert_eq!(report.aggregate.tp_kept, 4);
        assert_eq!(report.aggregate.fps_reduced_pct, 100.0 * 4.0 / 10.0);
        assert_eq!(report.aggregate.tps_retained_pct, 100.0 * 4.0 / 5.0);
        assert_eq!(report.aggregate.anomalies_detected_pct, 50.0);
    }

    #[test]
    fn undecided_detections_are_excluded_from_both_sides() {
        let mut r = run("a", 1, 0, 1, 1);
        r.labels.push(DetectionLabel::TruePositive);
        r.outcomes.push(VerdictOutcome::Undecided);
        r.labels.push(DetectionLabel::FalsePositive);
        r.outcomes.push(VerdictOutcome::Undecided);

        let report = compute_metrics(&[r]).unwrap();
        let m = &report.per_dataset[0];
        assert_eq!((m.tp_total, m.fp_total), (1, 2));
        assert_eq!(m.undecided, 2);
        assert_eq!(report.aggregate.undecided, 2);
    }

    #[test]
    fn aggregate_counters_are_sums_of_per_dataset_counters() {
        let runs = vec![run("a", 2, 1, 3, 4), run("b", 1, 0, 2, 2), run("c", 0, 2, 0, 5)];
        let report = compute_metrics(&runs).unwrap();
        let sum = |f: fn(&DatasetMetrics) -> usize| -> usize {
            report.per_dataset.iter().map(f).sum()
        };
        assert_eq!(report.aggregate.tp_total, sum(|m| m.tp_total));
        assert_eq!(report.aggregate.fp_total, sum(|m| m.fp_total));
        assert_eq!(report.aggregate.tp_kept, sum(|m| m.tp_kept));
        assert_eq!(report.aggregate.fp_kept, sum(|m| m.fp_kept));
    }

    #[test]
    fn metrics_are_invariant_to_dataset_order() {
        let runs = vec![run("a", 2, 1, 3, 4), run("b", 1, 0, 2, 2)];
        let mut reversed = runs.clone();
        reversed.reverse();
        let fwd = compute_metrics(&runs).unwrap();
        let rev = compute_metrics(&reversed).unwrap();
        assert_eq!(fwd.aggregate.fps_reduced_pct, rev.aggregate.fps_reduced_pct);
        assert_eq!(fwd.aggregate.tps_retained_pct, rev.aggregate.tps_retained_pct);
        assert_eq!(
            fwd.aggregate.anomalies_detected_pct,
            rev.aggregate.anomalies_detected_pct
        );
    }

    #[test]
    fn empty_denominators_use_documented_conventions() {
        // No FPs at all: nothing to reduce.
        let report = compute_metrics(&[run("a", 1, 0, 0, 0)]).unwrap();
        assert_eq!(report.aggregate.fps_reduced_pct, 0.0);
        assert_eq!(report.aggregate.tps_retained_pct, 100.0);

        // No TPs at all: nothing to lose.
        let report = compute_metrics(&[run("a", 0, 0, 1, 1)]).unwrap();
        assert_eq!(report.aggregate.tps_retained_pct, 100.0);
        assert_eq!(report.aggregate.anomalies_detected_pct, 0.0);

        // No datasets.
        let report = compute_metrics(&[]).unwrap();
        assert_eq!(report.aggregate.anomalies_detected_pct, 0.0);
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        let mut r = run("a", 1, 0, 0, 0);
        r.outcomes.pop();
        assert!(matches!(
            compute_metrics(&[r]),
            Err(Error::RunShapeMismatch { .. })
        ));
    }

    #[test]
    fn table_contains_the_headline_columns() {
        let report = compute_metrics(&[run("wave-1", 2, 0, 1, 3)]).unwrap();
        let table = render_report(&report, ReportFormat::Table);
        assert!(table.contains("FPs reduced  TPs retained  Anomalies detected"));
        assert!(table.contains("wave-1"));
        assert!(table.contains("75.0%"));
        assert!(table.contains("100.0%"));

        // Empty report: headers only.
        let empty = compute_metrics(&[]).unwrap();
        let table = render_report(&empty, ReportFormat::Table);
        assert!(table.contains("dataset"));
        assert!(table.contains("FPs reduced  TPs retained  Anomalies detected"));
        assert!(!table.contains('%'));
    }

    #[test]
    fn json_report_round_trips() {
        let report = compute_metrics(&[run("a", 2, 1, 3, 4), run("b", 1, 0, 2, 2)]).unwrap();
        let json = render_report(&report, ReportFormat::Json);
        let back: MetricsReport = serde_json::from_str(&json).unwrap();
        assert_eq!(back, report);
    }
}
