//! Sliding-window k-nearest-neighbor anomaly detection.
//!
//! The training series is cut into every possible window of length `h`
//! (stride 1, `N - h + 1` windows). A test window is scored by the raw
//! Euclidean distance to its k-th nearest training window; windows are not
//! z-normalized, so level shifts count as anomalous. Test windows are taken
//! at a coarser stride (one third of the window length by default) and any
//! window whose score reaches the threshold becomes a detection.
//!
//! The threshold is calibrated from the labeled anomaly: it is 90% of the
//! largest score among the strided test windows that overlap the anomaly.
//! Calibration scores the same strided window set as detection, so the
//! window that determined the threshold always clears it — every dataset
//! yields at least one true positive, and everything else that clears the
//! bar shows what the detector would drag in at that sensitivity.
//!
//! The neighbor scan is exhaustive with early abandoning: squared-distance
//! accumulation stops as soon as the partial sum reaches the current k-th
//! best. Ties on distance are broken toward the smaller window start, which
//! keeps results independent of scan order and thread count.

use std::collections::BinaryHeap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::series::{Interval, TimeSeries};

/// Default neighbor rank: score = distance to the 3rd nearest window.
pub const DEFAULT_NEIGHBOR_COUNT: usize = 3;
/// Smallest window length the automatic derivation will produce.
pub const DEFAULT_MIN_WINDOW_LEN: usize = 30;
/// Largest window length the automatic derivation will produce.
pub const DEFAULT_MAX_WINDOW_LEN: usize = 300;

/// Detector knobs. `window_len`, `k` and `test_stride` shape the scan;
/// `threshold` is the alarm cutoff (calibrated or supplied); the min/max
/// bounds document the clamp used when deriving `window_len` automatically.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectorParams {
    /// Window length in samples; windows cover `[t, t + window_len)`.
    pub window_len: usize,
    /// Neighbor rank used for scoring (k-th nearest).
    pub k: usize,
    /// A window is anomalous when its score is >= this value.
    pub threshold: f64,
    /// Stride between consecutive test windows. Training windows always use
    /// stride 1.
    pub test_stride: usize,
    /// Lower clamp applied by [`derive_window_length`].
    pub min_window_len: usize,
    /// Upper clamp applied by [`derive_window_length`].
    pub max_window_len: usize,
}

impl DetectorParams {
    /// Parameters derived from the labeled anomaly length: the window is a
    /// touch longer than the anomaly (clamped), the test stride is a third
    /// of the window, and the threshold starts at zero awaiting calibration.
    pub fn for_anomaly_length(anomaly_len: usize) -> Self {
        let window_len =
            derive_window_length(anomaly_len, DEFAULT_MIN_WINDOW_LEN, DEFAULT_MAX_WINDOW_LEN);
        Self {
            window_len,
            k: DEFAULT_NEIGHBOR_COUNT,
            threshold: 0.0,
            test_stride: default_test_stride(window_len),
            min_window_len: DEFAULT_MIN_WINDOW_LEN,
            max_window_len: DEFAULT_MAX_WINDOW_LEN,
        }
    }

    /// Fully manual parameters; stride defaults to a third of the window.
    pub fn manual(window_len: usize, k: usize, threshold: f64) -> Self {
        Self {
            window_len,
            k,
            threshold,
            test_stride: default_test_stride(window_len),
            min_window_len: DEFAULT_MIN_WINDOW_LEN,
            max_window_len: DEFAULT_MAX_WINDOW_LEN,
        }
    }

    pub fn validate(&self) -> Result<(), Error> {
        let reason = if self.window_len == 0 {
            Some("window_len must be at least 1".to_string())
        } else if self.k == 0 {
            Some("k must be at least 1".to_string())
        } else if self.test_stride == 0 {
            Some("test_stride must be at least 1".to_string())
        } else if !self.threshold.is_finite() || self.threshold < 0.0 {
            Some(format!(
                "threshold must be finite and non-negative, got {}",
                self.threshold
            ))
        } else if self.min_window_len > self.max_window_len {
            Some(format!(
                "min_window_len {} exceeds max_window_len {}",
                self.min_window_len, self.max_window_len
            ))
        } else {
            None
        };
        match reason {
            Some(reason) => Err(Error::BadDetectorParams { reason }),
            None => Ok(()),
        }
    }
}

/// Window length for a known anomaly length: 10% longer than the anomaly
/// (rounded up), clamped to `[min_len, max_len]`.
///
/// The 10% margin is computed in integer arithmetic so results never depend
/// on floating-point rounding of values like 1.1 * 100.
pub fn derive_window_length(anomaly_len: usize, min_len: usize, max_len: usize) -> usize {
    let padded = (anomaly_len * 11).div_ceil(10);
    padded.clamp(min_len, max_len)
}

/// Default stride between test windows: a third of the window length,
/// never less than one sample.
pub fn default_test_stride(window_len: usize) -> usize {
    (window_len / 3).max(1)
}

/// All training windows of a fixed length, addressed by start offset.
///
/// Windows are materialized lazily as slices into the training values, so
/// the index is just the series plus a length — building it never copies.
#[derive(Debug, Clone)]
pub struct WindowIndex {
    values: Vec<f64>,
    window_len: usize,
}

impl WindowIndex {
    pub fn window_len(&self) -> usize {
        self.window_len
    }

    /// Number of stride-1 windows: `N - window_len + 1`.
    pub fn window_count(&self) -> usize {
        self.values.len() - self.window_len + 1
    }

    /// The window starting at `start`. Panics if out of range; use
    /// [`WindowIndex::window_count`] to stay in bounds.
    pub fn window(&self, start: usize) -> &[f64] {
        &self.values[start..start + self.window_len]
    }
}

/// Builds the stride-1 window index over the training series.
pub fn build_index(train: &TimeSeries, window_len: usize) -> Result<WindowIndex, Error> {
    if window_len == 0 {
        return Err(Error::BadDetectorParams {
            reason: "window_len must be at least 1".to_string(),
        });
    }
    if train.len() < window_len {
        return Err(Error::SeriesTooShort {
            len: train.len(),
            window_len,
        });
    }
    Ok(WindowIndex {
        values: train.values().to_vec(),
        window_len,
    })
}

/// A training window identified during the neighbor scan: squared distance
/// plus start offset. Ordering is lexicographic on `(d2, start)` using a
/// total order on the distance, so heaps of neighbors behave sensibly even
/// for equal distances.
#[derive(Debug, Clone, Copy)]
struct Neighbor {
    d2: f64,
    start: usize,
}

impl PartialEq for Neighbor {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == std::cmp::Ordering::Equal
    }
}

impl Eq for Neighbor {}

impl PartialOrd for Neighbor {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Neighbor {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.d2
            .total_cmp(&other.d2)
            .then(self.start.cmp(&other.start))
    }
}

/// Squared Euclidean distance with early abandoning: returns `None` as soon
/// as the running sum reaches `bound`. Terms accumulate left to right in the
/// same order as the unbounded sum, so a completed scan is bit-identical to
/// one computed without a bound.
fn sq_dist_bounded(a: &[f64], b: &[f64], bound: f64) -> Option<f64> {
    let mut acc = 0.0;
    for (x, y) in a.iter().zip(b) {
        let d = x - y;
        acc += d * d;
        if acc >= bound {
            return None;
        }
    }
    Some(acc)
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (x, y) in a.iter().zip(b) {
        let d = x - y;
        acc += d * d;
    }
    acc
}

/// Exhaustive scan for the k-th nearest window. The max-heap holds the k
/// best neighbors seen so far; its top is the current k-th. A candidate
/// whose partial sum already reaches the top's distance can be abandoned:
/// distances only grow, and a tie loses to the earlier start already held.
fn kth_neighbor(query: &[f64], index: &WindowIndex, k: usize) -> Neighbor {
    let mut heap: BinaryHeap<Neighbor> = BinaryHeap::with_capacity(k + 1);
    for start in 0..index.window_count() {
        let window = index.window(start);
        if heap.len() < k {
            heap.push(Neighbor {
                d2: sq_dist(query, window),
                start,
            });
        } else {
            let bound = heap.peek().expect("heap holds k neighbors").d2;
            if let Some(d2) = sq_dist_bounded(query, window, bound) {
                heap.push(Neighbor { d2, start });
                heap.pop();
            }
        }
    }
    debug_assert_eq!(heap.len(), k);
    *heap.peek().expect("k >= 1 windows were scanned")
}

/// Distance from `query` to its k-th nearest training window, along with
/// that window's start offset. Ties on distance resolve to the smallest
/// start.
pub fn knn_distance(
    query: &[f64],
    index: &WindowIndex,
    k: usize,
) -> Result<(f64, usize), Error> {
    if query.len() != index.window_len {
        return Err(Error::QueryLengthMismatch {
            query_len: query.len(),
            window_len: index.window_len,
        });
    }
    if k == 0 {
        return Err(Error::BadDetectorParams {
            reason: "k must be at least 1".to_string(),
        });
    }
    if k > index.window_count() {
        return Err(Error::NotEnoughNeighbors {
            k,
            available: index.window_count(),
        });
    }
    let kth = kth_neighbor(query, index, k);
    Ok((kth.d2.sqrt(), kth.start))
}

/// Score of one strided test window: distance to the k-th nearest training
/// window and where that neighbor starts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowScore {
    /// Window start in test-series coordinates; the window is
    /// `[start, start + window_len)`.
    pub start: usize,
    /// Euclidean distance to the k-th nearest training window.
    pub score: f64,
    /// Start offset of that k-th neighbor in the training series.
    pub nn_start: usize,
}

/// Scores every strided test window against the index. Starts run
/// `0, s, 2s, ...` up to the last offset where a full window fits, so the
/// number of scored windows is `floor((T - h) / s) + 1`.
pub fn score_windows(
    test: &TimeSeries,
    index: &WindowIndex,
    params: &DetectorParams,
) -> Result<Vec<WindowScore>, Error> {
    params.validate()?;
    if params.window_len != index.window_len {
        return Err(Error::BadDetectorParams {
            reason: format!(
                "params.window_len {} does not match index window length {}",
                params.window_len, index.window_len
            ),
        });
    }
    if test.len() < params.window_len {
        return Err(Error::SeriesTooShort {
            len: test.len(),
            window_len: params.window_len,
        });
    }
    if params.k > index.window_count() {
        return Err(Error::NotEnoughNeighbors {
            k: params.k,
            available: index.window_count(),
        });
    }

    let starts: Vec<usize> = (0..=test.len() - params.window_len)
        .step_by(params.test_stride)
        .collect();
    let values = test.values();
    let scores = starts
        .par_iter()
        .map(|&start| {
            let query = &values[start..start + params.window_len];
            let kth = kth_neighbor(query, index, params.k);
            WindowScore {
                start,
                score: kth.d2.sqrt(),
                nn_start: kth.start,
            }
        })
        .collect();
    Ok(scores)
}

/// Threshold from already-computed scores: 90% of the highest score among
/// windows overlapping the anomaly.
pub fn calibrate_from_scores(
    scores: &[WindowScore],
    anomaly: Interval,
    window_len: usize,
) -> Result<f64, Error> {
    let mut best: Option<f64> = None;
    for ws in scores {
        let window = Interval::with_len(ws.start, window_len)?;
        if window.overlaps(&anomaly) {
            best = Some(match best {
                Some(b) => b.max(ws.score),
                None => ws.score,
            });
        }
    }
    match best {
        Some(max_score) => Ok(0.9 * max_score),
        None => Err(Error::NoCalibrationWindow {
            start: anomaly.start(),
            end: anomaly.end(),
        }),
    }
}

/// Calibrates the alarm threshold for a labeled dataset: scores the strided
/// test windows (the same set detection will score) and returns 90% of the
/// highest score among those overlapping the anomaly.
pub fn calibrate_threshold(
    test: &TimeSeries,
    anomaly: Interval,
    index: &WindowIndex,
    params: &DetectorParams,
) -> Result<f64, Error> {
    let scores = score_windows(test, index, params)?;
    calibrate_from_scores(&scores, anomaly, params.window_len)
}

/// One alarm raised by the detector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    /// Flagged span in test-series coordinates.
    pub interval: Interval,
    /// k-th nearest neighbor distance of the flagged window.
    pub score: f64,
    /// Start of the nearest training window used as the reference pattern
    /// when the alarm is verified.
    pub nn_start: usize,
}

/// Detections from already-computed scores: every window whose score is at
/// least `threshold`, in start order. Overlapping detections are reported
/// individually, never merged.
pub fn detections_from_scores(
    scores: &[WindowScore],
    threshold: f64,
    window_len: usize,
) -> Result<Vec<Detection>, Error> {
    scores
        .iter()
        .filter(|ws| ws.score >= threshold)
        .map(|ws| {
            Ok(Detection {
                interval: Interval::with_len(ws.start, window_len)?,
                score: ws.score,
                nn_start: ws.nn_start,
            })
        })
        .collect()
}

/// Runs detection over the test series: scores the strided windows and
/// returns those meeting `params.threshold`.
pub fn detect(
    test: &TimeSeries,
    index: &WindowIndex,
    params: &DetectorParams,
) -> Result<Vec<Detection>, Error> {
    let scores = score_windows(test, index, params)?;
    detections_from_scores(&scores, params.threshold, params.window_len)
}
