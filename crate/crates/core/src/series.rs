//! Core value types: time series, half-open intervals, and labeled datasets.
//!
//! Intervals are half-open `[start, end)` over 0-based sample indices, the
//! same convention as Rust range types. Every interval in the crate — the
//! labeled anomaly, detected alarm spans, window positions — uses this one
//! representation so overlap arithmetic never needs case analysis.

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// A named, non-empty sequence of finite samples.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    name: String,
    values: Vec<f64>,
}

impl TimeSeries {
    /// Builds a series, rejecting empty input and non-finite samples.
    ///
    /// NaN or infinite samples are refused up front so that distance
    /// computations downstream never have to reason about NaN ordering.
    pub fn new(name: impl Into<String>, values: Vec<f64>) -> Result<Self, Error> {
        let name = name.into();
        if values.is_empty() {
            return Err(Error::EmptySeries { name });
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteValue { name, index });
        }
        Ok(Self { name, values })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    /// Always false — construction rejects empty series — but provided so the
    /// type plays well with code written against slice-like containers.
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Half-open index interval `[start, end)` with `start < end`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "RawInterval", into = "RawInterval")]
pub struct Interval {
    start: usize,
    end: usize,
}

/// Wire form of [`Interval`]; deserialization re-runs the `start < end` check.
#[derive(Serialize, Deserialize)]
struct RawInterval {
    start: usize,
    end: usize,
}

impl TryFrom<RawInterval> for Interval {
    type Error = Error;

    fn try_from(raw: RawInterval) -> Result<Self, Error> {
        Interval::new(raw.start, raw.end)
    }
}

impl From<Interval> for RawInterval {
    fn from(interval: Interval) -> Self {
        RawInterval {
            start: interval.start,
            end: interval.end,
        }
    }
}

impl Interval {
    pub fn new(start: usize, end: usize) -> Result<Self, Error> {
        if start < end {
            Ok(Self { start, end })
        } else {
            Err(Error::InvalidInterval { start, end })
        }
    }

    /// The interval `[start, start + len)`.
    pub fn with_len(start: usize, len: usize) -> Result<Self, Error> {
        Self::new(start, start + len)
    }

    pub fn start(&self) -> usize {
        self.start
    }

    /// Exclusive end.
    pub fn end(&self) -> usize {
        self.end
    }

    pub fn len(&self) -> usize {
        self.end - self.start
    }

    /// Never true (`start < end` is enforced); present for API symmetry.
    pub fn is_empty(&self) -> bool {
        self.start >= self.end
    }

    /// Number of indices the two intervals share.
    ///
    /// Touching intervals such as `[0, 10)` and `[10, 20)` share nothing.
    pub fn overlap_length(&self, other: &Interval) -> usize {
        let lo = self.start.max(other.start);
        let hi = self.end.min(other.end);
        hi.saturating_sub(lo)
    }

    pub fn overlaps(&self, other: &Interval) -> bool {
        self.overlap_length(other) > 0
    }

    pub fn as_range(&self) -> std::ops::Range<usize> {
        self.start..self.end
    }
}

impl std::fmt::Display for Interval {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "[{}, {})", self.start, self.end)
    }
}

/// An alarm is a true positive exactly when it overlaps the labeled anomaly
/// by at least one sample. Overlap fraction is deliberately ignored: a
/// detector that clips only the edge of a long anomaly still found it.
pub fn is_true_positive(detection: &Interval, anomaly: &Interval) -> bool {
    detection.overlaps(anomaly)
}

/// A loaded dataset: training prefix, test suffix, and one labeled anomaly
/// expressed in test-series coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    name: String,
    train: TimeSeries,
    test: TimeSeries,
    anomaly: Interval,
    context: String,
}

impl Dataset {
    /// Assembles a dataset, checking that the anomaly fits inside the test
    /// series. `context` is the free-text domain description forwarded to
    /// the verifier; it may be empty, in which case prompts omit it.
    pub fn new(
        name: impl Into<String>,
        train: TimeSeries,
        test: TimeSeries,
        anomaly: Interval,
        context: impl Into<String>,
    ) -> Result<Self, Error> {
        if anomaly.end() > test.len() {
            return Err(Error::AnomalyOutOfRange {
                start: anomaly.start(),
                end: anomaly.end(),
                len: test.len(),
            });
        }
        Ok(Self {
            name: name.into(),
            train,
            test,
            anomaly,
            context: context.into(),
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn train(&self) -> &TimeSeries {
        &self.train
    }

    pub fn test(&self) -> &TimeSeries {
        &self.test
    }

    /// The labeled anomaly in test-series coordinates.
    pub fn anomaly(&self) -> Interval {
        self.anomaly
    }

    pub fn context(&self) -> &str {
        &self.context
    }

    /// The same dataset with the context dropped, for the no-context
    /// ablation of the verifier prompts.
    pub fn without_context(mut self) -> Self {
        self.context.clear();
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn series_rejects_empty_and_non_finite() {
        assert!(matches!(
            TimeSeries::new("x", vec![]),
            Err(Error::EmptySeries { .. })
        ));
        let err = TimeSeries::new("x", vec![1.0, f64::NAN, 3.0]).unwrap_err();
        assert!(matches!(err, Error::NonFiniteValue { index: 1, .. }));
        let err = TimeSeries::new("x", vec![f64::INFINITY]).unwrap_err();
        assert!(matches!(err, Error::NonFiniteValue { index: 0, .. }));
    }

    #[test]
    fn interval_requires_start_before_end() {
        assert!(Interval::new(3, 3).is_err());
        assert!(Interval::new(4, 3).is_err());
        let i = Interval::new(2, 5).unwrap();
        assert_eq!((i.start(), i.end(), i.len()), (2, 5, 3));
    }

    #[test]
    fn overlap_measures_shared_indices() {
        let a = Interval::new(100, 200).unwrap();
        let b = Interval::new(150, 250).unwrap();
        assert_eq!(a.overlap_length(&b), 50);
        assert_eq!(b.overlap_length(&a), 50);

        // Touching but disjoint.
        let c = Interval::new(0, 10).unwrap();
        let d = Interval::new(10, 20).unwrap();
        assert_eq!(c.overlap_length(&d), 0);
        assert!(!c.overlaps(&d));

        // Identical intervals overlap fully.
        let e = Interval::new(5, 15).unwrap();
        assert_eq!(e.overlap_length(&e), 10);
    }

    #[test]
    fn one_sample_of_overlap_makes_a_true_positive() {
        let anomaly = Interval::new(50, 60).unwrap();
        assert!(is_true_positive(&Interval::new(59, 80).unwrap(), &anomaly));
        assert!(is_true_positive(&Interval::new(10, 51).unwrap(), &anomaly));
        assert!(!is_true_positive(&Interval::new(60, 70).unwrap(), &anomaly));
        assert!(!is_true_positive(&Interval::new(40, 50).unwrap(), &anomaly));
    }

    #[test]
    fn dataset_rejects_anomaly_past_test_end() {
        let train = TimeSeries::new("train", vec![0.0; 10]).unwrap();
        let test = TimeSeries::new("test", vec![0.0; 10]).unwrap();
        let bad = Interval::new(5, 11).unwrap();
        assert!(matches!(
            Dataset::new("d", train.clone(), test.clone(), bad, ""),
            Err(Error::AnomalyOutOfRange { .. })
        ));
        let ok = Interval::new(5, 10).unwrap();
        assert!(Dataset::new("d", train, test, ok, "").is_ok());
    }

    #[test]
    fn interval_serde_round_trips_and_validates() {
        let i = Interval::new(3, 9).unwrap();
        let json = serde_json::to_string(&i).unwrap();
        assert_eq!(json, r#"{"start":3,"end":9}"#);
        let back: Interval = serde_json::from_str(&json).unwrap();
        assert_eq!(back, i);
        assert!(serde_json::from_str::<Interval>(r#"{"start":9,"end":3}"#).is_err());
    }
}
