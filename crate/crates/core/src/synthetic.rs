//! Seeded synthetic datasets for offline runs and tests.
//!
//! Each dataset is a smooth two-tone waveform with mild noise. The test
//! series carries one labeled anomaly — a raised-cosine pulse injected into
//! the waveform — and, optionally, a slightly weaker *decoy* pulse that is
//! not labeled. The decoy scores just below the labeled anomaly in the
//! detector, so calibrated runs flag it too: every decoy detection is a
//! guaranteed false positive for the verifier to chew on.
//!
//! Pulse starts are aligned to the detector's default test stride for the
//! pulse length, so some strided window always contains each pulse in full;
//! that makes the relative scores of anomaly and decoy windows predictable
//! (the decoy's amplitude ratio, 0.97, comfortably above the calibration
//! factor of 0.9).
//!
//! Everything is derived from a [`ChaCha8Rng`] stream, so a spec generates
//! byte-identical datasets on every platform.

use std::fs;
use std::path::{Path, PathBuf};

use rand::Rng as _;
use rand::SeedableRng as _;
use rand_chacha::ChaCha8Rng;

use crate::dataset::DatasetManifest;
use crate::detector::{default_test_stride, derive_window_length};
use crate::error::Error;
use crate::series::{Dataset, Interval, TimeSeries};

/// Amplitude of the labeled anomaly pulse, relative to a waveform of
/// amplitude ~1.35.
const PULSE_AMPLITUDE: f64 = 3.0;
/// Decoy amplitude as a fraction of the labeled pulse. Must sit above the
/// 0.9 calibration factor with margin for noise, and below 1.0 so the
/// labeled anomaly still sets the threshold.
const DECOY_RATIO: f64 = 0.97;

/// Parameters for one synthetic dataset.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SyntheticSpec {
    /// Dataset name (also used in generated filenames).
    pub name: String,
    /// RNG seed; different seeds vary frequencies, phases, pulse length and
    /// noise.
    pub seed: u64,
    pub train_len: usize,
    pub test_len: usize,
    /// Inject the unlabeled decoy pulse (guaranteed false alarms).
    pub with_decoy: bool,
}

impl SyntheticSpec {
    pub fn new(name: impl Into<String>, seed: u64) -> Self {
        Self {
            name: name.into(),
            seed,
            train_len: 1500,
            test_len: 2500,
            with_decoy: true,
        }
    }
}

/// Generates the dataset described by `spec`.
pub fn generate(spec: &SyntheticSpec) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    // Waveform: two incommensurate tones keep the pattern from repeating
    // exactly, so normal windows have small but nonzero neighbor distances.
    let period1: f64 = rng.random_range(40.0..80.0);
    let period2 = period1 * std::f64::consts::E;
    let phase1: f64 = rng.random_range(0.0..std::f64::consts::TAU);
    let phase2: f64 = rng.random_range(0.0..std::f64::consts::TAU);
    let pulse_len: usize = rng.random_range(36..=90);
    let pulse = Pulse {
        len: pulse_len,
        amplitude: PULSE_AMPLITUDE,
        period: rng.random_range(5.0..9.0),
        phase: rng.random_range(0.0..std::f64::consts::TAU),
    };

    let wave = |i: usize| {
        let t = i as f64;
        (std::f64::consts::TAU * t / period1 + phase1).sin()
            + 0.35 * (std::f64::consts::TAU * t / period2 + phase2).sin()
    };

    let mut train: Vec<f64> = (0..spec.train_len).map(&wave).collect();
    for v in train.iter_mut() {
        *v += rng.random_range(-0.02..0.02);
    }
    // Test continues the waveform past the training span.
    let mut test: Vec<f64> = (0..spec.test_len).map(|i| wave(i + spec.train_len)).collect();
    for v in test.iter_mut() {
        *v += rng.random_range(-0.02..0.02);
    }

    // Align pulse starts to the stride the detector will use for this pulse
    // length, so a strided window covers each pulse completely.
    let window_len = derive_window_length(pulse_len, 30, 300);
    let stride = default_test_stride(window_len);
    let align = |frac: f64| (spec.test_len as f64 * frac) as usize / stride * stride;

    let anomaly_start = align(0.4);
    add_pulse(&mut test, anomaly_start, &pulse);
    if spec.with_decoy {
        let decoy = Pulse {
            amplitude: PULSE_AMPLITUDE * DECOY_RATIO,
            ..pulse
        };
        add_pulse(&mut test, align(0.7), &decoy);
    }

    let anomaly = Interval::with_len(anomaly_start, pulse_len)
        .expect("pulse placement stays inside the test series");
    let context = format!(
        "This data is a synthetic waveform mixing two sine tones (periods near {:.0} and {:.0} \
         samples) with mild noise. The pattern is periodic and smooth, and repeats consistently \
         over time.",
        period1, period2
    );
    let train = TimeSeries::new(format!("{}/train", spec.name), train)
        .expect("generated samples are finite");
    let test = TimeSeries::new(format!("{}/test", spec.name), test)
        .expect("generated samples are finite");
    Dataset::new(&spec.name, train, test, anomaly, context)
        .expect("generated anomaly lies inside the test series")
}

/// A high-frequency burst under a raised-cosine envelope.
///
/// The fast oscillation (period 5–9 samples) has no counterpart in the slow
/// base waveform, so no training window can cancel it: a test window's
/// neighbor distance tracks the pulse energy it contains. That makes window
/// scores monotone in pulse overlap — the top-scoring window is one that
/// contains the pulse completely, and a decoy at 0.97 amplitude lands at
/// 0.97 of the calibration peak, above the 0.9 threshold factor.
#[derive(Debug, Clone, Copy)]
struct Pulse {
    len: usize,
    amplitude: f64,
    period: f64,
    phase: f64,
}

/// Adds `pulse` over `[start, start + pulse.len)`.
fn add_pulse(values: &mut [f64], start: usize, pulse: &Pulse) {
    assert!(
        start + pulse.len <= values.len(),
        "pulse [{start}, {}) exceeds series length {}",
        start + pulse.len,
        values.len()
    );
    for i in 0..pulse.len {
        let envelope = (std::f64::consts::PI * i as f64 / pulse.len as f64).sin().powi(2);
        let burst = (std::f64::consts::TAU * i as f64 / pulse.period + pulse.phase).sin();
        values[start + i] += pulse.amplitude * envelope * burst;
    }
}

/// Writes a dataset as an archive-convention data file plus a sidecar JSON
/// manifest carrying the context, returning the data file path.
///
/// The raw file is the training series followed by the test series, one
/// sample per line; bounds in the filename and manifest are expressed in
/// raw-file coordinates with an inclusive anomaly end, inverting the
/// loader's split exactly.
pub fn write_archive_files(dataset: &Dataset, dir: &Path, id: usize) -> Result<PathBuf, Error> {
    let train_end = dataset.train().len();
    let anomaly_start = dataset.anomaly().start() + train_end;
    let anomaly_end = dataset.anomaly().end() - 1 + train_end;
    let stem = format!(
        "{id:03}_UCR_Anomaly_{}_{train_end}_{anomaly_start}_{anomaly_end}",
        dataset.name()
    );

    let data_path = dir.join(format!("{stem}.txt"));
    let mut body = String::new();
    for v in dataset.train().values().iter().chain(dataset.test().values()) {
        // Default float formatting is shortest-round-trip, so loading the
        // file reproduces the values bit for bit.
        body.push_str(&format!("{v}\n"));
    }
    fs::write(&data_path, body).map_err(|source| Error::Io {
        path: data_path.clone(),
        source,
    })?;

    let manifest = DatasetManifest {
        data_file: format!("{stem}.txt"),
        train_end,
        anomaly_start,
        anomaly_end,
        context: dataset.context().to_string(),
    };
    let manifest_path = dir.join(format!("{stem}.json"));
    let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    fs::write(&manifest_path, json).map_err(|source| Error::Io {
        path: manifest_path.clone(),
        source,
    })?;
    Ok(data_path)
}
