//! Second-stage alarm verification.
//!
//! Each detection is shown to a judge — a chat LLM or an offline stub — as
//! either an overlay image (vision mode) or a quantized text table (text
//! mode), together with a fixed question: does the flagged window have the
//! same shape as its nearest training window? A same-shape answer means the
//! alarm looks like normal behavior and is dropped as a false positive; a
//! different-shape answer keeps it.
//!
//! Judges are sampled `votes` times independently and the verdict is a
//! majority: the alarm is kept when at least `majority` votes call the
//! shapes different. Responses that never commit to an answer parse as
//! ambiguous and count toward keeping the alarm — uncertainty must not
//! silently discard a potential anomaly.

use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::detector::Detection;
use crate::error::Error;
use crate::render::{render_overlay, serialize_text_table, OverlayStyle};
use crate::series::{is_true_positive, Dataset, Interval};

/// How the window pair is presented to the judge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Overlay PNG attached to the prompt.
    Vision,
    /// Quantized values embedded in the prompt body.
    Text,
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s.to_ascii_lowercase().as_str() {
            "vision" => Ok(Mode::Vision),
            "text" => Ok(Mode::Text),
            other => Err(Error::BadVerifierConfig {
                reason: format!("unknown mode `{other}` (expected `vision` or `text`)"),
            }),
        }
    }
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Mode::Vision => write!(f, "vision"),
            Mode::Text => write!(f, "text"),
        }
    }
}

/// Verifier settings. Defaults mirror the experimental setup: five votes,
/// majority of three, temperature 1.0, verbatim prompt (no verdict suffix).
#[derive(Debug, Clone)]
pub struct VerifierConfig {
    pub mode: Mode,
    /// Number of independent completions per detection. Odd counts avoid
    /// effective ties around the majority cutoff.
    pub votes: usize,
    /// Minimum anomalous votes required to keep the alarm.
    pub majority: usize,
    /// Model identifier passed through to the endpoint.
    pub model: String,
    /// Base URL of an OpenAI-compatible chat API.
    pub endpoint: String,
    /// Sampling temperature; voting only disambiguates anything when
    /// decoding is stochastic.
    pub temperature: f64,
    /// Transport retries per vote before the detection is left undecided.
    pub max_retries: u32,
    pub request_timeout: Duration,
    /// Append one sentence asking for a final single-word Yes/No line.
    /// Off by default to keep the prompt verbatim.
    pub append_verdict_suffix: bool,
}

impl Default for VerifierConfig {
    fn default() -> Self {
        Self {
            mode: Mode::Vision,
            votes: 5,
            majority: 3,
            model: String::new(),
            endpoint: String::new(),
            temperature: 1.0,
            max_retries: 3,
            request_timeout: Duration::from_secs(120),
            append_verdict_suffix: false,
        }
    }
}

impl VerifierConfig {
    /// The default majority for a vote count: more than half, i.e. ⌈n/2⌉
    /// rounded up to a strict majority for odd counts (3 of 5, 4 of 7).
    pub fn default_majority(votes: usize) -> usize {
        votes / 2 + 1
    }

    pub fn validate(&self) -> Result<(), Error> {
        let reason = if self.votes == 0 {
            Some("votes must be at least 1".to_string())
        } else if self.majority == 0 || self.majority > self.votes {
            Some(format!(
                "majority {} must be between 1 and votes {}",
                self.majority, self.votes
            ))
        } else if !self.temperature.is_finite() || self.temperature < 0.0 {
            Some(format!("temperature {} must be finite and >= 0", self.temperature))
        } else {
            None
        };
        match reason {
            Some(reason) => Err(Error::BadVerifierConfig { reason }),
            None => Ok(()),
        }
    }
}

/// What one response committed to after parsing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShapeAssessment {
    /// The window matches the reference pattern — the alarm looks normal.
    SameShape,
    /// The window deviates from the reference pattern — anomalous.
    DifferentShape,
    /// No recognizable conclusion; treated as anomalous when voting.
    Ambiguous,
}

/// One completion and its parsed conclusion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Vote {
    pub raw_response: String,
    pub parsed: ShapeAssessment,
}

impl Vote {
    pub fn from_response(raw_response: String) -> Self {
        let parsed = parse_verdict(&raw_response);
        Self { raw_response, parsed }
    }
}

/// Final call on a detection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    /// Keep the alarm: the majority saw a different shape.
    TruePositive,
    /// Drop the alarm: the majority saw the expected shape.
    FalsePositive,
}

/// A verified detection: every raw vote plus the majority outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub detection: Detection,
    pub votes: Vec<Vote>,
    pub classification: Classification,
    /// Votes that considered the window anomalous (different shape or
    /// ambiguous).
    pub anomalous_vote_count: usize,
}

// ---------------------------------------------------------------------------
// Prompts
// ---------------------------------------------------------------------------

const QUESTION: &str = "Does the blue time series have the same shape as the green time series? \
    First answer the question focusing on the beginning of the time series, then the middle, \
    then finally the end.";

const VISION_INSTRUCTIONS: &str = "The time series data are plotted in the given images. \
    Use visual inspection to draw your conclusions. Consider the shapes of the plotted time series.";

const TEXT_INSTRUCTIONS: &str = "In the time series data given below, each step is separated \
    by a comma. In your analysis, try not to repeat large chunk of values in the time series \
    to save space.";

/// The optional closing instruction behind `append_verdict_suffix`.
pub const VERDICT_SUFFIX: &str =
    "End your response with a final line containing only the single word Yes or No.";

/// Leading paragraph shared by both modes: the shape question, plus the
/// dataset description when one is available. An empty context drops the
/// description sentence entirely (the no-context ablation).
fn question_paragraph(context: &str) -> String {
    if context.is_empty() {
        QUESTION.to_string()
    } else {
        format!(
            "{QUESTION} If the answer is Yes, then the blue time series should also match the \
             following description: {context}"
        )
    }
}

/// Prompt for vision mode; the overlay PNG travels alongside as an image
/// attachment.
pub fn build_vision_prompt(context: &str, append_verdict_suffix: bool) -> String {
    let mut prompt = format!("{}\n\n{}", question_paragraph(context), VISION_INSTRUCTIONS);
    if append_verdict_suffix {
        prompt.push(' ');
        prompt.push_str(VERDICT_SUFFIX);
    }
    prompt
}

/// Prompt for text mode with the serialized table appended after the body.
pub fn build_text_prompt(context: &str, table: &str, append_verdict_suffix: bool) -> String {
    let mut prompt = format!("{}\n\n{}", question_paragraph(context), TEXT_INSTRUCTIONS);
    if append_verdict_suffix {
        prompt.push(' ');
        prompt.push_str(VERDICT_SUFFIX);
    }
    prompt.push_str("\n\n");
    prompt.push_str(table.trim_end());
    prompt
}

// ---------------------------------------------------------------------------
// Response parsing and voting
// ---------------------------------------------------------------------------

const AFFIRMATIVE_MARKERS: [&str; 4] = [
    "**yes**",
    "answer is yes",
    "has the same shape",
    "matches the description",
];

const NEGATIVE_MARKERS: [&str; 4] = [
    "**no**",
    "answer is no",
    "does not have the same shape",
    "does not match",
];

/// Extracts the judge's conclusion from a free-form response.
///
/// Only the final third of the text is scanned — models often restate the
/// question or weigh both possibilities early on, but the conclusion lands
/// at the end. Within that tail the latest marker wins, so a response that
/// hedges and then commits is read by its commitment. No marker at all (or
/// an exact positional tie) is [`ShapeAssessment::Ambiguous`].
pub fn parse_verdict(response: &str) -> ShapeAssessment {
    let lower = response.to_lowercase();
    let cut = lower.len() - lower.len() / 3;

    // Latest end position of any marker in the class; a marker counts when
    // its match reaches into the final third of the response, so a
    // conclusion straddling the cut is not lost.
    let latest = |markers: &[&str]| -> Option<usize> {
        markers
            .iter()
            .filter_map(|m| lower.rfind(m).map(|at| at + m.len()))
            .filter(|&end| end > cut)
            .max()
    };
    match (latest(&AFFIRMATIVE_MARKERS), latest(&NEGATIVE_MARKERS)) {
        (None, None) => ShapeAssessment::Ambiguous,
        (Some(_), None) => ShapeAssessment::SameShape,
        (None, Some(_)) => ShapeAssessment::DifferentShape,
        (Some(a), Some(n)) => match a.cmp(&n) {
            std::cmp::Ordering::Greater => ShapeAssessment::SameShape,
            std::cmp::Ordering::Less => ShapeAssessment::DifferentShape,
            std::cmp::Ordering::Equal => ShapeAssessment::Ambiguous,
        },
    }
}

fn anomalous_votes(votes: &[Vote]) -> usize {
    votes
        .iter()
        .filter(|v| {
            matches!(
                v.parsed,
                ShapeAssessment::DifferentShape | ShapeAssessment::Ambiguous
            )
        })
        .count()
}

/// Majority rule: the alarm is a true positive when at least
/// `config.majority` votes considered the window anomalous. Ambiguous votes
/// count as anomalous so uncertainty never drops an alarm.
pub fn majority_vote(votes: &[Vote], config: &VerifierConfig) -> Result<Classification, Error> {
    if votes.is_empty() {
        return Err(Error::NoVotes);
    }
    if votes.len() != config.votes {
        return Err(Error::BadVerifierConfig {
            reason: format!("expected {} votes, got {}", config.votes, votes.len()),
        });
    }
    if anomalous_votes(votes) >= config.majority {
        Ok(Classification::TruePositive)
    } else {
        Ok(Classification::FalsePositive)
    }
}

// ---------------------------------------------------------------------------
// Chat client interface and stubs
// ---------------------------------------------------------------------------

/// One completion request. Carries the prompt and rendering payload plus
/// the identifiers a client may need: the vote index distinguishes repeated
/// samples (for caching), and the detection/anomaly intervals let offline
/// stubs answer from ground truth.
#[derive(Debug, Clone)]
pub struct VoteRequest<'a> {
    pub model: &'a str,
    pub prompt: &'a str,
    /// PNG bytes in vision mode; `None` in text mode.
    pub image_png: Option<&'a [u8]>,
    pub temperature: f64,
    /// Which of the `votes` samples this is (0-based).
    pub vote_index: usize,
    /// The flagged interval, in test-series coordinates.
    pub detection: Interval,
    /// The labeled anomaly, in test-series coordinates.
    pub anomaly: Interval,
}

/// Anything that can answer one completion request: a live HTTP client, a
/// caching wrapper, or an offline stub.
pub trait ChatClient: Send + Sync {
    fn complete(&self, request: &VoteRequest<'_>) -> Result<String, Error>;
}

/// Stub response asserting the shapes differ (keep the alarm). Written as
/// prose so it exercises the same parsing path as live responses.
pub const DIFFERENT_SHAPE_RESPONSE: &str = "The blue time series does not have the same shape \
    as the green time series. Therefore, the answer is No.";

/// Stub response asserting the shapes match (drop the alarm).
pub const SAME_SHAPE_RESPONSE: &str = "The blue time series has the same shape as the green \
    time series. Therefore, the answer is Yes.";

/// Answers from ground truth: different-shape iff the detection overlaps
/// the labeled anomaly. Verifying with this stub reproduces the labels
/// exactly — the perfect-judge upper bound.
#[derive(Debug, Clone, Copy, Default)]
pub struct OracleStub;

impl ChatClient for OracleStub {
    fn complete(&self, request: &VoteRequest<'_>) -> Result<String, Error> {
        if is_true_positive(&request.detection, &request.anomaly) {
            Ok(DIFFERENT_SHAPE_RESPONSE.to_string())
        } else {
            Ok(SAME_SHAPE_RESPONSE.to_string())
        }
    }
}

/// Calls every window anomalous: the pipeline output equals the baseline
/// detector's output (nothing filtered).
#[derive(Debug, Clone, Copy, Default)]
pub struct AcceptAllStub;

impl ChatClient for AcceptAllStub {
    fn complete(&self, _request: &VoteRequest<'_>) -> Result<String, Error> {
        Ok(DIFFERENT_SHAPE_RESPONSE.to_string())
    }
}

/// Calls every window normal: the pipeline discards every alarm.
#[derive(Debug, Clone, Copy, Default)]
pub struct RejectAllStub;

impl ChatClient for RejectAllStub {
    fn complete(&self, _request: &VoteRequest<'_>) -> Result<String, Error> {
        Ok(SAME_SHAPE_RESPONSE.to_string())
    }
}

// ---------------------------------------------------------------------------
// Verification driver
// ---------------------------------------------------------------------------

/// Verifies one detection: renders the window pair per `config.mode`, asks
/// the client `config.votes` times, and aggregates by majority.
///
/// A transport error aborts the verdict — the caller should report the
/// detection as undecided rather than guessing.
pub fn verify_detection(
    detection: &Detection,
    dataset: &Dataset,
    client: &dyn ChatClient,
    config: &VerifierConfig,
) -> Result<Verdict, Error> {
    config.validate()?;

    let interval = detection.interval;
    let test = dataset.test().values();
    if interval.end() > test.len() {
        return Err(Error::DetectionOutOfRange {
            start: interval.start(),
            end: interval.end(),
            len: test.len(),
        });
    }
    let train = dataset.train().values();
    let pred_end = detection.nn_start + interval.len();
    if pred_end > train.len() {
        return Err(Error::PredictionOutOfRange {
            start: detection.nn_start,
            end: pred_end,
            len: train.len(),
        });
    }

    let actual = &test[interval.as_range()];
    let prediction = &train[detection.nn_start..pred_end];

    let (prompt, image_png) = match config.mode {
        Mode::Vision => {
            let style = OverlayStyle {
                x_start: interval.start(),
                ..OverlayStyle::default()
            };
            let png = render_overlay(actual, prediction, &style)?;
            (
                build_vision_prompt(dataset.context(), config.append_verdict_suffix),
                Some(png),
            )
        }
        Mode::Text => {
            let table = serialize_text_table(actual, prediction, interval.start())?;
            (
                build_text_prompt(dataset.context(), &table, config.append_verdict_suffix),
                None,
            )
        }
    };

    let mut votes = Vec::with_capacity(config.votes);
    for vote_index in 0..config.votes {
        let request = VoteRequest {
            model: &config.model,
            prompt: &prompt,
            image_png: image_png.as_deref(),
            temperature: config.temperature,
            vote_index,
            detection: interval,
            anomaly: dataset.anomaly(),
        };
        let response = client.complete(&request)?;
        votes.push(Vote::from_response(response));
    }

    let classification = majority_vote(&votes, config)?;
    let anomalous_vote_count = anomalous_votes(&votes);
    Ok(Verdict {
        detection: *detection,
        votes,
        classification,
        anomalous_vote_count,
    })
}

/// Verifies a batch of detections, optionally in parallel, returning one
/// result per detection in input order. Individual failures (for example a
/// dead endpoint) do not abort the rest of the batch.
pub fn verify_detections(
    detections: &[Detection],
    dataset: &Dataset,
    client: &dyn ChatClient,
    config: &VerifierConfig,
    concurrency: usize,
) -> Vec<Result<Verdict, Error>> {
    if concurrency > 1 && detections.len() > 1 {
        if let Ok(pool) = rayon::ThreadPoolBuilder::new()
            .num_threads(concurrency)
            .build()
        {
            use rayon::prelude::*;
            return pool.install(|| {
                detections
                    .par_iter()
                    .map(|d| verify_detection(d, dataset, client, config))
                    .collect()
            });
        }
    }
    detections
        .iter()
        .map(|d| verify_detection(d, dataset, client, config))
        .collect()
}

/// Keeps exactly the detections whose verdict is
/// [`Classification::TruePositive`], preserving order. The output is always
/// a subset of the input: verification can only remove alarms, never add
/// recall the detector did not have.
pub fn filter_detections(
    detections: &[Detection],
    verdicts: &[Verdict],
) -> Result<Vec<Detection>, Error> {
    if detections.len() != verdicts.len() {
        return Err(Error::BadVerifierConfig {
            reason: format!(
                "{} detections but {} verdicts",
                detections.len(),
                verdicts.len()
            ),
        });
    }
    let mut kept = Vec::new();
    for (d, v) in detections.iter().zip(verdicts) {
        if v.detection != *d {
            return Err(Error::BadVerifierConfig {
                reason: format!(
                    "verdict for {} paired with detection {}",
                    v.detection.interval, d.interval
                ),
            });
        }
        if v.classification == Classification::TruePositive {
            kept.push(*d);
        }
    }
    Ok(kept)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::TimeSeries;

    // -- prompts ------------------------------------------------------------

    #[test]
    fn vision_prompt_inlines_the_context() {
        let prompt = build_vision_prompt("This data is a heart rhythm.", false);
        assert_eq!(
            prompt,
            "Does the blue time series have the same shape as the green time series? First \
             answer the question focusing on the beginning of the time series, then the middle, \
             then finally the end. If the answer is Yes, then the blue time series should also \
             match the following description: This data is a heart rhythm.\n\nThe time series \
             data are plotted in the given images. Use visual inspection to draw your \
             conclusions. Consider the shapes of the plotted time series."
        );
    }

    #[test]
    fn empty_context_omits_the_description_sentence() {
        let prompt = build_vision_prompt("", false);
        assert!(!prompt.contains("description"));
        assert!(prompt.starts_with("Does the blue time series have the same shape"));
        assert!(prompt.contains("then finally the end.\n\nThe time series data are plotted"));

        let text = build_text_prompt("", "0,0,0\n", false);
        assert!(!text.contains("description"));
    }

    #[test]
    fn verdict_suffix_is_appended_only_on_request() {
        let plain = build_vision_prompt("ctx.", false);
        assert!(!plain.contains(VERDICT_SUFFIX));
        let suffixed = build_vision_prompt("ctx.", true);
        assert!(suffixed.ends_with(VERDICT_SUFFIX));
        assert!(suffixed.starts_with(&plain));
    }

    #[test]
    fn text_prompt_ends_with_the_final_table_row() {
        let table = "0,0,0\n1,0.50,0.25\n2,1.0,1.0\n";
        let prompt = build_text_prompt("ctx.", table, false);
        assert!(prompt.contains("each step is separated by a comma"));
        assert!(prompt.contains("to save space.\n\n0,0,0\n")); // table after a blank line
        assert!(prompt.ends_with("2,1.0,1.0"));
    }

    // -- parsing ------------------------------------------------------------

    #[test]
    fn parses_bold_and_phrase_conclusions() {
        assert_eq!(
            parse_verdict("Lots of analysis here to pad things out. Conclusion: **Yes**"),
            ShapeAssessment::SameShape
        );
        assert_eq!(
            parse_verdict("Lots of analysis here to pad things out. Conclusion: **No**"),
            ShapeAssessment::DifferentShape
        );
        assert_eq!(
            parse_verdict(
                "step one looks close, step two not so much; overall the answer is no"
            ),
            ShapeAssessment::DifferentShape
        );
    }

    #[test]
    fn later_conclusions_override_earlier_ones() {
        // All markers land in the final third of this short response.
        let response =
            "It matches the description at first glance. However, the answer is No.";
        assert_eq!(parse_verdict(response), ShapeAssessment::DifferentShape);

        let response = "The shapes do not match in the beginning, but overall the blue \
                        time series has the same shape as the green one.";
        assert_eq!(parse_verdict(response), ShapeAssessment::SameShape);
    }

    #[test]
    fn early_text_is_ignored_and_no_marker_is_ambiguous() {
        // The only marker sits in the first third, outside the scanned tail.
        let mut early = String::from("The answer is No.");
        early.push_str(&" filler text with no conclusions.".repeat(20));
        assert_eq!(parse_verdict(&early), ShapeAssessment::Ambiguous);

        assert_eq!(parse_verdict(""), ShapeAssessment::Ambiguous);
        assert_eq!(
            parse_verdict("I cannot tell from the plot."),
            ShapeAssessment::Ambiguous
        );
    }

    #[test]
    fn negated_phrases_do_not_trigger_affirmative_markers() {
        // "does not have the same shape" must not match "has the same shape".
        assert_eq!(
            parse_verdict("The blue series does not have the same shape as the green."),
            ShapeAssessment::DifferentShape
        );
        // "does not match" must not match "matches the description".
        assert_eq!(
            parse_verdict("In conclusion it seems that the blue time series does not match the description."),
            ShapeAssessment::DifferentShape
        );
    }

    #[test]
    fn parses_abbreviated_paper_style_conclusions() {
        // Conclusion shapes that appear in real model transcripts.
        let fp_style = "Based on visual inspection, it appears the shapes agree \
                        throughout. Therefore, the answer is:\n**Yes**, the blue time \
                        series matches the description of the recording.";
        assert_eq!(parse_verdict(fp_style), ShapeAssessment::SameShape);

        let tp_style = "Based on the visual inspection of the time series data, it is \
                        clear that the blue time series does not have the same shape as \
                        the green time series. Therefore, the answer is No.\n**Answer**: No";
        assert_eq!(parse_verdict(tp_style), ShapeAssessment::DifferentShape);
    }

    #[test]
    fn stub_responses_parse_to_their_intent() {
        assert_eq!(
            parse_verdict(DIFFERENT_SHAPE_RESPONSE),
            ShapeAssessment::DifferentShape
        );
        assert_eq!(parse_verdict(SAME_SHAPE_RESPONSE), ShapeAssessment::SameShape);
    }

    // -- voting -------------------------------------------------------------

    fn vote(parsed: ShapeAssessment) -> Vote {
        Vote {
            raw_response: String::new(),
            parsed,
        }
    }

    #[test]
    fn majority_follows_the_three_of_five_rule() {
        use ShapeAssessment::*;
        let config = VerifierConfig::default();

        let votes: Vec<Vote> = [DifferentShape, DifferentShape, SameShape, DifferentShape, SameShape]
            .map(vote)
            .to_vec();
        assert_eq!(
            majority_vote(&votes, &config).unwrap(),
            Classification::TruePositive
        );

        let votes: Vec<Vote> = [SameShape; 5].map(vote).to_vec();
        assert_eq!(
            majority_vote(&votes, &config).unwrap(),
            Classification::FalsePositive
        );

        // Ambiguity counts toward keeping the alarm.
        let votes: Vec<Vote> = [Ambiguous; 5].map(vote).to_vec();
        assert_eq!(
            majority_vote(&votes, &config).unwrap(),
            Classification::TruePositive
        );

        // Two anomalous of five is below the cutoff.
        let votes: Vec<Vote> = [DifferentShape, Ambiguous, SameShape, SameShape, SameShape]
            .map(vote)
            .to_vec();
        assert_eq!(
            majority_vote(&votes, &config).unwrap(),
            Classification::FalsePositive
        );
    }

    #[test]
    fn majority_rejects_wrong_vote_counts() {
        let config = VerifierConfig::default();
        assert!(matches!(
            majority_vote(&[], &config),
            Err(Error::NoVotes)
        ));
        let three: Vec<Vote> = (0..3).map(|_| vote(ShapeAssessment::SameShape)).collect();
        assert!(majority_vote(&three, &config).is_err());
    }

    #[test]
    fn default_majority_is_a_strict_majority() {
        assert_eq!(VerifierConfig::default_majority(5), 3);
        assert_eq!(VerifierConfig::default_majority(7), 4);
        assert_eq!(VerifierConfig::default_majority(1), 1);
        assert_eq!(VerifierConfig::default_majority(3), 2);
    }

    // -- end-to-end verification ---------------------------------------------

    fn toy_dataset() -> Dataset {
        // Train: gentle wave. Test: same wave with a level shift in [10, 15).
        let wave = |i: usize| (i as f64 * 0.4).sin();
        let train = TimeSeries::new("train", (0..40).map(wave).collect()).unwrap();
        let mut test_values: Vec<f64> = (0..30).map(wave).collect();
        for v in test_values.iter_mut().skip(10).take(5) {
            *v += 3.0;
        }
        let test = TimeSeries::new("test", test_values).unwrap();
        Dataset::new(
            "toy",
            train,
            test,
            Interval::new(10, 15).unwrap(),
            "A toy wave.",
        )
        .unwrap()
    }

    fn detection(start: usize, len: usize, nn_start: usize) -> Detection {
        Detection {
            interval: Interval::with_len(start, len).unwrap(),
            score: 1.0,
            nn_start,
        }
    }

    #[test]
    fn oracle_stub_reproduces_ground_truth() {
        let dataset = toy_dataset();
        let config = VerifierConfig::default();

        let on_anomaly = detection(12, 5, 0);
        let verdict = verify_detection(&on_anomaly, &dataset, &OracleStub, &config).unwrap();
        assert_eq!(verdict.classification, Classification::TruePositive);
        assert_eq!(verdict.anomalous_vote_count, 5);
        assert_eq!(verdict.votes.len(), 5);
        assert!(verdict.votes.iter().all(|v| !v.raw_response.is_empty()));

        let off_anomaly = detection(20, 5, 0);
        let verdict = verify_detection(&off_anomaly, &dataset, &OracleStub, &config).unwrap();
        assert_eq!(verdict.classification, Classification::FalsePositive);
        assert_eq!(verdict.anomalous_vote_count, 0);
    }

    #[test]
    fn text_mode_verifies_too() {
        let dataset = toy_dataset();
        let config = VerifierConfig {
            mode: Mode::Text,
            ..VerifierConfig::default()
        };
        let verdict =
            verify_detection(&detection(12, 5, 3), &dataset, &OracleStub, &config).unwrap();
        assert_eq!(verdict.classification, Classification::TruePositive);
    }

    #[test]
    fn out_of_range_windows_are_rejected() {
        let dataset = toy_dataset();
        let config = VerifierConfig::default();

        // Detection runs past the test series.
        let bad = detection(28, 5, 0);
        assert!(matches!(
            verify_detection(&bad, &dataset, &OracleStub, &config),
            Err(Error::DetectionOutOfRange { .. })
        ));

        // Prediction window runs past the training series.
        let bad = detection(10, 5, 38);
        assert!(matches!(
            verify_detection(&bad, &dataset, &OracleStub, &config),
            Err(Error::PredictionOutOfRange { .. })
        ));
    }

    #[test]
    fn batch_verification_preserves_order() {
        let dataset = toy_dataset();
        let config = VerifierConfig::default();
        let detections = vec![
            detection(0, 5, 0),
            detection(12, 5, 0),
            detection(20, 5, 0),
        ];
        for concurrency in [1, 4] {
            let verdicts =
                verify_detections(&detections, &dataset, &OracleStub, &config, concurrency);
            let classes: Vec<Classification> = verdicts
                .into_iter()
                .map(|v| v.unwrap().classification)
                .collect();
            assert_eq!(
                classes,
                vec![
                    Classification::FalsePositive,
                    Classification::TruePositive,
                    Classification::FalsePositive
                ]
            );
        }
    }

    #[test]
    fn filter_keeps_exactly_the_true_positives_in_order() {
        let dataset = toy_dataset();
        let config = VerifierConfig::default();
        let detections = vec![
            detection(0, 5, 0),
            detection(12, 5, 0),
            detection(13, 5, 1),
            detection(20, 5, 0),
        ];
        let verdicts: Vec<Verdict> =
            verify_detections(&detections, &dataset, &OracleStub, &config, 1)
                .into_iter()
                .map(Result::unwrap)
                .collect();

        let kept = filter_detections(&detections, &verdicts).unwrap();
        assert_eq!(kept.len(), 2);
        assert_eq!(kept[0].interval, Interval::new(12, 17).unwrap());
        assert_eq!(kept[1].interval, Interval::new(13, 18).unwrap());

        // Subset property: everything kept was in the input.
        assert!(kept.iter().all(|k| detections.contains(k)));

        // Mismatched pairing is rejected.
        assert!(filter_detections(&detections[..3], &verdicts).is_err());
        let mut swapped = verdicts.clone();
        swapped.swap(0, 1);
        assert!(filter_detections(&detections, &swapped).is_err());
    }

    #[test]
    fn accept_and_reject_stubs_are_total() {
        let dataset = toy_dataset();
        let config = VerifierConfig::default();
        let ds = [detection(0, 5, 0), detection(12, 5, 0)];

        for d in &ds {
            let v = verify_detection(d, &dataset, &AcceptAllStub, &config).unwrap();
            assert_eq!(v.classification, Classification::TruePositive);
            let v = verify_detection(d, &dataset, &RejectAllStub, &config).unwrap();
            assert_eq!(v.classification, Classification::FalsePositive);
        }
    }

    #[test]
    fn config_validation_catches_nonsense() {
        let mut c = VerifierConfig::default();
        assert!(c.validate().is_ok());
        c.votes = 0;
        assert!(c.validate().is_err());
        c.votes = 5;
        c.majority = 6;
        assert!(c.validate().is_err());
        c.majority = 3;
        c.temperature = -1.0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn mode_parses_from_strings() {
        assert_eq!("vision".parse::<Mode>().unwrap(), Mode::Vision);
        assert_eq!("TEXT".parse::<Mode>().unwrap(), Mode::Text);
        assert!("image".parse::<Mode>().is_err());
        assert_eq!(Mode::Vision.to_string(), "vision");
    }
}
