//! Command line and local JSON service for stroke corner and tangent
//! detection.

pub mod commands;
pub mod service;
pub mod svg;

use std::fmt;
use strokeseg::pipeline::{DetectError, DetectionResult, Detector};
use strokeseg::stroke::{resample, StrokeRecord, MIN_POINTS};
use strokeseg::Stroke;

/// A command failure and the process exit status it maps to.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Failure {
    /// Exit 1.
    Io(String),
    /// Exit 2.
    Parse(String),
    /// Exit 3: detection, training or classifier failure.
    Detect(String),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Io(_) => 1,
            Failure::Parse(_) => 2,
            Failure::Detect(_) => 3,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Io(m) => write!(f, "io error: {m}"),
            Failure::Parse(m) => write!(f, "parse error: {m}"),
            Failure::Detect(m) => write!(f, "detection failed: {m}"),
        }
    }
}

impl std::error::Error for Failure {}

/// The exact bytes both the CLI and the service emit for a detection.
pub fn detection_json(result: &DetectionResult) -> String {
    serde_json::to_string(result).expect("detection results serialize")
}

/// Resamples a stroke record and runs detection on it, returning the
/// resampled stroke alongside the result.
pub fn detect_record(detector: &Detector, record: StrokeRecord) -> Result<(Stroke, DetectionResult), DetectError> {
    let raw = record.into_raw()?;
    if raw.points.len() < MIN_POINTS {
        return Err(DetectError::TooFewPoints(raw.points.len()));
    }
    let stk = resample(&raw, detector.config().n)?;
    let result = detector.detect_resampled(&stk)?;
    Ok((stk, result))
}
