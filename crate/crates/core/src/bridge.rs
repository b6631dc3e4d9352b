//! External-process classifier.
//!
//! For each request the stroke's context images are exported to a scratch
//! directory and one process is spawned. Requests are written to its stdin
//! as JSON lines and one JSON line per request is expected back on stdout:
//!
//! ```text
//! > {"id":3,"kind":"point","contexts":["/tmp/x/stroke_3_32.pgm", ...]}
//! < {"id":3,"class":"curve"}
//! ```

use crate::classifier::{ClassifierError, CornerClassifier, CornerDecision, ModelKind, PointClass, PointClassifier};
use crate::raster::{export_contexts_named, RasterError};
use crate::stroke::Stroke;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Write};
use std::path::PathBuf;
use std::process::{Command, Stdio};
use std::sync::mpsc;
use std::time::{Duration, Instant};

#[derive(Debug, thiserror::Error)]
pub enum BridgeError {
    #[error("failed to start classifier process: {0}")]
    Spawn(std::io::Error),
    #[error("protocol violation: {0}")]
    Protocol(String),
    #[error("classifier did not answer within {0:?}")]
    Timeout(Duration),
    #[error("could not export contexts: {0}")]
    Export(#[from] RasterError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BridgeRequest {
    pub id: usize,
    pub kind: ModelKind,
    pub contexts: Vec<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BridgeClass {
    Line,
    Curve,
    Corner,
    Noncorner,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BridgeResponse {
    pub id: usize,
    pub class: BridgeClass,
}

pub fn parse_response(line: &str) -> Result<BridgeResponse, BridgeError> {
    serde_json::from_str(line.trim()).map_err(|e| BridgeError::Protocol(format!("bad response line {line:?}: {e}")))
}

/// Command line of the external classifier and its per-call deadline.
#[derive(Debug, Clone, PartialEq)]
pub struct BridgeClassifier {
    pub program: PathBuf,
    pub args: Vec<String>,
    pub timeout: Duration,
}

impl BridgeClassifier {
    pub fn new(program: impl Into<PathBuf>, args: Vec<String>, timeout: Duration) -> Self {
        Self {
            program: program.into(),
            args,
            timeout,
        }
    }

    /// Sends one request per index and returns the classes in index order.
    pub fn query(&self, stroke: &Stroke, kind: ModelKind, indices: &[usize]) -> Result<Vec<BridgeClass>, BridgeError> {
        if indices.is_empty() {
            return Ok(Vec::new());
        }
        let scratch = tempfile::tempdir()?;
        let paths = export_contexts_named(stroke, "ctx", indices, scratch.path())?;
        let mut lines = Vec::with_capacity(indices.len());
        for (id, ctx) in paths.chunks(4).enumerate() {
            let req = BridgeRequest {
                id,
                kind,
                contexts: ctx.to_vec(),
            };
            lines.push(serde_json::to_string(&req).expect("request serializes"));
        }
        let answers = self.exchange(lines)?;
        Ok(answers)
    }

    fn exchange(&self, lines: Vec<String>) -> Result<Vec<BridgeClass>, BridgeError> {
        let expected = lines.len();
        let mut child = Command::new(&self.program)
            .args(&self.args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::null())
            .spawn()
            .map_err(BridgeError::Spawn)?;
        let mut stdin = child.stdin.take().expect("piped stdin");
        let stdout = child.stdout.take().expect("piped stdout");
        let writer = std::thread::spawn(move || {
            for l in lines {
                if writeln!(stdin, "{l}").is_err() {
                    break;
                }
            }
        });
        let (tx, rx) = mpsc::channel();
        std::thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                let stop = line.is_err();
                if tx.send(line).is_err() || stop {
                    break;
                }
            }
        });
        let deadline = Instant::now() + self.timeout;
        let mut answers: BTreeMap<usize, BridgeClass> = BTreeMap::new();
        let outcome = loop {
            if answers.len() == expected {
                break Ok(());
            }
            let left = deadline.saturating_duration_since(Instant::now());
            match rx.recv_timeout(left) {
                Ok(Ok(line)) if line.trim().is_empty() => {}
                Ok(Ok(line)) => match parse_response(&line) {
                    Ok(r) if r.id >= expected => break Err(BridgeError::Protocol(format!("unknown id {}", r.id))),
                    Ok(r) => {
                        if answers.insert(r.id, r.class).is_some() {
                            break Err(BridgeError::Protocol(format!("duplicate id {}", r.id)));
                        }
                    }
                    Err(e) => break Err(e),
                },
                Ok(Err(e)) => break Err(BridgeError::Io(e)),
                Err(mpsc::RecvTimeoutError::Timeout) => break Err(BridgeError::Timeout(self.timeout)),
                Err(mpsc::RecvTimeoutError::Disconnected) => {
                    break Err(BridgeError::Protocol(format!(
                        "classifier exited after {} of {expected} responses",
                        answers.len()
                    )))
                }
            }
        };
        let _ = child.kill();
        let _ = child.wait();
        let _ = writer.join();
        outcome?;
        Ok(answers.into_values().collect())
    }
}

fn wrong_class(kind: ModelKind, class: BridgeClass) -> ClassifierError {
    ClassifierError::Bridge(BridgeError::Protocol(format!("class {class:?} is not valid for a {kind} request")))
}

impl PointClassifier for BridgeClassifier {
    fn classify_points(&self, stroke: &Stroke) -> Result<Vec<PointClass>, ClassifierError> {
        let idx: Vec<usize> = (0..stroke.len()).collect();
        self.query(stroke, ModelKind::Point, &idx)?
            .into_iter()
            .map(|c| match c {
                BridgeClass::Line => Ok(PointClass::LinePoint),
                BridgeClass::Curve => Ok(PointClass::CurvePoint),
                other => Err(wrong_class(ModelKind::Point, other)),
            })
            .collect()
    }
}

impl CornerClassifier for BridgeClassifier {
    fn classify_corners(&self, stroke: &Stroke, candidates: &[usize]) -> Result<Vec<CornerDecision>, ClassifierError> {
        self.query(stroke, ModelKind::Corner, candidates)?
            .into_iter()
            .map(|c| match c {
                BridgeClass::Corner => Ok(CornerDecision::Corner),
                BridgeClass::Noncorner => Ok(CornerDecision::NonCorner),
                other => Err(wrong_class(ModelKind::Corner, other)),
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn response_parsing() {
        assert_eq!(
            parse_response(r#"{"id":4,"class":"noncorner"}"#).unwrap(),
            BridgeResponse {
                id: 4,
                class: BridgeClass::Noncorner
            }
        );
        assert!(parse_response(r#"{"id":4,"class":"maybe"}"#).is_err());
        assert!(parse_response(r#"{"id":-1,"class":"line"}"#).is_err());
        assert!(parse_response("").is_err());
    }

    #[test]
    fn request_shape() {
        let r = BridgeRequest {
            id: 1,
            kind: ModelKind::Corner,
            contexts: vec!["a.pgm".into()],
        };
        assert_eq!(
            serde_json::to_string(&r).unwrap(),
            r#"{"id":1,"kind":"corner","contexts":["a.pgm"]}"#
        );
    }
}
