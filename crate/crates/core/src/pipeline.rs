//! End-to-end detection: resample, candidate corners, corner and point
//! classification, false-corner removal, per-chain merging.

use crate::bridge::BridgeClassifier;
use crate::classifier::{
    classify_candidates, BaselineModel, ClassifierError, ConstantClassifier, CornerClassifier, CornerDecision, LabelOracle,
    ModelKind, PointClass, PointClassifier,
};
use crate::merge::{merge_chain, remove_false_corners, FeatureKind, MergeParams, Primitive};
use crate::stroke::{
    candidate_corners_with, resample, straw, PointLabel, RawStroke, Stroke, StrokeError, WalkParams, DEFAULT_POINTS,
    DEFAULT_STRAW_WINDOW, MIN_POINTS,
};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

#[derive(Debug, thiserror::Error)]
pub enum DetectError {
    #[error("stroke has {0} raw points; at least {MIN_POINTS} are required")]
    TooFewPoints(usize),
    #[error(transparent)]
    Stroke(#[from] StrokeError),
    #[error(transparent)]
    Classifier(#[from] ClassifierError),
    #[error("invalid detector config: {0}")]
    Config(String),
}

/// Where a classifier comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum ClassifierSpec {
    /// A baseline model file.
    Model { path: PathBuf },
    /// An external process speaking the bridge protocol.
    Bridge {
        program: PathBuf,
        #[serde(default)]
        args: Vec<String>,
        #[serde(default = "default_bridge_timeout_ms")]
        timeout_ms: u64,
    },
    /// The stroke's own labels.
    Oracle,
    /// Every point is a line point and no candidate is a corner.
    Null,
}

fn default_bridge_timeout_ms() -> u64 {
    30_000
}

impl ClassifierSpec {
    fn bridge(&self) -> Option<BridgeClassifier> {
        match self {
            ClassifierSpec::Bridge { program, args, timeout_ms } => Some(BridgeClassifier::new(
                program.clone(),
                args.clone(),
                Duration::from_millis(*timeout_ms),
            )),
            _ => None,
        }
    }

    fn load_model(path: &Path, kind: ModelKind) -> Result<BaselineModel, ClassifierError> {
        let m = BaselineModel::load(path)?;
        if m.kind != kind {
            return Err(ClassifierError::KindMismatch {
                expected: kind,
                found: m.kind,
            });
        }
        Ok(m)
    }

    pub fn point_classifier(&self) -> Result<Arc<dyn PointClassifier>, ClassifierError> {
        Ok(match self {
            ClassifierSpec::Model { path } => Arc::new(Self::load_model(path, ModelKind::Point)?),
            ClassifierSpec::Bridge { .. } => Arc::new(self.bridge().unwrap()),
            ClassifierSpec::Oracle => Arc::new(LabelOracle),
            ClassifierSpec::Null => Arc::new(NULL_CLASSIFIER),
        })
    }

    pub fn corner_classifier(&self) -> Result<Arc<dyn CornerClassifier>, ClassifierError> {
        Ok(match self {
            ClassifierSpec::Model { path } => Arc::new(Self::load_model(path, ModelKind::Corner)?),
            ClassifierSpec::Bridge { .. } => Arc::new(self.bridge().unwrap()),
            ClassifierSpec::Oracle => Arc::new(LabelOracle),
            ClassifierSpec::Null => Arc::new(NULL_CLASSIFIER),
        })
    }
}

pub const NULL_CLASSIFIER: ConstantClassifier = ConstantClassifier {
    point: PointClass::LinePoint,
    corner: CornerDecision::NonCorner,
};

/// Detection constants. Serializes to and from the JSON config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DetectorConfig {
    pub n: usize,
    pub straw_window: usize,
    pub walk: WalkParams,
    pub merge: MergeParams,
    pub point_classifier: Option<ClassifierSpec>,
    pub corner_classifier: Option<ClassifierSpec>,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self {
            n: DEFAULT_POINTS,
            straw_window: DEFAULT_STRAW_WINDOW,
            walk: WalkParams::default(),
            merge: MergeParams::default(),
            point_classifier: None,
            corner_classifier: None,
        }
    }
}

impl DetectorConfig {
    pub fn validate(&self) -> Result<(), DetectError> {
        let bad = |m: &str| Err(DetectError::Config(m.to_string()));
        if self.n < MIN_POINTS {
            return bad("n must be at least 8");
        }
        if self.straw_window == 0 || 2 * self.straw_window >= self.n {
            return bad("straw window must be positive and below n/2");
        }
        let w = &self.walk;
        if !(w.entry > 0.0 && w.exit_slope > 0.0 && w.exit_offset > 0.0) {
            return bad("walk constants must be positive");
        }
        let m = &self.merge;
        if !(m.eps1.coefficient >= 0.0 && m.eps1.floor >= 1 && m.eps1.cap >= m.eps1.floor) {
            return bad("eps1 rule needs 1 <= floor <= cap");
        }
        if !(m.collinear_deg > 0.0 && m.case3_ratio > 0.0 && m.case4_ratio > 0.0 && m.circle_fit_points >= 3) {
            return bad("merge constants must be positive");
        }
        let a = &m.angle_ratio;
        if !(a.near >= 1 && a.far > a.near && a.ratio_max >= 1.0 && a.straight_cap_deg > 0.0) {
            return bad("angle-ratio parameters need 1 <= near < far and ratio_max >= 1");
        }
        Ok(())
    }

    /// Reads a JSON config. Relative model paths resolve against the
    /// config file's directory.
    pub fn load(path: &Path) -> Result<Self, DetectError> {
        let text = std::fs::read_to_string(path).map_err(StrokeError::Io)?;
        let mut cfg: DetectorConfig = serde_json::from_str(&text).map_err(|e| DetectError::Config(e.to_string()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        for spec in [&mut cfg.point_classifier, &mut cfg.corner_classifier].into_iter().flatten() {
            match spec {
                ClassifierSpec::Model { path } if path.is_relative() => *path = base.join(&*path),
                _ => {}
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionResult {
    pub n: usize,
    /// Interior corners, ascending. The stroke endpoints are implicit
    /// corners and not listed.
    pub corners: Vec<usize>,
    pub tangents: Vec<usize>,
    /// Final per-point label after merging.
    pub labels: Vec<PointLabel>,
    /// Point classifier output before merging.
    pub point_classes: Vec<PointClass>,
    /// Primitives in stroke indices.
    pub primitives: Vec<Primitive>,
}

pub struct Detector {
    config: DetectorConfig,
    point: Arc<dyn PointClassifier>,
    corner: Arc<dyn CornerClassifier>,
}

impl Detector {
    pub fn new(config: DetectorConfig, point: Arc<dyn PointClassifier>, corner: Arc<dyn CornerClassifier>) -> Self {
        Self { config, point, corner }
    }

    /// Builds the classifiers named in the config.
    pub fn from_config(config: DetectorConfig) -> Result<Self, DetectError> {
        config.validate()?;
        let missing = |what: &str| DetectError::Config(format!("no {what} classifier configured"));
        let point = config.point_classifier.as_ref().ok_or_else(|| missing("point"))?.point_classifier()?;
        let corner = config.corner_classifier.as_ref().ok_or_else(|| missing("corner"))?.corner_classifier()?;
        Ok(Self::new(config, point, corner))
    }

    pub fn config(&self) -> &DetectorConfig {
        &self.config
    }

    pub fn detect(&self, raw: &RawStroke) -> Result<DetectionResult, DetectError> {
        if raw.points.len() < MIN_POINTS {
            return Err(DetectError::TooFewPoints(raw.points.len()));
        }
        let stk = resample(raw, self.config.n)?;
        self.detect_resampled(&stk)
    }

    /// Detection on an already resampled stroke.
    pub fn detect_resampled(&self, stk: &Stroke) -> Result<DetectionResult, DetectError> {
        let cfg = &self.config;
        let n = stk.len();
        let pts = stk.points();
        let candidates = candidate_corners_with(&straw(stk, cfg.straw_window.min((n - 1) / 2)), &cfg.walk);
        let decisions = classify_candidates(stk, &candidates.indices, self.corner.as_ref())?;
        let confirmed: Vec<usize> = candidates
            .indices
            .iter()
            .zip(&decisions)
            .filter(|(_, d)| **d == CornerDecision::Corner)
            .map(|(&i, _)| i)
            .collect();
        let corners = remove_false_corners(pts, &confirmed, &cfg.merge.angle_ratio);
        let classes = self.point.classify_points(stk)?;
        if classes.len() != n {
            return Err(ClassifierError::Arity {
                expected: n,
                found: classes.len(),
            }
            .into());
        }

        let mut labels: Vec<PointLabel> = classes.iter().map(|c| c.label()).collect();
        let mut out_corners = Vec::new();
        let mut tangents = Vec::new();
        let mut primitives = Vec::new();
        for w in corners.windows(2) {
            let (a, b) = (w[0], w[1]);
            if b > a + 1 {
                let range = a + 1..b;
                let out = merge_chain(&pts[range.clone()], &classes[range.clone()], &cfg.merge);
                for (i, c) in out.chain.classes().into_iter().enumerate() {
                    labels[a + 1 + i] = c.label();
                }
                for f in &out.features {
                    match f.kind {
                        FeatureKind::Corner => out_corners.push(a + 1 + f.index),
                        FeatureKind::Tangent => tangents.push(a + 1 + f.index),
                    }
                }
                primitives.extend(out.primitives.into_iter().map(|p| Primitive {
                    start: p.start + a + 1,
                    end: p.end + a + 1,
                    ..p
                }));
            }
            if b != n - 1 {
                out_corners.push(b);
            }
        }
        // Endpoints take the kind of the primitive they bound.
        if let Some(p) = primitives.first().filter(|p| p.start == 1) {
            labels[0] = p.kind.label();
        }
        if let Some(p) = primitives.last().filter(|p| p.end == n - 2) {
            labels[n - 1] = p.kind.label();
        }
        out_corners.sort_unstable();
        tangents.sort_unstable();
        for &c in &out_corners {
            labels[c] = PointLabel::Corner;
        }
        for &t in &tangents {
            labels[t] = PointLabel::Tangent;
        }
        Ok(DetectionResult {
            n,
            corners: out_corners,
            tangents,
            labels,
            point_classes: classes,
            primitives,
        })
    }
}

/// One-shot detection with explicit classifiers.
pub fn detect(
    raw: &RawStroke,
    config: &DetectorConfig,
    point: Arc<dyn PointClassifier>,
    corner: Arc<dyn CornerClassifier>,
) -> Result<DetectionResult, DetectError> {
    Detector::new(config.clone(), point, corner).detect(raw)
}
