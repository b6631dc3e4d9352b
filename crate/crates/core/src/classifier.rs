//! Point and corner classification.
//!
//! Classifiers sit behind two small traits so that the built-in baseline, an
//! external process ([`crate::bridge`]) or a label oracle can drive the
//! pipeline interchangeably.

use crate::geometry::Point;
use crate::stroke::{candidate_corners_with, straw, PointLabel, Stroke, WalkParams, DEFAULT_STRAW_WINDOW};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PointClass {
    LinePoint,
    CurvePoint,
}

impl PointClass {
    pub fn label(self) -> PointLabel {
        match self {
            PointClass::LinePoint => PointLabel::Line,
            PointClass::CurvePoint => PointLabel::Curve,
        }
    }

    pub fn from_label(label: PointLabel) -> Option<Self> {
        match label {
            PointLabel::Line => Some(PointClass::LinePoint),
            PointLabel::Curve => Some(PointClass::CurvePoint),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CornerDecision {
    Corner,
    NonCorner,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Point,
    Corner,
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ModelKind::Point => "point",
            ModelKind::Corner => "corner",
        })
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ClassifierError {
    #[error("training set is empty")]
    EmptyDataset,
    #[error("training rows contain a single class ({0})")]
    EmptyClass(String),
    #[error("stroke {stroke} has an unlabeled point at {index}")]
    Unlabeled { stroke: usize, index: usize },
    #[error("expected a {expected} model, got a {found} model")]
    KindMismatch { expected: ModelKind, found: ModelKind },
    #[error("model expects {expected} features, extractor produces {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("invalid model file: {0}")]
    Model(String),
    #[error("classifier returned {found} decisions for {expected} requests")]
    Arity { expected: usize, found: usize },
    #[error(transparent)]
    Bridge(#[from] crate::bridge::BridgeError),
    #[error("cannot read model {}: {source}", path.display())]
    ModelFile { path: std::path::PathBuf, source: std::io::Error },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Line vs curve for every point of a stroke.
pub trait PointClassifier: Send + Sync {
    fn classify_points(&self, stroke: &Stroke) -> Result<Vec<PointClass>, ClassifierError>;
}

/// Corner vs non-corner for the given interior candidate indices.
pub trait CornerClassifier: Send + Sync {
    fn classify_corners(&self, stroke: &Stroke, candidates: &[usize]) -> Result<Vec<CornerDecision>, ClassifierError>;
}

/// Decisions for every index of `candidates` (endpoints included); endpoints
/// are corners without consulting the classifier.
pub fn classify_candidates(
    stroke: &Stroke,
    candidates: &[usize],
    clf: &dyn CornerClassifier,
) -> Result<Vec<CornerDecision>, ClassifierError> {
    let last = stroke.len() - 1;
    let interior: Vec<usize> = candidates.iter().copied().filter(|&i| i != 0 && i != last).collect();
    let decided = clf.classify_corners(stroke, &interior)?;
    if decided.len() != interior.len() {
        return Err(ClassifierError::Arity {
            expected: interior.len(),
            found: decided.len(),
        });
    }
    let mut it = decided.into_iter();
    Ok(candidates
        .iter()
        .map(|&i| {
            if i == 0 || i == last {
                CornerDecision::Corner
            } else {
                it.next().unwrap()
            }
        })
        .collect())
}

/// Windows (in resampled points) for the multi-scale features.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureConfig {
    pub windows: Vec<usize>,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        Self {
            windows: vec![2, 4, 8, 16],
        }
    }
}

impl FeatureConfig {
    /// Straw, turning angle and sign agreement per window.
    pub fn dimension(&self) -> usize {
        3 * self.windows.len()
    }
}

pub type FeatureVector = Vec<f64>;

fn signed_turn(a: Point, b: Point, c: Point) -> f64 {
    let (u, v) = (b - a, c - b);
    if u.norm() == 0.0 || v.norm() == 0.0 {
        return 0.0;
    }
    u.cross(v).atan2(u.dot(v))
}

/// Features of every point. Near the stroke ends, where a window would run
/// past an end, the window of the nearest fully covered point is used.
pub fn extract_all(points: &[Point], config: &FeatureConfig) -> Vec<FeatureVector> {
    let n = points.len();
    let mut cum = Vec::with_capacity(n);
    cum.push(0.0);
    for w in points.windows(2) {
        cum.push(cum.last().unwrap() + w[0].distance(w[1]));
    }
    // Per-point signed turn between consecutive displacements.
    let mut turn = vec![0.0; n];
    let mut turn_cum = vec![0.0; n + 1];
    let mut abs_cum = vec![0.0; n + 1];
    for i in 0..n {
        if i > 0 && i + 1 < n {
            turn[i] = signed_turn(points[i - 1], points[i], points[i + 1]);
        }
        turn_cum[i + 1] = turn_cum[i] + turn[i];
        abs_cum[i + 1] = abs_cum[i] + turn[i].abs();
    }
    let dim = config.dimension();
    (0..n)
        .map(|i| {
            let mut f = Vec::with_capacity(dim);
            for &w in &config.windows {
                let (lo, _, hi) = window(i, w, n);
                let path = cum[hi] - cum[lo];
                let chord = points[hi].distance(points[lo]);
                f.push(if path > 0.0 { (chord / path).min(1.0) } else { 1.0 });
            }
            for &w in &config.windows {
                let (lo, c, hi) = window(i, w, n);
                let (u, v) = (points[c] - points[lo], points[hi] - points[c]);
                let a = if u.norm() == 0.0 || v.norm() == 0.0 {
                    0.0
                } else {
                    u.cross(v).atan2(u.dot(v)).abs().to_degrees()
                };
                f.push(a);
            }
            for &w in &config.windows {
                let (lo, _, hi) = window(i, w, n);
                let total = abs_cum[hi + 1] - abs_cum[lo];
                let signed = turn_cum[hi + 1] - turn_cum[lo];
                f.push(if total > 0.0 { signed.abs() / total } else { 1.0 });
            }
            f
        })
        .collect()
}

/// (start, center, end) of the window of half-width `w` used for point `i`.
fn window(i: usize, w: usize, n: usize) -> (usize, usize, usize) {
    let c = if n > 2 * w { i.clamp(w, n - 1 - w) } else { i };
    (c.saturating_sub(w), c, (c + w).min(n - 1))
}

pub fn extract_features(stroke: &Stroke, idx: usize, config: &FeatureConfig) -> FeatureVector {
    extract_all(stroke.points(), config).swap_remove(idx)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Identity,
    Tanh,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseLayer {
    /// outputs × inputs
    pub weights: Vec<Vec<f64>>,
    pub bias: Vec<f64>,
    pub activation: Activation,
}

impl DenseLayer {
    fn inputs(&self) -> usize {
        self.weights.first().map_or(0, Vec::len)
    }

    fn forward(&self, x: &[f64]) -> Vec<f64> {
        self.weights
            .iter()
            .zip(&self.bias)
            .map(|(row, b)| {
                let z = row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + b;
                match self.activation {
                    Activation::Identity => z,
                    Activation::Tanh => z.tanh(),
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Standardizer {
    fn fit(rows: &[FeatureVector]) -> Self {
        let d = rows[0].len();
        let n = rows.len() as f64;
        let mut mean = vec![0.0; d];
        for r in rows {
            for (m, v) in mean.iter_mut().zip(r) {
                *m += v / n;
            }
        }
        let mut var = vec![0.0; d];
        for r in rows {
            for ((s, v), m) in var.iter_mut().zip(r).zip(&mean) {
                *s += (v - m) * (v - m) / n;
            }
        }
        let scale = var.into_iter().map(|v| if v > 1e-18 { v.sqrt() } else { 1.0 }).collect();
        Self { mean, scale }
    }

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(&self.mean)
            .zip(&self.scale)
            .map(|((v, m), s)| (v - m) / s)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainParams {
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub seed: u64,
    /// Width of an optional tanh hidden layer; plain logistic regression
    /// when absent.
    pub hidden: Option<usize>,
}

impl Default for TrainParams {
    fn default() -> Self {
        Self {
            epochs: 50,
            learning_rate: 1e-3,
            batch_size: 128,
            seed: 42,
            hidden: Some(16),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingMeta {
    pub params: TrainParams,
    pub train_rows: usize,
    pub validation_rows: usize,
    pub validation_accuracy: Option<f64>,
}

pub const MODEL_FORMAT: &str = "strokeseg-baseline";
pub const MODEL_VERSION: u32 = 1;

/// Logistic (optionally one hidden layer) model over [`extract_all`]
/// features. The positive class is `CurvePoint` for point models and
/// `Corner` for corner models.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineModel {
    pub format: String,
    pub version: u32,
    pub kind: ModelKind,
    pub features: FeatureConfig,
    pub standardizer: Standardizer,
    pub layers: Vec<DenseLayer>,
    pub training: TrainingMeta,
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

impl BaselineModel {
    /// Probability of the positive class for a raw feature vector.
    pub fn probability(&self, features: &[f64]) -> f64 {
        let mut h = self.standardizer.apply(features);
        for layer in &self.layers {
            h = layer.forward(&h);
        }
        sigmoid(h[0])
    }

    pub fn validate(&self) -> Result<(), ClassifierError> {
        let bad = |m: String| Err(ClassifierError::Model(m));
        if self.format != MODEL_FORMAT {
            return bad(format!("unknown format {:?}", self.format));
        }
        if self.version != MODEL_VERSION {
            return bad(format!("unsupported version {}", self.version));
        }
        let d = self.features.dimension();
        if d == 0 || self.features.windows.contains(&0) {
            return bad("empty feature windows".into());
        }
        if self.standardizer.mean.len() != d || self.standardizer.scale.len() != d {
            return Err(ClassifierError::DimensionMismatch {
                expected: self.standardizer.mean.len(),
                found: d,
            });
        }
        if self.standardizer.scale.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
            return bad("standardizer scale must be positive".into());
        }
        let mut width = d;
        for (k, layer) in self.layers.iter().enumerate() {
            if layer.weights.is_empty() || layer.weights.len() != layer.bias.len() {
                return bad(format!("layer {k}: weight rows and bias differ"));
            }
            if layer.weights.iter().any(|r| r.len() != width) || layer.inputs() != width {
                return Err(ClassifierError::DimensionMismatch {
                    expected: layer.inputs(),
                    found: width,
                });
            }
            if layer.weights.iter().flatten().chain(&layer.bias).any(|v| !v.is_finite()) {
                return bad(format!("layer {k}: non-finite parameter"));
            }
            width = layer.weights.len();
        }
        if self.layers.is_empty() || width != 1 {
            return bad("model must end in a single output".into());
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, ClassifierError> {
        let model: BaselineModel = serde_json::from_str(text).map_err(|e| ClassifierError::Model(e.to_string()))?;
        model.validate()?;
        Ok(model)
    }

    pub fn load(path: &Path) -> Result<Self, ClassifierError> {
        let text = std::fs::read_to_string(path).map_err(|source| ClassifierError::ModelFile {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn save(&self, path: &Path) -> Result<(), ClassifierError> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }

    fn require(&self, kind: ModelKind) -> Result<(), ClassifierError> {
        if self.kind != kind {
            return Err(ClassifierError::KindMismatch {
                expected: kind,
                found: self.kind,
            });
        }
        Ok(())
    }
}

impl PointClassifier for BaselineModel {
    fn classify_points(&self, stroke: &Stroke) -> Result<Vec<PointClass>, ClassifierError> {
        self.require(ModelKind::Point)?;
        Ok(extract_all(stroke.points(), &self.features)
            .iter()
            .map(|f| {
                if self.probability(f) >= 0.5 {
                    PointClass::CurvePoint
                } else {
                    PointClass::LinePoint
                }
            })
            .collect())
    }
}

impl CornerClassifier for BaselineModel {
    fn classify_corners(&self, stroke: &Stroke, candidates: &[usize]) -> Result<Vec<CornerDecision>, ClassifierError> {
        self.require(ModelKind::Corner)?;
        let feats = extract_all(stroke.points(), &self.features);
        Ok(candidates
            .iter()
            .map(|&i| {
                if self.probability(&feats[i]) > 0.5 {
                    CornerDecision::Corner
                } else {
                    CornerDecision::NonCorner
                }
            })
            .collect())
    }
}

/// Labeled corners within this many points of a candidate make it a
/// positive training row.
pub const CORNER_LABEL_TOLERANCE: usize = 2;

/// Candidate corners of a stroke with the default straw walk.
pub fn default_candidates(stroke: &Stroke) -> Vec<usize> {
    candidate_corners_with(&straw(stroke, DEFAULT_STRAW_WINDOW), &WalkParams::default()).indices
}

fn near_label(labels: &[PointLabel], idx: usize, label: PointLabel, tol: usize) -> bool {
    let lo = idx.saturating_sub(tol);
    let hi = (idx + tol).min(labels.len() - 1);
    labels[lo..=hi].contains(&label)
}

/// Feature rows and binary targets for one model kind.
pub fn training_rows(
    strokes: &[Stroke],
    kind: ModelKind,
    config: &FeatureConfig,
) -> Result<(Vec<FeatureVector>, Vec<bool>), ClassifierError> {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (s, stk) in strokes.iter().enumerate() {
        if let Some(index) = stk.labels().iter().position(|&l| l == PointLabel::Unlabeled) {
            return Err(ClassifierError::Unlabeled { stroke: s, index });
        }
        let feats = extract_all(stk.points(), config);
        match kind {
            ModelKind::Point => {
                for (f, &l) in feats.into_iter().zip(stk.labels()) {
                    if let Some(c) = PointClass::from_label(l) {
                        xs.push(f);
                        ys.push(c == PointClass::CurvePoint);
                    }
                }
            }
            ModelKind::Corner => {
                let candidates = default_candidates(stk);
                let last = stk.len() - 1;
                for i in candidates.into_iter().filter(|&i| i != 0 && i != last) {
                    xs.push(feats[i].clone());
                    ys.push(near_label(stk.labels(), i, PointLabel::Corner, CORNER_LABEL_TOLERANCE));
                }
            }
        }
    }
    Ok((xs, ys))
}

struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    const B1: f64 = 0.9;
    const B2: f64 = 0.999;
    const EPS: f64 = 1e-8;

    fn new(n: usize) -> Self {
        Self {
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
        }
    }

    fn step(&mut self, params: &mut [f64], grad: &[f64], lr: f64) {
        self.t += 1;
        let c1 = 1.0 - Self::B1.powi(self.t);
        let c2 = 1.0 - Self::B2.powi(self.t);
        for (((p, g), m), v) in params.iter_mut().zip(grad).zip(&mut self.m).zip(&mut self.v) {
            *m = Self::B1 * *m + (1.0 - Self::B1) * g;
            *v = Self::B2 * *v + (1.0 - Self::B2) * g * g;
            *p -= lr * (*m / c1) / ((*v / c2).sqrt() + Self::EPS);
        }
    }
}

/// Parameters of all layers flattened as (weights row-major, bias) per layer.
fn flatten(layers: &[DenseLayer]) -> Vec<f64> {
    let mut out = Vec::new();
    for l in layers {
        out.extend(l.weights.iter().flatten());
        out.extend(&l.bias);
    }
    out
}

fn unflatten(layers: &mut [DenseLayer], flat: &[f64]) {
    let mut k = 0;
    for l in layers {
        for row in &mut l.weights {
            for w in row {
                *w = flat[k];
                k += 1;
            }
        }
        for b in &mut l.bias {
            *b = flat[k];
            k += 1;
        }
    }
}

/// Adds the cross-entropy gradient of one standardized row to `grad`.
fn accumulate_gradient(layers: &[DenseLayer], x: &[f64], y: bool, grad: &mut [f64]) {
    let mut acts = vec![x.to_vec()];
    for l in layers {
        let next = l.forward(acts.last().unwrap());
        acts.push(next);
    }
    let p = sigmoid(acts.last().unwrap()[0]);
    let mut delta = vec![p - f64::from(u8::from(y))];
    // Offsets of each layer inside the flat vector.
    let mut offsets = Vec::with_capacity(layers.len());
    let mut k = 0;
    for l in layers {
        offsets.push(k);
        k += l.weights.len() * l.inputs() + l.bias.len();
    }
    for li in (0..layers.len()).rev() {
        let l = &layers[li];
        let input = &acts[li];
        let base = offsets[li];
        let cols = l.inputs();
        for (o, d) in delta.iter().enumerate() {
            for (c, xv) in input.iter().enumerate() {
                grad[base + o * cols + c] += d * xv;
            }
            grad[base + l.weights.len() * cols + o] += d;
        }
        if li == 0 {
            break;
        }
        let prev = &layers[li - 1];
        let mut back = vec![0.0; cols];
        for (o, d) in delta.iter().enumerate() {
            for (c, b) in back.iter_mut().enumerate() {
                *b += l.weights[o][c] * d;
            }
        }
        if prev.activation == Activation::Tanh {
            for (b, h) in back.iter_mut().zip(input) {
                *b *= 1.0 - h * h;
            }
        }
        delta = back;
    }
}

fn init_layers(dim: usize, hidden: Option<usize>, rng: &mut ChaCha8Rng) -> Vec<DenseLayer> {
    // The output layer starts at zero (p = 0.5 everywhere); hidden layers
    // need random weights to break symmetry.
    let layer = |inputs: usize, outputs: usize, activation: Activation, rng: &mut ChaCha8Rng| {
        let bound = match activation {
            Activation::Identity => 0.0,
            Activation::Tanh => (6.0 / (inputs + outputs) as f64).sqrt(),
        };
        DenseLayer {
            weights: (0..outputs)
                .map(|_| (0..inputs).map(|_| if bound > 0.0 { rng.random_range(-bound..bound) } else { 0.0 }).collect())
                .collect(),
            bias: vec![0.0; outputs],
            activation,
        }
    };
    match hidden {
        Some(h) if h > 0 => vec![layer(dim, h, Activation::Tanh, rng), layer(h, 1, Activation::Identity, rng)],
        _ => vec![layer(dim, 1, Activation::Identity, rng)],
    }
}

/// Fraction of rows the model predicts correctly at the 0.5 threshold.
pub fn accuracy(model: &BaselineModel, xs: &[FeatureVector], ys: &[bool]) -> Option<f64> {
    if xs.is_empty() {
        return None;
    }
    let correct = xs
        .iter()
        .zip(ys)
        .filter(|(x, &y)| {
            let p = model.probability(x);
            let predicted = match model.kind {
                ModelKind::Point => p >= 0.5,
                ModelKind::Corner => p > 0.5,
            };
            predicted == y
        })
        .count();
    Some(correct as f64 / xs.len() as f64)
}

/// Trains a baseline model on `train` and records its accuracy on
/// `validation` (if non-empty).
pub fn train_baseline(
    train: &[Stroke],
    validation: &[Stroke],
    kind: ModelKind,
    params: &TrainParams,
) -> Result<BaselineModel, ClassifierError> {
    let config = FeatureConfig::default();
    let (xs, ys) = training_rows(train, kind, &config)?;
    if xs.is_empty() {
        return Err(ClassifierError::EmptyDataset);
    }
    let positives = ys.iter().filter(|&&y| y).count();
    if positives == 0 || positives == ys.len() {
        let only = match (kind, positives == 0) {
            (ModelKind::Point, true) => "line",
            (ModelKind::Point, false) => "curve",
            (ModelKind::Corner, true) => "noncorner",
            (ModelKind::Corner, false) => "corner",
        };
        return Err(ClassifierError::EmptyClass(only.to_string()));
    }
    let standardizer = Standardizer::fit(&xs);
    let zs: Vec<Vec<f64>> = xs.iter().map(|x| standardizer.apply(x)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut layers = init_layers(config.dimension(), params.hidden, &mut rng);
    let mut flat = flatten(&layers);
    let mut adam = Adam::new(flat.len());
    let mut order: Vec<usize> = (0..zs.len()).collect();
    let batch = params.batch_size.max(1);
    let mut grad = vec![0.0; flat.len()];
    for _ in 0..params.epochs {
        order.shuffle(&mut rng);
        for chunk in order.chunks(batch) {
            grad.fill(0.0);
            for &r in chunk {
                accumulate_gradient(&layers, &zs[r], ys[r], &mut grad);
            }
            let scale = 1.0 / chunk.len() as f64;
            grad.iter_mut().for_each(|g| *g *= scale);
            adam.step(&mut flat, &grad, params.learning_rate);
            unflatten(&mut layers, &flat);
        }
    }
    let mut model = BaselineModel {
        format: MODEL_FORMAT.to_string(),
        version: MODEL_VERSION,
        kind,
        features: config.clone(),
        standardizer,
        layers,
        training: TrainingMeta {
            params: params.clone(),
            train_rows: xs.len(),
            validation_rows: 0,
            validation_accuracy: None,
        },
    };
    let (vx, vy) = training_rows(validation, kind, &config)?;
    model.training.validation_rows = vx.len();
    model.training.validation_accuracy = accuracy(&model, &vx, &vy);
    Ok(model)
}

/// Answers from the stroke's own labels. Feature points take the class of
/// the nearest non-feature label; corners are candidates within
/// [`CORNER_LABEL_TOLERANCE`] of a labeled corner.
#[derive(Debug, Clone, Copy, Default)]
pub struct LabelOracle;

impl PointClassifier for LabelOracle {
    fn classify_points(&self, stroke: &Stroke) -> Result<Vec<PointClass>, ClassifierError> {
        let labels = stroke.labels();
        let n = labels.len();
        (0..n)
            .map(|i| {
                (0..n)
                    .flat_map(|d| [i.checked_sub(d), (i + d < n).then_some(i + d)])
                    .flatten()
                    .find_map(|j| PointClass::from_label(labels[j]))
                    .ok_or(ClassifierError::Unlabeled { stroke: 0, index: i })
            })
            .collect()
    }
}

impl CornerClassifier for LabelOracle {
    fn classify_corners(&self, stroke: &Stroke, candidates: &[usize]) -> Result<Vec<CornerDecision>, ClassifierError> {
        Ok(candidates
            .iter()
            .map(|&i| {
                if near_label(stroke.labels(), i, PointLabel::Corner, CORNER_LABEL_TOLERANCE) {
                    CornerDecision::Corner
                } else {
                    CornerDecision::NonCorner
                }
            })
            .collect())
    }
}

/// The same answer for every request.
#[derive(Debug, Clone, Copy)]
pub struct ConstantClassifier {
    pub point: PointClass,
    pub corner: CornerDecision,
}

impl PointClassifier for ConstantClassifier {
    fn classify_points(&self, stroke: &Stroke) -> Result<Vec<PointClass>, ClassifierError> {
        Ok(vec![self.point; stroke.len()])
    }
}

impl CornerClassifier for ConstantClassifier {
    fn classify_corners(&self, _: &Stroke, candidates: &[usize]) -> Result<Vec<CornerDecision>, ClassifierError> {
        Ok(vec![self.corner; candidates.len()])
    }
}
