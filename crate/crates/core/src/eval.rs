//! Evaluation: scoring, metrics, cross-validation splits, synthetic strokes
//! and failure reports.

use crate::classifier::{
    train_baseline, ClassifierError, ModelKind, PointClass, TrainParams,
};
use crate::geometry::Point;
use crate::pipeline::{DetectError, DetectionResult, Detector, DetectorConfig};
use crate::stroke::{load_record, resample, PointLabel, RawStroke, SourceId, Stroke, StrokeError, StrokeRecord};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("stroke {0} has no person/round/shape id")]
    MissingId(usize),
    #[error("detected result has {detected} points, labels have {labeled}")]
    LengthMismatch { detected: usize, labeled: usize },
    #[error("invalid shape spec: {0}")]
    InvalidSpec(String),
    #[error("flip rate {0} outside [0, 1]")]
    InvalidRate(f64),
    #[error("need at least 5 distinct keys to split, found {0}")]
    TooFewKeys(usize),
    #[error(transparent)]
    Detect(#[from] DetectError),
    #[error(transparent)]
    Classifier(#[from] ClassifierError),
    #[error(transparent)]
    Stroke(#[from] StrokeError),
    #[error("{}: {source}", path.display())]
    File { path: PathBuf, source: StrokeError },
}

// ---------------------------------------------------------------- splits

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitStrategy {
    SetByPerson,
    SetByShape,
}

impl SplitStrategy {
    fn key(self, id: SourceId) -> u32 {
        match self {
            SplitStrategy::SetByPerson => id.person,
            SplitStrategy::SetByShape => id.shape,
        }
    }
}

pub const PERSON_SUBSETS: [&[u32]; 5] = [&[1, 7, 15], &[2, 8, 11], &[3, 9, 12], &[4, 10, 13], &[5, 6, 14]];
pub const SHAPE_SUBSETS: [&[u32]; 5] = [&[1, 11, 17, 19], &[2, 12, 18, 6], &[3, 13, 16, 9], &[4, 14, 15, 8], &[5, 20, 7, 10]];

/// Five disjoint subsets of dataset indices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitPlan {
    pub strategy: SplitStrategy,
    pub keys: Vec<Vec<u32>>,
    pub subsets: Vec<Vec<usize>>,
}

/// Groups strokes by person or shape. The full 15-person and 20-shape key
/// sets use the fixed published groupings; other key sets are assigned
/// round-robin in ascending key order.
pub fn make_splits(ids: &[Option<SourceId>], strategy: SplitStrategy) -> Result<SplitPlan, EvalError> {
    let keys: Vec<u32> = ids
        .iter()
        .enumerate()
        .map(|(i, id)| id.map(|id| strategy.key(id)).ok_or(EvalError::MissingId(i)))
        .collect::<Result<_, _>>()?;
    let distinct: BTreeSet<u32> = keys.iter().copied().collect();
    let fixed = match strategy {
        SplitStrategy::SetByPerson => &PERSON_SUBSETS,
        SplitStrategy::SetByShape => &SHAPE_SUBSETS,
    };
    let fixed_keys: BTreeSet<u32> = fixed.iter().flat_map(|g| g.iter().copied()).collect();
    let groups: Vec<Vec<u32>> = if distinct == fixed_keys {
        fixed.iter().map(|g| g.to_vec()).collect()
    } else {
        if distinct.len() < 5 {
            return Err(EvalError::TooFewKeys(distinct.len()));
        }
        let mut g = vec![Vec::new(); 5];
        for (j, k) in distinct.iter().enumerate() {
            g[j % 5].push(*k);
        }
        g
    };
    let group_of: BTreeMap<u32, usize> = groups.iter().enumerate().flat_map(|(gi, g)| g.iter().map(move |&k| (k, gi))).collect();
    let mut subsets = vec![Vec::new(); 5];
    for (i, k) in keys.iter().enumerate() {
        subsets[group_of[k]].push(i);
    }
    Ok(SplitPlan {
        strategy,
        keys: groups,
        subsets,
    })
}

/// Train, validation and test indices of one round.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RoundSplit {
    pub train: Vec<usize>,
    pub validate: Vec<usize>,
    pub test: Vec<usize>,
}

impl SplitPlan {
    /// Round `i` tests on subset `i`, validates on subset `i + 1` (mod 5)
    /// and trains on the other three.
    pub fn round(&self, i: usize) -> RoundSplit {
        let v = (i + 1) % 5;
        let mut train: Vec<usize> = (0..5).filter(|&j| j != i && j != v).flat_map(|j| self.subsets[j].clone()).collect();
        train.sort_unstable();
        RoundSplit {
            train,
            validate: self.subsets[v].clone(),
            test: self.subsets[i].clone(),
        }
    }
}

// ---------------------------------------------------------------- scoring

/// Detected and labeled feature points match when within `tolerance`
/// indices and of the same type.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchRule {
    pub tolerance: usize,
}

impl Default for MatchRule {
    fn default() -> Self {
        Self { tolerance: 2 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Counts {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub tn: u64,
}

impl std::ops::AddAssign for Counts {
    fn add_assign(&mut self, o: Counts) {
        self.tp += o.tp;
        self.fp += o.fp;
        self.fn_ += o.fn_;
        self.tn += o.tn;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrokeScore {
    pub correct: bool,
    pub corners: Counts,
    pub tangents: Counts,
    pub points_correct: u64,
    pub points_total: u64,
}

/// Size of a maximum one-to-one matching of two index sets under the
/// tolerance.
fn match_count(detected: &[usize], labeled: &[usize], tol: usize) -> u64 {
    let (mut a, mut b) = (detected.to_vec(), labeled.to_vec());
    a.sort_unstable();
    b.sort_unstable();
    let (mut i, mut j, mut m) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        if a[i].abs_diff(b[j]) <= tol {
            m += 1;
            i += 1;
            j += 1;
        } else if a[i] < b[j] {
            i += 1;
        } else {
            j += 1;
        }
    }
    m
}

fn interior_with(labels: &[PointLabel], label: PointLabel) -> Vec<usize> {
    let n = labels.len();
    (1..n.saturating_sub(1)).filter(|&i| labels[i] == label).collect()
}

fn type_counts(detected: &[usize], labeled: &[usize], n: usize, tol: usize) -> Counts {
    let d: Vec<usize> = detected.iter().copied().filter(|&i| i > 0 && i + 1 < n).collect();
    let tp = match_count(&d, labeled, tol);
    let interior = n.saturating_sub(2) as u64;
    let union: BTreeSet<usize> = d.iter().chain(labeled).copied().collect();
    Counts {
        tp,
        fp: d.len() as u64 - tp,
        fn_: labeled.len() as u64 - tp,
        tn: interior - union.len() as u64,
    }
}

/// Scores one detection against a labeled stroke. Endpoints take no part in
/// feature matching.
pub fn score_stroke(detected: &DetectionResult, truth: &Stroke, rule: &MatchRule) -> Result<StrokeScore, EvalError> {
    let labels = truth.labels();
    let n = labels.len();
    if detected.n != n || detected.point_classes.len() != n {
        return Err(EvalError::LengthMismatch {
            detected: detected.n,
            labeled: n,
        });
    }
    let corners = type_counts(&detected.corners, &interior_with(labels, PointLabel::Corner), n, rule.tolerance);
    let tangents = type_counts(&detected.tangents, &interior_with(labels, PointLabel::Tangent), n, rule.tolerance);
    let mut points_total = 0;
    let mut points_correct = 0;
    for (l, c) in labels.iter().zip(&detected.point_classes) {
        if let Some(truth) = PointClass::from_label(*l) {
            points_total += 1;
            points_correct += u64::from(truth == *c);
        }
    }
    Ok(StrokeScore {
        correct: corners.fp == 0 && corners.fn_ == 0 && tangents.fp == 0 && tangents.fn_ == 0,
        corners,
        tangents,
        points_correct,
        points_total,
    })
}

// ---------------------------------------------------------------- metrics

/// Aggregate metrics. Ratios with a zero denominator are `None`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub strokes: u64,
    pub correct_strokes: u64,
    pub points_total: u64,
    pub points_correct: u64,
    pub corners: Counts,
    pub tangents: Counts,
    pub acc_p: Option<f64>,
    pub recall: Option<f64>,
    pub precision: Option<f64>,
    pub err_fn: Option<f64>,
    pub err_fp: Option<f64>,
    pub aon: Option<f64>,
}

fn ratio(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

impl Metrics {
    pub fn from_counts(strokes: u64, correct_strokes: u64, points_total: u64, points_correct: u64, corners: Counts, tangents: Counts) -> Self {
        let recall = ratio(corners.tp, corners.tp + corners.fn_);
        let precision = ratio(corners.tp, corners.tp + corners.fp);
        Self {
            strokes,
            correct_strokes,
            points_total,
            points_correct,
            corners,
            tangents,
            acc_p: ratio(points_correct, points_total),
            recall,
            precision,
            err_fn: recall.map(|r| 1.0 - r),
            err_fp: precision.map(|p| 1.0 - p),
            aon: ratio(correct_strokes, strokes),
        }
    }
}

pub fn compute_metrics(scores: &[StrokeScore]) -> Metrics {
    let (mut corners, mut tangents) = (Counts::default(), Counts::default());
    let (mut pt, mut pc, mut ok) = (0, 0, 0);
    for s in scores {
        corners += s.corners;
        tangents += s.tangents;
        pt += s.points_total;
        pc += s.points_correct;
        ok += u64::from(s.correct);
    }
    Metrics::from_counts(scores.len() as u64, ok, pt, pc, corners, tangents)
}

// ---------------------------------------------------------------- methods

/// Anything that turns a resampled stroke into a detection.
pub trait StrokeDetector: Send + Sync {
    fn detect(&self, stroke: &Stroke) -> Result<DetectionResult, DetectError>;
}

impl StrokeDetector for Detector {
    fn detect(&self, stroke: &Stroke) -> Result<DetectionResult, DetectError> {
        self.detect_resampled(stroke)
    }
}

/// Returns the stroke's own labels as the detection.
pub struct VerbatimDetector;

impl StrokeDetector for VerbatimDetector {
    fn detect(&self, stk: &Stroke) -> Result<DetectionResult, DetectError> {
        let labels = stk.labels().to_vec();
        let n = labels.len();
        let point_classes = (0..n)
            .map(|i| {
                (0..n)
                    .flat_map(|d| [i.checked_sub(d), (i + d < n).then_some(i + d)])
                    .flatten()
                    .find_map(|j| PointClass::from_label(labels[j]))
                    .unwrap_or(PointClass::LinePoint)
            })
            .collect();
        Ok(DetectionResult {
            n,
            corners: interior_with(&labels, PointLabel::Corner),
            tangents: interior_with(&labels, PointLabel::Tangent),
            labels,
            point_classes,
            primitives: Vec::new(),
        })
    }
}

/// Detects nothing: all points are line points, no feature points.
pub struct NullDetector;

impl StrokeDetector for NullDetector {
    fn detect(&self, stk: &Stroke) -> Result<DetectionResult, DetectError> {
        let n = stk.len();
        Ok(DetectionResult {
            n,
            corners: Vec::new(),
            tangents: Vec::new(),
            labels: vec![PointLabel::Line; n],
            point_classes: vec![PointClass::LinePoint; n],
            primitives: Vec::new(),
        })
    }
}

/// Produces a detector from a round's training data.
pub trait EvalMethod: Sync {
    fn name(&self) -> &str;
    fn fit(&self, train: &[Stroke], validate: &[Stroke]) -> Result<Arc<dyn StrokeDetector>, EvalError>;
}

pub struct OracleMethod;

impl EvalMethod for OracleMethod {
    fn name(&self) -> &str {
        "oracle"
    }

    fn fit(&self, _: &[Stroke], _: &[Stroke]) -> Result<Arc<dyn StrokeDetector>, EvalError> {
        Ok(Arc::new(VerbatimDetector))
    }
}

pub struct NullMethod;

impl EvalMethod for NullMethod {
    fn name(&self) -> &str {
        "null"
    }

    fn fit(&self, _: &[Stroke], _: &[Stroke]) -> Result<Arc<dyn StrokeDetector>, EvalError> {
        Ok(Arc::new(NullDetector))
    }
}

/// Trains baseline point and corner models and runs the full pipeline.
#[derive(Default)]
pub struct BaselineMethod {
    pub config: DetectorConfig,
    pub point_params: TrainParams,
    pub corner_params: TrainParams,
}

impl BaselineMethod {
    pub fn train(&self, train: &[Stroke], validate: &[Stroke]) -> Result<Detector, EvalError> {
        let point = train_baseline(train, validate, ModelKind::Point, &self.point_params)?;
        let corner = train_baseline(train, validate, ModelKind::Corner, &self.corner_params)?;
        Ok(Detector::new(self.config.clone(), Arc::new(point), Arc::new(corner)))
    }
}

impl EvalMethod for BaselineMethod {
    fn name(&self) -> &str {
        "baseline"
    }

    fn fit(&self, train: &[Stroke], validate: &[Stroke]) -> Result<Arc<dyn StrokeDetector>, EvalError> {
        Ok(Arc::new(self.train(train, validate)?))
    }
}

/// Detects and scores every stroke; results are in input order.
pub fn evaluate(detector: &dyn StrokeDetector, strokes: &[Stroke], rule: &MatchRule) -> Result<Vec<(DetectionResult, StrokeScore)>, EvalError> {
    strokes
        .par_iter()
        .map(|s| {
            let d = detector.detect(s)?;
            let score = score_stroke(&d, s, rule)?;
            Ok((d, score))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RoundReport {
    pub round: usize,
    pub split: RoundSplit,
    pub metrics: Metrics,
    /// Per test stroke, in `split.test` order.
    pub scores: Vec<StrokeScore>,
    pub failures: FailureSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CrossValidation {
    pub method: String,
    pub strategy: SplitStrategy,
    pub rounds: Vec<RoundReport>,
    /// Mean of the defined per-round ratios.
    pub mean: MeanMetrics,
    /// Counts pooled over all rounds.
    pub pooled: Metrics,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeanMetrics {
    pub acc_p: Option<f64>,
    pub recall: Option<f64>,
    pub precision: Option<f64>,
    pub aon: Option<f64>,
}

fn mean_of(values: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let v: Vec<f64> = values.flatten().collect();
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

pub fn cross_validate(dataset: &[Stroke], plan: &SplitPlan, method: &dyn EvalMethod, rule: &MatchRule) -> Result<CrossValidation, EvalError> {
    let pick = |idx: &[usize]| -> Vec<Stroke> { idx.iter().map(|&i| dataset[i].clone()).collect() };
    let rounds: Vec<RoundReport> = (0..5)
        .into_par_iter()
        .map(|r| {
            let split = plan.round(r);
            let detector = method.fit(&pick(&split.train), &pick(&split.validate))?;
            let test = pick(&split.test);
            let scored = evaluate(detector.as_ref(), &test, rule)?;
            let scores: Vec<StrokeScore> = scored.into_iter().map(|(_, s)| s).collect();
            let failures = FailureSummary::from_scores(&split.test, &test, &scores);
            Ok(RoundReport {
                round: r,
                metrics: compute_metrics(&scores),
                split,
                scores,
                failures,
            })
        })
        .collect::<Result<_, EvalError>>()?;
    let all: Vec<StrokeScore> = rounds.iter().flat_map(|r| r.scores.clone()).collect();
    let mean = MeanMetrics {
        acc_p: mean_of(rounds.iter().map(|r| r.metrics.acc_p)),
        recall: mean_of(rounds.iter().map(|r| r.metrics.recall)),
        precision: mean_of(rounds.iter().map(|r| r.metrics.precision)),
        aon: mean_of(rounds.iter().map(|r| r.metrics.aon)),
    };
    Ok(CrossValidation {
        method: method.name().to_string(),
        strategy: plan.strategy,
        rounds,
        mean,
        pooled: compute_metrics(&all),
    })
}

// ---------------------------------------------------------------- failures

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureBucket {
    FalsePositivePoint,
    FalseNegative,
    ThresholdValue,
    StrokeEndOverlap,
}

impl FailureBucket {
    pub fn as_str(self) -> &'static str {
        match self {
            FailureBucket::FalsePositivePoint => "false_positive_point",
            FailureBucket::FalseNegative => "false_negative",
            FailureBucket::ThresholdValue => "threshold_value",
            FailureBucket::StrokeEndOverlap => "stroke_end_overlap",
        }
    }
}

/// Stroke ends closer than this fraction of the bounding-box diagonal count
/// as overlapping.
pub const END_OVERLAP_FRACTION: f64 = 0.05;

fn ends_overlap(stk: &Stroke) -> bool {
    let p = stk.points();
    let (mut lo, mut hi) = (p[0], p[0]);
    for q in p {
        lo = Point::new(lo.x.min(q.x), lo.y.min(q.y));
        hi = Point::new(hi.x.max(q.x), hi.y.max(q.y));
    }
    p[0].distance(p[p.len() - 1]) < END_OVERLAP_FRACTION * lo.distance(hi)
}

/// Buckets of an incorrect stroke. A stroke with overlapping ends is put
/// only in that bucket; otherwise extra corners, missed corners and
/// tangent errors each add a bucket, so one stroke can land in several.
pub fn classify_failure(stk: &Stroke, score: &StrokeScore) -> Vec<FailureBucket> {
    if score.correct {
        return Vec::new();
    }
    if ends_overlap(stk) {
        return vec![FailureBucket::StrokeEndOverlap];
    }
    let mut out = Vec::new();
    if score.corners.fp > 0 {
        out.push(FailureBucket::FalsePositivePoint);
    }
    if score.corners.fn_ > 0 {
        out.push(FailureBucket::FalseNegative);
    }
    if score.tangents.fp + score.tangents.fn_ > 0 {
        out.push(FailureBucket::ThresholdValue);
    }
    out
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct FailureSummary {
    /// Incorrect strokes, each counted once.
    pub distinct_strokes: u64,
    /// Sum over buckets; exceeds `distinct_strokes` when a stroke lands in
    /// more than one bucket.
    pub bucket_total: u64,
    pub buckets: BTreeMap<FailureBucket, u64>,
    /// (dataset index, buckets) for each incorrect stroke.
    pub strokes: Vec<(usize, Vec<FailureBucket>)>,
}

impl FailureSummary {
    pub fn from_scores(indices: &[usize], strokes: &[Stroke], scores: &[StrokeScore]) -> Self {
        let mut out = FailureSummary::default();
        for ((&i, stk), score) in indices.iter().zip(strokes).zip(scores) {
            let b = classify_failure(stk, score);
            if score.correct {
                continue;
            }
            out.distinct_strokes += 1;
            out.bucket_total += b.len() as u64;
            for &k in &b {
                *out.buckets.entry(k).or_default() += 1;
            }
            out.strokes.push((i, b));
        }
        out
    }
}

// ---------------------------------------------------------------- reports

fn opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| format!("{x:.6}"))
}

pub const ROUND_CSV_HEADER: &str =
    "round,strokes,correct,aon,acc_p,corner_tp,corner_fp,corner_fn,corner_tn,recall,precision,err_fn,err_fp,tangent_tp,tangent_fp,tangent_fn";

pub fn metrics_csv_row(label: &str, m: &Metrics) -> String {
    format!(
        "{label},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
        m.strokes,
        m.correct_strokes,
        opt(m.aon),
        opt(m.acc_p),
        m.corners.tp,
        m.corners.fp,
        m.corners.fn_,
        m.corners.tn,
        opt(m.recall),
        opt(m.precision),
        opt(m.err_fn),
        opt(m.err_fp),
        m.tangents.tp,
        m.tangents.fp,
        m.tangents.fn_,
    )
}

impl CrossValidation {
    /// One row per round plus a pooled row.
    pub fn rounds_csv(&self) -> String {
        let mut out = String::from(ROUND_CSV_HEADER);
        out.push('\n');
        for r in &self.rounds {
            out.push_str(&metrics_csv_row(&(r.round + 1).to_string(), &r.metrics));
            out.push('\n');
        }
        out.push_str(&metrics_csv_row("pooled", &self.pooled));
        out.push('\n');
        out
    }

    /// `round,stroke,source,buckets` for every incorrect stroke.
    pub fn failures_csv(&self, dataset: &[Stroke]) -> String {
        let mut out = String::from("round,stroke,source,buckets\n");
        for r in &self.rounds {
            for (i, b) in &r.failures.strokes {
                let src = dataset[*i].source_id().map(|s| s.to_string()).unwrap_or_default();
                let names: Vec<&str> = b.iter().map(|k| k.as_str()).collect();
                let _ = writeln!(out, "{},{},{},{}", r.round + 1, i, src, names.join(";"));
            }
        }
        out
    }

    pub fn summary(&self) -> String {
        let pct = |v: Option<f64>| v.map_or_else(|| "n/a".to_string(), |x| format!("{:.2}%", 100.0 * x));
        let mut s = String::new();
        let _ = writeln!(s, "method {} ({:?})", self.method, self.strategy);
        for r in &self.rounds {
            let _ = writeln!(
                s,
                "round {}: AON {} acc_p {} R_c {} P_c {} ({} strokes, {} failed)",
                r.round + 1,
                pct(r.metrics.aon),
                pct(r.metrics.acc_p),
                pct(r.metrics.recall),
                pct(r.metrics.precision),
                r.metrics.strokes,
                r.failures.distinct_strokes
            );
        }
        let _ = writeln!(
            s,
            "mean: AON {} acc_p {} R_c {} P_c {}",
            pct(self.mean.aon),
            pct(self.mean.acc_p),
            pct(self.mean.recall),
            pct(self.mean.precision)
        );
        let distinct: u64 = self.rounds.iter().map(|r| r.failures.distinct_strokes).sum();
        let total: u64 = self.rounds.iter().map(|r| r.failures.bucket_total).sum();
        let _ = writeln!(s, "failed strokes: {distinct} distinct, {total} by bucket");
        let mut buckets: BTreeMap<FailureBucket, u64> = BTreeMap::new();
        for r in &self.rounds {
            for (k, v) in &r.failures.buckets {
                *buckets.entry(*k).or_default() += v;
            }
        }
        for (k, v) in buckets {
            let _ = writeln!(s, "  {}: {v}", k.as_str());
        }
        s
    }
}

// ---------------------------------------------------------------- synthesis

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Piece {
    Line { length: f64 },
    /// Positive sweep turns counter-clockwise.
    Arc { radius: f64, sweep_deg: f64 },
}

impl Piece {
    fn length(&self) -> f64 {
        match *self {
            Piece::Line { length } => length,
            Piece::Arc { radius, sweep_deg } => radius * sweep_deg.to_radians().abs(),
        }
    }

    fn kind(&self) -> PointClass {
        match self {
            Piece::Line { .. } => PointClass::LinePoint,
            Piece::Arc { .. } => PointClass::CurvePoint,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Joint {
    /// Tangent-continuous join.
    Smooth,
    /// Heading change in degrees (positive counter-clockwise).
    Turn { angle_deg: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapeSpec {
    pub name: String,
    pub pieces: Vec<Piece>,
    /// One joint between each pair of consecutive pieces.
    pub joints: Vec<Joint>,
}

impl ShapeSpec {
    pub fn validate(&self) -> Result<(), EvalError> {
        let bad = |m: String| Err(EvalError::InvalidSpec(m));
        if self.pieces.is_empty() {
            return bad("no pieces".into());
        }
        if self.joints.len() + 1 != self.pieces.len() {
            return bad(format!("{} pieces need {} joints", self.pieces.len(), self.pieces.len() - 1));
        }
        for p in &self.pieces {
            let ok = match *p {
                Piece::Line { length } => length.is_finite() && length > 0.0,
                Piece::Arc { radius, sweep_deg } => radius.is_finite() && radius > 0.0 && sweep_deg.is_finite() && sweep_deg != 0.0,
            };
            if !ok {
                return bad(format!("degenerate piece {p:?}"));
            }
        }
        for (k, j) in self.joints.iter().enumerate() {
            match *j {
                Joint::Turn { angle_deg } if !(angle_deg.is_finite() && angle_deg.abs() > 0.0 && angle_deg.abs() < 180.0) => {
                    return bad(format!("joint {k}: turn must be in (0, 180) degrees"));
                }
                Joint::Smooth if self.feature_at(k).is_none() && self.pieces[k].kind() == PointClass::LinePoint => {
                    return bad(format!("joint {k}: smooth join of two lines"));
                }
                _ => {}
            }
        }
        Ok(())
    }

    /// Feature label at joint `k`, if the joint is a feature point.
    fn feature_at(&self, k: usize) -> Option<PointLabel> {
        match self.joints[k] {
            Joint::Turn { .. } => Some(PointLabel::Corner),
            Joint::Smooth => {
                let (a, b) = (self.pieces[k], self.pieces[k + 1]);
                match (a, b) {
                    (Piece::Arc { sweep_deg: s1, .. }, Piece::Arc { sweep_deg: s2, .. }) => {
                        (s1.signum() != s2.signum()).then_some(PointLabel::Tangent)
                    }
                    _ if a.kind() != b.kind() => Some(PointLabel::Tangent),
                    _ => None,
                }
            }
        }
    }

    pub fn total_length(&self) -> f64 {
        self.pieces.iter().map(Piece::length).sum()
    }

    /// Clean point at arc parameter `s`, starting at the origin heading +x.
    fn clean_points(&self, params: &[f64]) -> Vec<Point> {
        // Precompute start pose of each piece.
        let mut poses = Vec::with_capacity(self.pieces.len());
        let (mut p, mut h) = (Point::new(0.0, 0.0), 0.0f64);
        for (k, piece) in self.pieces.iter().enumerate() {
            if k > 0 {
                if let Joint::Turn { angle_deg } = self.joints[k - 1] {
                    h += angle_deg.to_radians();
                }
            }
            poses.push((p, h));
            let (q, h2) = advance(p, h, piece, piece.length());
            p = q;
            h = h2;
        }
        let starts = self.piece_starts();
        params
            .iter()
            .map(|&s| {
                let k = piece_index(&starts, s);
                let (p0, h0) = poses[k];
                advance(p0, h0, &self.pieces[k], (s - starts[k]).clamp(0.0, self.pieces[k].length())).0
            })
            .collect()
    }

    fn piece_starts(&self) -> Vec<f64> {
        let mut acc = 0.0;
        self.pieces
            .iter()
            .map(|p| {
                let s = acc;
                acc += p.length();
                s
            })
            .collect()
    }
}

fn piece_index(starts: &[f64], s: f64) -> usize {
    starts.iter().rposition(|&st| st <= s).unwrap_or(0)
}

fn advance(p: Point, h: f64, piece: &Piece, t: f64) -> (Point, f64) {
    match *piece {
        Piece::Line { .. } => (p + Point::new(h.cos(), h.sin()) * t, h),
        Piece::Arc { radius, sweep_deg } => {
            let dir = sweep_deg.signum();
            let da = dir * t / radius;
            // Center lies to the left for counter-clockwise sweeps.
            let c = p + Point::new(-h.sin(), h.cos()) * (dir * radius);
            let a0 = h - dir * std::f64::consts::FRAC_PI_2;
            let q = c + Point::new((a0 + da).cos(), (a0 + da).sin()) * radius;
            (q, h + da)
        }
    }
}

/// The eight built-in shapes.
pub fn builtin_shapes() -> Vec<ShapeSpec> {
    use Joint::{Smooth, Turn};
    let line = |length: f64| Piece::Line { length };
    let arc = |radius: f64, sweep_deg: f64| Piece::Arc { radius, sweep_deg };
    let spec = |name: &str, pieces: Vec<Piece>, joints: Vec<Joint>| ShapeSpec {
        name: name.to_string(),
        pieces,
        joints,
    };
    vec![
        spec("L", vec![line(650.0), line(650.0)], vec![Turn { angle_deg: 90.0 }]),
        spec(
            "Z",
            vec![line(450.0), line(550.0), line(450.0)],
            vec![Turn { angle_deg: -135.0 }, Turn { angle_deg: 135.0 }],
        ),
        spec("U", vec![line(450.0), arc(150.0, 180.0), line(450.0)], vec![Smooth, Smooth]),
        spec("arc", vec![arc(300.0, 240.0)], vec![]),
        spec("S", vec![arc(220.0, 160.0), arc(220.0, -160.0)], vec![Smooth]),
        spec("J", vec![line(800.0), arc(160.0, -180.0)], vec![Smooth]),
        spec("line-arc corner", vec![line(600.0), arc(250.0, 150.0)], vec![Turn { angle_deg: 100.0 }]),
        spec("rounded", vec![line(500.0), arc(200.0, 90.0), line(500.0)], vec![Smooth, Smooth]),
    ]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseParams {
    /// Gaussian jitter (px) added to each raw sample.
    pub sigma: f64,
    /// Raw sample spacing along the clean path (px).
    pub spacing: f64,
    /// Relative random variation of piece lengths, radii, sweeps and turns.
    pub variation: f64,
    /// Rotate the stroke by a random angle.
    pub rotate: bool,
}

impl Default for NoiseParams {
    fn default() -> Self {
        Self {
            sigma: 1.0,
            spacing: 5.0,
            variation: 0.15,
            rotate: true,
        }
    }
}

fn vary(spec: &ShapeSpec, v: f64, rng: &mut ChaCha8Rng) -> ShapeSpec {
    if v <= 0.0 {
        return spec.clone();
    }
    let mut f = || 1.0 + rng.random_range(-v..=v);
    let pieces = spec
        .pieces
        .iter()
        .map(|p| match *p {
            Piece::Line { length } => Piece::Line { length: length * f() },
            Piece::Arc { radius, sweep_deg } => Piece::Arc {
                radius: radius * f(),
                sweep_deg: sweep_deg * f(),
            },
        })
        .collect();
    let joints = spec
        .joints
        .iter()
        .map(|j| match *j {
            Joint::Turn { angle_deg } => Joint::Turn {
                angle_deg: (angle_deg * f()).clamp(-170.0, 170.0),
            },
            Joint::Smooth => Joint::Smooth,
        })
        .collect();
    ShapeSpec {
        name: spec.name.clone(),
        pieces,
        joints,
    }
}

/// A labeled, resampled stroke drawn from `spec` with noise. Labels come from
/// the clean path: each resampled point takes the kind of the piece it lies
/// on, and each feature joint labels the point nearest to it.
pub fn generate_template_stroke(spec: &ShapeSpec, noise: &NoiseParams, seed: u64, n: usize) -> Result<Stroke, EvalError> {
    spec.validate()?;
    if !(noise.sigma >= 0.0 && noise.spacing > 0.0 && noise.variation >= 0.0 && noise.variation < 1.0) {
        return Err(EvalError::InvalidSpec(format!("bad noise parameters {noise:?}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let spec = vary(spec, noise.variation, &mut rng);
    let total = spec.total_length();
    let phase = rng.random_range(0.0..noise.spacing);
    let mut params = vec![0.0];
    let mut s = phase;
    while s < total {
        if s > 0.0 {
            params.push(s);
        }
        s += noise.spacing;
    }
    params.push(total);
    let clean = spec.clean_points(&params);
    let jitter = Normal::new(0.0, noise.sigma.max(0.0)).expect("finite sigma");
    let angle = if noise.rotate { rng.random_range(0.0..std::f64::consts::TAU) } else { 0.0 };
    let (c, sn) = (angle.cos(), angle.sin());
    let noisy: Vec<Point> = clean
        .iter()
        .map(|p| {
            let (dx, dy) = if noise.sigma > 0.0 { (jitter.sample(&mut rng), jitter.sample(&mut rng)) } else { (0.0, 0.0) };
            let q = Point::new(p.x + dx, p.y + dy);
            Point::new(c * q.x - sn * q.y, sn * q.x + c * q.y)
        })
        .collect();
    // Keep the clean parameter of each raw sample that survives deduplication.
    let mut kept_pts = Vec::with_capacity(noisy.len());
    let mut kept_s = Vec::with_capacity(noisy.len());
    for (p, s) in noisy.iter().zip(&params) {
        if kept_pts.last() != Some(p) {
            kept_pts.push(*p);
            kept_s.push(*s);
        }
    }
    let raw = RawStroke::new(kept_pts.clone(), None)?;
    let stk = resample(&raw, n)?;
    let s_of = resampled_params(&kept_pts, &kept_s, n);

    let starts = spec.piece_starts();
    let mut labels: Vec<PointLabel> = s_of.iter().map(|&s| spec.pieces[piece_index(&starts, s)].kind().label()).collect();
    for k in 0..spec.joints.len() {
        if let Some(f) = spec.feature_at(k) {
            let at = starts[k + 1];
            let idx = (1..n - 1)
                .min_by(|&a, &b| (s_of[a] - at).abs().total_cmp(&(s_of[b] - at).abs()))
                .unwrap();
            labels[idx] = f;
        }
    }
    Ok(stk.with_labels(labels)?)
}

/// Clean-path parameter at each of `n` points spaced evenly by arc length
/// along the noisy polyline, interpolated between raw samples.
fn resampled_params(points: &[Point], params: &[f64], n: usize) -> Vec<f64> {
    let mut cum = vec![0.0];
    for w in points.windows(2) {
        cum.push(cum.last().unwrap() + w[0].distance(w[1]));
    }
    let total = *cum.last().unwrap();
    let mut out = Vec::with_capacity(n);
    let mut seg = 0;
    for j in 0..n {
        let d = total * j as f64 / (n - 1) as f64;
        while seg + 2 < cum.len() && cum[seg + 1] < d {
            seg += 1;
        }
        let len = cum[seg + 1] - cum[seg];
        let t = if len > 0.0 { ((d - cum[seg]) / len).clamp(0.0, 1.0) } else { 0.0 };
        out.push(params[seg] + t * (params[seg + 1] - params[seg]));
    }
    out
}

/// `count` strokes cycling through `shapes`. Stroke `i` has shape
/// `i % shapes.len() + 1`, person `(i / shapes) % 10 + 1` and round
/// `i / (10 · shapes) + 1`.
pub fn generate_corpus(shapes: &[ShapeSpec], count: usize, seed: u64, noise: &NoiseParams, n: usize) -> Result<Vec<Stroke>, EvalError> {
    let k = shapes.len().max(1);
    (0..count)
        .into_par_iter()
        .map(|i| {
            let stroke_seed = seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(i as u64);
            let stk = generate_template_stroke(&shapes[i % k], noise, stroke_seed, n)?;
            let id = SourceId::new(((i / k) % 10 + 1) as u32, (i / (10 * k) + 1) as u32, (i % k + 1) as u32);
            Ok(stk.with_source_id(Some(id)))
        })
        .collect()
}

// ---------------------------------------------------------------- datasets

/// File name of a stroke in a dataset directory.
pub fn dataset_file_name(id: SourceId) -> String {
    format!("{id}.stk")
}

/// Reads every `.stk` file of a flat directory, sorted by file name. Ids
/// come from `person-round-shape` file names.
pub fn load_dataset(dir: &Path) -> Result<Vec<Stroke>, EvalError> {
    let io = |source: std::io::Error| EvalError::File {
        path: dir.to_path_buf(),
        source: StrokeError::Io(source),
    };
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(io)?
        .map(|e| e.map(|e| e.path()))
        .collect::<Result<_, _>>()
        .map_err(io)?;
    paths.retain(|p| p.extension().is_some_and(|e| e == "stk"));
    paths.sort();
    paths
        .into_iter()
        .map(|path| {
            load_record(&path)
                .and_then(StrokeRecord::into_stroke)
                .map_err(|source| EvalError::File { path, source })
        })
        .collect()
}

/// Writes strokes as `person-round-shape.stk`; strokes without an id are
/// refused.
pub fn write_dataset(dir: &Path, strokes: &[Stroke]) -> Result<Vec<PathBuf>, EvalError> {
    strokes
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let id = s.source_id().ok_or(EvalError::MissingId(i))?;
            let path = dir.join(dataset_file_name(id));
            std::fs::write(&path, StrokeRecord::from_stroke(s).to_stk()).map_err(|e| EvalError::File {
                path: path.clone(),
                source: StrokeError::Io(e),
            })?;
            Ok(path)
        })
        .collect()
}

// ---------------------------------------------------------------- label noise

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct PerturbReport {
    pub requested: usize,
    pub applied: usize,
}

/// Flips Line/Curve labels at randomly chosen points until `rate` of the
/// line/curve points are flipped, skipping any flip that would create a
/// run of `max_run` or more consecutive flipped points. Feature points are
/// never touched.
pub fn perturb_labels(stk: &Stroke, rate: f64, max_run: usize, seed: u64) -> Result<(Stroke, PerturbReport), EvalError> {
    if !(0.0..=1.0).contains(&rate) {
        return Err(EvalError::InvalidRate(rate));
    }
    let labels = stk.labels();
    let n = labels.len();
    let mut eligible: Vec<usize> = (0..n).filter(|&i| PointClass::from_label(labels[i]).is_some()).collect();
    let requested = (rate * eligible.len() as f64).round() as usize;
    let mut flipped = vec![false; n];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    eligible.shuffle(&mut rng);
    let mut applied = 0;
    for i in eligible {
        if applied == requested {
            break;
        }
        let left = (0..i).rev().take_while(|&j| flipped[j]).count();
        let right = (i + 1..n).take_while(|&j| flipped[j]).count();
        if left + 1 + right >= max_run {
            continue;
        }
        flipped[i] = true;
        applied += 1;
    }
    let out: Vec<PointLabel> = labels
        .iter()
        .zip(&flipped)
        .map(|(&l, &f)| match (l, f) {
            (PointLabel::Line, true) => PointLabel::Curve,
            (PointLabel::Curve, true) => PointLabel::Line,
            (l, _) => l,
        })
        .collect();
    Ok((stk.clone().with_labels(out)?, PerturbReport { requested, applied }))
}
