//! Stroke representation, file IO, equidistant resampling, straw profiles and
//! candidate-corner extraction.

use crate::geometry::Point;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::path::Path;
use std::str::FromStr;
use thiserror::Error;

/// Default resampled point count.
pub const DEFAULT_POINTS: usize = 128;
/// Smallest resampled stroke accepted anywhere.
pub const MIN_POINTS: usize = 8;
/// Straw entry threshold of the candidate walk.
pub const DEFAULT_ENTRY: f64 = 0.995;
/// Default half-window of the straw profile.
pub const DEFAULT_STRAW_WINDOW: usize = 3;

#[derive(Debug, Error)]
pub enum StrokeError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid stroke JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("degenerate stroke: {0}")]
    Degenerate(String),
    #[error("invalid stroke: {0}")]
    Invalid(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Per-point label. The serialized integer is the enum discriminant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum PointLabel {
    Line = 0,
    Curve = 1,
    Corner = 2,
    Tangent = 3,
    #[default]
    Unlabeled = -1,
}

impl PointLabel {
    pub fn code(self) -> i8 {
        self as i8
    }

    pub fn from_code(code: i64) -> Option<Self> {
        Some(match code {
            0 => PointLabel::Line,
            1 => PointLabel::Curve,
            2 => PointLabel::Corner,
            3 => PointLabel::Tangent,
            -1 => PointLabel::Unlabeled,
            _ => return None,
        })
    }

    pub fn is_feature(self) -> bool {
        matches!(self, PointLabel::Corner | PointLabel::Tangent)
    }
}

impl Serialize for PointLabel {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_i8(self.code())
    }
}

impl<'de> Deserialize<'de> for PointLabel {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let code = i64::deserialize(d)?;
        PointLabel::from_code(code).ok_or_else(|| serde::de::Error::custom(format!("unknown point label {code}")))
    }
}

/// `person-round-shape`, as in `13-4-14.stk`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SourceId {
    pub person: u32,
    pub round: u32,
    pub shape: u32,
}

impl SourceId {
    pub fn new(person: u32, round: u32, shape: u32) -> Self {
        Self { person, round, shape }
    }

    /// Parses a file name such as `13-4-14.stk`; `None` if it does not match.
    pub fn from_file_name(path: &Path) -> Option<Self> {
        path.file_stem()?.to_str()?.parse().ok()
    }
}

impl fmt::Display for SourceId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}-{}", self.person, self.round, self.shape)
    }
}

impl FromStr for SourceId {
    type Err = StrokeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || StrokeError::Invalid(format!("source id {s:?} is not person-round-shape"));
        let mut it = s.split('-');
        let mut next = || -> Result<u32, StrokeError> { it.next().ok_or_else(bad)?.parse().map_err(|_| bad()) };
        let id = SourceId::new(next()?, next()?, next()?);
        if it.next().is_some() {
            return Err(bad());
        }
        Ok(id)
    }
}

impl Serialize for SourceId {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for SourceId {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Pen samples as captured, before resampling.
#[derive(Debug, Clone, PartialEq)]
pub struct RawStroke {
    pub points: Vec<Point>,
    pub source_id: Option<SourceId>,
}

impl RawStroke {
    /// Drops consecutive duplicates; fails unless two distinct points remain.
    pub fn new(points: Vec<Point>, source_id: Option<SourceId>) -> Result<Self, StrokeError> {
        let mut out: Vec<Point> = Vec::with_capacity(points.len());
        for p in points {
            if !(p.x.is_finite() && p.y.is_finite()) {
                return Err(StrokeError::Invalid("non-finite coordinate".into()));
            }
            if out.last() != Some(&p) {
                out.push(p);
            }
        }
        if out.len() < 2 {
            return Err(StrokeError::Degenerate(format!("{} distinct point(s)", out.len())));
        }
        Ok(Self { points: out, source_id })
    }

    pub fn length(&self) -> f64 {
        polyline_length(&self.points)
    }
}

/// A resampled stroke with one label per point.
#[derive(Debug, Clone, PartialEq)]
pub struct Stroke {
    points: Vec<Point>,
    labels: Vec<PointLabel>,
    source_id: Option<SourceId>,
}

impl Stroke {
    pub fn new(points: Vec<Point>, labels: Vec<PointLabel>, source_id: Option<SourceId>) -> Result<Self, StrokeError> {
        if points.len() < MIN_POINTS {
            return Err(StrokeError::Invalid(format!(
                "resampled stroke needs at least {MIN_POINTS} points, got {}",
                points.len()
            )));
        }
        if labels.len() != points.len() {
            return Err(StrokeError::Invalid(format!(
                "{} labels for {} points",
                labels.len(),
                points.len()
            )));
        }
        if points.iter().any(|p| !(p.x.is_finite() && p.y.is_finite())) {
            return Err(StrokeError::Invalid("non-finite coordinate".into()));
        }
        Ok(Self {
            points,
            labels,
            source_id,
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn labels(&self) -> &[PointLabel] {
        &self.labels
    }

    pub fn source_id(&self) -> Option<SourceId> {
        self.source_id
    }

    pub fn with_labels(mut self, labels: Vec<PointLabel>) -> Result<Self, StrokeError> {
        if labels.len() != self.points.len() {
            return Err(StrokeError::Invalid(format!(
                "{} labels for {} points",
                labels.len(),
                self.points.len()
            )));
        }
        self.labels = labels;
        Ok(self)
    }

    pub fn with_source_id(mut self, id: Option<SourceId>) -> Self {
        self.source_id = id;
        self
    }

    pub fn is_fully_labeled(&self) -> bool {
        !self.labels.contains(&PointLabel::Unlabeled)
    }

    /// Mean distance between consecutive points.
    pub fn spacing(&self) -> f64 {
        polyline_length(&self.points) / (self.points.len() - 1) as f64
    }

    pub fn to_raw(&self) -> RawStroke {
        RawStroke {
            points: self.points.clone(),
            source_id: self.source_id,
        }
    }
}

pub fn polyline_length(points: &[Point]) -> f64 {
    points.windows(2).map(|w| w[0].distance(w[1])).sum()
}

/// The on-disk document shared by the `.stk` and JSON formats.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrokeRecord {
    pub points: Vec<Point>,
    #[serde(default)]
    pub labels: Vec<PointLabel>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_id: Option<SourceId>,
}

impl StrokeRecord {
    fn check_labels(&self) -> Result<(), StrokeError> {
        if !self.labels.is_empty() && self.labels.len() != self.points.len() {
            return Err(StrokeError::Invalid(format!(
                "{} labels for {} points",
                self.labels.len(),
                self.points.len()
            )));
        }
        Ok(())
    }

    /// Labels padded with `Unlabeled` when the record carries none.
    pub fn labels_or_unlabeled(&self) -> Vec<PointLabel> {
        if self.labels.is_empty() {
            vec![PointLabel::Unlabeled; self.points.len()]
        } else {
            self.labels.clone()
        }
    }

    pub fn into_raw(self) -> Result<RawStroke, StrokeError> {
        RawStroke::new(self.points, self.source_id)
    }

    /// Interprets the record as an already-resampled labelled stroke.
    pub fn into_stroke(self) -> Result<Stroke, StrokeError> {
        self.check_labels()?;
        let labels = self.labels_or_unlabeled();
        Stroke::new(self.points, labels, self.source_id)
    }

    pub fn from_stroke(stk: &Stroke) -> Self {
        Self {
            points: stk.points.clone(),
            labels: stk.labels.clone(),
            source_id: stk.source_id,
        }
    }

    pub fn to_stk(&self) -> String {
        let labels = self.labels_or_unlabeled();
        let mut out = format!("{}\n", self.points.len());
        for (p, l) in self.points.iter().zip(labels) {
            out.push_str(&format!("{:?} {:?} {}\n", p.x, p.y, l.code()));
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("stroke records always serialize")
    }
}

/// Parses the `.stk` text format: a point count line followed by
/// `x y label` lines. Blank lines are ignored.
pub fn parse_stk(text: &str) -> Result<StrokeRecord, StrokeError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty());
    let (first_no, first) = lines.next().ok_or(StrokeError::Parse {
        line: 1,
        message: "empty file".into(),
    })?;
    let count: usize = first.parse().map_err(|_| StrokeError::Parse {
        line: first_no,
        message: format!("expected point count, found {first:?}"),
    })?;
    let mut points = Vec::with_capacity(count.min(1 << 16));
    let mut labels = Vec::with_capacity(count.min(1 << 16));
    for (no, line) in lines {
        let err = |message: String| StrokeError::Parse { line: no, message };
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(err(format!("expected `x y label`, found {} field(s)", fields.len())));
        }
        let coord = |s: &str| -> Result<f64, StrokeError> {
            let v: f64 = s.parse().map_err(|_| err(format!("bad coordinate {s:?}")))?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(err(format!("non-finite coordinate {s:?}")))
            }
        };
        let x = coord(fields[0])?;
        let y = coord(fields[1])?;
        let label = fields[2]
            .parse::<i64>()
            .ok()
            .and_then(PointLabel::from_code)
            .ok_or_else(|| err(format!("bad label {:?}", fields[2])))?;
        points.push(Point::new(x, y));
        labels.push(label);
        if points.len() > count {
            return Err(err(format!("more points than the declared {count}")));
        }
    }
    if points.len() != count {
        return Err(StrokeError::Parse {
            line: text.lines().count().max(1),
            message: format!("declared {count} points, found {}", points.len()),
        });
    }
    Ok(StrokeRecord {
        points,
        labels,
        source_id: None,
    })
}

pub fn parse_stroke_json(text: &str) -> Result<StrokeRecord, StrokeError> {
    let rec: StrokeRecord = serde_json::from_str(text)?;
    if rec.points.iter().any(|p| !(p.x.is_finite() && p.y.is_finite())) {
        return Err(StrokeError::Invalid("non-finite coordinate".into()));
    }
    rec.check_labels()?;
    Ok(rec)
}

/// Parses either format; JSON is recognized by a leading `{`.
pub fn parse_record(text: &str) -> Result<StrokeRecord, StrokeError> {
    if text.trim_start().starts_with('{') {
        parse_stroke_json(text)
    } else {
        parse_stk(text)
    }
}

/// Reads a stroke file; the source id comes from a `person-round-shape`
/// file name, else from the JSON body.
pub fn load_record(path: &Path) -> Result<StrokeRecord, StrokeError> {
    let text = std::fs::read_to_string(path)?;
    let mut rec = parse_record(&text)?;
    if let Some(id) = SourceId::from_file_name(path) {
        rec.source_id = Some(id);
    }
    Ok(rec)
}

pub fn load_stroke(path: &Path) -> Result<RawStroke, StrokeError> {
    load_record(path)?.into_raw()
}

/// Equidistant arc-length resampling to `n` points. The endpoints are kept
/// exactly; labels are all `Unlabeled`.
pub fn resample(raw: &RawStroke, n: usize) -> Result<Stroke, StrokeError> {
    if n < MIN_POINTS {
        return Err(StrokeError::Invalid(format!("resample count {n} below {MIN_POINTS}")));
    }
    let pts = &raw.points;
    let total = polyline_length(pts);
    if !(total > 0.0) {
        return Err(StrokeError::Degenerate("zero total length".into()));
    }
    let step = total / (n - 1) as f64;
    let mut out = Vec::with_capacity(n);
    out.push(pts[0]);
    let mut seg = 0;
    let mut seg_start = 0.0; // arc length at pts[seg]
    let mut seg_len = pts[0].distance(pts[1]);
    for j in 1..n - 1 {
        let target = step * j as f64;
        while seg_start + seg_len < target && seg + 2 < pts.len() {
            seg_start += seg_len;
            seg += 1;
            seg_len = pts[seg].distance(pts[seg + 1]);
        }
        let t = if seg_len > 0.0 {
            ((target - seg_start) / seg_len).clamp(0.0, 1.0)
        } else {
            0.0
        };
        out.push(pts[seg].lerp(pts[seg + 1], t));
    }
    out.push(*pts.last().unwrap());
    Stroke::new(out, vec![PointLabel::Unlabeled; n], raw.source_id)
}

/// Per-point normalized straw values.
#[derive(Debug, Clone, PartialEq)]
pub struct StrawProfile {
    pub values: Vec<f64>,
    pub window: usize,
}

/// `straw_i = |p[i+w] - p[i-w]| / path(i-w .. i+w)`; indices within `w` of an
/// end copy the nearest computable value.
pub fn straw(stk: &Stroke, w: usize) -> StrawProfile {
    straw_of_points(stk.points(), w)
}

pub fn straw_of_points(points: &[Point], w: usize) -> StrawProfile {
    let n = points.len();
    assert!(w >= 1 && 2 * w < n, "straw window {w} invalid for {n} points");
    let mut cum = Vec::with_capacity(n);
    cum.push(0.0);
    for pair in points.windows(2) {
        cum.push(cum.last().unwrap() + pair[0].distance(pair[1]));
    }
    let mut values = vec![0.0; n];
    for i in w..n - w {
        let path = cum[i + w] - cum[i - w];
        let chord = points[i + w].distance(points[i - w]);
        values[i] = if path > 0.0 { (chord / path).min(1.0) } else { 1.0 };
    }
    let (first, last) = (values[w], values[n - w - 1]);
    values[..w].fill(first);
    values[n - w..].fill(last);
    StrawProfile { values, window: w }
}

/// Candidate corners, always including both stroke endpoints.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CandidateCornerSet {
    pub indices: Vec<usize>,
}

impl CandidateCornerSet {
    pub fn is_endpoint(&self, idx: usize) -> bool {
        idx == 0 || Some(&idx) == self.indices.last()
    }

    pub fn interior(&self) -> &[usize] {
        let k = self.indices.len();
        if k <= 2 {
            &[]
        } else {
            &self.indices[1..k - 1]
        }
    }
}

/// Entry value and exit-line coefficients of the candidate walk.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WalkParams {
    pub entry: f64,
    /// `exit = exit_slope · straw_min + exit_offset`
    pub exit_slope: f64,
    pub exit_offset: f64,
}

impl Default for WalkParams {
    fn default() -> Self {
        Self {
            entry: DEFAULT_ENTRY,
            exit_slope: 0.4,
            exit_offset: 0.6,
        }
    }
}

pub fn candidate_corners(profile: &StrawProfile) -> CandidateCornerSet {
    candidate_corners_with(profile, &WalkParams::default())
}

/// Walks the straw curve: a window opens when the value first drops below
/// `entry` and closes at the first value reaching the dynamic exit line,
/// emitting the window's minimum. A window still open at the end emits too.
pub fn candidate_corners_with(profile: &StrawProfile, params: &WalkParams) -> CandidateCornerSet {
    let v = &profile.values;
    let n = v.len();
    let mut indices = vec![0];
    let mut open: Option<(usize, f64)> = None;
    let emit = |idx: usize, out: &mut Vec<usize>| {
        if idx > 0 && idx + 1 < n && *out.last().unwrap() < idx {
            out.push(idx);
        }
    };
    for (i, &s) in v.iter().enumerate() {
        match open {
            None => {
                if s < params.entry {
                    open = Some((i, s));
                }
            }
            Some((min_idx, min)) => {
                let (min_idx, min) = if s < min { (i, s) } else { (min_idx, min) };
                if s >= params.exit_slope * min + params.exit_offset {
                    emit(min_idx, &mut indices);
                    open = None;
                } else {
                    open = Some((min_idx, min));
                }
            }
        }
    }
    if let Some((min_idx, _)) = open {
        emit(min_idx, &mut indices);
    }
    if n > 1 {
        indices.push(n - 1);
    }
    CandidateCornerSet { indices }
}
