//! Vote-based segment merging.
//!
//! The points strictly between two consecutive corners form a chain. Runs of
//! identically classified points are segments; a segment is short when its
//! length is below the dynamic threshold ε₁. Merging proceeds in three
//! chain-level passes:
//!
//! 1. short segments with a single long neighbour are absorbed by the longest
//!    available long segment (case 1), or the whole chain takes the majority
//!    type when no long segment exists;
//! 2. short segments between two long segments are resolved by curvature sign,
//!    circle split or line intersection (case 2);
//! 3. long segments are visited shortest first and either merged into their
//!    neighbours or kept (cases 3 and 4).
//!
//! Transitions left between primitives become tangent points, except where a
//! corner was inserted by a line-intersection split.

use crate::classifier::PointClass;
use crate::geometry::{
    angle_ratio_is_corner, curvature_sign, fit_circle, fit_line, intersect_angle, point_circle_distance,
    point_line_distance, AngleRatioParams, FitCircle, FitLine, Point,
};
use serde::{Deserialize, Serialize};

/// ε₁ = min(cap, max(floor, ceil(coefficient · N))).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Eps1Rule {
    pub coefficient: f64,
    pub floor: usize,
    pub cap: usize,
}

impl Default for Eps1Rule {
    fn default() -> Self {
        Self {
            coefficient: 0.05,
            floor: 2,
            cap: 4,
        }
    }
}

impl Eps1Rule {
    pub fn threshold(&self, n: usize) -> usize {
        let raw = (self.coefficient * n as f64).ceil() as usize;
        raw.max(self.floor).min(self.cap)
    }
}

pub fn threshold_eps1(n: usize) -> usize {
    Eps1Rule::default().threshold(n)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MergeParams {
    pub eps1: Eps1Rule,
    /// Lines meeting below this angle (degrees) are collinear.
    pub collinear_deg: f64,
    /// A long segment between two longer ones is merged when shorter than
    /// this fraction of the longer neighbour.
    pub case3_ratio: f64,
    /// A boundary long segment is merged when shorter than this fraction of
    /// its neighbour.
    pub case4_ratio: f64,
    /// Points taken from each neighbour for the circle split.
    pub circle_fit_points: usize,
    pub angle_ratio: AngleRatioParams,
}

impl Default for MergeParams {
    fn default() -> Self {
        Self {
            eps1: Eps1Rule::default(),
            collinear_deg: 10.0,
            case3_ratio: 0.25,
            case4_ratio: 0.3,
            circle_fit_points: 5,
            angle_ratio: AngleRatioParams::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureKind {
    Corner,
    Tangent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeaturePoint {
    pub kind: FeatureKind,
    pub index: usize,
}

/// A maximal run of one point class, inclusive bounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segment {
    pub kind: PointClass,
    pub start: usize,
    pub end: usize,
}

impl Segment {
    pub fn len(&self) -> usize {
        self.end - self.start + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// The merger's working state for one chain.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentChain {
    segments: Vec<Segment>,
    /// `locks[i]` sits between `segments[i]` and `segments[i + 1]`. A locked
    /// boundary carries an explicitly placed feature point and is never
    /// collapsed or merged across.
    locks: Vec<Option<FeaturePoint>>,
    eps1: usize,
}

/// One long segment's turn during the case-1 pass.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Case1Visit {
    /// Position of the long segment in the chain as first built.
    pub segment: usize,
    pub len_before: usize,
    pub len_after: usize,
}

impl SegmentChain {
    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn len(&self) -> usize {
        self.segments.last().map_or(0, |s| s.end + 1)
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    pub fn eps1(&self) -> usize {
        self.eps1
    }

    pub fn lengths(&self) -> Vec<usize> {
        self.segments.iter().map(Segment::len).collect()
    }

    pub fn is_short(&self, seg: &Segment) -> bool {
        seg.len() < self.eps1
    }

    pub fn short_count(&self) -> usize {
        self.segments.iter().filter(|s| self.is_short(s)).count()
    }

    /// Locked boundaries (feature points placed by a split).
    pub fn locks(&self) -> impl Iterator<Item = FeaturePoint> + '_ {
        self.locks.iter().flatten().copied()
    }

    /// Point class per chain point.
    pub fn classes(&self) -> Vec<PointClass> {
        let mut out = Vec::with_capacity(self.len());
        for s in &self.segments {
            out.extend(std::iter::repeat_n(s.kind, s.len()));
        }
        out
    }

    /// Feature points at every primitive transition: the locked feature where
    /// one was placed, otherwise a tangent at the first point of the right
    /// segment.
    pub fn features(&self) -> Vec<FeaturePoint> {
        self.locks
            .iter()
            .enumerate()
            .filter_map(|(i, lock)| match lock {
                Some(f) => Some(*f),
                None if self.segments[i].kind != self.segments[i + 1].kind => Some(FeaturePoint {
                    kind: FeatureKind::Tangent,
                    index: self.segments[i + 1].start,
                }),
                None => None,
            })
            .collect()
    }

    fn check_tiling(&self) {
        debug_assert_eq!(self.locks.len() + 1, self.segments.len().max(1));
        debug_assert!(self.segments.first().is_none_or(|s| s.start == 0));
        debug_assert!(self.segments.windows(2).all(|w| w[0].end + 1 == w[1].start));
    }

    /// Absorbs segment `j` into its neighbour `i`; returns `i`'s new position.
    fn absorb(&mut self, i: usize, j: usize) -> usize {
        debug_assert!(i.abs_diff(j) == 1);
        let (lo, hi) = (i.min(j), i.max(j));
        debug_assert!(self.locks[lo].is_none());
        let kind = self.segments[i].kind;
        self.segments[lo] = Segment {
            kind,
            start: self.segments[lo].start,
            end: self.segments[hi].end,
        };
        self.segments.remove(hi);
        self.locks.remove(lo);
        self.check_tiling();
        lo
    }

    /// Merges `i - 1`, `i`, `i + 1` into one segment of the neighbours' kind.
    fn merge_three(&mut self, i: usize) {
        let kind = self.segments[i - 1].kind;
        self.segments[i].kind = kind;
        let at = self.absorb(i - 1, i);
        self.absorb(at, at + 1);
    }

    /// Moves the points of segment `i` into its neighbours: the first `k`
    /// points go left, the rest right, and the boundary is locked with
    /// `feature`.
    fn split_into_neighbours(&mut self, i: usize, k: usize, kind: FeatureKind, feature_at: impl Fn(usize) -> usize) {
        let mid = self.segments[i];
        let cut = mid.start + k; // first index going right
        self.segments[i - 1].end = cut - 1;
        self.segments[i + 1].start = cut;
        self.segments.remove(i);
        self.locks.remove(i);
        self.locks[i - 1] = Some(FeaturePoint {
            kind,
            index: feature_at(cut),
        });
        self.check_tiling();
    }

    /// Merges adjacent same-kind segments across unlocked boundaries.
    fn collapse(&mut self) {
        let mut i = 0;
        while i + 1 < self.segments.len() {
            if self.locks[i].is_none() && self.segments[i].kind == self.segments[i + 1].kind {
                self.absorb(i, i + 1);
            } else {
                i += 1;
            }
        }
    }

    fn has_long(&self) -> bool {
        self.segments.iter().any(|s| !self.is_short(s))
    }

    fn relabel_majority(&mut self) {
        let lines: usize = self
            .segments
            .iter()
            .filter(|s| s.kind == PointClass::LinePoint)
            .map(Segment::len)
            .sum();
        let n = self.len();
        let kind = if 2 * lines > n {
            PointClass::LinePoint
        } else {
            PointClass::CurvePoint
        };
        self.segments = vec![Segment {
            kind,
            start: 0,
            end: n - 1,
        }];
        self.locks.clear();
    }

    /// Case 1. Long segments absorb short neighbours that have no other long
    /// neighbour, then that short segment's other neighbour, longest first.
    /// Without any long segment the chain takes the majority type.
    pub fn merge_case1(&mut self) -> Vec<Case1Visit> {
        if self.segments.is_empty() {
            return Vec::new();
        }
        if !self.has_long() {
            self.relabel_majority();
            return Vec::new();
        }
        let mut ids: Vec<usize> = (0..self.segments.len()).collect();
        let order = self.case1_priority();
        let mut visits = Vec::with_capacity(order.len());
        for id in order {
            let Some(mut pos) = ids.iter().position(|&x| x == id) else {
                continue;
            };
            let len_before = self.segments[pos].len();
            loop {
                let mut changed = false;
                if let Some(count) = self.case1_absorbable(pos, false) {
                    for _ in 0..count {
                        pos = self.absorb(pos, pos - 1);
                        ids.remove(pos);
                    }
                    changed = true;
                }
                if let Some(count) = self.case1_absorbable(pos, true) {
                    for _ in 0..count {
                        pos = self.absorb(pos, pos + 1);
                        ids.remove(pos + 1);
                    }
                    changed = true;
                }
                if !changed {
                    break;
                }
            }
            visits.push(Case1Visit {
                segment: id,
                len_before,
                len_after: self.segments[pos].len(),
            });
        }
        self.collapse();
        visits
    }

    /// Long segments, longest first; equal lengths put the longest segment's
    /// kind first, then the lower start.
    fn case1_priority(&self) -> Vec<usize> {
        let mut longs: Vec<usize> = (0..self.segments.len()).filter(|&i| !self.is_short(&self.segments[i])).collect();
        let top = longs
            .iter()
            .max_by(|&&a, &&b| {
                self.segments[a]
                    .len()
                    .cmp(&self.segments[b].len())
                    .then(self.segments[b].start.cmp(&self.segments[a].start))
            })
            .map(|&i| self.segments[i].kind);
        longs.sort_by(|&a, &b| {
            let (sa, sb) = (&self.segments[a], &self.segments[b]);
            sb.len()
                .cmp(&sa.len())
                .then_with(|| (Some(sb.kind) == top).cmp(&(Some(sa.kind) == top)))
                .then(sa.start.cmp(&sb.start))
        });
        longs
    }

    /// How many segments the long segment at `pos` absorbs on one side: the
    /// short neighbour alone when it ends the chain, the short neighbour and
    /// the short beyond it otherwise. `None` when the neighbour is long or
    /// the short neighbour is bordered by another long segment.
    fn case1_absorbable(&self, pos: usize, right: bool) -> Option<usize> {
        let neighbour = |i: usize| -> Option<(usize, usize)> {
            // (segment, lock between i and it)
            if right {
                (i + 1 < self.segments.len()).then_some((i + 1, i))
            } else {
                i.checked_sub(1).map(|j| (j, j))
            }
        };
        let (near, lock) = neighbour(pos)?;
        if self.locks[lock].is_some() || !self.is_short(&self.segments[near]) {
            return None;
        }
        match neighbour(near) {
            None => Some(1),
            Some((_, far_lock)) if self.locks[far_lock].is_some() => Some(1),
            Some((far, _)) => self.is_short(&self.segments[far]).then_some(2),
        }
    }

    /// Case 2. Every remaining short segment lies between two long segments
    /// and is resolved against them.
    pub fn merge_case2(&mut self, points: &[Point], params: &MergeParams) {
        while let Some(i) = (0..self.segments.len()).find(|&i| self.is_short(&self.segments[i])) {
            let has_left = i > 0;
            let has_right = i + 1 < self.segments.len();
            match (has_left, has_right) {
                (true, true) => self.resolve_between(i, points, params),
                (true, false) => {
                    self.absorb(i - 1, i);
                }
                (false, true) => {
                    self.absorb(i + 1, i);
                }
                (false, false) => break,
            }
            self.collapse();
        }
    }

    /// Resolves segment `i` against its two neighbours of the opposite kind.
    fn resolve_between(&mut self, i: usize, points: &[Point], params: &MergeParams) {
        let (left, mid, right) = (self.segments[i - 1], self.segments[i], self.segments[i + 1]);
        debug_assert!(left.kind == right.kind && left.kind != mid.kind);
        let slice = |s: &Segment| &points[s.start..=s.end];
        match mid.kind {
            PointClass::LinePoint => {
                let same = curvature_sign(slice(&left)).agrees_with(curvature_sign(slice(&right)));
                if same {
                    self.merge_three(i);
                    return;
                }
                let m = params.circle_fit_points.max(1);
                let lp = &points[left.end + 1 - m.min(left.len())..=left.end];
                let rp = &points[right.start..right.start + m.min(right.len())];
                let dl = NeighbourModel::circle_or_line(lp);
                let dr = NeighbourModel::circle_or_line(rp);
                let k = best_split(&points[mid.start..=mid.end], &dl, &dr);
                self.split_into_neighbours(i, k, FeatureKind::Tangent, |cut| cut);
            }
            PointClass::CurvePoint => {
                let (Ok(fl), Ok(fr)) = (fit_line(slice(&left)), fit_line(slice(&right))) else {
                    self.merge_three(i);
                    return;
                };
                let x = intersect_angle(&fl, &fr);
                let Some(p) = x.point.filter(|_| x.angle_deg >= params.collinear_deg) else {
                    self.merge_three(i);
                    return;
                };
                let pts = &points[mid.start..=mid.end];
                let s = (0..pts.len())
                    .min_by(|&a, &b| pts[a].distance(p).total_cmp(&pts[b].distance(p)))
                    .unwrap();
                let goes_left = point_line_distance(pts[s], &fl) <= point_line_distance(pts[s], &fr);
                let k = if goes_left { s + 1 } else { s };
                let corner = mid.start + s;
                self.split_into_neighbours(i, k, FeatureKind::Corner, |_| corner);
            }
        }
    }

    /// Cases 3 and 4. Long segments are visited shortest first; any merge
    /// restarts the visit order since neighbour lengths changed.
    pub fn merge_long(&mut self, points: &[Point], params: &MergeParams) {
        let mut kept = vec![false; self.segments.len()];
        loop {
            let Some(i) = (0..self.segments.len())
                .filter(|&i| !kept[i])
                .min_by_key(|&i| (self.segments[i].len(), self.segments[i].start))
            else {
                break;
            };
            let len = self.segments[i].len();
            let left = (i > 0 && self.locks[i - 1].is_none()).then(|| i - 1);
            let right = (i + 1 < self.segments.len() && self.locks[i].is_none()).then(|| i + 1);
            let changed = match (left, right) {
                (Some(a), Some(b)) => {
                    let (sa, sb) = (self.segments[a], self.segments[b]);
                    let longer = sa.len().max(sb.len());
                    if sa.len() >= len && sb.len() >= len && sa.kind == sb.kind && (len as f64) < params.case3_ratio * longer as f64 {
                        self.resolve_between(i, points, params);
                        true
                    } else {
                        false
                    }
                }
                (Some(j), None) | (None, Some(j)) => {
                    let nb = self.segments[j].len();
                    if nb >= len && (len as f64) < params.case4_ratio * nb as f64 {
                        self.absorb(j, i);
                        true
                    } else {
                        false
                    }
                }
                (None, None) => false,
            };
            if changed {
                self.collapse();
                kept = vec![false; self.segments.len()];
            } else {
                kept[i] = true;
            }
        }
    }

    /// Runs the three chain-level passes in order.
    pub fn merge(&mut self, points: &[Point], params: &MergeParams) -> MergeTrace {
        let case1_visits = self.merge_case1();
        let after_case1 = self.lengths();
        self.merge_case2(points, params);
        let after_case2 = self.lengths();
        self.merge_long(points, params);
        MergeTrace {
            case1_visits,
            after_case1,
            after_case2,
            after_long: self.lengths(),
        }
    }

    pub fn primitives(&self, points: &[Point]) -> Vec<Primitive> {
        self.segments
            .iter()
            .map(|s| {
                let pts = &points[s.start..=s.end];
                let fit = match s.kind {
                    PointClass::LinePoint => fit_line(pts).ok().map(PrimitiveFit::Line),
                    PointClass::CurvePoint => fit_circle(pts)
                        .ok()
                        .map(PrimitiveFit::Circle)
                        .or_else(|| fit_line(pts).ok().map(PrimitiveFit::Line)),
                };
                Primitive {
                    kind: s.kind,
                    start: s.start,
                    end: s.end,
                    fit,
                }
            })
            .collect()
    }
}

/// Distance model for points of a neighbouring long segment.
enum NeighbourModel {
    Circle(FitCircle),
    Line(FitLine),
    Point(Point),
}

impl NeighbourModel {
    fn circle_or_line(points: &[Point]) -> Self {
        match fit_circle(points) {
            Ok(c) => NeighbourModel::Circle(c),
            Err(_) => match fit_line(points) {
                Ok(l) => NeighbourModel::Line(l),
                Err(_) => NeighbourModel::Point(points[0]),
            },
        }
    }

    fn distance(&self, p: Point) -> f64 {
        match self {
            NeighbourModel::Circle(c) => point_circle_distance(p, c),
            NeighbourModel::Line(l) => point_line_distance(p, l),
            NeighbourModel::Point(q) => p.distance(*q),
        }
    }
}

/// Number of leading points assigned to the left model, minimizing the total
/// distance while keeping both parts contiguous.
fn best_split(points: &[Point], left: &NeighbourModel, right: &NeighbourModel) -> usize {
    let dl: Vec<f64> = points.iter().map(|&p| left.distance(p)).collect();
    let dr: Vec<f64> = points.iter().map(|&p| right.distance(p)).collect();
    let mut cost: f64 = dr.iter().sum();
    let (mut best, mut best_cost) = (0, cost);
    for k in 1..=points.len() {
        cost += dl[k - 1] - dr[k - 1];
        if cost < best_cost {
            best = k;
            best_cost = cost;
        }
    }
    best
}

/// Builds a chain from per-point classes.
pub fn build_chain(labels: &[PointClass]) -> SegmentChain {
    build_chain_with(labels, &Eps1Rule::default())
}

pub fn build_chain_with(labels: &[PointClass], rule: &Eps1Rule) -> SegmentChain {
    let mut segments: Vec<Segment> = Vec::new();
    for (i, &kind) in labels.iter().enumerate() {
        match segments.last_mut() {
            Some(s) if s.kind == kind => s.end = i,
            _ => segments.push(Segment { kind, start: i, end: i }),
        }
    }
    let locks = vec![None; segments.len().saturating_sub(1)];
    SegmentChain {
        segments,
        locks,
        eps1: rule.threshold(labels.len().max(1)),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum PrimitiveFit {
    Line(FitLine),
    Circle(FitCircle),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Primitive {
    pub kind: PointClass,
    pub start: usize,
    pub end: usize,
    pub fit: Option<PrimitiveFit>,
}

/// Segment lengths after each pass.
#[derive(Debug, Clone, PartialEq)]
pub struct MergeTrace {
    pub case1_visits: Vec<Case1Visit>,
    pub after_case1: Vec<usize>,
    pub after_case2: Vec<usize>,
    pub after_long: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MergeOutcome {
    pub chain: SegmentChain,
    pub primitives: Vec<Primitive>,
    /// Chain-local feature points.
    pub features: Vec<FeaturePoint>,
    pub trace: MergeTrace,
}

/// Merges one chain given its points and per-point classes.
pub fn merge_chain(points: &[Point], labels: &[PointClass], params: &MergeParams) -> MergeOutcome {
    assert_eq!(points.len(), labels.len(), "chain points and labels differ in length");
    let mut chain = build_chain_with(labels, &params.eps1);
    let trace = chain.merge(points, params);
    MergeOutcome {
        primitives: chain.primitives(points),
        features: chain.features(),
        chain,
        trace,
    }
}

/// Keeps stroke endpoints and the interior corners that pass the angle-ratio
/// test. Rays are clamped at the neighbouring corners of the input list.
pub fn remove_false_corners(points: &[Point], corners: &[usize], params: &AngleRatioParams) -> Vec<usize> {
    let n = points.len();
    let mut sorted: Vec<usize> = corners.iter().copied().filter(|&c| c < n).collect();
    sorted.sort_unstable();
    sorted.dedup();
    let mut out = Vec::with_capacity(sorted.len());
    for (k, &c) in sorted.iter().enumerate() {
        if c == 0 || c + 1 == n {
            out.push(c);
            continue;
        }
        let lo = if k > 0 { sorted[k - 1] } else { 0 };
        let hi = sorted.get(k + 1).copied().unwrap_or(n - 1);
        if angle_ratio_is_corner(points, c, lo, hi, params) {
            out.push(c);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use PointClass::{CurvePoint as C, LinePoint as L};

    fn labels_from(lengths: &[usize], first: PointClass) -> Vec<PointClass> {
        let mut out = Vec::new();
        let mut kind = first;
        for &n in lengths {
            out.extend(std::iter::repeat_n(kind, n));
            kind = if kind == L { C } else { L };
        }
        out
    }

    fn arc(n: usize, radius: f64, step_deg: f64) -> Vec<Point> {
        (0..n)
            .map(|i| {
                let a = (i as f64 * step_deg).to_radians();
                Point::new(radius * a.cos(), radius * a.sin())
            })
            .collect()
    }

    fn line(n: usize) -> Vec<Point> {
        (0..n).map(|i| Point::new(i as f64 * 3.0, 0.0)).collect()
    }

    #[test]
    fn eps1_rule() {
        assert_eq!(threshold_eps1(69), 4);
        assert_eq!(threshold_eps1(111), 4);
        assert_eq!(threshold_eps1(40), 2);
        assert_eq!(threshold_eps1(41), 3);
        assert_eq!(threshold_eps1(1), 2);
    }

    #[test]
    fn build_chain_runs() {
        let c = build_chain(&labels_from(&[1, 4, 4, 2, 1, 1, 1, 1, 2, 11, 3, 2, 6, 1, 1, 13, 2, 6, 3, 4], L));
        assert_eq!(c.segments().len(), 20);
        assert_eq!(c.short_count(), 13);
        assert_eq!(c.len(), 69);
        assert_eq!(c.eps1(), 4);

        assert_eq!(build_chain(&[C; 9]).segments().len(), 1);
        let alt = build_chain(&[L, C, L, C, L, C]);
        assert_eq!(alt.segments().len(), 6);
        assert_eq!(alt.short_count(), 6);
    }

    #[test]
    fn one_long_one_short_collapses() {
        let mut c = build_chain(&labels_from(&[10, 1], C));
        c.merge_case1();
        assert_eq!(c.segments(), &[Segment { kind: C, start: 0, end: 10 }]);
    }

    #[test]
    fn all_short_chain_takes_majority() {
        // 5 line and 3 curve points in runs shorter than eps1 = 2 ... 3 at N=8
        let labels = [L, C, L, L, C, L, C, L];
        let mut chain = build_chain_with(&labels, &Eps1Rule { coefficient: 0.05, floor: 3, cap: 4 });
        assert!(!chain.has_long());
        chain.merge_case1();
        // Oracle: count.
        let lines = labels.iter().filter(|&&k| k == L).count();
        let expect = if 2 * lines > labels.len() { L } else { C };
        assert_eq!(chain.segments(), &[Segment { kind: expect, start: 0, end: 7 }]);
        assert_eq!(expect, L);
    }

    #[test]
    fn majority_tie_resolves_to_curve() {
        let mut chain = build_chain_with(&[L, C, L, C], &Eps1Rule { coefficient: 0.0, floor: 3, cap: 3 });
        chain.merge_case1();
        assert_eq!(chain.segments()[0].kind, C);
    }

    #[test]
    fn single_kind_chain_is_identity() {
        let pts = line(30);
        let out = merge_chain(&pts, &[L; 30], &MergeParams::default());
        assert_eq!(out.chain.segments().len(), 1);
        assert!(out.features.is_empty());
        assert_eq!(out.primitives.len(), 1);
    }

    #[test]
    fn s_shape_inserts_tangent() {
        // Two CCW/CW arcs joined at an inflection with a 2-point line short.
        let mut pts = Vec::new();
        for i in 0..30 {
            let a = std::f64::consts::PI * (1.0 - i as f64 / 29.0);
            pts.push(Point::new(50.0 + 50.0 * a.cos(), 50.0 * a.sin()));
        }
        for i in 1..=30 {
            let a = std::f64::consts::PI * (1.0 + i as f64 / 30.0);
            pts.push(Point::new(150.0 + 50.0 * a.cos(), 50.0 * a.sin()));
        }
        let mut labels = vec![C; pts.len()];
        labels[29] = L;
        labels[30] = L;
        let out = merge_chain(&pts, &labels, &MergeParams::default());
        assert_eq!(out.chain.segments().len(), 2);
        assert!(out.chain.segments().iter().all(|s| s.kind == C));
        assert_eq!(out.features.len(), 1);
        assert_eq!(out.features[0].kind, FeatureKind::Tangent);
        assert!(out.features[0].index.abs_diff(30) <= 1);
    }

    #[test]
    fn smooth_right_angle_inserts_corner() {
        // Horizontal line, a rounded bend, vertical line.
        let mut pts: Vec<Point> = (0..20).map(|i| Point::new(i as f64 * 3.0, 0.0)).collect();
        let c = Point::new(57.0, 6.0);
        for k in 1..=2 {
            let a = (-90.0 + 30.0 * k as f64).to_radians();
            pts.push(c + Point::new(a.cos(), a.sin()) * 6.0);
        }
        pts.extend((0..20).map(|i| Point::new(63.0, 6.0 + i as f64 * 3.0)));
        let mut labels = vec![L; pts.len()];
        labels[20] = C;
        labels[21] = C;
        let out = merge_chain(&pts, &labels, &MergeParams::default());
        let corners: Vec<_> = out.features.iter().filter(|f| f.kind == FeatureKind::Corner).collect();
        assert_eq!(corners.len(), 1);
        assert!(out.features.len() == 1);
        // Nearest short point to the intersection (63, 0).
        let p = Point::new(63.0, 0.0);
        let nearest = if pts[20].distance(p) <= pts[21].distance(p) { 20 } else { 21 };
        assert_eq!(corners[0].index, nearest);
        assert!(out.chain.segments().iter().all(|s| s.kind == L));
    }

    #[test]
    fn collinear_lines_absorb_curve_short() {
        let pts = line(40);
        let mut labels = vec![L; 40];
        labels[20] = C;
        labels[21] = C;
        let out = merge_chain(&pts, &labels, &MergeParams::default());
        assert_eq!(out.chain.segments().len(), 1);
        assert!(out.features.is_empty());
    }

    #[test]
    fn single_curve_golden_trace() {
        let lengths = [1, 4, 4, 2, 1, 1, 1, 1, 2, 11, 3, 2, 6, 1, 1, 13, 2, 6, 3, 4];
        let labels = labels_from(&lengths, L);
        let pts = arc(69, 200.0, 1.5);
        let out = merge_chain(&pts, &labels, &MergeParams::default());
        let visits: Vec<(usize, usize)> = out.trace.case1_visits.iter().map(|v| (v.segment, v.len_after)).collect();
        // LS5, LS3, LS6, LS4, LS1, LS7, LS2 at positions 15, 9, 17, 12, 1, 19, 2.
        assert_eq!(visits, vec![(15, 15), (9, 24), (17, 6), (12, 6), (1, 5), (19, 4), (2, 4)]);
        assert_eq!(out.trace.after_case1, vec![5, 4, 24, 6, 15, 2, 6, 3, 4]);
        assert_eq!(out.trace.after_case2, vec![5, 4, 24, 6, 30]);
        assert_eq!(out.trace.after_long, vec![69]);
        assert!(out.features.is_empty());
        assert_eq!(out.chain.segments()[0].kind, C);
    }

    /// Points along a tangent-continuous path; each piece is (points, turn
    /// per point in degrees).
    fn turtle(pieces: &[(usize, f64)], step: f64) -> Vec<Point> {
        let (mut p, mut heading) = (Point::new(0.0, 0.0), 0.0f64);
        let mut out = Vec::new();
        for &(count, turn) in pieces {
            for _ in 0..count {
                out.push(p);
                heading += turn.to_radians();
                p = p + Point::new(heading.cos(), heading.sin()) * step;
            }
        }
        out
    }

    #[test]
    fn tangent_chain_golden_trace() {
        let lengths = [14, 9, 1, 4, 16, 13, 12, 1, 2, 17, 22];
        let labels = labels_from(&lengths, L);
        assert_eq!(labels.len(), 111);
        let pts = turtle(&[(14, 0.0), (14, 6.0), (16, 0.0), (13, -7.0), (12, 0.0), (20, 5.0), (22, 0.0)], 4.0);
        let out = merge_chain(&pts, &labels, &MergeParams::default());
        assert_eq!(out.chain.eps1(), 4);
        assert_eq!(out.trace.after_case1, vec![14, 9, 1, 4, 16, 13, 12, 20, 22]);
        assert_eq!(out.trace.after_case2, vec![14, 14, 16, 13, 12, 20, 22]);
        assert_eq!(out.trace.after_long, vec![14, 14, 16, 13, 12, 20, 22]);
        assert_eq!(out.features.len(), 6);
        assert!(out.features.iter().all(|f| f.kind == FeatureKind::Tangent));
        let starts: Vec<usize> = out.chain.segments()[1..].iter().map(|s| s.start).collect();
        assert_eq!(out.features.iter().map(|f| f.index).collect::<Vec<_>>(), starts);
    }

    #[test]
    fn remerge_is_identity() {
        let labels = labels_from(&[14, 9, 1, 4, 16, 13, 12, 1, 2, 17, 22], L);
        let pts = turtle(&[(14, 0.0), (14, 6.0), (16, 0.0), (13, -7.0), (12, 0.0), (20, 5.0), (22, 0.0)], 4.0);
        let params = MergeParams::default();
        let mut chain = build_chain(&labels);
        chain.merge(&pts, &params);
        let once = chain.clone();
        chain.merge(&pts, &params);
        assert_eq!(chain, once);
    }

    #[test]
    fn case4_absorbs_small_boundary_segment() {
        // 5 line points then 40 curve points: 5 < 0.3 * 40.
        let pts = turtle(&[(5, 0.0), (40, 3.0)], 4.0);
        let out = merge_chain(&pts, &labels_from(&[5, 40], L), &MergeParams::default());
        assert_eq!(out.trace.after_long, vec![45]);
        assert_eq!(out.chain.segments()[0].kind, C);
        // 20 of 40 is kept.
        let pts = turtle(&[(20, 0.0), (40, 3.0)], 4.0);
        let out = merge_chain(&pts, &labels_from(&[20, 40], L), &MergeParams::default());
        assert_eq!(out.trace.after_long, vec![20, 40]);
        assert_eq!(out.features, vec![FeaturePoint { kind: FeatureKind::Tangent, index: 20 }]);
    }

    #[test]
    fn case3_reduces_to_case2() {
        // A 6-point line between two long same-sign arcs: 6 < 0.25 * 30.
        let pts = turtle(&[(30, 3.0), (6, 0.0), (30, 3.0)], 4.0);
        let out = merge_chain(&pts, &labels_from(&[30, 6, 30], C), &MergeParams::default());
        assert_eq!(out.trace.after_case2, vec![30, 6, 30]);
        assert_eq!(out.trace.after_long, vec![66]);
        assert!(out.features.is_empty());
    }

    #[test]
    fn false_corner_removal() {
        let mut pts: Vec<Point> = (0..=30).map(|i| Point::new(i as f64, 0.0)).collect();
        pts.extend((1..=30).map(|i| Point::new(30.0, i as f64)));
        let kept = remove_false_corners(&pts, &[0, 30, 60], &AngleRatioParams::default());
        assert_eq!(kept, vec![0, 30, 60]);

        let circ = arc(60, 100.0, 4.0);
        let kept = remove_false_corners(&circ, &[0, 30, 59], &AngleRatioParams::default());
        assert_eq!(kept, vec![0, 59]);
    }
}
