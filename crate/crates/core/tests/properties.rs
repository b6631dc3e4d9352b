use proptest::prelude::*;
use strokeseg::classifier::{extract_all, FeatureConfig, PointClass};
use strokeseg::eval::{perturb_labels, score_stroke, Counts, MatchRule, Metrics};
use strokeseg::geometry::Point;
use strokeseg::merge::{build_chain, merge_chain, threshold_eps1, MergeParams};
use strokeseg::pipeline::DetectionResult;
use strokeseg::stroke::{candidate_corners, resample, straw, PointLabel, RawStroke, Stroke, DEFAULT_ENTRY};

fn turtle(turns: &[f64], step: f64) -> Vec<Point> {
    let (mut p, mut h) = (Point::new(0.0, 0.0), 0.0f64);
    turns
        .iter()
        .map(|t| {
            let out = p;
            h += t.to_radians();
            p = p + Point::new(h.cos(), h.sin()) * step;
            out
        })
        .collect()
}

fn chain_strategy() -> impl Strategy<Value = (Vec<PointClass>, Vec<Point>)> {
    prop::collection::vec((1usize..18, any::<bool>(), -8.0f64..8.0), 1..14).prop_map(|runs| {
        let mut labels = Vec::new();
        let mut turns = Vec::new();
        for (len, curve, turn) in runs {
            let kind = if curve { PointClass::CurvePoint } else { PointClass::LinePoint };
            for _ in 0..len {
                labels.push(kind);
                turns.push(if curve { turn } else { 0.0 });
            }
        }
        let pts = turtle(&turns, 4.0);
        (labels, pts)
    })
}

fn rigid(p: Point, angle: f64, scale: f64, shift: Point) -> Point {
    let (c, s) = (angle.cos(), angle.sin());
    Point::new(scale * (c * p.x - s * p.y) + shift.x, scale * (s * p.x + c * p.y) + shift.y)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn merging_twice_changes_nothing((labels, pts) in chain_strategy()) {
        let params = MergeParams::default();
        let mut chain = build_chain(&labels);
        chain.merge(&pts, &params);
        let once = chain.clone();
        chain.merge(&pts, &params);
        prop_assert_eq!(chain, once);
    }

    #[test]
    fn merge_covers_chain_once((labels, pts) in chain_strategy()) {
        let out = merge_chain(&pts, &labels, &MergeParams::default());
        let segs = out.chain.segments();
        prop_assert_eq!(segs[0].start, 0);
        prop_assert_eq!(segs.last().unwrap().end, labels.len() - 1);
        for w in segs.windows(2) {
            prop_assert_eq!(w[0].end + 1, w[1].start);
        }
        prop_assert_eq!(out.features.len() + 1, segs.len());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn eps1_is_monotone_and_capped(n in 1usize..100_000) {
        let (a, b) = (threshold_eps1(n), threshold_eps1(n + 1));
        prop_assert!(a <= b);
        prop_assert!((2..=4).contains(&a));
    }

    #[test]
    fn metric_identities(tp in 0u64..5000, fp in 0u64..5000, fn_ in 0u64..5000, ok in 0u64..300, extra in 0u64..300) {
        let m = Metrics::from_counts(ok + extra, ok, 10, 5, Counts { tp, fp, fn_, tn: 0 }, Counts::default());
        match m.recall {
            Some(r) => {
                prop_assert!((0.0..=1.0).contains(&r));
                prop_assert_eq!(m.err_fn, Some(1.0 - r));
                prop_assert!((r * (tp + fn_) as f64 - tp as f64).abs() < 1e-9);
            }
            None => prop_assert_eq!(tp + fn_, 0),
        }
        match m.precision {
            Some(p) => {
                prop_assert!((0.0..=1.0).contains(&p));
                prop_assert_eq!(m.err_fp, Some(1.0 - p));
            }
            None => prop_assert_eq!(tp + fp, 0),
        }
        prop_assert_eq!(m.aon.is_none(), ok + extra == 0);
    }

    #[test]
    fn swapping_detection_and_truth_swaps_errors(
        a in prop::collection::btree_set(1usize..47, 0..6),
        b in prop::collection::btree_set(1usize..47, 0..6),
        tol in 0usize..4,
    ) {
        let n = 48;
        let pts: Vec<Point> = (0..n).map(|i| Point::new(i as f64, 0.0)).collect();
        let stroke_of = |set: &std::collections::BTreeSet<usize>| {
            let mut l = vec![PointLabel::Line; n];
            for &i in set {
                l[i] = PointLabel::Corner;
            }
            Stroke::new(pts.clone(), l, None).unwrap()
        };
        let det = |set: &std::collections::BTreeSet<usize>| DetectionResult {
            n,
            corners: set.iter().copied().collect(),
            tangents: vec![],
            labels: vec![PointLabel::Line; n],
            point_classes: vec![PointClass::LinePoint; n],
            primitives: vec![],
        };
        let rule = MatchRule { tolerance: tol };
        let ab = score_stroke(&det(&a), &stroke_of(&b), &rule).unwrap();
        let ba = score_stroke(&det(&b), &stroke_of(&a), &rule).unwrap();
        prop_assert_eq!(ab.corners.tp, ba.corners.tp);
        prop_assert_eq!(ab.corners.fp, ba.corners.fn_);
        prop_assert_eq!(ab.corners.fn_, ba.corners.fp);
        prop_assert_eq!(ab.correct, ba.correct);
    }

    #[test]
    fn scoring_ignores_point_order(
        truth in prop::collection::vec(0u8..4, 30..80),
        det_c in prop::collection::btree_set(1usize..29, 0..5),
        det_t in prop::collection::btree_set(1usize..29, 0..5),
        classes in prop::collection::vec(any::<bool>(), 80),
    ) {
        let n = truth.len();
        let labels: Vec<PointLabel> = truth.iter().map(|&c| PointLabel::from_code(c as i64).unwrap()).collect();
        let pts: Vec<Point> = (0..n).map(|i| Point::new(i as f64, (i as f64).sqrt())).collect();
        let pc: Vec<PointClass> = classes[..n].iter().map(|&c| if c { PointClass::CurvePoint } else { PointClass::LinePoint }).collect();
        let fwd = DetectionResult {
            n,
            corners: det_c.iter().copied().collect(),
            tangents: det_t.iter().copied().collect(),
            labels: vec![PointLabel::Line; n],
            point_classes: pc.clone(),
            primitives: vec![],
        };
        let flip = |v: &[usize]| -> Vec<usize> { v.iter().rev().map(|&i| n - 1 - i).collect() };
        let rev = DetectionResult {
            corners: flip(&fwd.corners),
            tangents: flip(&fwd.tangents),
            point_classes: pc.iter().rev().copied().collect(),
            ..fwd.clone()
        };
        let a = Stroke::new(pts.clone(), labels.clone(), None).unwrap();
        let b = Stroke::new(pts.iter().rev().copied().collect(), labels.iter().rev().copied().collect(), None).unwrap();
        let rule = MatchRule::default();
        prop_assert_eq!(score_stroke(&fwd, &a, &rule).unwrap(), score_stroke(&rev, &b, &rule).unwrap());
    }

    #[test]
    fn candidates_and_features_are_rigid_invariant(
        turns in prop::collection::vec(-30.0f64..30.0, 40..90),
        angle in 0.0f64..std::f64::consts::TAU,
        scale in 0.2f64..5.0,
        dx in -500.0f64..500.0,
        dy in -500.0f64..500.0,
    ) {
        let pts = turtle(&turns, 5.0);
        let moved: Vec<Point> = pts.iter().map(|&p| rigid(p, angle, scale, Point::new(dx, dy))).collect();
        let a = Stroke::new(pts.clone(), vec![PointLabel::Unlabeled; pts.len()], None).unwrap();
        let b = Stroke::new(moved, vec![PointLabel::Unlabeled; pts.len()], None).unwrap();
        let (sa, sb) = (straw(&a, 3), straw(&b, 3));
        for (x, y) in sa.values.iter().zip(&sb.values) {
            prop_assert!((x - y).abs() < 1e-9);
        }
        // Walk decisions flip only if a value sits on a threshold; skip those.
        let near = |v: f64| (v - DEFAULT_ENTRY).abs() < 1e-6;
        if !sa.values.iter().any(|&v| near(v)) {
            prop_assert_eq!(candidate_corners(&sa), candidate_corners(&sb));
        }
        let cfg = FeatureConfig::default();
        let (fa, fb) = (extract_all(a.points(), &cfg), extract_all(b.points(), &cfg));
        for (ra, rb) in fa.iter().zip(&fb) {
            for (x, y) in ra.iter().zip(rb) {
                prop_assert!((x - y).abs() < 1e-6 * (1.0 + x.abs()));
            }
        }
    }

    #[test]
    fn resampling_is_equidistant(
        turns in prop::collection::vec(-40.0f64..40.0, 3..60),
        n in 8usize..200,
    ) {
        let raw = RawStroke::new(turtle(&turns, 7.0), None).unwrap();
        let stk = resample(&raw, n).unwrap();
        prop_assert_eq!(stk.len(), n);
        prop_assert_eq!(stk.points()[0], raw.points[0]);
        prop_assert_eq!(stk.points()[n - 1], *raw.points.last().unwrap());
        // Chords never exceed the arc-length step.
        let step = raw.length() / (n - 1) as f64;
        for w in stk.points().windows(2) {
            prop_assert!(w[0].distance(w[1]) <= step + 1e-9);
        }
    }

    #[test]
    fn perturbation_respects_run_limit(rate in 0.0f64..=1.0, max_run in 1usize..6, seed in any::<u64>()) {
        let n = 69;
        let pts: Vec<Point> = (0..n).map(|i| Point::new(i as f64, 0.0)).collect();
        let mut labels = vec![PointLabel::Curve; n];
        labels[30] = PointLabel::Tangent;
        let stk = Stroke::new(pts, labels, None).unwrap();
        let (out, rep) = perturb_labels(&stk, rate, max_run, seed).unwrap();
        prop_assert!(rep.applied <= rep.requested);
        let flipped = stk.labels().iter().zip(out.labels()).filter(|(a, b)| a != b).count();
        prop_assert_eq!(flipped, rep.applied);
        prop_assert_eq!(out.labels()[30], PointLabel::Tangent);
        let mut run = 0;
        for (a, b) in stk.labels().iter().zip(out.labels()) {
            run = if a != b { run + 1 } else { 0 };
            prop_assert!(run < max_run);
        }
    }
}
