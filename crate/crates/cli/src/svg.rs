//! SVG rendering of a detection.

use std::fmt::Write as _;
use strokeseg::pipeline::DetectionResult;
use strokeseg::{PointLabel, Stroke};

pub const LINE_COLOR: &str = "#2ca02c";
pub const CURVE_COLOR: &str = "#1f5fd6";
pub const CORNER_COLOR: &str = "#d62728";
pub const TANGENT_COLOR: &str = "#222222";

const SIZE: f64 = 600.0;
const MARGIN: f64 = 20.0;

/// One glyph per resampled point: green line points, blue curve points,
/// red corners and hollow rings at tangent points. Every glyph has class
/// `pt`.
pub fn render_svg(stroke: &Stroke, result: &DetectionResult) -> String {
    let pts = stroke.points();
    let (mut x0, mut y0, mut x1, mut y1) = (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
    for p in pts {
        x0 = x0.min(p.x);
        y0 = y0.min(p.y);
        x1 = x1.max(p.x);
        y1 = y1.max(p.y);
    }
    let extent = (x1 - x0).max(y1 - y0);
    let k = if extent > 0.0 { (SIZE - 2.0 * MARGIN) / extent } else { 1.0 };
    let map = |x: f64, y: f64| (MARGIN + (x - x0) * k, MARGIN + (y - y0) * k);

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let path: Vec<String> = pts
        .iter()
        .map(|p| {
            let (x, y) = map(p.x, p.y);
            format!("{x:.2},{y:.2}")
        })
        .collect();
    let _ = writeln!(
        out,
        r##"<polyline class="stroke" fill="none" stroke="#bbbbbb" stroke-width="1" points="{}"/>"##,
        path.join(" ")
    );
    for (i, p) in pts.iter().enumerate() {
        let (x, y) = map(p.x, p.y);
        let label = result.labels.get(i).copied().unwrap_or(PointLabel::Unlabeled);
        let glyph = match label {
            PointLabel::Tangent => format!(
                r#"<circle class="pt tangent" data-index="{i}" cx="{x:.2}" cy="{y:.2}" r="6" fill="none" stroke="{TANGENT_COLOR}" stroke-width="2"/>"#
            ),
            PointLabel::Corner => {
                format!(r#"<circle class="pt corner" data-index="{i}" cx="{x:.2}" cy="{y:.2}" r="5" fill="{CORNER_COLOR}"/>"#)
            }
            PointLabel::Curve => {
                format!(r#"<circle class="pt curve" data-index="{i}" cx="{x:.2}" cy="{y:.2}" r="3" fill="{CURVE_COLOR}"/>"#)
            }
            _ => format!(r#"<circle class="pt line" data-index="{i}" cx="{x:.2}" cy="{y:.2}" r="3" fill="{LINE_COLOR}"/>"#),
        };
        out.push_str(&glyph);
        out.push('\n');
    }
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use strokeseg::classifier::PointClass;
    use strokeseg::Point;

    #[test]
    fn one_glyph_per_point() {
        let n = 20;
        let pts = (0..n).map(|i| Point::new(i as f64, 0.0)).collect();
        let stk = Stroke::new(pts, vec![PointLabel::Unlabeled; n], None).unwrap();
        let mut labels = vec![PointLabel::Line; n];
        labels[5] = PointLabel::Corner;
        labels[12] = PointLabel::Tangent;
        labels[13] = PointLabel::Curve;
        let r = DetectionResult {
            n,
            corners: vec![5],
            tangents: vec![12],
            labels,
            point_classes: vec![PointClass::LinePoint; n],
            primitives: vec![],
        };
        let svg = render_svg(&stk, &r);
        assert_eq!(svg.matches(r#"class="pt "#).count(), n);
        assert_eq!(svg.matches(CORNER_COLOR).count(), 1);
        assert_eq!(svg.matches(r##"fill="none" stroke="#222222""##).count(), 1);
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
    }
}
