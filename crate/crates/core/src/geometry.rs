//! Planar geometry used by the segment merger: least-squares line and circle
//! fits, point distances, line intersection, curvature sign and the
//! angle-ratio corner test.

use serde::{Deserialize, Serialize};
use std::ops::{Add, Mul, Sub};
use thiserror::Error;

/// A point in stroke coordinates (pixels). Serialized as `[x, y]`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dot(self, other: Point) -> f64 {
        self.x * other.x + self.y * other.y
    }

    /// z-component of the 2-D cross product.
    pub fn cross(self, other: Point) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn distance(self, other: Point) -> f64 {
        (self - other).norm()
    }

    pub fn lerp(self, other: Point, t: f64) -> Point {
        Point::new(self.x + (other.x - self.x) * t, self.y + (other.y - self.y) * t)
    }
}

impl From<[f64; 2]> for Point {
    fn from([x, y]: [f64; 2]) -> Self {
        Point::new(x, y)
    }
}

impl From<Point> for [f64; 2] {
    fn from(p: Point) -> Self {
        [p.x, p.y]
    }
}

impl Add for Point {
    type Output = Point;
    fn add(self, o: Point) -> Point {
        Point::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Point {
    type Output = Point;
    fn sub(self, o: Point) -> Point {
        Point::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Point {
    type Output = Point;
    fn mul(self, s: f64) -> Point {
        Point::new(self.x * s, self.y * s)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("line fit needs at least two distinct points")]
    CoincidentPoints,
    #[error("circle fit needs at least three non-collinear points")]
    CollinearPoints,
}

/// Total-least-squares line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitLine {
    /// Unit direction.
    pub direction: Point,
    /// Centroid of the fitted points.
    pub point: Point,
    /// Orthogonal RMS residual.
    pub residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitCircle {
    pub center: Point,
    pub radius: f64,
    /// Radial RMS residual.
    pub residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CurvatureSign {
    Positive,
    Negative,
    Flat,
}

impl CurvatureSign {
    /// Two signs agree unless one is strictly positive and the other strictly
    /// negative.
    pub fn agrees_with(self, other: CurvatureSign) -> bool {
        !matches!(
            (self, other),
            (CurvatureSign::Positive, CurvatureSign::Negative)
                | (CurvatureSign::Negative, CurvatureSign::Positive)
        )
    }
}

fn centroid(points: &[Point]) -> Point {
    let n = points.len() as f64;
    let sum = points.iter().fold(Point::default(), |acc, &p| acc + p);
    sum * (1.0 / n)
}

fn extent(points: &[Point], c: Point) -> f64 {
    points.iter().map(|p| p.distance(c)).fold(0.0, f64::max)
}

pub fn fit_line(points: &[Point]) -> Result<FitLine, GeometryError> {
    if points.len() < 2 {
        return Err(GeometryError::CoincidentPoints);
    }
    let c = centroid(points);
    let scale = extent(points, c);
    if scale <= f64::EPSILON * (1.0 + c.norm()) {
        return Err(GeometryError::CoincidentPoints);
    }
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for p in points {
        let d = *p - c;
        sxx += d.x * d.x;
        sxy += d.x * d.y;
        syy += d.y * d.y;
    }
    let n = points.len() as f64;
    let (sxx, sxy, syy) = (sxx / n, sxy / n, syy / n);
    let theta = 0.5 * (2.0 * sxy).atan2(sxx - syy);
    let direction = Point::new(theta.cos(), theta.sin());
    let normal = Point::new(-direction.y, direction.x);
    let ms = points
        .iter()
        .map(|p| {
            let d = (*p - c).dot(normal);
            d * d
        })
        .sum::<f64>()
        / n;
    Ok(FitLine {
        direction,
        point: c,
        residual: ms.sqrt(),
    })
}

/// Solve a 3x3 system by Gaussian elimination with partial pivoting.
fn solve3(mut a: [[f64; 3]; 3], mut b: [f64; 3]) -> Option<[f64; 3]> {
    let scale = a
        .iter()
        .flat_map(|r| r.iter())
        .fold(0.0f64, |m, v| m.max(v.abs()));
    if scale == 0.0 {
        return None;
    }
    for col in 0..3 {
        let pivot = (col..3)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        if a[pivot][col].abs() <= 1e-12 * scale {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..3 {
            let f = a[row][col] / a[col][col];
            for k in col..3 {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = [0.0; 3];
    for row in (0..3).rev() {
        let mut s = b[row];
        for k in row + 1..3 {
            s -= a[row][k] * x[k];
        }
        x[row] = s / a[row][row];
    }
    Some(x)
}

/// Algebraic (Kåsa) circle fit: minimizes the sum of
/// `(x² + y² + D·x + E·y + F)²` over the points.
pub fn fit_circle(points: &[Point]) -> Result<FitCircle, GeometryError> {
    if points.len() < 3 {
        return Err(GeometryError::CollinearPoints);
    }
    let line = fit_line(points).map_err(|_| GeometryError::CollinearPoints)?;
    let c = centroid(points);
    let scale = extent(points, c);
    if line.residual <= 1e-9 * scale {
        return Err(GeometryError::CollinearPoints);
    }
    // Work in centered, scaled coordinates for conditioning.
    let inv = 1.0 / scale;
    let mut m = [[0.0; 3]; 3];
    let mut rhs = [0.0; 3];
    for p in points {
        let d = (*p - c) * inv;
        let z = d.x * d.x + d.y * d.y;
        let row = [d.x, d.y, 1.0];
        for i in 0..3 {
            for j in 0..3 {
                m[i][j] += row[i] * row[j];
            }
            rhs[i] -= row[i] * z;
        }
    }
    let [dd, ee, ff] = solve3(m, rhs).ok_or(GeometryError::CollinearPoints)?;
    let cx = -dd / 2.0;
    let cy = -ee / 2.0;
    let r2 = cx * cx + cy * cy - ff;
    if !(r2 > 0.0) || !r2.is_finite() {
        return Err(GeometryError::CollinearPoints);
    }
    let center = c + Point::new(cx, cy) * scale;
    let radius = r2.sqrt() * scale;
    let ms = points
        .iter()
        .map(|p| {
            let e = p.distance(center) - radius;
            e * e
        })
        .sum::<f64>()
        / points.len() as f64;
    Ok(FitCircle {
        center,
        radius,
        residual: ms.sqrt(),
    })
}

pub fn point_line_distance(p: Point, line: &FitLine) -> f64 {
    (p - line.point).cross(line.direction).abs()
}

pub fn point_circle_distance(p: Point, circle: &FitCircle) -> f64 {
    (p.distance(circle.center) - circle.radius).abs()
}

/// Intersection of two fitted lines and the acute angle between them.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Intersection {
    /// `None` when the lines are parallel.
    pub point: Option<Point>,
    /// Acute angle in degrees, within `[0, 90]`.
    pub angle_deg: f64,
    pub parallel: bool,
}

const PARALLEL_SIN: f64 = 1e-6;

pub fn intersect_angle(a: &FitLine, b: &FitLine) -> Intersection {
    let sin = a.direction.cross(b.direction);
    let cos = a.direction.dot(b.direction);
    if sin.abs() < PARALLEL_SIN {
        return Intersection {
            point: None,
            angle_deg: 0.0,
            parallel: true,
        };
    }
    let angle_deg = sin.abs().atan2(cos.abs()).to_degrees();
    // a.point + t·a.dir = b.point + s·b.dir
    let t = (b.point - a.point).cross(b.direction) / sin;
    Intersection {
        point: Some(a.point + a.direction * t),
        angle_deg,
        parallel: false,
    }
}

/// Sign of the summed cross products of consecutive displacement vectors.
/// Positive is counter-clockwise in a y-up frame.
pub fn curvature_sign(points: &[Point]) -> CurvatureSign {
    if points.len() < 3 {
        return CurvatureSign::Flat;
    }
    let mut sum = 0.0;
    let mut mag = 0.0;
    for w in points.windows(3) {
        let d1 = w[1] - w[0];
        let d2 = w[2] - w[1];
        sum += d1.cross(d2);
        mag += d1.norm() * d2.norm();
    }
    if sum.abs() <= 1e-9 * mag {
        CurvatureSign::Flat
    } else if sum > 0.0 {
        CurvatureSign::Positive
    } else {
        CurvatureSign::Negative
    }
}

/// Interior angle at `points[idx]` between rays to `points[idx - k]` and
/// `points[idx + k]`, with both offsets clamped into `[lo, hi]`. Returns
/// `None` if either ray collapses.
pub fn vertex_angle_deg(points: &[Point], idx: usize, k: usize, lo: usize, hi: usize) -> Option<f64> {
    let a = points[idx.saturating_sub(k).max(lo)];
    let b = points[(idx + k).min(hi)];
    let p = points[idx];
    let (u, v) = (a - p, b - p);
    if u.norm() == 0.0 || v.norm() == 0.0 {
        return None;
    }
    Some(u.cross(v).abs().atan2(u.dot(v)).to_degrees())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AngleRatioParams {
    pub near: usize,
    pub far: usize,
    pub ratio_max: f64,
    /// Vertex angles above this at the near offset count as straight.
    pub straight_cap_deg: f64,
}

impl Default for AngleRatioParams {
    fn default() -> Self {
        Self {
            near: 3,
            far: 12,
            ratio_max: 1.3,
            straight_cap_deg: 160.0,
        }
    }
}

/// Angle-ratio corner test. Ray endpoints are clamped into `[lo, hi]`, the
/// chain that contains `idx`. A corner whose rays cannot be formed is kept.
pub fn angle_ratio_is_corner(points: &[Point], idx: usize, lo: usize, hi: usize, params: &AngleRatioParams) -> bool {
    let near = vertex_angle_deg(points, idx, params.near, lo, hi);
    let far = vertex_angle_deg(points, idx, params.far, lo, hi);
    let (Some(near), Some(far)) = (near, far) else {
        return true;
    };
    if near > params.straight_cap_deg {
        return false;
    }
    let (small, large) = if near <= far { (near, far) } else { (far, near) };
    if small <= 0.0 {
        return false;
    }
    large / small <= params.ratio_max
}
