//! Canvas normalization and multi-scale context images.

use crate::geometry::Point;
use crate::stroke::Stroke;
use std::fmt;
use std::io::Write;
use std::path::Path;

pub const CANVAS_SIZE: usize = 450;
pub const CONTEXT_PIXELS: usize = 224;

#[derive(Debug, thiserror::Error)]
pub enum RasterError {
    #[error("point index {index} out of range for {len} points")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("unsupported context scale {0}")]
    InvalidScale(u32),
    #[error("malformed PGM: {0}")]
    Pgm(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Side length of a context window in canvas pixels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ContextScale {
    S32,
    S64,
    S128,
    S256,
}

impl ContextScale {
    pub const ALL: [ContextScale; 4] = [ContextScale::S32, ContextScale::S64, ContextScale::S128, ContextScale::S256];

    pub fn px(self) -> usize {
        match self {
            ContextScale::S32 => 32,
            ContextScale::S64 => 64,
            ContextScale::S128 => 128,
            ContextScale::S256 => 256,
        }
    }

    pub fn from_px(px: u32) -> Result<Self, RasterError> {
        Self::ALL
            .into_iter()
            .find(|s| s.px() == px as usize)
            .ok_or(RasterError::InvalidScale(px))
    }
}

impl fmt::Display for ContextScale {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.px())
    }
}

/// A stroke scaled uniformly into the 450×450 canvas and centered.
#[derive(Debug, Clone, PartialEq)]
pub struct CanvasStroke {
    points: Vec<Point>,
    scale: f64,
    offset: Point,
}

impl CanvasStroke {
    pub fn points(&self) -> &[Point] {
        &self.points
    }

    /// Canvas px per input unit.
    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Canvas position of the input bounding box's minimum corner.
    pub fn offset(&self) -> Point {
        self.offset
    }
}

pub fn to_canvas(stroke: &Stroke) -> CanvasStroke {
    to_canvas_points(stroke.points())
}

pub fn to_canvas_points(points: &[Point]) -> CanvasStroke {
    let (mut lo, mut hi) = (Point::new(f64::INFINITY, f64::INFINITY), Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY));
    for p in points {
        lo = Point::new(lo.x.min(p.x), lo.y.min(p.y));
        hi = Point::new(hi.x.max(p.x), hi.y.max(p.y));
    }
    if points.is_empty() {
        return CanvasStroke {
            points: Vec::new(),
            scale: 1.0,
            offset: Point::new(0.0, 0.0),
        };
    }
    let (w, h) = (hi.x - lo.x, hi.y - lo.y);
    let extent = w.max(h);
    let size = CANVAS_SIZE as f64;
    let scale = if extent > 0.0 { size / extent } else { 1.0 };
    let offset = Point::new((size - w * scale) / 2.0, (size - h * scale) / 2.0);
    let points = points
        .iter()
        .map(|p| Point::new((p.x - lo.x) * scale + offset.x, (p.y - lo.y) * scale + offset.y))
        .collect();
    CanvasStroke { points, scale, offset }
}

/// Square window in canvas pixel coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Window {
    pub x0: usize,
    pub y0: usize,
    pub size: usize,
}

impl Window {
    pub fn contains(&self, x: i64, y: i64) -> bool {
        let (x0, y0, s) = (self.x0 as i64, self.y0 as i64, self.size as i64);
        x >= x0 && x < x0 + s && y >= y0 && y < y0 + s
    }
}

/// The window of side `scale` centered on a point, clamped inside the canvas.
pub fn context_window(center: Point, scale: ContextScale) -> Window {
    let s = scale.px();
    let max = (CANVAS_SIZE - s) as f64;
    let origin = |c: f64| (c - (s / 2) as f64).round_ties_even().clamp(0.0, max) as usize;
    Window {
        x0: origin(center.x),
        y0: origin(center.y),
        size: s,
    }
}

/// Canvas pixel holding a point; the far canvas edge belongs to the last pixel.
pub fn pixel_of(p: Point) -> (i64, i64) {
    let last = (CANVAS_SIZE - 1) as f64;
    (p.x.floor().clamp(0.0, last) as i64, p.y.floor().clamp(0.0, last) as i64)
}

/// Visits the pixels of the segment between two pixel centers. Along the
/// major axis every pixel is visited once; on the minor axis the nearest
/// pixel is taken, and both when the segment passes exactly between two.
fn for_each_line_pixel(a: (i64, i64), b: (i64, i64), mut f: impl FnMut(i64, i64)) {
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let x_major = dx.abs() >= dy.abs();
    // Work in (major, minor) coordinates with a positive major step.
    let (mut p, mut q) = if x_major { (a, b) } else { ((a.1, a.0), (b.1, b.0)) };
    if p.0 > q.0 {
        std::mem::swap(&mut p, &mut q);
    }
    let (dm, dn) = (q.0 - p.0, q.1 - p.1);
    let mut emit = |m: i64, n: i64| if x_major { f(m, n) } else { f(n, m) };
    if dm == 0 {
        emit(p.0, p.1);
        return;
    }
    for m in p.0..=q.0 {
        let t = (m - p.0) * dn;
        let (whole, rem) = (t.div_euclid(dm), t.rem_euclid(dm));
        let base = p.1 + whole;
        match (2 * rem).cmp(&dm) {
            std::cmp::Ordering::Less => emit(m, base),
            std::cmp::Ordering::Greater => emit(m, base + 1),
            std::cmp::Ordering::Equal => {
                emit(m, base);
                emit(m, base + 1);
            }
        }
    }
}

/// Binary raster of the polyline inside `win`, row-major, `win.size` squared.
pub fn render_window(points: &[Point], win: Window) -> Vec<u8> {
    let s = win.size;
    let mut out = vec![0u8; s * s];
    let mut ink = |x: i64, y: i64| {
        if win.contains(x, y) {
            out[(y as usize - win.y0) * s + (x as usize - win.x0)] = 255;
        }
    };
    let (wx0, wy0, wx1, wy1) = (win.x0 as i64, win.y0 as i64, (win.x0 + s) as i64, (win.y0 + s) as i64);
    match points {
        [] => {}
        [p] => {
            let (x, y) = pixel_of(*p);
            ink(x, y);
        }
        _ => {
            for w in points.windows(2) {
                let (a, b) = (pixel_of(w[0]), pixel_of(w[1]));
                // Segments whose pixel box misses the window contribute nothing.
                if a.0.max(b.0) < wx0 || a.0.min(b.0) >= wx1 || a.1.max(b.1) < wy0 || a.1.min(b.1) >= wy1 {
                    continue;
                }
                for_each_line_pixel(a, b, &mut ink);
            }
        }
    }
    out
}

/// Source index for output index `u` of a nearest-neighbour resize from `src`
/// to `dst` pixels; mirror-symmetric so that flips and quarter turns commute
/// with resizing.
fn nn_index(u: usize, src: usize, dst: usize) -> usize {
    if 2 * u < dst {
        ((2 * u + 1) * src) / (2 * dst)
    } else {
        src - 1 - nn_index(dst - 1 - u, src, dst)
    }
}

pub fn resize_nearest(pixels: &[u8], src: usize, dst: usize) -> Vec<u8> {
    let map: Vec<usize> = (0..dst).map(|u| nn_index(u, src, dst)).collect();
    let mut out = Vec::with_capacity(dst * dst);
    for &r in &map {
        let row = &pixels[r * src..(r + 1) * src];
        out.extend(map.iter().map(|&c| row[c]));
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContextImage {
    pixels: Vec<u8>,
    scale: ContextScale,
    center_index: usize,
}

impl ContextImage {
    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn scale(&self) -> ContextScale {
        self.scale
    }

    pub fn center_index(&self) -> usize {
        self.center_index
    }

    pub fn ink_count(&self) -> usize {
        self.pixels.iter().filter(|&&p| p != 0).count()
    }

    pub fn to_pgm(&self) -> Vec<u8> {
        encode_pgm(CONTEXT_PIXELS, CONTEXT_PIXELS, &self.pixels)
    }
}

pub fn render_context(cs: &CanvasStroke, idx: usize, scale: ContextScale) -> Result<ContextImage, RasterError> {
    let pts = cs.points();
    let center = *pts.get(idx).ok_or(RasterError::IndexOutOfRange { index: idx, len: pts.len() })?;
    let win = context_window(center, scale);
    let raw = render_window(pts, win);
    Ok(ContextImage {
        pixels: resize_nearest(&raw, win.size, CONTEXT_PIXELS),
        scale,
        center_index: idx,
    })
}

/// All four scales for one point, smallest first.
pub fn render_contexts(cs: &CanvasStroke, idx: usize) -> Result<[ContextImage; 4], RasterError> {
    let [a, b, c, d] = ContextScale::ALL;
    Ok([
        render_context(cs, idx, a)?,
        render_context(cs, idx, b)?,
        render_context(cs, idx, c)?,
        render_context(cs, idx, d)?,
    ])
}

pub fn context_file_name(source: &str, idx: usize, scale: ContextScale) -> String {
    format!("{source}_{idx}_{scale}.pgm")
}

/// Name used for exported files of a stroke without a source id.
pub const ANONYMOUS_SOURCE: &str = "stroke";

/// Writes the four context images of each index into `dir`. Returns the
/// number of files written.
pub fn export_contexts(stroke: &Stroke, indices: &[usize], dir: &Path) -> Result<usize, RasterError> {
    let source = stroke
        .source_id()
        .map(|s| s.to_string())
        .unwrap_or_else(|| ANONYMOUS_SOURCE.to_string());
    export_contexts_named(stroke, &source, indices, dir).map(|paths| paths.len())
}

/// Like [`export_contexts`], returning the written paths grouped per index.
pub fn export_contexts_named(
    stroke: &Stroke,
    source: &str,
    indices: &[usize],
    dir: &Path,
) -> Result<Vec<std::path::PathBuf>, RasterError> {
    let cs = to_canvas(stroke);
    let mut written = Vec::with_capacity(indices.len() * 4);
    for &idx in indices {
        for img in render_contexts(&cs, idx)? {
            let path = dir.join(context_file_name(source, idx, img.scale()));
            let mut f = std::fs::File::create(&path)?;
            f.write_all(&img.to_pgm())?;
            written.push(path);
        }
    }
    Ok(written)
}

pub fn encode_pgm(width: usize, height: usize, pixels: &[u8]) -> Vec<u8> {
    let mut out = format!("P5\n{width} {height}\n255\n").into_bytes();
    out.extend_from_slice(pixels);
    out
}

/// Parsed binary PGM.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pgm {
    pub width: usize,
    pub height: usize,
    pub maxval: u16,
    pub pixels: Vec<u8>,
}

/// Parses a P5 image with 8-bit samples; `#` comments are allowed in the
/// header.
pub fn parse_pgm(bytes: &[u8]) -> Result<Pgm, RasterError> {
    let err = |m: &str| RasterError::Pgm(m.to_string());
    let mut pos = 0;
    let mut token = || -> Result<&[u8], RasterError> {
        loop {
            while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if pos < bytes.len() && bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
                continue;
            }
            break;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() && bytes[pos] != b'#' {
            pos += 1;
        }
        if start == pos {
            Err(RasterError::Pgm("truncated header".into()))
        } else {
            Ok(&bytes[start..pos])
        }
    };
    if token()? != b"P5" {
        return Err(err("missing P5 magic"));
    }
    let mut number = |name: &str| -> Result<usize, RasterError> {
        let t = token()?;
        std::str::from_utf8(t)
            .ok()
            .and_then(|s| s.parse::<usize>().ok())
            .ok_or_else(|| RasterError::Pgm(format!("bad {name}")))
    };
    let width = number("width")?;
    let height = number("height")?;
    let maxval = number("maxval")?;
    if maxval == 0 || maxval > 255 {
        return Err(err("maxval must be in 1..=255"));
    }
    // Exactly one whitespace byte separates the header from the raster.
    if pos >= bytes.len() || !bytes[pos].is_ascii_whitespace() {
        return Err(err("missing raster"));
    }
    let data = &bytes[pos + 1..];
    let len = width.checked_mul(height).ok_or_else(|| err("dimensions overflow"))?;
    if data.len() != len {
        return Err(RasterError::Pgm(format!("expected {len} raster bytes, found {}", data.len())));
    }
    Ok(Pgm {
        width,
        height,
        maxval: maxval as u16,
        pixels: data.to_vec(),
    })
}
