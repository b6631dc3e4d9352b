//! Corner and tangent-point detection for hand-drawn strokes.
//!
//! A stroke is resampled, candidate corners are taken from its straw curve
//! and confirmed by a corner classifier, every point is classified as line
//! or curve, and the runs of point classes between corners are merged into
//! primitives by voting. Feature points are placed at the transitions.

pub mod bridge;
pub mod classifier;
pub mod eval;
pub mod geometry;
pub mod merge;
pub mod pipeline;
pub mod raster;
pub mod stroke;

pub use classifier::{CornerDecision, PointClass};
pub use geometry::Point;
pub use pipeline::{DetectionResult, Detector, DetectorConfig};
pub use stroke::{PointLabel, RawStroke, SourceId, Stroke};
