//! Incremental direct ellipse fitting.
//!
//! The types here form the numeric core of the scan-line segmenter: a
//! constant-size [`ScatterAccumulator`] of power sums, a constant-time
//! ellipse-specific least-squares [`fit`](ScatterAccumulator::fit), and
//! conversions between implicit [`ConicCoefficients`] and the
//! center-angle [`GeometricEllipse2D`] form together with a fast
//! point-to-boundary distance.

mod accumulator;
mod circle;
mod conic;
mod fit;

pub use accumulator::ScatterAccumulator;
pub use circle::{fit_circle, fit_circle_on_axis_weighted, fit_circle_weighted, Circle2D};
pub use conic::{ConicCoefficients, GeometricEllipse2D};
pub use fit::MIN_FIT_POINTS;
