pub mod chain;
pub mod classify;
pub mod ellipse;
pub mod error;
pub mod geometry;
pub mod segmenter;
pub mod synth;

pub use error::{Error, Result};
