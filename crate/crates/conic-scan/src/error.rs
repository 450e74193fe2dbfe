//! Crate-wide error type.

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("malformed input: {0}")]
    Format(String),

    #[error("frame is {got_w}x{got_h}, intrinsics expect {want_w}x{want_h}")]
    DimensionMismatch {
        want_w: usize,
        want_h: usize,
        got_w: usize,
        got_h: usize,
    },

    #[error("frame contains no valid depth samples")]
    AllInvalidFrame,

    #[error("need at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },

    #[error("degenerate point configuration, no conic fit")]
    DegenerateFit,

    #[error("conic is not an ellipse")]
    NotAnEllipse,

    #[error("cannot remove a point from an empty accumulator")]
    EmptyAccumulator,

    #[error("track needs at least two updates for a velocity estimate")]
    InsufficientHistory,

    #[error("measurement contains non-finite values")]
    NonFiniteMeasurement,

    #[error("invalid scene description: {0}")]
    Scene(String),

    #[error("unknown experiment '{0}' (expected noise|accuracy|occlusion|velocity|ransac)")]
    UnknownExperiment(String),
}
