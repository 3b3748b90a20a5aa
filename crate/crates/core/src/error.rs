use alloc::boxed::Box;

use thiserror::Error;

use crate::solver::JointSolution;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("pixel ({row}, {col}) is outside the {height}x{width} grid")]
    OutOfBounds {
        row: usize,
        col: usize,
        height: usize,
        width: usize,
    },

    #[error("{what}: expected length {expected}, got {actual}")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        actual: usize,
    },

    /// Two grids that must agree (basis, colour, samples, depth) do not.
    #[error("resolution mismatch: expected {expected_height}x{expected_width}, got {height}x{width}")]
    ResolutionMismatch {
        expected_height: usize,
        expected_width: usize,
        height: usize,
        width: usize,
    },

    #[error("grid dimensions must be positive, got {height}x{width}")]
    EmptyGrid { height: usize, width: usize },

    #[error("valid depth at index {index} must be finite and positive, got {value}")]
    InvalidDepth { index: usize, value: f64 },

    #[error("colour intensity at index {index} must lie in [0, 1], got {value}")]
    InvalidIntensity { index: usize, value: f64 },

    /// `entry` is the zero-based position of the second occurrence.
    #[error("duplicate sample at ({row}, {col}) in entry {entry}")]
    DuplicateSample { entry: usize, row: usize, col: usize },

    #[error("no depth samples available")]
    EmptySamples,

    #[error("depth map has no valid pixels")]
    NoValidPixels,

    #[error("depth map must be fully valid")]
    IncompleteDepth,

    #[error("training corpus needs at least 2 maps, got {0}")]
    CorpusTooSmall(usize),

    #[error("training map {index} has {valid} valid pixels, fewer than 1% of {total}")]
    SparseTrainingMap {
        index: usize,
        valid: usize,
        total: usize,
    },

    #[error("requested {requested} basis columns but the corpus only supports k <= {achievable}")]
    Rank { requested: usize, achievable: usize },

    #[error("invalid configuration: {0}")]
    Config(&'static str),

    #[error("nothing to evaluate: no pixel is valid in both maps")]
    EmptyEvaluation,

    /// Carries the best iterate so callers can still inspect it.
    #[error("solver did not converge after {iterations} iterations (relative residual {residual:e})")]
    NotConverged {
        iterations: usize,
        residual: f64,
        best: Box<JointSolution>,
    },
}
