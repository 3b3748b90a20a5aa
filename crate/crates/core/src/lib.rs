//! Dense depth completion from sparse samples.
//!
//! A dense depth map is modelled as a weighted sum of principal depth bases
//! learned from a corpus of natural depth maps. Sparse measurements pin the
//! weights through a least-squares fit ([`pca_fit`]). When a registered colour
//! image is available, a colour-guided auto-regressive operator ([`ar`]) adds an
//! edge-aware smoothness prior and the joint problem is solved in closed form
//! through its normal equations ([`solver`]).
//!
//! The crate is `no_std` and only needs `alloc`. File formats, synthetic data
//! and the command line live in the companion `pcadepth` crate.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod ar;
pub mod basis;
mod cg;
pub mod depth;
mod error;
pub mod inpaint;
pub mod metrics;
pub mod pca_fit;
pub mod solver;

pub use ar::{build_prediction_matrix, ArConfig, GuidanceMode, PredictionMatrix};
pub use basis::{learn_bases, project_depth, BasisSet, TrainingCorpus};
pub use depth::{subsample_grid, to_linear, ColourImage, DepthMap, GridShape, Sample, SparseSamples};
pub use error::{Error, Result};
pub use inpaint::diffusion_fill;
pub use metrics::{bad_pixel_ratio, evaluate_protocol, mean_relative_error, EvalMode, MetricReport};
pub use pca_fit::{fit_weights, pca_complete, sample_rows, synthesize, FitResult, SampledBasis};
pub use solver::{
    apply_system, eliminate_weights, objective, solve, solve_joint, JointSolution,
    ObservationOperator, Reduction, SolveConfig,
};
