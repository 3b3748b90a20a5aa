//! One completion run, shared by the `complete` and `compare` commands.

use pcadepth_core::{
    build_prediction_matrix, pca_complete, solve, BasisSet, ColourImage, DepthMap, Error as CoreError,
    JointSolution, SparseSamples,
};
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// Basis fit to the samples alone.
    Pca,
    /// Colour-guided smoothness without the subspace term (gamma = 0).
    Ar,
    /// Joint data, smoothness and subspace objective.
    Guided,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Pca => "pca",
            Method::Ar => "ar",
            Method::Guided => "guided",
        }
    }

    pub fn needs_colour(self) -> bool {
        !matches!(self, Method::Pca)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub method: Method,
    pub height: usize,
    pub width: usize,
    pub samples: usize,
    /// `‖P d − d⁰‖₂` of the output.
    pub residual_norm: f64,
    pub objective: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub initial_objective: Option<f64>,
    /// Relative residual of the joint normal equations.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub normal_residual: Option<f64>,
    pub iterations: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rank: Option<usize>,
    pub converged: bool,
    pub weights: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Completion {
    pub depth: DepthMap,
    pub report: Report,
}

fn data_residual(depth: &DepthMap, samples: &SparseSamples) -> f64 {
    let d = depth.values();
    samples
        .linear_indices()
        .iter()
        .zip(samples.depths())
        .map(|(&p, o)| (d[p] - o) * (d[p] - o))
        .sum::<f64>()
        .sqrt()
}

/// Runs `method`. A solve that misses its tolerance still returns the best
/// iterate, with `report.converged == false`.
pub fn complete(
    method: Method,
    basis: &BasisSet,
    samples: &SparseSamples,
    colour: Option<&ColourImage>,
    cfg: &RunConfig,
) -> Result<Completion> {
    let (h, w) = (basis.height(), basis.width());
    if method == Method::Pca {
        let (depth, fit) = pca_complete(basis, samples)?;
        let report = Report {
            method,
            height: h,
            width: w,
            samples: samples.len(),
            residual_norm: fit.residual_norm,
            objective: 0.5 * fit.residual_norm * fit.residual_norm,
            initial_objective: None,
            normal_residual: None,
            iterations: 0,
            rank: Some(fit.rank),
            converged: true,
            weights: fit.weights,
        };
        return Ok(Completion { depth, report });
    }

    let colour = colour.ok_or_else(|| Error::Usage(format!("method {} requires a colour image", method.name())))?;
    let mut solve_cfg = cfg.solve_config();
    if method == Method::Ar {
        solve_cfg.gamma = 0.0;
    }
    let q = build_prediction_matrix(colour, &cfg.ar_config())?;
    let (solution, converged): (JointSolution, bool) = match solve(samples, &q, basis, &solve_cfg) {
        Ok(s) => (s, true),
        Err(CoreError::NotConverged { best, .. }) => (*best, false),
        Err(e) => return Err(e.into()),
    };
    let report = Report {
        method,
        height: h,
        width: w,
        samples: samples.len(),
        residual_norm: data_residual(&solution.depth, samples),
        objective: solution.objective_value,
        initial_objective: Some(solution.initial_objective),
        normal_residual: Some(solution.normal_residual),
        iterations: solution.iterations,
        rank: None,
        converged,
        weights: solution.weights,
    };
    Ok(Completion {
        depth: solution.depth,
        report,
    })
}
