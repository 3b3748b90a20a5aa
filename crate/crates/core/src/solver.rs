//! Joint colour-guided completion.
//!
//! Minimizes over the dense depth `d` and basis weights `w`
//!
//! ```text
//! E(d, w) = ½‖P d − d⁰‖² + (λ/2)‖Q d − d‖² + (γ/2)‖A w − d‖²
//! ```
//!
//! where `P` selects the sample pixels, `Q` is the colour-guided prediction
//! matrix and `A` the basis. With `x = [d; w]`, `P' = [P, 0]`,
//! `(I−Q)' = [I−Q, 0]` and `A' = [I, −A]`, the minimizer solves
//!
//! ```text
//! (P'ᵀP' + λ (I−Q)'ᵀ(I−Q)' + γ A'ᵀA') x = P'ᵀ d⁰
//! ```
//!
//! Two routes are provided. [`solve_joint`] runs conjugate gradient on that
//! stacked system. [`eliminate_weights`] uses `AᵀA = I`: the optimal weights
//! are `w = Aᵀ d`, leaving `(PᵀP + λ(I−Q)ᵀ(I−Q) + γ(I − AAᵀ)) d = Pᵀ d⁰`.
//! Both are matrix-free and warm-started from the basis-only fit.

use alloc::boxed::Box;
use alloc::vec;
use alloc::vec::Vec;

use crate::ar::PredictionMatrix;
use crate::basis::BasisSet;
use crate::cg;
use crate::depth::{check_len, DepthMap, GridShape, SparseSamples};
use crate::error::{Error, Result};
use crate::pca_fit::pca_complete;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Reduction {
    /// Conjugate gradient on the `(H·W + k)`-dimensional stacked system.
    Stacked,
    /// Conjugate gradient on the `H·W`-dimensional system after `w = Aᵀd`.
    #[default]
    Eliminated,
}

/// The default weights were picked on synthetic piecewise-planar scenes with
/// aligned colour edges; they are a starting point, not a universal choice.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveConfig {
    /// Weight of the auto-regressive smoothness term.
    pub lambda: f64,
    /// Weight of the subspace term.
    pub gamma: f64,
    /// Target relative residual of the normal equations.
    pub cg_tol: f64,
    /// Iteration cap; `None` means `10 · H · W`.
    pub cg_max_iters: Option<usize>,
    pub reduction: Reduction,
}

impl Default for SolveConfig {
    fn default() -> Self {
        Self {
            lambda: 1.0,
            gamma: 0.01,
            cg_tol: 1e-10,
            cg_max_iters: None,
            reduction: Reduction::Eliminated,
        }
    }
}

impl SolveConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::Config("lambda must be finite and non-negative"));
        }
        if !(self.gamma >= 0.0 && self.gamma.is_finite()) {
            return Err(Error::Config("gamma must be finite and non-negative"));
        }
        if self.lambda + self.gamma == 0.0 {
            return Err(Error::Config("lambda and gamma cannot both be zero"));
        }
        if !(self.cg_tol > 0.0) {
            return Err(Error::Config("cg_tol must be positive"));
        }
        Ok(())
    }

    fn max_iters(&self, shape: GridShape) -> usize {
        self.cg_max_iters.unwrap_or(10 * shape.len())
    }
}

/// The selection operator `P`, stored as sample pixel indices and values.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationOperator {
    dim: usize,
    pixels: Vec<usize>,
    observed: Vec<f64>,
}

impl ObservationOperator {
    pub fn from_samples(samples: &SparseSamples) -> Self {
        Self {
            dim: samples.shape().len(),
            pixels: samples.linear_indices(),
            observed: samples.depths(),
        }
    }

    pub fn pixels(&self) -> &[usize] {
        &self.pixels
    }

    /// `d⁰`, in sample order.
    pub fn observed(&self) -> &[f64] {
        &self.observed
    }

    /// `P d`.
    pub fn apply(&self, d: &[f64]) -> Vec<f64> {
        self.pixels.iter().map(|&p| d[p]).collect()
    }

    /// `Pᵀ y` as a dense image vector.
    pub fn apply_transpose(&self, y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        for (&p, &v) in self.pixels.iter().zip(y) {
            out[p] = v;
        }
        out
    }

    /// `out += PᵀP d`.
    fn add_gram(&self, d: &[f64], out: &mut [f64]) {
        for &p in &self.pixels {
            out[p] += d[p];
        }
    }

    /// Diagonal of `PᵀP`.
    fn gram_diagonal(&self) -> Vec<f64> {
        let mut diag = vec![0.0; self.dim];
        for &p in &self.pixels {
            diag[p] = 1.0;
        }
        diag
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct JointSolution {
    pub depth: DepthMap,
    pub weights: Vec<f64>,
    /// Objective at the solution.
    pub objective_value: f64,
    /// Objective at the basis-only warm start.
    pub initial_objective: f64,
    /// Relative residual of the stacked normal equations at `[d; w]`.
    pub normal_residual: f64,
    pub iterations: usize,
}

/// Problem data shared by both reductions.
struct Problem<'a> {
    obs: ObservationOperator,
    q: &'a PredictionMatrix,
    basis: &'a BasisSet,
    cfg: SolveConfig,
}

impl<'a> Problem<'a> {
    fn new(
        samples: &SparseSamples,
        q: &'a PredictionMatrix,
        basis: &'a BasisSet,
        cfg: &SolveConfig,
    ) -> Result<Self> {
        let shape = basis.shape();
        shape.ensure_same(samples.shape())?;
        shape.ensure_same(q.shape())?;
        Ok(Self {
            obs: ObservationOperator::from_samples(samples),
            q,
            basis,
            cfg: *cfg,
        })
    }

    fn n(&self) -> usize {
        self.basis.shape().len()
    }

    /// `out += λ (I−Q)ᵀ(I−Q) d`, using `tmp` as scratch.
    fn add_smoothness(&self, d: &[f64], tmp: &mut [f64], tmp2: &mut [f64], out: &mut [f64]) {
        if self.cfg.lambda == 0.0 {
            return;
        }
        self.q.apply_residual(d, tmp);
        self.q.apply_residual_transpose(tmp, tmp2);
        out.iter_mut().zip(tmp2.iter()).for_each(|(o, t)| *o += self.cfg.lambda * t);
    }

    fn stacked_apply(&self, x: &[f64], out: &mut [f64]) {
        let n = self.n();
        let (d, w) = x.split_at(n);
        let (out_d, out_w) = out.split_at_mut(n);
        out_d.iter_mut().for_each(|o| *o = 0.0);
        self.obs.add_gram(d, out_d);
        let mut tmp = vec![0.0; n];
        let mut tmp2 = vec![0.0; n];
        self.add_smoothness(d, &mut tmp, &mut tmp2, out_d);
        // A'ᵀA' x = [r; −Aᵀ r] with r = d − A w.
        self.basis.apply_into(w, &mut tmp);
        tmp.iter_mut().zip(d).for_each(|(t, di)| *t = di - *t);
        let gamma = self.cfg.gamma;
        out_d.iter_mut().zip(&tmp).for_each(|(o, r)| *o += gamma * r);
        for (j, o) in out_w.iter_mut().enumerate() {
            *o = -gamma * crate::basis::dot(self.basis.column(j), &tmp);
        }
    }

    fn eliminated_apply(&self, d: &[f64], out: &mut [f64], scratch: &mut [Vec<f64>; 3]) {
        let [tmp, tmp2, proj] = scratch;
        out.iter_mut().for_each(|o| *o = 0.0);
        self.obs.add_gram(d, out);
        self.add_smoothness(d, tmp, tmp2, out);
        if self.cfg.gamma != 0.0 {
            let coeffs = self.basis.transpose_apply(d);
            self.basis.apply_into(&coeffs, proj);
            let gamma = self.cfg.gamma;
            out.iter_mut()
                .zip(d)
                .zip(proj.iter())
                .for_each(|((o, di), pi)| *o += gamma * (di - pi));
        }
    }

    /// Squared row norms `Σ_j A[p,j]²`.
    fn basis_row_norms(&self) -> Vec<f64> {
        let mut norms = vec![0.0; self.n()];
        for j in 0..self.basis.k() {
            for (acc, &a) in norms.iter_mut().zip(self.basis.column(j)) {
                *acc += a * a;
            }
        }
        norms
    }

    fn base_diagonal(&self) -> Vec<f64> {
        let mut diag = self.obs.gram_diagonal();
        if self.cfg.lambda != 0.0 {
            for (d, g) in diag.iter_mut().zip(self.q.residual_gram_diagonal()) {
                *d += self.cfg.lambda * g;
            }
        }
        diag
    }

    fn objective(&self, d: &[f64], w: &[f64]) -> f64 {
        let data: f64 = self
            .obs
            .pixels
            .iter()
            .zip(&self.obs.observed)
            .map(|(&p, &o)| (d[p] - o) * (d[p] - o))
            .sum();
        let mut tmp = vec![0.0; self.n()];
        let smooth = if self.cfg.lambda != 0.0 {
            self.q.apply_residual(d, &mut tmp);
            tmp.iter().map(|t| t * t).sum()
        } else {
            0.0
        };
        let subspace = if self.cfg.gamma != 0.0 {
            self.basis.apply_into(w, &mut tmp);
            tmp.iter().zip(d).map(|(a, b)| (a - b) * (a - b)).sum()
        } else {
            0.0
        };
        0.5 * data + 0.5 * self.cfg.lambda * smooth + 0.5 * self.cfg.gamma * subspace
    }

    fn rhs_stacked(&self) -> Vec<f64> {
        let mut b = self.obs.apply_transpose(&self.obs.observed);
        b.resize(self.n() + self.basis.k(), 0.0);
        b
    }

    fn normal_residual(&self, d: &[f64], w: &[f64]) -> f64 {
        let mut x = d.to_vec();
        x.extend_from_slice(w);
        let b = self.rhs_stacked();
        let mut y = vec![0.0; x.len()];
        self.stacked_apply(&x, &mut y);
        let r: f64 = y.iter().zip(&b).map(|(a, c)| (a - c) * (a - c)).sum();
        let bn: f64 = b.iter().map(|c| c * c).sum();
        if bn == 0.0 {
            libm::sqrt(r)
        } else {
            libm::sqrt(r / bn)
        }
    }

    fn finish(
        &self,
        d: Vec<f64>,
        w: Vec<f64>,
        initial_objective: f64,
        iterations: usize,
    ) -> Result<JointSolution> {
        let shape = self.basis.shape();
        let objective_value = self.objective(&d, &w);
        let normal_residual = self.normal_residual(&d, &w);
        let solution = JointSolution {
            depth: DepthMap::prediction(shape.height, shape.width, d)?,
            weights: w,
            objective_value,
            initial_objective,
            normal_residual,
            iterations,
        };
        if !(normal_residual <= self.cfg.cg_tol) {
            return Err(Error::NotConverged {
                iterations,
                residual: normal_residual,
                best: Box::new(solution),
            });
        }
        Ok(solution)
    }
}

fn check_vec(what: &'static str, expected: usize, v: &[f64]) -> Result<()> {
    check_len(what, expected, v.len())
}

/// `½‖Pd−d⁰‖² + (λ/2)‖Qd−d‖² + (γ/2)‖Aw−d‖²`.
pub fn objective(
    d: &[f64],
    w: &[f64],
    samples: &SparseSamples,
    q: &PredictionMatrix,
    basis: &BasisSet,
    cfg: &SolveConfig,
) -> Result<f64> {
    let problem = Problem::new(samples, q, basis, cfg)?;
    check_vec("depth vector", problem.n(), d)?;
    check_vec("basis weights", basis.k(), w)?;
    Ok(problem.objective(d, w))
}

/// Applies the stacked normal-equation operator to `x = [d; w]`.
pub fn apply_system(
    x: &[f64],
    samples: &SparseSamples,
    q: &PredictionMatrix,
    basis: &BasisSet,
    cfg: &SolveConfig,
) -> Result<Vec<f64>> {
    let problem = Problem::new(samples, q, basis, cfg)?;
    check_vec("stacked vector", problem.n() + basis.k(), x)?;
    let mut out = vec![0.0; x.len()];
    problem.stacked_apply(x, &mut out);
    Ok(out)
}

fn prepare<'a>(
    samples: &SparseSamples,
    q: &'a PredictionMatrix,
    basis: &'a BasisSet,
    cfg: &SolveConfig,
) -> Result<(Problem<'a>, Vec<f64>)> {
    cfg.validate()?;
    if samples.is_empty() {
        return Err(Error::EmptySamples);
    }
    let problem = Problem::new(samples, q, basis, cfg)?;
    let (_, fit) = pca_complete(basis, samples)?;
    Ok((problem, fit.weights))
}

/// Solves the stacked system for `x = [d; w]`.
pub fn solve_joint(
    samples: &SparseSamples,
    q: &PredictionMatrix,
    basis: &BasisSet,
    cfg: &SolveConfig,
) -> Result<JointSolution> {
    let (problem, w0) = prepare(samples, q, basis, cfg)?;
    let n = problem.n();
    let mut x0 = basis.apply(&w0);
    let initial_objective = problem.objective(&x0, &w0);
    x0.extend_from_slice(&w0);

    let mut diag = problem.base_diagonal();
    let gamma = cfg.gamma;
    diag.iter_mut().for_each(|d| *d += gamma);
    diag.extend((0..basis.k()).map(|j| {
        let col = basis.column(j);
        gamma * crate::basis::dot(col, col)
    }));

    let b = problem.rhs_stacked();
    let out = cg::solve(
        |x, y| problem.stacked_apply(x, y),
        &b,
        x0,
        &diag,
        0.5 * cfg.cg_tol,
        cfg.max_iters(basis.shape()),
    );
    let mut x = out.x;
    let mut w = x.split_off(n);
    if gamma == 0.0 {
        // w does not enter the objective; report the projection of d.
        w = basis.transpose_apply(&x);
    }
    problem.finish(x, w, initial_objective, out.iterations)
}

/// Solves the reduced system in `d` alone, then sets `w = Aᵀ d`. Requires an
/// orthonormal basis.
pub fn eliminate_weights(
    samples: &SparseSamples,
    q: &PredictionMatrix,
    basis: &BasisSet,
    cfg: &SolveConfig,
) -> Result<JointSolution> {
    let (problem, w0) = prepare(samples, q, basis, cfg)?;
    let n = problem.n();
    let d0 = basis.apply(&w0);
    let initial_objective = problem.objective(&d0, &w0);

    let mut diag = problem.base_diagonal();
    if cfg.gamma != 0.0 {
        for (d, r) in diag.iter_mut().zip(problem.basis_row_norms()) {
            *d += cfg.gamma * (1.0 - r);
        }
    }
    let b = problem.obs.apply_transpose(&problem.obs.observed);
    let mut scratch = [vec![0.0; n], vec![0.0; n], vec![0.0; n]];
    let out = cg::solve(
        |x, y| problem.eliminated_apply(x, y, &mut scratch),
        &b,
        d0,
        &diag,
        0.5 * cfg.cg_tol,
        cfg.max_iters(basis.shape()),
    );
    let w = basis.transpose_apply(&out.x);
    problem.finish(out.x, w, initial_objective, out.iterations)
}

/// Dispatches on [`SolveConfig::reduction`].
pub fn solve(
    samples: &SparseSamples,
    q: &PredictionMatrix,
    basis: &BasisSet,
    cfg: &SolveConfig,
) -> Result<JointSolution> {
    match cfg.reduction {
        Reduction::Stacked => solve_joint(samples, q, basis, cfg),
        Reduction::Eliminated => eliminate_weights(samples, q, basis, cfg),
    }
}
