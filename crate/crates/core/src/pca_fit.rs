//! Basis-only completion: fit the basis weights to the sparse samples in the
//! least-squares sense and synthesize the dense map from them.

use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use crate::basis::BasisSet;
use crate::depth::{check_len, DepthMap, SparseSamples};
use crate::error::{Error, Result};

/// Singular values below `PINV_RTOL * sigma_max` are treated as zero.
pub const PINV_RTOL: f64 = 1e-10;

/// Basis rows at the sample pixels, in sample order.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledBasis {
    /// `n x k`; row `i` is the basis row of `pixels[i]`.
    pub rows: DMatrix<f64>,
    /// Linear pixel index of each row. Row `i` belongs to sample entry `i`.
    pub pixels: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub weights: Vec<f64>,
    /// `‖Â w - d⁰‖₂`.
    pub residual_norm: f64,
    /// Number of singular values of `Â` kept by the pseudo-inverse.
    pub rank: usize,
}

pub fn sample_rows(basis: &BasisSet, samples: &SparseSamples) -> Result<SampledBasis> {
    basis.shape().ensure_same(samples.shape())?;
    let pixels = samples.linear_indices();
    let k = basis.k();
    let a = basis.columns();
    let rows = DMatrix::from_fn(pixels.len(), k, |i, j| a[(pixels[i], j)]);
    Ok(SampledBasis { rows, pixels })
}

/// Minimum-norm least-squares weights `w = Â⁺ d⁰` through a truncated SVD.
pub fn fit_weights(sampled: &SampledBasis, depths: &[f64]) -> Result<FitResult> {
    let n = sampled.rows.nrows();
    let k = sampled.rows.ncols();
    if n == 0 {
        return Err(Error::EmptySamples);
    }
    check_len("sample depths", n, depths.len())?;

    let rhs = DVector::from_column_slice(depths);
    let svd = sampled.rows.clone().svd(true, true);
    let u = svd.u.as_ref().expect("requested U");
    let v_t = svd.v_t.as_ref().expect("requested Vᵀ");
    let sigma_max = svd.singular_values.max();
    let cutoff = PINV_RTOL * sigma_max;

    let mut w = DVector::<f64>::zeros(k);
    let mut rank = 0;
    for (i, &s) in svd.singular_values.iter().enumerate() {
        if s > cutoff && s > 0.0 {
            rank += 1;
            let coeff = u.column(i).dot(&rhs) / s;
            w += v_t.row(i).transpose() * coeff;
        }
    }
    let residual_norm = (&sampled.rows * &w - &rhs).norm();
    Ok(FitResult {
        weights: w.as_slice().to_vec(),
        residual_norm,
        rank,
    })
}

/// Dense map `A w`, every pixel marked valid.
pub fn synthesize(basis: &BasisSet, weights: &[f64]) -> Result<DepthMap> {
    check_len("basis weights", basis.k(), weights.len())?;
    DepthMap::prediction(basis.height(), basis.width(), basis.apply(weights))
}

/// Sample rows, fit weights, synthesize.
pub fn pca_complete(basis: &BasisSet, samples: &SparseSamples) -> Result<(DepthMap, FitResult)> {
    if samples.is_empty() {
        return Err(Error::EmptySamples);
    }
    let sampled = sample_rows(basis, samples)?;
    let fit = fit_weights(&sampled, &samples.depths())?;
    let dense = synthesize(basis, &fit.weights)?;
    Ok((dense, fit))
}
