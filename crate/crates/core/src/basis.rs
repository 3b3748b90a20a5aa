//! Learning principal depth bases from a corpus of dense depth maps.
//!
//! The basis stores the normalized corpus mean as column 0, followed by the
//! leading principal directions of the mean-centred data, all mutually
//! orthonormal. Keeping the mean inside the basis lets the completion model
//! stay purely linear (`d = A w`) while still benefiting from centring.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use crate::depth::{DepthMap, GridShape};
use crate::error::{Error, Result};

/// Relative cut-off below which a centred singular value counts as zero.
const SINGULAR_RTOL: f64 = 1e-10;
/// A unit candidate direction whose component orthogonal to the accepted
/// columns is shorter than this is linearly dependent on them.
const DEPENDENCE_TOL: f64 = 1e-8;

/// Orthonormal depth bases tied to one image resolution.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisSet {
    shape: GridShape,
    columns: DMatrix<f64>,
    singular_values: Vec<f64>,
    source_tag: String,
}

impl BasisSet {
    /// Wraps an `(height * width) x k` column matrix. Orthonormality is the
    /// caller's responsibility; [`learn_bases`] guarantees it.
    pub fn new(
        height: usize,
        width: usize,
        columns: DMatrix<f64>,
        singular_values: Vec<f64>,
        source_tag: impl Into<String>,
    ) -> Result<Self> {
        let shape = GridShape::new(height, width)?;
        crate::depth::check_len("basis rows", shape.len(), columns.nrows())?;
        crate::depth::check_len("singular values", columns.ncols(), singular_values.len())?;
        if columns.ncols() == 0 {
            return Err(Error::Config("a basis needs at least one column"));
        }
        Ok(Self {
            shape,
            columns,
            singular_values,
            source_tag: source_tag.into(),
        })
    }

    #[inline]
    pub fn shape(&self) -> GridShape {
        self.shape
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.shape.height
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.shape.width
    }

    /// Number of basis columns.
    #[inline]
    pub fn k(&self) -> usize {
        self.columns.ncols()
    }

    #[inline]
    pub fn columns(&self) -> &DMatrix<f64> {
        &self.columns
    }

    /// Column `j` as a contiguous row-major image.
    pub fn column(&self, j: usize) -> &[f64] {
        let n = self.shape.len();
        &self.columns.as_slice()[j * n..(j + 1) * n]
    }

    /// Leading singular values of the centred training data, descending.
    /// Metadata only; they do not scale the columns.
    pub fn singular_values(&self) -> &[f64] {
        &self.singular_values
    }

    pub fn source_tag(&self) -> &str {
        &self.source_tag
    }

    pub fn set_source_tag(&mut self, tag: impl Into<String>) {
        self.source_tag = tag.into();
    }

    /// `max |AᵀA - I|`.
    pub fn orthonormality_error(&self) -> f64 {
        let gram = self.columns.tr_mul(&self.columns);
        let k = self.k();
        let mut worst = 0.0f64;
        for i in 0..k {
            for j in 0..k {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((gram[(i, j)] - target).abs());
            }
        }
        worst
    }

    /// `Aᵀ x` for a dense image vector.
    pub fn transpose_apply(&self, x: &[f64]) -> Vec<f64> {
        (0..self.k()).map(|j| dot(self.column(j), x)).collect()
    }

    /// `A w`, accumulated column by column in a fixed order.
    pub fn apply(&self, weights: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.shape.len()];
        self.apply_into(weights, &mut out);
        out
    }

    pub(crate) fn apply_into(&self, weights: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        for (j, &wj) in weights.iter().enumerate() {
            if wj != 0.0 {
                for (o, &a) in out.iter_mut().zip(self.column(j)) {
                    *o += wj * a;
                }
            }
        }
    }

    /// Keeps the first `k` columns.
    pub fn truncated(&self, k: usize) -> Result<Self> {
        if k == 0 || k > self.k() {
            return Err(Error::Rank {
                requested: k,
                achievable: self.k(),
            });
        }
        Ok(Self {
            shape: self.shape,
            columns: self.columns.columns(0, k).into_owned(),
            singular_values: self.singular_values[..k].to_vec(),
            source_tag: self.source_tag.clone(),
        })
    }
}

/// Fully valid training maps sharing one resolution.
#[derive(Debug, Clone)]
pub struct TrainingCorpus {
    shape: GridShape,
    maps: Vec<DepthMap>,
    tag: String,
}

impl TrainingCorpus {
    /// Requires at least two maps of identical size, each with at least 1%
    /// valid pixels. Holes are allowed here but must be filled before
    /// [`learn_bases`].
    pub fn new(maps: Vec<DepthMap>) -> Result<Self> {
        if maps.len() < 2 {
            return Err(Error::CorpusTooSmall(maps.len()));
        }
        let shape = maps[0].shape();
        for (index, m) in maps.iter().enumerate() {
            shape.ensure_same(m.shape())?;
            let valid = m.valid_count();
            // At least 1% valid: 100 * valid >= total.
            if valid * 100 < shape.len() || valid == 0 {
                return Err(Error::SparseTrainingMap {
                    index,
                    valid,
                    total: shape.len(),
                });
            }
        }
        Ok(Self {
            shape,
            maps,
            tag: String::new(),
        })
    }

    pub fn with_tag(mut self, tag: impl Into<String>) -> Self {
        self.tag = tag.into();
        self
    }

    pub fn shape(&self) -> GridShape {
        self.shape
    }

    pub fn maps(&self) -> &[DepthMap] {
        &self.maps
    }

    pub fn len(&self) -> usize {
        self.maps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.maps.is_empty()
    }

    /// Replaces every map by its diffusion-filled version.
    pub fn filled(&self, tol: f64, max_iters: usize) -> Result<Self> {
        Ok(Self {
            shape: self.shape,
            maps: crate::inpaint::fill_all(&self.maps, tol, max_iters)?,
            tag: self.tag.clone(),
        })
    }
}

/// Learns `k` orthonormal basis columns: the normalized mean, then the top
/// `k - 1` principal directions of the centred corpus by singular value,
/// orthonormalized against the columns before them.
pub fn learn_bases(corpus: &TrainingCorpus, k: usize) -> Result<BasisSet> {
    let n_maps = corpus.len();
    let n_pix = corpus.shape.len();
    if k == 0 {
        return Err(Error::Config("k must be at least 1"));
    }
    if k > n_maps.min(n_pix) {
        return Err(Error::Rank {
            requested: k,
            achievable: n_maps.min(n_pix),
        });
    }
    if corpus.maps.iter().any(|m| !m.is_fully_valid()) {
        return Err(Error::IncompleteDepth);
    }

    let mut data = DMatrix::<f64>::zeros(n_pix, n_maps);
    for (j, m) in corpus.maps.iter().enumerate() {
        data.column_mut(j).copy_from_slice(m.values());
    }
    let mean: DVector<f64> = data.column_mean();
    for mut col in data.column_iter_mut() {
        col -= &mean;
    }

    let (directions, spectrum) = principal_directions(data);

    let mean_norm = mean.norm();
    let mut candidates: Vec<DVector<f64>> = Vec::with_capacity(directions.len() + 1);
    if mean_norm > 0.0 {
        candidates.push(mean / mean_norm);
    }
    candidates.extend(directions);

    let accepted = orthonormal_prefix(&candidates, k);
    if accepted.len() < k {
        let achievable = orthonormal_prefix(&candidates, candidates.len()).len();
        return Err(Error::Rank {
            requested: k,
            achievable,
        });
    }

    let mut columns = DMatrix::<f64>::zeros(n_pix, k);
    for (j, c) in accepted.iter().enumerate() {
        columns.column_mut(j).copy_from(c);
    }
    let mut singular_values = spectrum;
    singular_values.resize(k, 0.0);
    singular_values.truncate(k);

    BasisSet::new(
        corpus.shape.height,
        corpus.shape.width,
        columns,
        singular_values,
        corpus.tag.clone(),
    )
}

/// Left singular vectors of the centred data with non-negligible singular
/// value, in descending order, plus the full descending spectrum.
fn principal_directions(centred: DMatrix<f64>) -> (Vec<DVector<f64>>, Vec<f64>) {
    let svd = centred.svd(true, false);
    let u = svd.u.expect("left singular vectors were requested");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let spectrum: Vec<f64> = order.iter().map(|&i| svd.singular_values[i]).collect();
    let top = spectrum.first().copied().unwrap_or(0.0);
    let directions = order
        .iter()
        .filter(|&&i| top > 0.0 && svd.singular_values[i] > SINGULAR_RTOL * top)
        .map(|&i| u.column(i).into_owned())
        .collect();
    (directions, spectrum)
}

/// Gram-Schmidt with one reorthogonalization pass, skipping candidates that
/// are dependent on the columns accepted so far. Stops after `limit`.
fn orthonormal_prefix(candidates: &[DVector<f64>], limit: usize) -> Vec<DVector<f64>> {
    let mut accepted: Vec<DVector<f64>> = Vec::with_capacity(limit);
    for cand in candidates {
        if accepted.len() == limit {
            break;
        }
        let scale = cand.norm();
        if scale == 0.0 {
            continue;
        }
        let mut v = cand / scale;
        for _ in 0..2 {
            for q in &accepted {
                let c = q.dot(&v);
                v.axpy(-c, q, 1.0);
            }
        }
        let norm = v.norm();
        if norm > DEPENDENCE_TOL {
            v /= norm;
            // Sign convention: each column points along its own candidate.
            if v.dot(cand) < 0.0 {
                v.neg_mut();
            }
            accepted.push(v);
        }
    }
    accepted
}

/// Basis weights `Aᵀ d` of a fully valid map. With orthonormal columns,
/// `A (Aᵀ d)` is the orthogonal projection of `d` onto the basis span.
pub fn project_depth(basis: &BasisSet, depth: &DepthMap) -> Result<Vec<f64>> {
    basis.shape.ensure_same(depth.shape())?;
    if !depth.is_fully_valid() {
        return Err(Error::IncompleteDepth);
    }
    Ok(basis.transpose_apply(depth.values()))
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
