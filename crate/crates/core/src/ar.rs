//! Colour-guided auto-regressive prediction operator.
//!
//! Each pixel `u` is predicted from its neighbours `v` inside a square window
//! as `D_u = Σ_v α(u,v) D_v`. The coefficients come from colour similarity of
//! small patches around `u` and `v`, with the patch difference weighted by a
//! bilateral kernel centred on `u`:
//!
//! ```text
//! B_u(o)    = exp(-Σ_c (g_u - g_{u+o})² / (6 σ_I²))
//! α^I(u,v)  = exp(-Σ_o Σ_c (B_u(o) (g_{u+o} - g_{v+o}))² / (6 σ_u²))
//! α(u,v)    = α^I(u,v) / Σ_v' α^I(u,v')
//! ```
//!
//! `σ_u` is the pooled intensity variance of the window around `u`, floored
//! so flat regions stay well defined. The normalized coefficients form the
//! rows of a sparse, row-stochastic matrix `Q` with zero diagonal.

use alloc::vec;
use alloc::vec::Vec;

use crate::depth::{ColourImage, GridShape};
use crate::error::{Error, Result};

/// How `g_u` and `g_v` are compared.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GuidanceMode {
    /// Bilateral-weighted comparison of square patches (border-clamped).
    #[default]
    Patch,
    /// Single-pixel colour difference, no bilateral weighting.
    Pixel,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArConfig {
    /// Neighbourhood half-size; 4 gives a 9x9 window.
    pub window_radius: usize,
    /// Patch half-size for [`GuidanceMode::Patch`]; 1 gives 3x3 patches.
    pub patch_radius: usize,
    /// Lower bound of the local variance.
    pub sigma_floor: f64,
    /// Bandwidth of the bilateral kernel on `[0, 1]` intensities.
    pub sigma_i: f64,
    pub mode: GuidanceMode,
}

impl Default for ArConfig {
    fn default() -> Self {
        Self {
            window_radius: 4,
            patch_radius: 1,
            sigma_floor: 1e-4,
            sigma_i: 0.05,
            mode: GuidanceMode::Patch,
        }
    }
}

impl ArConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma_floor > 0.0 && self.sigma_floor.is_finite()) {
            return Err(Error::Config("sigma_floor must be positive"));
        }
        if !(self.sigma_i > 0.0 && self.sigma_i.is_finite()) {
            return Err(Error::Config("sigma_i must be positive"));
        }
        if self.window_radius == 0 {
            return Err(Error::Config("window_radius must be at least 1"));
        }
        Ok(())
    }

    fn effective_patch_radius(&self) -> usize {
        match self.mode {
            GuidanceMode::Patch => self.patch_radius,
            GuidanceMode::Pixel => 0,
        }
    }
}

/// Sparse row-compressed `(H·W) x (H·W)` prediction matrix `Q`.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionMatrix {
    shape: GridShape,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl PredictionMatrix {
    #[inline]
    pub fn shape(&self) -> GridShape {
        self.shape
    }

    /// Number of rows (and columns).
    #[inline]
    pub fn dim(&self) -> usize {
        self.shape.len()
    }

    #[inline]
    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Column indices and coefficients of row `u`.
    #[inline]
    pub fn row(&self, u: usize) -> (&[usize], &[f64]) {
        let range = self.row_ptr[u]..self.row_ptr[u + 1];
        (&self.col_idx[range.clone()], &self.values[range])
    }

    pub fn get(&self, u: usize, v: usize) -> f64 {
        let (cols, vals) = self.row(u);
        cols.iter()
            .position(|&c| c == v)
            .map_or(0.0, |i| vals[i])
    }

    /// `out = Q x`.
    pub fn apply(&self, x: &[f64], out: &mut [f64]) {
        for (u, o) in out.iter_mut().enumerate() {
            let (cols, vals) = self.row(u);
            *o = cols.iter().zip(vals).map(|(&v, &a)| a * x[v]).sum();
        }
    }

    /// `out = Qᵀ x`.
    pub fn apply_transpose(&self, x: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        for (u, &xu) in x.iter().enumerate() {
            let (cols, vals) = self.row(u);
            for (&v, &a) in cols.iter().zip(vals) {
                out[v] += a * xu;
            }
        }
    }

    /// `out = (I - Q) x`.
    pub fn apply_residual(&self, x: &[f64], out: &mut [f64]) {
        self.apply(x, out);
        out.iter_mut().zip(x).for_each(|(o, &xi)| *o = xi - *o);
    }

    /// `out = (I - Q)ᵀ x`.
    pub fn apply_residual_transpose(&self, x: &[f64], out: &mut [f64]) {
        self.apply_transpose(x, out);
        out.iter_mut().zip(x).for_each(|(o, &xi)| *o = xi - *o);
    }

    /// Diagonal of `(I - Q)ᵀ (I - Q)`: `1 + Σ_u Q[u,v]²` for column `v`,
    /// using `Q[v,v] = 0`.
    pub fn residual_gram_diagonal(&self) -> Vec<f64> {
        let mut diag = vec![1.0; self.dim()];
        for (&v, &a) in self.col_idx.iter().zip(&self.values) {
            diag[v] += a * a;
        }
        diag
    }

    /// Iterates `(u, v, Q[u,v])` over stored entries.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.dim()).flat_map(move |u| {
            let (cols, vals) = self.row(u);
            cols.iter().zip(vals).map(move |(&v, &a)| (u, v, a))
        })
    }
}

#[inline]
fn clamp_offset(base: usize, offset: isize, len: usize) -> usize {
    let pos = base as isize + offset;
    pos.clamp(0, len as isize - 1) as usize
}

#[inline]
fn channels(colour: &ColourImage, p: usize) -> &[f64] {
    &colour.data()[p * 3..p * 3 + 3]
}

fn check_pixel(colour: &ColourImage, u: (usize, usize)) -> Result<usize> {
    colour.shape().to_linear(u.0, u.1)
}

/// Pooled population variance of all channel intensities in the window
/// around `u` (truncated at the border), floored at `cfg.sigma_floor`.
pub fn local_sigma(colour: &ColourImage, u: (usize, usize), cfg: &ArConfig) -> Result<f64> {
    check_pixel(colour, u)?;
    Ok(local_sigma_unchecked(colour, u, cfg))
}

fn local_sigma_unchecked(colour: &ColourImage, (row, col): (usize, usize), cfg: &ArConfig) -> f64 {
    let (h, w) = (colour.height(), colour.width());
    let r = cfg.window_radius;
    // Accumulate around the centre value so the result depends only on
    // intensity differences.
    let reference = channels(colour, row * w + col)[0];
    let (mut sum, mut sum_sq, mut count) = (0.0, 0.0, 0usize);
    for rr in row.saturating_sub(r)..(row + r + 1).min(h) {
        for cc in col.saturating_sub(r)..(col + r + 1).min(w) {
            for &g in channels(colour, rr * w + cc) {
                let d = g - reference;
                sum += d;
                sum_sq += d * d;
                count += 1;
            }
        }
    }
    let n = count as f64;
    let mean = sum / n;
    (sum_sq / n - mean * mean).max(cfg.sigma_floor)
}

/// Bilateral weights of the patch around `u`, row-major over offsets
/// `(-p..=p) x (-p..=p)`. The centre weight is 1.
pub fn bilateral_kernel(colour: &ColourImage, u: (usize, usize), cfg: &ArConfig) -> Result<Vec<f64>> {
    check_pixel(colour, u)?;
    let mut out = Vec::new();
    bilateral_kernel_into(colour, u, cfg.effective_patch_radius(), cfg.sigma_i, &mut out);
    Ok(out)
}

fn bilateral_kernel_into(
    colour: &ColourImage,
    (row, col): (usize, usize),
    radius: usize,
    sigma_i: f64,
    out: &mut Vec<f64>,
) {
    let (h, w) = (colour.height(), colour.width());
    let centre = channels(colour, row * w + col);
    let denom = 2.0 * 3.0 * sigma_i * sigma_i;
    let p = radius as isize;
    out.clear();
    for dr in -p..=p {
        for dc in -p..=p {
            let q = clamp_offset(row, dr, h) * w + clamp_offset(col, dc, w);
            let dist: f64 = centre
                .iter()
                .zip(channels(colour, q))
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            out.push(libm::exp(-dist / denom));
        }
    }
}

/// Exponent of `α^I(u, v)`, i.e. `α^I = exp(-energy)`.
fn energy(
    colour: &ColourImage,
    (ur, uc): (usize, usize),
    (vr, vc): (usize, usize),
    radius: usize,
    kernel: &[f64],
    sigma: f64,
) -> f64 {
    let (h, w) = (colour.height(), colour.width());
    let p = radius as isize;
    let mut acc = 0.0;
    let mut k = 0;
    for dr in -p..=p {
        for dc in -p..=p {
            let a = clamp_offset(ur, dr, h) * w + clamp_offset(uc, dc, w);
            let b = clamp_offset(vr, dr, h) * w + clamp_offset(vc, dc, w);
            let weight = kernel[k];
            k += 1;
            for (x, y) in channels(colour, a).iter().zip(channels(colour, b)) {
                let d = weight * (x - y);
                acc += d * d;
            }
        }
    }
    acc / (2.0 * 3.0 * sigma * sigma)
}

/// Unnormalized coefficient `α^I(u, v)` in `(0, 1]`. `v` must be a distinct
/// pixel inside the window of `u`.
pub fn ar_coefficient(
    colour: &ColourImage,
    u: (usize, usize),
    v: (usize, usize),
    cfg: &ArConfig,
) -> Result<f64> {
    check_pixel(colour, u)?;
    check_pixel(colour, v)?;
    let r = cfg.window_radius;
    if u == v || u.0.abs_diff(v.0) > r || u.1.abs_diff(v.1) > r {
        return Err(Error::Config("neighbour must be a distinct pixel inside the window"));
    }
    let radius = cfg.effective_patch_radius();
    let mut kernel = Vec::new();
    bilateral_kernel_into(colour, u, radius, cfg.sigma_i, &mut kernel);
    let sigma = local_sigma_unchecked(colour, u, cfg);
    Ok(libm::exp(-energy(colour, u, v, radius, &kernel, sigma)))
}

/// Assembles `Q` with `Q[u,v] = α^I(u,v) / N_u` over all in-bounds window
/// neighbours of every pixel.
pub fn build_prediction_matrix(colour: &ColourImage, cfg: &ArConfig) -> Result<PredictionMatrix> {
    cfg.validate()?;
    let shape = colour.shape();
    let (h, w) = (shape.height, shape.width);
    if shape.len() < 2 {
        return Err(Error::Config("prediction needs at least two pixels"));
    }
    let r = cfg.window_radius;
    let radius = cfg.effective_patch_radius();
    let side = 2 * r + 1;

    let mut row_ptr = Vec::with_capacity(shape.len() + 1);
    let mut col_idx = Vec::with_capacity(shape.len() * (side * side - 1));
    let mut values = Vec::with_capacity(col_idx.capacity());
    let mut kernel = Vec::new();
    let mut energies: Vec<f64> = Vec::with_capacity(side * side);
    row_ptr.push(0);

    for ur in 0..h {
        for uc in 0..w {
            let u = (ur, uc);
            bilateral_kernel_into(colour, u, radius, cfg.sigma_i, &mut kernel);
            let sigma = local_sigma_unchecked(colour, u, cfg);
            let start = col_idx.len();
            energies.clear();
            for vr in ur.saturating_sub(r)..(ur + r + 1).min(h) {
                for vc in uc.saturating_sub(r)..(uc + r + 1).min(w) {
                    if (vr, vc) == u {
                        continue;
                    }
                    col_idx.push(vr * w + vc);
                    energies.push(energy(colour, u, (vr, vc), radius, &kernel, sigma));
                }
            }
            // exp(-E_v) / Σ exp(-E_v'), shifted by the smallest energy so
            // that strongly dissimilar windows cannot underflow to 0 / 0.
            let min_e = energies.iter().copied().fold(f64::INFINITY, f64::min);
            let weights_start = values.len();
            let mut total = 0.0;
            for &e in &energies {
                let a = libm::exp(min_e - e);
                total += a;
                values.push(a);
            }
            for a in &mut values[weights_start..] {
                *a /= total;
            }
            debug_assert_eq!(values.len() - weights_start, col_idx.len() - start);
            row_ptr.push(col_idx.len());
        }
    }

    Ok(PredictionMatrix {
        shape,
        row_ptr,
        col_idx,
        values,
    })
}
