//! Grids, depth maps, sparse samples and guidance images.
//!
//! Every dense quantity in the crate is stored row-major: pixel `(row, col)`
//! lives at linear index `row * width + col`. Basis rows, the prediction
//! operator and the observation operator all share this ordering.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Linear index of `(row, col)` on a grid of the given width.
pub fn to_linear(row: usize, col: usize, width: usize) -> Result<usize> {
    if col >= width {
        return Err(Error::OutOfBounds {
            row,
            col,
            height: usize::MAX,
            width,
        });
    }
    Ok(row * width + col)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct GridShape {
    pub height: usize,
    pub width: usize,
}

impl GridShape {
    pub fn new(height: usize, width: usize) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::EmptyGrid { height, width });
        }
        Ok(Self { height, width })
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.height * self.width
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn contains(&self, row: usize, col: usize) -> bool {
        row < self.height && col < self.width
    }

    pub fn to_linear(&self, row: usize, col: usize) -> Result<usize> {
        if !self.contains(row, col) {
            return Err(Error::OutOfBounds {
                row,
                col,
                height: self.height,
                width: self.width,
            });
        }
        Ok(row * self.width + col)
    }

    /// Inverse of [`GridShape::to_linear`]; `None` past the last pixel.
    pub fn from_linear(&self, index: usize) -> Option<(usize, usize)> {
        (index < self.len()).then(|| (index / self.width, index % self.width))
    }

    pub(crate) fn ensure_same(&self, other: GridShape) -> Result<()> {
        if *self != other {
            return Err(Error::ResolutionMismatch {
                expected_height: self.height,
                expected_width: self.width,
                height: other.height,
                width: other.width,
            });
        }
        Ok(())
    }
}

/// A depth (or disparity) map with an explicit validity mask.
///
/// The mask is authoritative: values at invalid pixels are never read, so
/// both zero-filled and NaN-filled sources load the same way.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthMap {
    shape: GridShape,
    values: Vec<f64>,
    valid: Vec<bool>,
}

impl DepthMap {
    /// Builds a map from values and mask. Valid entries must be finite and
    /// strictly positive.
    pub fn new(height: usize, width: usize, values: Vec<f64>, valid: Vec<bool>) -> Result<Self> {
        let shape = GridShape::new(height, width)?;
        check_len("depth values", shape.len(), values.len())?;
        check_len("validity mask", shape.len(), valid.len())?;
        for (index, (&value, &ok)) in values.iter().zip(&valid).enumerate() {
            if ok && !(value.is_finite() && value > 0.0) {
                return Err(Error::InvalidDepth { index, value });
            }
        }
        Ok(Self {
            shape,
            values,
            valid,
        })
    }

    /// Derives the mask from the values: anything non-finite or `<= 0` is a hole.
    pub fn from_values(height: usize, width: usize, values: Vec<f64>) -> Result<Self> {
        let valid = values.iter().map(|v| v.is_finite() && *v > 0.0).collect();
        Self::new(height, width, values, valid)
    }

    /// A fully valid map produced by a model. Values only need to be finite;
    /// a linear model can legitimately predict non-positive depth far from
    /// its samples.
    pub fn prediction(height: usize, width: usize, values: Vec<f64>) -> Result<Self> {
        let shape = GridShape::new(height, width)?;
        check_len("depth values", shape.len(), values.len())?;
        if let Some((index, &value)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::InvalidDepth { index, value });
        }
        let valid = vec![true; values.len()];
        Ok(Self {
            shape,
            values,
            valid,
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

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn valid(&self) -> &[bool] {
        &self.valid
    }

    pub fn get(&self, row: usize, col: usize) -> Option<f64> {
        let index = self.shape.to_linear(row, col).ok()?;
        self.valid[index].then(|| self.values[index])
    }

    pub fn valid_count(&self) -> usize {
        self.valid.iter().filter(|&&v| v).count()
    }

    pub fn is_fully_valid(&self) -> bool {
        self.valid.iter().all(|&v| v)
    }

    /// Keeps the bottom `rows` rows.
    pub fn crop_bottom(&self, rows: usize) -> Result<Self> {
        let rows = rows.min(self.height());
        let start = (self.height() - rows) * self.width();
        Self::new(
            rows,
            self.width(),
            self.values[start..].to_vec(),
            self.valid[start..].to_vec(),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub row: usize,
    pub col: usize,
    pub depth: f64,
}

/// Sparse depth observations on an image grid, without duplicate pixels.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseSamples {
    shape: GridShape,
    entries: Vec<Sample>,
}

impl SparseSamples {
    pub fn new(height: usize, width: usize, entries: Vec<Sample>) -> Result<Self> {
        let shape = GridShape::new(height, width)?;
        let mut seen = vec![false; shape.len()];
        for (entry, s) in entries.iter().enumerate() {
            let index = shape.to_linear(s.row, s.col)?;
            if !(s.depth.is_finite() && s.depth > 0.0) {
                return Err(Error::InvalidDepth {
                    index,
                    value: s.depth,
                });
            }
            if core::mem::replace(&mut seen[index], true) {
                return Err(Error::DuplicateSample {
                    entry,
                    row: s.row,
                    col: s.col,
                });
            }
        }
        Ok(Self { shape, entries })
    }

    #[inline]
    pub fn shape(&self) -> GridShape {
        self.shape
    }

    #[inline]
    pub fn entries(&self) -> &[Sample] {
        &self.entries
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Linear pixel index of every entry, in entry order.
    pub fn linear_indices(&self) -> Vec<usize> {
        self.entries
            .iter()
            .map(|s| s.row * self.shape.width + s.col)
            .collect()
    }

    pub fn depths(&self) -> Vec<f64> {
        self.entries.iter().map(|s| s.depth).collect()
    }

    /// Writes the samples into an otherwise invalid map.
    pub fn scatter(&self) -> DepthMap {
        let mut values = vec![0.0; self.shape.len()];
        let mut valid = vec![false; self.shape.len()];
        for (p, s) in self.linear_indices().into_iter().zip(&self.entries) {
            values[p] = s.depth;
            valid[p] = true;
        }
        DepthMap {
            shape: self.shape,
            values,
            valid,
        }
    }
}

/// Keeps the valid pixels whose row and column are both multiples of `stride`.
///
/// Errors only when the map has no valid pixel at all; a partially valid map
/// may still yield an empty sample set.
pub fn subsample_grid(depth: &DepthMap, stride: usize) -> Result<SparseSamples> {
    if stride == 0 {
        return Err(Error::Config("stride must be at least 1"));
    }
    if depth.valid_count() == 0 {
        return Err(Error::EmptySamples);
    }
    let shape = depth.shape();
    let mut entries = Vec::new();
    for row in (0..shape.height).step_by(stride) {
        for col in (0..shape.width).step_by(stride) {
            let p = row * shape.width + col;
            if depth.valid[p] {
                entries.push(Sample {
                    row,
                    col,
                    depth: depth.values[p],
                });
            }
        }
    }
    Ok(SparseSamples { shape, entries })
}

/// Three-channel guidance image with intensities in `[0, 1]`, row-major and
/// channel-interleaved.
#[derive(Debug, Clone, PartialEq)]
pub struct ColourImage {
    shape: GridShape,
    data: Vec<f64>,
}

impl ColourImage {
    pub const CHANNELS: usize = 3;

    pub fn new(height: usize, width: usize, data: Vec<f64>) -> Result<Self> {
        let shape = GridShape::new(height, width)?;
        check_len("colour intensities", shape.len() * Self::CHANNELS, data.len())?;
        if let Some((index, &value)) = data
            .iter()
            .enumerate()
            .find(|(_, v)| !(0.0..=1.0).contains(*v))
        {
            return Err(Error::InvalidIntensity { index, value });
        }
        Ok(Self { shape, data })
    }

    /// Grey image replicated into all three channels.
    pub fn from_gray(height: usize, width: usize, gray: &[f64]) -> Result<Self> {
        let data = gray.iter().flat_map(|&g| [g, g, g]).collect();
        Self::new(height, width, data)
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

    #[inline]
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn pixel(&self, row: usize, col: usize) -> [f64; 3] {
        let i = (row * self.shape.width + col) * Self::CHANNELS;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    pub fn crop_bottom(&self, rows: usize) -> Result<Self> {
        let rows = rows.min(self.height());
        let start = (self.height() - rows) * self.width() * Self::CHANNELS;
        Self::new(rows, self.width(), self.data[start..].to_vec())
    }
}

pub(crate) fn check_len(what: &'static str, expected: usize, actual: usize) -> Result<()> {
    if expected != actual {
        return Err(Error::LengthMismatch {
            what,
            expected,
            actual,
        });
    }
    Ok(())
}
