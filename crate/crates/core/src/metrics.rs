//! Mean relative error and bad pixel ratio.
//!
//! Both metrics are computed over the pixels where the ground truth is valid
//! and positive; everything else is ignored, whatever value it holds.

use crate::depth::DepthMap;
use crate::error::{Error, Result};

/// Which pixels of the ground truth are compared.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvalMode {
    /// Metric depth against sparse LiDAR ground truth; only LiDAR pixels count.
    KittiSparse,
    /// Disparity against dense ground truth with holes; holes are skipped.
    MiddleburyHoles,
}

impl EvalMode {
    /// 3 m for metric depth, 1 px for disparity.
    pub fn default_threshold(self) -> f64 {
        match self {
            EvalMode::KittiSparse => 3.0,
            EvalMode::MiddleburyHoles => 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricReport {
    pub mode: EvalMode,
    pub mre: f64,
    /// Fraction in `[0, 1]`.
    pub bpr: f64,
    pub threshold: f64,
    pub evaluated_pixels: usize,
    /// Ground-truth valid pixels left out: non-positive truth or no prediction.
    pub excluded_pixels: usize,
}

struct Totals {
    abs_rel: f64,
    bad: usize,
    evaluated: usize,
    excluded: usize,
}

fn accumulate(gt: &DepthMap, pred: &DepthMap, threshold: f64) -> Result<Totals> {
    gt.shape().ensure_same(pred.shape())?;
    let mut t = Totals {
        abs_rel: 0.0,
        bad: 0,
        evaluated: 0,
        excluded: 0,
    };
    let pv = pred.values();
    let pm = pred.valid();
    for (p, (&g, &ok)) in gt.values().iter().zip(gt.valid()).enumerate() {
        if !ok {
            continue;
        }
        if !(g > 0.0) || !pm[p] {
            t.excluded += 1;
            continue;
        }
        let err = (g - pv[p]).abs();
        t.abs_rel += err / g;
        if err > threshold {
            t.bad += 1;
        }
        t.evaluated += 1;
    }
    if t.evaluated == 0 {
        return Err(Error::EmptyEvaluation);
    }
    Ok(t)
}

/// `(1/N) Σ |d - d̂| / d`.
pub fn mean_relative_error(gt: &DepthMap, pred: &DepthMap) -> Result<f64> {
    let t = accumulate(gt, pred, f64::INFINITY)?;
    Ok(t.abs_rel / t.evaluated as f64)
}

/// Fraction of evaluated pixels with `|d - d̂| > threshold` (strict).
pub fn bad_pixel_ratio(gt: &DepthMap, pred: &DepthMap, threshold: f64) -> Result<f64> {
    if !(threshold > 0.0) {
        return Err(Error::Config("threshold must be positive"));
    }
    let t = accumulate(gt, pred, threshold)?;
    Ok(t.bad as f64 / t.evaluated as f64)
}

/// Both metrics under one protocol.
///
/// The two modes compare the same pixel set (valid ground truth); they differ
/// in what the set means and in the customary threshold.
pub fn evaluate_protocol(
    gt: &DepthMap,
    pred: &DepthMap,
    mode: EvalMode,
    threshold: f64,
) -> Result<MetricReport> {
    if !(threshold > 0.0) {
        return Err(Error::Config("threshold must be positive"));
    }
    let t = accumulate(gt, pred, threshold)?;
    let n = t.evaluated as f64;
    Ok(MetricReport {
        mode,
        mre: t.abs_rel / n,
        bpr: t.bad as f64 / n,
        threshold,
        evaluated_pixels: t.evaluated,
        excluded_pixels: t.excluded,
    })
}
