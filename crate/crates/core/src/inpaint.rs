//! Hole filling for training depth maps.

use alloc::vec::Vec;

use crate::depth::DepthMap;
use crate::error::{Error, Result};

/// Fills invalid pixels by Jacobi iteration of 4-neighbour averaging.
///
/// Valid pixels are held fixed. Iteration stops once the largest update is
/// below `tol` times the largest valid magnitude, or after `max_iters` sweeps.
pub fn diffusion_fill(depth: &DepthMap, tol: f64, max_iters: usize) -> Result<DepthMap> {
    let valid_count = depth.valid_count();
    if valid_count == 0 {
        return Err(Error::NoValidPixels);
    }
    let (h, w) = (depth.height(), depth.width());
    if valid_count == h * w {
        return Ok(depth.clone());
    }

    let mask = depth.valid();
    let mut scale = 0.0f64;
    let mut sum = 0.0;
    for (&v, _) in depth.values().iter().zip(mask).filter(|(_, &ok)| ok) {
        scale = scale.max(v.abs());
        sum += v;
    }
    let mean = sum / valid_count as f64;
    let threshold = tol * scale;

    let mut current: Vec<f64> = depth
        .values()
        .iter()
        .zip(mask)
        .map(|(&v, &ok)| if ok { v } else { mean })
        .collect();
    let holes: Vec<usize> = (0..h * w).filter(|&p| !mask[p]).collect();
    let mut next = current.clone();

    for _ in 0..max_iters {
        let mut max_update = 0.0f64;
        for &p in &holes {
            let (r, c) = (p / w, p % w);
            let mut acc = 0.0;
            let mut n = 0u32;
            if r > 0 {
                acc += current[p - w];
                n += 1;
            }
            if r + 1 < h {
                acc += current[p + w];
                n += 1;
            }
            if c > 0 {
                acc += current[p - 1];
                n += 1;
            }
            if c + 1 < w {
                acc += current[p + 1];
                n += 1;
            }
            // 1x1 grids have no neighbours, but they also have no holes here.
            let value = acc / f64::from(n.max(1));
            max_update = max_update.max((value - current[p]).abs());
            next[p] = value;
        }
        core::mem::swap(&mut current, &mut next);
        if max_update < threshold {
            break;
        }
    }

    // Jacobi averages of positive values stay positive, so the map keeps the
    // depth invariants.
    debug_assert!(current.iter().all(|&v| v > 0.0));
    DepthMap::prediction(h, w, current)
}

/// Fills every map of a corpus; already complete maps are returned as is.
pub fn fill_all(maps: &[DepthMap], tol: f64, max_iters: usize) -> Result<Vec<DepthMap>> {
    let mut out = Vec::with_capacity(maps.len());
    for m in maps {
        out.push(diffusion_fill(m, tol, max_iters)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    const TOL: f64 = 1e-6;

    #[test]
    fn complete_map_is_untouched() {
        let d = DepthMap::from_values(2, 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(diffusion_fill(&d, TOL, 10_000).unwrap(), d);
    }

    #[test]
    fn constant_map_hole_takes_constant() {
        let mut values = vec![5.0; 25];
        values[12] = 0.0;
        let d = DepthMap::from_values(5, 5, values).unwrap();
        let f = diffusion_fill(&d, TOL, 10_000).unwrap();
        assert!((f.values()[12] - 5.0).abs() <= TOL * 5.0);
        assert!(f.is_fully_valid());
    }

    #[test]
    fn one_dimensional_laplace() {
        // Hand solution of u'' = 0 between 2 and 4 on three nodes.
        let d = DepthMap::from_values(1, 3, vec![2.0, 0.0, 4.0]).unwrap();
        let f = diffusion_fill(&d, TOL, 10_000).unwrap();
        assert!((f.values()[1] - 3.0).abs() <= TOL);
    }

    #[test]
    fn valid_pixels_are_kept_and_holes_converge() {
        // Linear ramp with holes: the harmonic extension of a linear function
        // along rows is the ramp itself where both ends are pinned.
        let w = 9;
        let mut values: Vec<f64> = (0..w * 3).map(|i| 1.0 + (i % w) as f64).collect();
        for r in 0..3 {
            for c in 2..7 {
                values[r * w + c] = f64::NAN;
            }
        }
        let d = DepthMap::from_values(3, w, values).unwrap();
        let f = diffusion_fill(&d, 1e-10, 100_000).unwrap();
        for p in 0..w * 3 {
            let expected = 1.0 + (p % w) as f64;
            if d.valid()[p] {
                assert_eq!(f.values()[p], d.values()[p]);
            }
            assert!((f.values()[p] - expected).abs() < 1e-6, "pixel {p}");
        }
    }

    #[test]
    fn idempotent_on_filled_output() {
        let d = DepthMap::from_values(3, 3, vec![1.0, 0.0, 2.0, 0.0, 0.0, 0.0, 3.0, 0.0, 4.0])
            .unwrap();
        let once = diffusion_fill(&d, TOL, 10_000).unwrap();
        let twice = diffusion_fill(&once, TOL, 10_000).unwrap();
        assert_eq!(once, twice);
    }

    #[test]
    fn empty_input_is_an_error() {
        let d = DepthMap::from_values(2, 2, vec![0.0; 4]).unwrap();
        assert!(matches!(diffusion_fill(&d, TOL, 10), Err(Error::NoValidPixels)));
    }
}
