//! Deterministic synthetic scenes for training and testing.
//!
//! A scene is a Voronoi partition of the image into a few regions. Each
//! region carries a slanted depth plane and one flat colour, so every colour
//! boundary is also a depth discontinuity. A couple of smooth bumps are added
//! over the whole depth map.

use std::fs;
use std::path::{Path, PathBuf};

use pcadepth_core::{ColourImage, DepthMap};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::io::{write_depth_png16, write_ppm};

#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub depth: DepthMap,
    pub colour: ColourImage,
}

struct Region {
    site: (f64, f64),
    base: f64,
    slope: (f64, f64),
    colour: [f64; 3],
}

fn random_colour(rng: &mut ChaCha8Rng, taken: &[[f64; 3]]) -> [f64; 3] {
    // Colours sit on the 8-bit grid so they survive a PPM round-trip, and
    // differ from every earlier region by a clear margin.
    loop {
        let c = [(); 3].map(|_| rng.random_range(20u8..=235) as f64 / 255.0);
        let distinct = taken
            .iter()
            .all(|t| t.iter().zip(&c).map(|(a, b)| (a - b).abs()).sum::<f64>() > 0.35);
        if distinct {
            return c;
        }
    }
}

/// One scene; fully valid, depths in metres and at least 1.
pub fn scene(height: usize, width: usize, seed: u64) -> Result<Scene> {
    if height == 0 || width == 0 {
        return Err(Error::Usage(format!("scene dimensions must be positive, got {height}x{width}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (h, w) = (height as f64, width as f64);
    let n_regions = rng.random_range(3..=5);
    let mut regions: Vec<Region> = Vec::with_capacity(n_regions);
    for _ in 0..n_regions {
        let taken: Vec<[f64; 3]> = regions.iter().map(|r| r.colour).collect();
        regions.push(Region {
            site: (rng.random_range(0.0..h), rng.random_range(0.0..w)),
            base: rng.random_range(8.0..40.0),
            slope: (rng.random_range(-6.0..6.0) / h, rng.random_range(-6.0..6.0) / w),
            colour: random_colour(&mut rng, &taken),
        });
    }
    let bumps: Vec<(f64, f64, f64, f64)> = (0..2)
        .map(|_| {
            (
                rng.random_range(0.0..h),
                rng.random_range(0.0..w),
                rng.random_range(-2.0..2.0),
                rng.random_range(0.1..0.3) * h.min(w),
            )
        })
        .collect();

    let mut depth = Vec::with_capacity(height * width);
    let mut colour = Vec::with_capacity(height * width * 3);
    for r in 0..height {
        for c in 0..width {
            let (y, x) = (r as f64 + 0.5, c as f64 + 0.5);
            let region = regions
                .iter()
                .min_by(|a, b| {
                    let da = (a.site.0 - y).powi(2) + (a.site.1 - x).powi(2);
                    let db = (b.site.0 - y).powi(2) + (b.site.1 - x).powi(2);
                    da.total_cmp(&db)
                })
                .expect("at least one region");
            let mut d = region.base + region.slope.0 * (y - region.site.0) + region.slope.1 * (x - region.site.1);
            for &(by, bx, amp, s) in &bumps {
                d += amp * (-((y - by).powi(2) + (x - bx).powi(2)) / (2.0 * s * s)).exp();
            }
            depth.push(d.max(1.0));
            colour.extend_from_slice(&region.colour);
        }
    }
    Ok(Scene {
        depth: DepthMap::from_values(height, width, depth)?,
        colour: ColourImage::new(height, width, colour)?,
    })
}

/// Seed of scene `index` in a corpus seeded with `seed`.
pub fn scene_seed(seed: u64, index: usize) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ (index as u64).wrapping_add(1).wrapping_mul(0xBF58_476D_1CE4_E5B9)
}

pub fn corpus(count: usize, height: usize, width: usize, seed: u64) -> Result<Vec<Scene>> {
    if count == 0 {
        return Err(Error::Usage("corpus must contain at least one scene (count = 0)".into()));
    }
    (0..count).map(|i| scene(height, width, scene_seed(seed, i))).collect()
}

pub fn depth_file(dir: &Path, index: usize) -> PathBuf {
    dir.join(format!("depth_{index:04}.png"))
}

pub fn colour_file(dir: &Path, index: usize) -> PathBuf {
    dir.join(format!("colour_{index:04}.ppm"))
}

/// Writes `depth_NNNN.png` and `colour_NNNN.ppm` for every scene.
pub fn write_corpus(dir: &Path, scenes: &[Scene]) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for (i, s) in scenes.iter().enumerate() {
        write_depth_png16(&depth_file(dir, i), &s.depth)?;
        write_ppm(&colour_file(dir, i), &s.colour)?;
    }
    Ok(())
}

/// Separable cosine `cos(π a (r+½)/H) cos(π b (c+½)/W)`.
fn cosine(height: usize, width: usize, a: usize, b: usize) -> Vec<f64> {
    let (h, w) = (height as f64, width as f64);
    let mut out = Vec::with_capacity(height * width);
    for r in 0..height {
        let fr = (std::f64::consts::PI * a as f64 * (r as f64 + 0.5) / h).cos();
        for c in 0..width {
            out.push(fr * (std::f64::consts::PI * b as f64 * (c as f64 + 0.5) / w).cos());
        }
    }
    out
}

/// Maps lying exactly in a 6-dimensional affine span: a fixed ramp plus random
/// multiples of five mutually orthogonal cosine patterns. Depths stay in
/// `[10, 34]`.
pub fn span_corpus(count: usize, height: usize, width: usize, seed: u64) -> Result<Vec<DepthMap>> {
    if count == 0 || height == 0 || width == 0 {
        return Err(Error::Usage("span corpus needs a positive count and size".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let patterns: Vec<Vec<f64>> = [(1, 0), (0, 1), (1, 1), (2, 0), (0, 2)]
        .iter()
        .map(|&(a, b)| cosine(height, width, a, b))
        .collect();
    let mean: Vec<f64> = (0..height * width)
        .map(|p| 20.0 + 4.0 * (p / width) as f64 / height as f64)
        .collect();
    (0..count)
        .map(|_| {
            let coeffs: Vec<f64> = (0..patterns.len()).map(|_| rng.random_range(-2.0..2.0)).collect();
            let values = (0..height * width)
                .map(|p| mean[p] + patterns.iter().zip(&coeffs).map(|(pat, c)| c * pat[p]).sum::<f64>())
                .collect();
            Ok(DepthMap::from_values(height, width, values)?)
        })
        .collect()
}
