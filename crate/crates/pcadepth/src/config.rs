//! Run configuration: built-in defaults, overridden by an optional TOML file,
//! overridden by command-line flags.

use std::path::Path;

use pcadepth_core::{ArConfig, GuidanceMode, Reduction, SolveConfig};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Guidance {
    Patch,
    Pixel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ReductionKind {
    Stacked,
    Eliminated,
}

/// A partial configuration, as read from a file or gathered from flags.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigOverrides {
    pub lambda: Option<f64>,
    pub gamma: Option<f64>,
    pub sigma_i: Option<f64>,
    pub sigma_floor: Option<f64>,
    pub window_radius: Option<usize>,
    pub patch_radius: Option<usize>,
    pub guidance: Option<Guidance>,
    pub cg_tol: Option<f64>,
    pub cg_max_iters: Option<usize>,
    pub reduction: Option<ReductionKind>,
    pub k: Option<usize>,
    pub stride: Option<usize>,
    pub threshold: Option<f64>,
    pub crop_bottom_fraction: Option<f64>,
    pub fill_tol: Option<f64>,
    pub fill_max_iters: Option<usize>,
}

impl ConfigOverrides {
    pub fn from_toml(text: &str, path: &Path) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Format {
            path: path.to_path_buf(),
            message: format!("config: {e}"),
        })
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        Self::from_toml(&text, path)
    }
}

/// The effective configuration of a run. It is echoed into every report, and
/// feeding it back as a config file reproduces the run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub lambda: f64,
    pub gamma: f64,
    pub sigma_i: f64,
    pub sigma_floor: f64,
    pub window_radius: usize,
    pub patch_radius: usize,
    pub guidance: Guidance,
    pub cg_tol: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cg_max_iters: Option<usize>,
    pub reduction: ReductionKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    pub stride: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub crop_bottom_fraction: Option<f64>,
    pub fill_tol: f64,
    pub fill_max_iters: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        let ar = ArConfig::default();
        let solve = SolveConfig::default();
        Self {
            lambda: solve.lambda,
            gamma: solve.gamma,
            sigma_i: ar.sigma_i,
            sigma_floor: ar.sigma_floor,
            window_radius: ar.window_radius,
            patch_radius: ar.patch_radius,
            guidance: match ar.mode {
                GuidanceMode::Patch => Guidance::Patch,
                GuidanceMode::Pixel => Guidance::Pixel,
            },
            cg_tol: solve.cg_tol,
            cg_max_iters: solve.cg_max_iters,
            reduction: match solve.reduction {
                Reduction::Stacked => ReductionKind::Stacked,
                Reduction::Eliminated => ReductionKind::Eliminated,
            },
            k: None,
            stride: 8,
            threshold: None,
            crop_bottom_fraction: None,
            fill_tol: 1e-6,
            fill_max_iters: 20_000,
        }
    }
}

macro_rules! overlay {
    ($dst:expr, $src:expr, [$($plain:ident),*], [$($opt:ident),*]) => {
        $(if let Some(v) = $src.$plain { $dst.$plain = v; })*
        $(if $src.$opt.is_some() { $dst.$opt = $src.$opt; })*
    };
}

impl RunConfig {
    pub fn apply(&mut self, o: &ConfigOverrides) {
        overlay!(
            self,
            o,
            [lambda, gamma, sigma_i, sigma_floor, window_radius, patch_radius, guidance, cg_tol, reduction, stride, fill_tol, fill_max_iters],
            [cg_max_iters, k, threshold, crop_bottom_fraction]
        );
    }

    /// Defaults, then the file at `file` if any, then `flags`.
    pub fn resolve(file: Option<&Path>, flags: &ConfigOverrides) -> Result<Self> {
        let mut cfg = Self::default();
        if let Some(path) = file {
            cfg.apply(&ConfigOverrides::read(path)?);
        }
        cfg.apply(flags);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.ar_config().validate()?;
        self.solve_config().validate()?;
        if self.stride == 0 {
            return Err(Error::Usage("stride must be at least 1".into()));
        }
        if let Some(t) = self.threshold {
            if !(t > 0.0) {
                return Err(Error::Usage(format!("threshold must be positive, got {t}")));
            }
        }
        if let Some(f) = self.crop_bottom_fraction {
            if !(f > 0.0 && f <= 1.0) {
                return Err(Error::Usage(format!("crop_bottom_fraction must lie in (0, 1], got {f}")));
            }
        }
        if self.k == Some(0) {
            return Err(Error::Usage("k must be at least 1".into()));
        }
        Ok(())
    }

    pub fn ar_config(&self) -> ArConfig {
        ArConfig {
            window_radius: self.window_radius,
            patch_radius: self.patch_radius,
            sigma_floor: self.sigma_floor,
            sigma_i: self.sigma_i,
            mode: match self.guidance {
                Guidance::Patch => GuidanceMode::Patch,
                Guidance::Pixel => GuidanceMode::Pixel,
            },
        }
    }

    pub fn solve_config(&self) -> SolveConfig {
        SolveConfig {
            lambda: self.lambda,
            gamma: self.gamma,
            cg_tol: self.cg_tol,
            cg_max_iters: self.cg_max_iters,
            reduction: match self.reduction {
                ReductionKind::Stacked => Reduction::Stacked,
                ReductionKind::Eliminated => Reduction::Eliminated,
            },
        }
    }

    /// Rows kept by `crop_bottom_fraction` out of `height`, at least one.
    pub fn cropped_rows(&self, height: usize) -> usize {
        match self.crop_bottom_fraction {
            Some(f) => ((height as f64 * f).round() as usize).clamp(1, height),
            None => height,
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_mirror_core() {
        let c = RunConfig::default();
        assert_eq!(c.ar_config(), ArConfig::default());
        assert_eq!(c.solve_config(), SolveConfig::default());
    }

    #[test]
    fn precedence() {
        let file = ConfigOverrides::from_toml("lambda = 2.0\ngamma = 0.5\nguidance = \"pixel\"", Path::new("c.toml")).unwrap();
        let flags = ConfigOverrides {
            gamma: Some(3.0),
            ..Default::default()
        };
        let mut c = RunConfig::default();
        c.apply(&file);
        c.apply(&flags);
        assert_eq!((c.lambda, c.gamma, c.guidance), (2.0, 3.0, Guidance::Pixel));
        assert_eq!(c.sigma_i, ArConfig::default().sigma_i);
    }

    #[test]
    fn echoed_config_round_trips() {
        let mut c = RunConfig::default();
        c.k = Some(12);
        c.crop_bottom_fraction = Some(0.5);
        let text = c.to_toml();
        let mut back = RunConfig::default();
        back.apply(&ConfigOverrides::from_toml(&text, Path::new("e.toml")).unwrap());
        assert_eq!(back, c);
    }

    #[test]
    fn rejects_unknown_and_invalid() {
        assert!(ConfigOverrides::from_toml("lamda = 1", Path::new("c.toml")).is_err());
        let mut c = RunConfig::default();
        c.lambda = 0.0;
        c.gamma = 0.0;
        assert!(c.validate().is_err());
        let mut c = RunConfig::default();
        c.crop_bottom_fraction = Some(1.5);
        assert!(c.validate().is_err());
    }

    #[test]
    fn crop_rows() {
        let mut c = RunConfig::default();
        assert_eq!(c.cropped_rows(375), 375);
        c.crop_bottom_fraction = Some(0.5);
        assert_eq!(c.cropped_rows(375), 188);
        c.crop_bottom_fraction = Some(1e-9);
        assert_eq!(c.cropped_rows(10), 1);
    }
}
