use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::local_fit::{ModelKind, DEFAULT_SVD_THRESHOLD};

/// Ridge values searched by default.
pub const DEFAULT_ETA_GRID: [f64; 5] = [1e-1, 1e-2, 1e-3, 1e-4, 1e-5];
/// Bandwidth multipliers (of the mean pairwise distance) searched by default.
pub const DEFAULT_SIGMA_MULT_GRID: [f64; 5] = [0.25, 0.5, 1.0, 2.0, 5.0];
/// Constant weight of the unbounded fallback region.
pub const DEFAULT_W0: f64 = 1e-5;
/// Support of the fallback blend, as a multiple of each region radius.
pub const DEFAULT_FALLBACK_SUPPORT_SCALE: f64 = 1.25;
/// Default ridge as a fraction of the mean absolute response of a region.
pub const DEFAULT_RELATIVE_ETA: f64 = 1e-4;

/// Everything needed to fit a stitched model, plus the tuning grids.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitConfig {
    /// Points per region.
    pub h: usize,
    pub model_kind: ModelKind,
    /// Polynomial degree for the local models and the fallback.
    pub degree: usize,
    /// Fixed ridge; `None` uses `1e-4 * mean(|y_j|)` per region.
    pub eta: Option<f64>,
    /// Region bandwidth = `sigma_mult * mean pairwise distance of its members`.
    pub sigma_mult: f64,
    pub eta_grid: Vec<f64>,
    pub sigma_mult_grid: Vec<f64>,
    pub svd_threshold: f64,
    pub w0: f64,
    /// The fallback model blends local models with Wendland weights of radius
    /// `fallback_support_scale * r_j`, plus the global polynomial with weight
    /// `w0`. Zero makes the fallback the global polynomial alone.
    pub fallback_support_scale: f64,
    pub seed: u64,
    pub validation_fraction: f64,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            h: 100,
            model_kind: ModelKind::KrrPoly,
            degree: 2,
            eta: None,
            sigma_mult: 1.0,
            eta_grid: DEFAULT_ETA_GRID.to_vec(),
            sigma_mult_grid: DEFAULT_SIGMA_MULT_GRID.to_vec(),
            svd_threshold: DEFAULT_SVD_THRESHOLD,
            w0: DEFAULT_W0,
            fallback_support_scale: DEFAULT_FALLBACK_SUPPORT_SCALE,
            seed: 0,
            validation_fraction: 0.2,
        }
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("{name} must be positive and finite, got {v}")))
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        if self.h == 0 {
            return Err(Error::InvalidInput("h must be at least 1".into()));
        }
        if let Some(eta) = self.eta {
            positive("eta", eta)?;
        }
        positive("sigma_mult", self.sigma_mult)?;
        positive("w0", self.w0)?;
        let s = self.fallback_support_scale;
        if !(s == 0.0 || (s >= 1.0 && s.is_finite())) {
            return Err(Error::InvalidInput(format!(
                "fallback_support_scale must be 0 or at least 1, got {s}"
            )));
        }
        if !(self.svd_threshold >= 0.0 && self.svd_threshold < 1.0) {
            return Err(Error::InvalidInput("svd_threshold must lie in [0, 1)".into()));
        }
        if self.eta_grid.is_empty() || self.sigma_mult_grid.is_empty() {
            return Err(Error::InvalidInput("tuning grids must be nonempty".into()));
        }
        for &v in &self.eta_grid {
            positive("eta grid value", v)?;
        }
        for &v in &self.sigma_mult_grid {
            positive("sigma multiplier grid value", v)?;
        }
        if !(self.validation_fraction > 0.0 && self.validation_fraction < 1.0) {
            return Err(Error::InvalidInput("validation_fraction must lie in (0, 1)".into()));
        }
        Ok(())
    }

    /// Degree passed to the local fit: `None` for plain KRR.
    pub fn local_degree(&self) -> Option<usize> {
        match self.model_kind {
            ModelKind::Krr => None,
            ModelKind::KrrPoly => Some(self.degree),
        }
    }
}
