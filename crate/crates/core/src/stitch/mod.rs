//! Partition-of-unity blending of local models.
//!
//! For a query `q` every region containing it gets the Wendland weight
//! `w_j = φ(|c_j - q|, r_j)`; the unbounded fallback region adds the constant
//! `w0`. Weights are normalized by their sum `W(q) >= w0`, so the prediction is
//! a convex combination of local predictions. Since `φ` and `φ'` vanish at the
//! support radius, the blend is C¹ across region boundaries and its gradient
//! has the closed form
//!
//! ```text
//! ∇f(q) = Σ_j ∇w'_j f_j(q) + w'_j ∇f_j(q),   ∇w'_j = (∇w_j W - w_j ∇W) / W²
//! ```
//!
//! The fallback's own model `f_0` is the same kind of blend with every support
//! radius widened by `fallback_support_scale`, whose constant-weight term is a
//! global least-squares polynomial. Between balls of the cover (the cover only
//! guarantees that training points are covered) `f_0` therefore follows the
//! nearby local models instead of a global trend.

mod config;
mod serial;

pub use config::{
    FitConfig, DEFAULT_ETA_GRID, DEFAULT_RELATIVE_ETA, DEFAULT_SIGMA_MULT_GRID, DEFAULT_W0,
};
pub use serial::FORMAT_VERSION;

use rayon::prelude::*;

use crate::cloud::{distance, PointCloud};
use crate::error::{Error, Result};
use crate::kernel::{mean_pairwise_distance, wendland, wendland_deriv};
use crate::local_fit::{fit_krr_poly, LocalModel, PolynomialTerm};
use crate::spatial::{build_cover, RegionCover};

/// Smallest ridge used when a region's responses are all zero.
const MIN_DEFAULT_ETA: f64 = 1e-12;
/// Relative center distance below which the weight gradient is taken as zero.
const CENTER_EPS: f64 = 1e-12;

/// Normalized weights at one query point. The last entry of `raw` and
/// `normalized` belongs to the fallback region.
#[derive(Debug, Clone, PartialEq)]
pub struct PuWeights {
    pub region_ids: Vec<usize>,
    pub raw: Vec<f64>,
    pub normalized: Vec<f64>,
    pub total: f64,
}

impl PuWeights {
    pub fn fallback_weight(&self) -> f64 {
        *self.normalized.last().unwrap()
    }
}

/// Region geometry plus per-region base bandwidths, shared by every fit on the
/// same points.
#[derive(Debug, Clone)]
pub struct FitPlan {
    cover: RegionCover,
    base_bandwidths: Vec<f64>,
}

/// Mean pairwise distance of the region's members, or its radius when fewer
/// than two distinct members exist.
fn base_bandwidth(cloud: &PointCloud, members: &[usize], radius: f64) -> f64 {
    let coords: Vec<f64> = members
        .iter()
        .flat_map(|&i| cloud.point(i).iter().copied())
        .collect();
    mean_pairwise_distance(cloud.dim(), &coords).unwrap_or(radius)
}

impl FitPlan {
    pub fn new(cloud: &PointCloud, h: usize) -> Self {
        Self::from_cover(cloud, build_cover(cloud, h))
    }

    pub fn from_cover(cloud: &PointCloud, cover: RegionCover) -> Self {
        let base_bandwidths = cover
            .regions()
            .par_iter()
            .map(|r| base_bandwidth(cloud, &r.members, r.radius))
            .collect();
        Self {
            cover,
            base_bandwidths,
        }
    }

    pub fn cover(&self) -> &RegionCover {
        &self.cover
    }

    pub fn base_bandwidths(&self) -> &[f64] {
        &self.base_bandwidths
    }

    /// Fits every region and a least-squares polynomial fallback.
    pub fn fit(&self, cloud: &PointCloud, config: &FitConfig) -> Result<StitchedModel> {
        let fallback = PolynomialTerm::fit_least_squares(
            cloud.dim(),
            cloud.coords(),
            cloud.responses(),
            config.degree,
            config.svd_threshold,
        )?;
        self.fit_with_fallback(cloud, config, fallback)
    }

    /// Fits every region, keeping the given fallback model.
    pub fn fit_with_fallback(
        &self,
        cloud: &PointCloud,
        config: &FitConfig,
        fallback: PolynomialTerm,
    ) -> Result<StitchedModel> {
        config.validate()?;
        if cloud.dim() != self.cover.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.cover.dim(),
                actual: cloud.dim(),
            });
        }
        if fallback.basis.dim() != cloud.dim() {
            return Err(Error::DimensionMismatch {
                expected: cloud.dim(),
                actual: fallback.basis.dim(),
            });
        }
        let fitted: Vec<Result<LocalModel>> = self
            .cover
            .regions()
            .par_iter()
            .zip(self.base_bandwidths.par_iter())
            .map(|(region, &base)| {
                let sub = cloud.subset(&region.members)?;
                let eta = config.eta.unwrap_or_else(|| default_eta(sub.responses()));
                fit_krr_poly(
                    cloud.dim(),
                    sub.coords(),
                    sub.responses(),
                    config.sigma_mult * base,
                    eta,
                    config.local_degree(),
                    config.svd_threshold,
                )
                .map_err(|e| Error::Region {
                    region: region.id,
                    source: Box::new(e),
                })
            })
            .collect();
        let local_models = fitted.into_iter().collect::<Result<Vec<_>>>()?;
        Ok(StitchedModel {
            cover: self.cover.clone(),
            local_models,
            fallback,
            w0: config.w0,
            config: config.clone(),
        })
    }
}

/// `1e-4 * mean(|y|)`, floored at a tiny positive value.
pub fn default_eta(y: &[f64]) -> f64 {
    let mean_abs = y.iter().map(|v| v.abs()).sum::<f64>() / y.len().max(1) as f64;
    (DEFAULT_RELATIVE_ETA * mean_abs).max(MIN_DEFAULT_ETA)
}

/// The deployable predictor: region cover, one local model per region, and
/// the fallback model living on the unbounded region.
#[derive(Debug, Clone, PartialEq)]
pub struct StitchedModel {
    cover: RegionCover,
    local_models: Vec<LocalModel>,
    fallback: PolynomialTerm,
    w0: f64,
    config: FitConfig,
}

impl StitchedModel {
    /// Builds the cover with `config.h` and fits all local models.
    pub fn fit(cloud: &PointCloud, config: &FitConfig) -> Result<Self> {
        config.validate()?;
        FitPlan::new(cloud, config.h).fit(cloud, config)
    }

    /// Assembles a model from already fitted parts.
    pub fn from_parts(
        cover: RegionCover,
        local_models: Vec<LocalModel>,
        fallback: PolynomialTerm,
        config: FitConfig,
    ) -> Result<Self> {
        config.validate()?;
        if cover.len() != local_models.len() {
            return Err(Error::InvalidInput(format!(
                "{} regions but {} local models",
                cover.len(),
                local_models.len()
            )));
        }
        if local_models.iter().any(|m| m.dim() != cover.dim()) || fallback.basis.dim() != cover.dim() {
            return Err(Error::InvalidInput("model dimensions disagree with the cover".into()));
        }
        Ok(Self {
            cover,
            local_models,
            fallback,
            w0: config.w0,
            config,
        })
    }

    pub fn dim(&self) -> usize {
        self.cover.dim()
    }

    pub fn cover(&self) -> &RegionCover {
        &self.cover
    }

    pub fn local_models(&self) -> &[LocalModel] {
        &self.local_models
    }

    pub fn fallback(&self) -> &PolynomialTerm {
        &self.fallback
    }

    pub fn w0(&self) -> f64 {
        self.w0
    }

    pub fn config(&self) -> &FitConfig {
        &self.config
    }

    fn check_query(&self, q: &[f64]) {
        assert_eq!(q.len(), self.dim(), "query dimension does not match the model");
    }

    pub fn pu_weights(&self, q: &[f64]) -> PuWeights {
        self.check_query(q);
        let region_ids = self.cover.regions_containing(q);
        let regions = self.cover.regions();
        let mut raw: Vec<f64> = region_ids
            .iter()
            .map(|&j| wendland(distance(q, &regions[j].center), regions[j].radius))
            .collect();
        raw.push(self.w0);
        let total: f64 = raw.iter().sum();
        let normalized = raw.iter().map(|w| w / total).collect();
        PuWeights {
            region_ids,
            raw,
            normalized,
            total,
        }
    }

    /// Weights together with the gradients of the normalized weights, stored
    /// row-major with one row per weight (fallback last).
    pub fn pu_weight_gradients(&self, q: &[f64]) -> (PuWeights, Vec<f64>) {
        let weights = self.pu_weights(q);
        let d = self.dim();
        let raw_grads = self.raw_weight_gradients(q, &weights.region_ids);
        let total_grad = sum_rows(&raw_grads, d);
        let w = weights.total;
        let mut grads = vec![0.0; weights.raw.len() * d];
        for (k, &wk) in weights.raw.iter().enumerate() {
            for i in 0..d {
                grads[k * d + i] = (raw_grads[k * d + i] * w - wk * total_grad[i]) / (w * w);
            }
        }
        (weights, grads)
    }

    // One row per contributing region plus a zero row for the fallback.
    fn raw_weight_gradients(&self, q: &[f64], region_ids: &[usize]) -> Vec<f64> {
        let d = self.dim();
        let regions = self.cover.regions();
        let mut out = vec![0.0; (region_ids.len() + 1) * d];
        for (k, &j) in region_ids.iter().enumerate() {
            let region = &regions[j];
            let v = distance(q, &region.center);
            radial_weight_grad(q, &region.center, v, region.radius, &mut out[k * d..(k + 1) * d]);
        }
        out
    }

    /// Value of the fallback model: local models blended with Wendland
    /// weights of radius `fallback_support_scale * r_j`, plus the global
    /// polynomial with weight `w0`.
    pub fn fallback_prediction(&self, q: &[f64]) -> f64 {
        let locals = self.local_evals(q, false);
        self.fallback_blend(q, &locals, false).0
    }

    /// PU-weighted average of the local predictions, fallback included.
    pub fn predict(&self, q: &[f64]) -> f64 {
        self.evaluate(q, false).0
    }

    /// Exact gradient of [`StitchedModel::predict`].
    pub fn gradient(&self, q: &[f64]) -> Vec<f64> {
        self.evaluate(q, true).1
    }

    /// Every local model that can contribute at `q`, evaluated once.
    fn local_evals(&self, q: &[f64], with_grad: bool) -> Vec<LocalEval> {
        self.check_query(q);
        let scale = self.config.fallback_support_scale;
        let ids = if scale > 0.0 {
            self.cover.regions_within_scaled(q, scale)
        } else {
            self.cover.regions_containing(q)
        };
        let regions = self.cover.regions();
        ids.into_iter()
            .map(|id| {
                let model = &self.local_models[id];
                LocalEval {
                    id,
                    dist: distance(q, &regions[id].center),
                    value: model.eval(q),
                    grad: if with_grad { model.grad(q) } else { Vec::new() },
                }
            })
            .collect()
    }

    fn fallback_blend(&self, q: &[f64], locals: &[LocalEval], with_grad: bool) -> (f64, Vec<f64>) {
        let d = self.dim();
        let poly = self.fallback.eval(q);
        let mut poly_grad = vec![0.0; if with_grad { d } else { 0 }];
        if with_grad {
            self.fallback.add_grad(q, &mut poly_grad);
        }
        let scale = self.config.fallback_support_scale;
        if scale == 0.0 {
            return (poly, poly_grad);
        }
        let regions = self.cover.regions();
        let mut num = self.w0 * poly;
        let mut den = self.w0;
        let mut dnum: Vec<f64> = poly_grad.iter().map(|g| self.w0 * g).collect();
        let mut dden = vec![0.0; dnum.len()];
        let mut dpsi = vec![0.0; d];
        for local in locals {
            let region = &regions[local.id];
            let r = scale * region.radius;
            if local.dist >= r {
                continue;
            }
            let psi = wendland(local.dist, r);
            num += psi * local.value;
            den += psi;
            if with_grad {
                radial_weight_grad(q, &region.center, local.dist, r, &mut dpsi);
                for i in 0..d {
                    dnum[i] += dpsi[i] * local.value + psi * local.grad[i];
                    dden[i] += dpsi[i];
                }
            }
        }
        let value = num / den;
        let grad = dnum.iter().zip(&dden).map(|(a, b)| (a - value * b) / den).collect();
        (value, grad)
    }

    fn evaluate(&self, q: &[f64], with_grad: bool) -> (f64, Vec<f64>) {
        let d = self.dim();
        let locals = self.local_evals(q, with_grad);
        let (f0, g0) = self.fallback_blend(q, &locals, with_grad);
        let regions = self.cover.regions();
        let active: Vec<&LocalEval> = locals
            .iter()
            .filter(|l| l.dist <= regions[l.id].radius)
            .collect();
        let raw: Vec<f64> = active
            .iter()
            .map(|l| wendland(l.dist, regions[l.id].radius))
            .chain([self.w0])
            .collect();
        let total: f64 = raw.iter().sum();
        let mut value = (self.w0 / total) * f0;
        for (l, w) in active.iter().zip(&raw) {
            let wn = w / total;
            if wn != 0.0 {
                value += wn * l.value;
            }
        }
        if !with_grad {
            return (value, Vec::new());
        }
        let mut raw_grads = vec![0.0; active.len() * d];
        for (k, l) in active.iter().enumerate() {
            let region = &regions[l.id];
            radial_weight_grad(q, &region.center, l.dist, region.radius, &mut raw_grads[k * d..(k + 1) * d]);
        }
        let total_grad = sum_rows(&raw_grads, d);
        let mut grad = vec![0.0; d];
        for (k, l) in active.iter().enumerate() {
            let (wk, wn) = (raw[k], raw[k] / total);
            for i in 0..d {
                let dwn = (raw_grads[k * d + i] * total - wk * total_grad[i]) / (total * total);
                grad[i] += dwn * l.value + wn * l.grad[i];
            }
        }
        let wn0 = self.w0 / total;
        for i in 0..d {
            let dwn0 = -self.w0 * total_grad[i] / (total * total);
            grad[i] += dwn0 * f0 + wn0 * g0[i];
        }
        (value, grad)
    }
}

struct LocalEval {
    id: usize,
    dist: f64,
    value: f64,
    grad: Vec<f64>,
}

/// Gradient in `q` of `φ(|q - c|, r)`, written into `out`.
fn radial_weight_grad(q: &[f64], center: &[f64], v: f64, r: f64, out: &mut [f64]) {
    if v < CENTER_EPS * r || v >= r {
        out.iter_mut().for_each(|o| *o = 0.0);
        return;
    }
    let dphi = wendland_deriv(v, r);
    for i in 0..out.len() {
        out[i] = dphi * (q[i] - center[i]) / v;
    }
}

fn sum_rows(rows: &[f64], d: usize) -> Vec<f64> {
    let mut out = vec![0.0; d];
    for row in rows.chunks_exact(d) {
        for (o, v) in out.iter_mut().zip(row) {
            *o += v;
        }
    }
    out
}
