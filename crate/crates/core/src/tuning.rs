//! Grid search over ridge and bandwidth multiplier on a held-out split.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cloud::PointCloud;
use crate::error::{Error, Result};
use crate::local_fit::PolynomialTerm;
use crate::metrics::rmse;
use crate::stitch::{FitConfig, FitPlan, StitchedModel};

/// Cells whose validation RMSE is within this fraction of `rms(y_val)` of
/// the minimum are treated as tied.
pub const TIE_RELATIVE_TOLERANCE: f64 = 1e-9;

/// Disjoint train and validation index sets.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
}

/// Seeded shuffle; the first `round(fraction * n)` shuffled indices are held
/// out. Both sides are returned sorted.
pub fn train_validation_split(n: usize, fraction: f64, seed: u64) -> Result<Split> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::InvalidInput(format!(
            "validation fraction must lie in (0, 1), got {fraction}"
        )));
    }
    let n_val = ((fraction * n as f64).round() as usize).min(n.saturating_sub(1));
    if n_val == 0 {
        return Err(Error::InsufficientPoints {
            requested: 2,
            available: n,
        });
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut validation = idx[..n_val].to_vec();
    let mut train = idx[n_val..].to_vec();
    validation.sort_unstable();
    train.sort_unstable();
    Ok(Split { train, validation })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridResult {
    pub eta_grid: Vec<f64>,
    pub sigma_mult_grid: Vec<f64>,
    /// `rmse[i][j]` is the validation RMSE for `eta_grid[i]`, `sigma_mult_grid[j]`.
    /// Cells whose fit failed numerically hold `+inf`.
    pub rmse: Vec<Vec<f64>>,
    pub best: (usize, usize),
    pub best_eta: f64,
    pub best_sigma_mult: f64,
    pub tie_tolerance: f64,
    pub split: Split,
}

impl GridResult {
    pub fn best_rmse(&self) -> f64 {
        self.rmse[self.best.0][self.best.1]
    }

    pub fn min_rmse(&self) -> f64 {
        self.rmse.iter().flatten().copied().fold(f64::INFINITY, f64::min)
    }

    /// `config` with the selected ridge and multiplier fixed.
    pub fn best_config(&self, config: &FitConfig) -> FitConfig {
        FitConfig {
            eta: Some(self.best_eta),
            sigma_mult: self.best_sigma_mult,
            ..config.clone()
        }
    }

    /// `(eta, sigma_mult, rmse)` rows in table order.
    pub fn rows(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        self.eta_grid.iter().enumerate().flat_map(move |(i, &eta)| {
            self.sigma_mult_grid
                .iter()
                .enumerate()
                .map(move |(j, &s)| (eta, s, self.rmse[i][j]))
        })
    }
}

/// A split cloud with its cover and fallback built once for all cells.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub split: Split,
    pub train: PointCloud,
    pub validation: PointCloud,
    pub plan: FitPlan,
    fallback: PolynomialTerm,
}

impl Prepared {
    pub fn new(cloud: &PointCloud, config: &FitConfig) -> Result<Self> {
        config.validate()?;
        let split = train_validation_split(cloud.len(), config.validation_fraction, config.seed)?;
        let train = cloud.subset(&split.train)?;
        let validation = cloud.subset(&split.validation)?;
        let plan = FitPlan::new(&train, config.h);
        let fallback = PolynomialTerm::fit_least_squares(
            train.dim(),
            train.coords(),
            train.responses(),
            config.degree,
            config.svd_threshold,
        )?;
        Ok(Self {
            split,
            train,
            validation,
            plan,
            fallback,
        })
    }

    pub fn fit_cell(&self, config: &FitConfig, eta: f64, sigma_mult: f64) -> Result<StitchedModel> {
        let cell = FitConfig {
            eta: Some(eta),
            sigma_mult,
            ..config.clone()
        };
        self.plan.fit_with_fallback(&self.train, &cell, self.fallback.clone())
    }

    pub fn validation_rmse(&self, model: &StitchedModel) -> Result<f64> {
        let pred: Vec<f64> = self.validation.points().map(|q| model.predict(q)).collect();
        rmse(self.validation.responses(), &pred)
    }
}

/// Evaluates every `(eta, sigma_mult)` cell of `config`'s grids.
///
/// The best cell minimizes validation RMSE; cells within
/// [`TIE_RELATIVE_TOLERANCE`] `* rms(y_val)` of the minimum are tied and
/// resolved by smaller `eta`, then smaller `sigma_mult`.
pub fn grid_search(cloud: &PointCloud, config: &FitConfig) -> Result<GridResult> {
    let prepared = Prepared::new(cloud, config)?;
    let mut table = Vec::with_capacity(config.eta_grid.len());
    let mut last_err = None;
    for &eta in &config.eta_grid {
        let mut row = Vec::with_capacity(config.sigma_mult_grid.len());
        for &mult in &config.sigma_mult_grid {
            let value = match prepared.fit_cell(config, eta, mult) {
                Ok(model) => prepared.validation_rmse(&model)?,
                Err(e) if e.is_numerical() => {
                    last_err = Some(e);
                    f64::INFINITY
                }
                Err(e) => return Err(e),
            };
            row.push(if value.is_nan() { f64::INFINITY } else { value });
        }
        table.push(row);
    }
    let y_val = prepared.validation.responses();
    let rms_val = (y_val.iter().map(|v| v * v).sum::<f64>() / y_val.len() as f64).sqrt();
    let tie_tolerance = TIE_RELATIVE_TOLERANCE * rms_val.max(f64::MIN_POSITIVE);
    let best = select_best(&config.eta_grid, &config.sigma_mult_grid, &table, tie_tolerance)
        .ok_or_else(|| {
            last_err.unwrap_or_else(|| Error::Numerical("every grid cell failed".into()))
        })?;
    Ok(GridResult {
        eta_grid: config.eta_grid.clone(),
        sigma_mult_grid: config.sigma_mult_grid.clone(),
        best_eta: config.eta_grid[best.0],
        best_sigma_mult: config.sigma_mult_grid[best.1],
        rmse: table,
        best,
        tie_tolerance,
        split: prepared.split,
    })
}

/// Grid search, then a refit of the whole cloud with the selected cell.
pub fn tune_and_fit(cloud: &PointCloud, config: &FitConfig) -> Result<(GridResult, StitchedModel)> {
    let grid = grid_search(cloud, config)?;
    let model = StitchedModel::fit(cloud, &grid.best_config(config))?;
    Ok((grid, model))
}

fn select_best(etas: &[f64], mults: &[f64], table: &[Vec<f64>], tol: f64) -> Option<(usize, usize)> {
    let min = table.iter().flatten().copied().fold(f64::INFINITY, f64::min);
    if !min.is_finite() {
        return None;
    }
    let mut best: Option<(usize, usize)> = None;
    for (i, row) in table.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            if v > min + tol {
                continue;
            }
            let better = match best {
                None => true,
                Some((bi, bj)) => (etas[i], mults[j]) < (etas[bi], mults[bj]),
            };
            if better {
                best = Some((i, j));
            }
        }
    }
    best
}
