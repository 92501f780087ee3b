//! Versioned JSON document for fitted models.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{FitConfig, StitchedModel};
use crate::error::{Error, Result};
use crate::local_fit::{LocalModel, PolynomialTerm};
use crate::spatial::{Region, RegionCover};

pub const FORMAT_VERSION: &str = "pustitch-model/1";

#[derive(Serialize, Deserialize)]
struct ModelDocument {
    format_version: String,
    dim: usize,
    w0: f64,
    config: FitConfig,
    regions: Vec<Region>,
    local_models: Vec<LocalModel>,
    fallback: PolynomialTerm,
}

impl StitchedModel {
    pub fn to_json(&self) -> Result<String> {
        let doc = ModelDocument {
            format_version: FORMAT_VERSION.to_string(),
            dim: self.dim(),
            w0: self.w0,
            config: self.config.clone(),
            regions: self.cover.regions().to_vec(),
            local_models: self.local_models.clone(),
            fallback: self.fallback.clone(),
        };
        Ok(serde_json::to_string(&doc)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: ModelDocument = serde_json::from_str(text)?;
        if doc.format_version != FORMAT_VERSION {
            return Err(Error::Format(format!(
                "unsupported format version {:?}, expected {:?}",
                doc.format_version, FORMAT_VERSION
            )));
        }
        if doc.regions.len() != doc.local_models.len() {
            return Err(Error::Format(format!(
                "{} regions but {} local models",
                doc.regions.len(),
                doc.local_models.len()
            )));
        }
        for (i, r) in doc.regions.iter().enumerate() {
            if r.id != i || r.center.len() != doc.dim || !(r.radius > 0.0) {
                return Err(Error::Format(format!("region {i} is malformed")));
            }
        }
        if !(doc.w0 > 0.0) {
            return Err(Error::Format("w0 must be positive".into()));
        }
        if doc.fallback.basis.dim() != doc.dim || doc.fallback.coeffs.len() != doc.fallback.basis.len() {
            return Err(Error::Format("fallback polynomial has wrong shape".into()));
        }
        let local_models = doc
            .local_models
            .into_iter()
            .enumerate()
            .map(|(i, m)| {
                if m.dim() != doc.dim {
                    return Err(Error::Format(format!("local model {i} has wrong dimension")));
                }
                m.validated().map_err(|e| Error::Format(format!("local model {i}: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            cover: RegionCover::from_regions(doc.dim, doc.regions),
            local_models,
            fallback: doc.fallback,
            w0: doc.w0,
            config: doc.config,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }
}
