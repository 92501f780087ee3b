//! Locally adaptive regression stitched into one C¹ predictor.
//!
//! Training points are covered by overlapping balls ([`spatial`]); a kernel
//! ridge model, optionally augmented with a low-degree polynomial, is fitted in
//! each ball ([`local_fit`]); the local models are blended with normalized
//! Wendland weights plus a small constant-weight global fallback ([`stitch`]).
//! Predictions and gradients are evaluated in closed form.

// `!(x > 0.0)` style checks are used on purpose so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cloud;
pub mod error;
pub mod kernel;
pub mod datagen;
pub mod local_fit;
pub mod metrics;
pub mod spatial;
pub mod stitch;
pub mod tuning;

pub use cloud::PointCloud;
pub use error::{Error, Result};
pub use local_fit::{LocalModel, ModelKind};
pub use stitch::{FitConfig, FitPlan, PuWeights, StitchedModel};
