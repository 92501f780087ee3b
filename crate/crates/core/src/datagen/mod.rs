//! Synthetic targets, sampling schemes, and CSV ingestion.

mod csv_io;
mod sphere;
mod synth;

pub use csv_io::{load_csv, parse_table, read_table, write_table, Table};
pub use sphere::{
    cosine_bells, cosine_bells_grad, default_bell_centers, density_sample, keep_probability,
    lonlat_to_unit, shifted_bells, sphere_points, uniform_sphere_points, BELL_RADIUS,
};
pub use synth::{gen2d, grid_test_2d, synth2d, synth2d_grad, GRID_SPACING, SYNTH_DOMAIN};

use crate::cloud::PointCloud;

/// A point cloud with, when the target is analytic, its exact gradients
/// (row-major, one row per point).
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub cloud: PointCloud,
    pub gradients: Option<Vec<f64>>,
}
