use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::Dataset;
use crate::cloud::PointCloud;
use crate::error::{Error, Result};

/// Both coordinates range over this interval.
pub const SYNTH_DOMAIN: (f64, f64) = (-6.0, 30.0);
pub const GRID_SPACING: f64 = 0.2;

fn sigmoid(t: f64) -> f64 {
    1.0 / (1.0 + (-t).exp())
}

// (z1, dz1/dx1)
fn scale_factor(x1: f64) -> (f64, f64) {
    let s0 = sigmoid(x1);
    let s1 = sigmoid(x1 - 12.0);
    let s2 = sigmoid(x1 - 24.0);
    let a = 1.0 + 9.0 * s1;
    let b = 1.0 + 10.0 * s2;
    let z1 = s0 * a * b;
    let dz1 = s0 * (1.0 - s0) * a * b
        + s0 * 9.0 * s1 * (1.0 - s1) * b
        + s0 * a * 10.0 * s2 * (1.0 - s2);
    (z1, dz1)
}

/// Three-plateau sigmoid ramp times `sin(x2) + cos(x1)`.
pub fn synth2d(x1: f64, x2: f64) -> f64 {
    scale_factor(x1).0 * (x2.sin() + x1.cos())
}

pub fn synth2d_grad(x1: f64, x2: f64) -> [f64; 2] {
    let (z1, dz1) = scale_factor(x1);
    let z2 = x2.sin() + x1.cos();
    [dz1 * z2 - z1 * x1.sin(), z1 * x2.cos()]
}

/// `n_train` uniform points on the square with (optionally noisy) responses.
pub fn gen2d(n_train: usize, seed: u64, noise_std: Option<f64>) -> Result<Dataset> {
    if n_train == 0 {
        return Err(Error::InvalidInput("n_train must be at least 1".into()));
    }
    let noise = match noise_std {
        Some(s) if s > 0.0 => Some(
            Normal::new(0.0, s).map_err(|e| Error::InvalidInput(format!("noise: {e}")))?,
        ),
        Some(s) if s < 0.0 || s.is_nan() => {
            return Err(Error::InvalidInput(format!("noise std must be >= 0, got {s}")))
        }
        _ => None,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (lo, hi) = SYNTH_DOMAIN;
    let mut coords = Vec::with_capacity(2 * n_train);
    let mut y = Vec::with_capacity(n_train);
    let mut grads = Vec::with_capacity(2 * n_train);
    for _ in 0..n_train {
        let x1 = rng.random_range(lo..=hi);
        let x2 = rng.random_range(lo..=hi);
        coords.extend([x1, x2]);
        y.push(synth2d(x1, x2));
        grads.extend(synth2d_grad(x1, x2));
    }
    // drawn after the points so the same seed gives the same locations
    if let Some(n) = &noise {
        for v in &mut y {
            *v += n.sample(&mut rng);
        }
    }
    Ok(Dataset {
        cloud: PointCloud::new(2, coords, y)?,
        gradients: Some(grads),
    })
}

/// Noiseless 181 x 181 grid with spacing 0.2, `x1` varying slowest.
pub fn grid_test_2d() -> Dataset {
    let (lo, hi) = SYNTH_DOMAIN;
    let steps = ((hi - lo) / GRID_SPACING).round() as usize + 1;
    let axis: Vec<f64> = (0..steps).map(|i| lo + i as f64 * GRID_SPACING).collect();
    let mut coords = Vec::with_capacity(2 * steps * steps);
    let mut y = Vec::with_capacity(steps * steps);
    let mut grads = Vec::with_capacity(2 * steps * steps);
    for &x1 in &axis {
        for &x2 in &axis {
            coords.extend([x1, x2]);
            y.push(synth2d(x1, x2));
            grads.extend(synth2d_grad(x1, x2));
        }
    }
    Dataset {
        cloud: PointCloud::new(2, coords, y).expect("grid is finite"),
        gradients: Some(grads),
    }
}
