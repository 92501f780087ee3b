use std::f64::consts::PI;

use nalgebra::{UnitQuaternion, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::Dataset;
use crate::cloud::{distance, PointCloud};
use crate::error::{Error, Result};

/// Angular radius of each bell.
pub const BELL_RADIUS: f64 = 0.5;
const UNIT_TOL: f64 = 1e-9;

pub fn lonlat_to_unit(lon: f64, lat: f64) -> [f64; 3] {
    [lat.cos() * lon.cos(), lat.cos() * lon.sin(), lat.sin()]
}

/// Bells centered at longitudes 5π/6 and 7π/6 on the equator.
pub fn default_bell_centers() -> [[f64; 3]; 2] {
    [
        lonlat_to_unit(5.0 * PI / 6.0, 0.0),
        lonlat_to_unit(7.0 * PI / 6.0, 0.0),
    ]
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn check_unit(x: &[f64], what: &'static str) -> Result<()> {
    if x.len() != 3 {
        return Err(Error::DimensionMismatch {
            expected: 3,
            actual: x.len(),
        });
    }
    let norm = dot(x, x).sqrt();
    if !norm.is_finite() || (norm - 1.0).abs() > UNIT_TOL {
        return Err(Error::InvalidInput(format!(
            "{what} must be a unit vector, norm is {norm}"
        )));
    }
    Ok(())
}

fn angle(x: &[f64], p: &[f64]) -> f64 {
    dot(x, p).clamp(-1.0, 1.0).acos()
}

fn bell(theta: f64) -> f64 {
    if theta < BELL_RADIUS {
        0.5 * (1.0 + (2.0 * PI * theta).cos())
    } else {
        0.0
    }
}

/// `0.1 + 0.9 (q1 + q2)` for two C¹ cosine bells.
pub fn cosine_bells(x: &[f64], p1: &[f64], p2: &[f64]) -> Result<f64> {
    check_unit(x, "query point")?;
    check_unit(p1, "bell center")?;
    check_unit(p2, "bell center")?;
    Ok(0.1 + 0.9 * (bell(angle(x, p1)) + bell(angle(x, p2))))
}

/// Gradient of [`cosine_bells`] as a function of the ambient coordinates.
pub fn cosine_bells_grad(x: &[f64], p1: &[f64], p2: &[f64]) -> Result<[f64; 3]> {
    check_unit(x, "query point")?;
    check_unit(p1, "bell center")?;
    check_unit(p2, "bell center")?;
    let mut g = [0.0; 3];
    for p in [p1, p2] {
        let theta = angle(x, p);
        if theta >= BELL_RADIUS {
            continue;
        }
        // d/dx of 0.45 (1 + cos 2πθ) with θ = arccos(x·p)
        let ratio = if theta < 1e-8 {
            2.0 * PI
        } else {
            (2.0 * PI * theta).sin() / theta.sin()
        };
        let c = 0.9 * PI * ratio;
        for k in 0..3 {
            g[k] += c * p[k];
        }
    }
    Ok(g)
}

/// Regression target `max(q) - q` over the given unit points, with gradients.
pub fn shifted_bells(points: &[[f64; 3]], p1: &[f64], p2: &[f64]) -> Result<Dataset> {
    if points.is_empty() {
        return Err(Error::InvalidInput("no sphere points".into()));
    }
    let mut q = Vec::with_capacity(points.len());
    let mut grads = Vec::with_capacity(3 * points.len());
    for x in points {
        q.push(cosine_bells(x, p1, p2)?);
        grads.extend(cosine_bells_grad(x, p1, p2)?.map(|v| -v));
    }
    let max = q.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let y = q.iter().map(|v| max - v).collect();
    let coords = points.iter().flatten().copied().collect();
    Ok(Dataset {
        cloud: PointCloud::new(3, coords, y)?,
        gradients: Some(grads),
    })
}

pub fn keep_probability(x: &[f64], c1: &[f64], c2: &[f64], r1: f64, r2: f64) -> f64 {
    let f1 = if r1 > 0.0 { distance(x, c1) / r1 } else { 0.0 };
    let f2 = if r2 > 0.0 { distance(x, c2) / r2 } else { 0.0 };
    (1.0 - f1 * f2).clamp(0.0, 1.0)
}

/// Thins `points` toward `c1` and `c2`. A point is dropped only when both of
/// two independent Bernoulli trials, with failure rates `|x-c1|/r1` and
/// `|x-c2|/r2`, fail. Returns the kept indices in increasing order.
pub fn density_sample(points: &[[f64; 3]], c1: &[f64], c2: &[f64], seed: u64) -> Result<Vec<usize>> {
    if points.is_empty() {
        return Err(Error::InvalidInput("density_sample needs at least one point".into()));
    }
    let r1 = points.iter().map(|x| distance(x, c1)).fold(0.0, f64::max);
    let r2 = points.iter().map(|x| distance(x, c2)).fold(0.0, f64::max);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut kept = Vec::new();
    for (i, x) in points.iter().enumerate() {
        let f1 = if r1 > 0.0 { distance(x, c1) / r1 } else { 0.0 };
        let f2 = if r2 > 0.0 { distance(x, c2) / r2 } else { 0.0 };
        let first = rng.random::<f64>() >= f1;
        let second = rng.random::<f64>() >= f2;
        if first || second {
            kept.push(i);
        }
    }
    Ok(kept)
}

/// Fibonacci lattice of `n` points under a seeded random rotation.
pub fn sphere_points(n: usize, seed: u64) -> Vec<[f64; 3]> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let quat: [f64; 4] = std::array::from_fn(|_| StandardNormal.sample(&mut rng));
    let rot = UnitQuaternion::from_quaternion(nalgebra::Quaternion::new(
        quat[0], quat[1], quat[2], quat[3],
    ));
    let golden = PI * (3.0 - 5f64.sqrt());
    (0..n)
        .map(|i| {
            let z = 1.0 - (2.0 * i as f64 + 1.0) / n as f64;
            let rho = (1.0 - z * z).max(0.0).sqrt();
            let phi = golden * i as f64;
            let v = rot * Vector3::new(rho * phi.cos(), rho * phi.sin(), z);
            let v = v / v.norm();
            [v.x, v.y, v.z]
        })
        .collect()
}

/// Independent uniform points on the sphere (normalized Gaussians).
pub fn uniform_sphere_points(n: usize, seed: u64) -> Vec<[f64; 3]> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let v: [f64; 3] = std::array::from_fn(|_| StandardNormal.sample(&mut rng));
        let norm = dot(&v, &v).sqrt();
        if norm > 1e-8 {
            out.push(v.map(|c| c / norm));
        }
    }
    out
}
