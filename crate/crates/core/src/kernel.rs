//! Gaussian kernel, the C² Wendland weight, and their first derivatives.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cloud::{distance, squared_distance};
use crate::error::{Error, Result};

/// Point count above which `mean_pairwise_distance` switches to sampling.
pub const EXACT_PAIRWISE_LIMIT: usize = 2000;
const PAIRWISE_SAMPLE_SEED: u64 = 0x5eed_b4d0;

/// `K(x, p) = exp(-|x - p|² / σ²)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianKernel {
    pub bandwidth: f64,
}

impl GaussianKernel {
    pub fn new(bandwidth: f64) -> Result<Self> {
        if !(bandwidth > 0.0 && bandwidth.is_finite()) {
            return Err(Error::DegenerateBandwidth(format!(
                "bandwidth must be positive and finite, got {bandwidth}"
            )));
        }
        Ok(Self { bandwidth })
    }

    #[inline]
    pub fn eval(&self, x: &[f64], p: &[f64]) -> f64 {
        gaussian(x, p, self.bandwidth)
    }

    /// Gradient of `eval(x, q)` with respect to `q`, written into `out`.
    #[inline]
    pub fn grad_q(&self, x: &[f64], q: &[f64], out: &mut [f64]) {
        gaussian_grad_q(x, q, self.bandwidth, out)
    }
}

#[inline]
pub fn gaussian(x: &[f64], p: &[f64], sigma: f64) -> f64 {
    (-squared_distance(x, p) / (sigma * sigma)).exp()
}

/// `∂/∂q exp(-|x - q|²/σ²) = K · 2(x - q)/σ²`.
#[inline]
pub fn gaussian_grad_q(x: &[f64], q: &[f64], sigma: f64, out: &mut [f64]) {
    let s2 = sigma * sigma;
    let k = gaussian(x, q, sigma);
    for ((o, xi), qi) in out.iter_mut().zip(x).zip(q) {
        *o = k * 2.0 * (xi - qi) / s2;
    }
}

/// Compactly supported Wendland weight of support radius `r`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WendlandWeight {
    pub radius: f64,
}

impl WendlandWeight {
    pub fn value(&self, v: f64) -> f64 {
        wendland(v, self.radius)
    }

    pub fn derivative(&self, v: f64) -> f64 {
        wendland_deriv(v, self.radius)
    }
}

/// `(1 - v/r)⁴ (1 + 4v/r)` for `v < r`, exactly zero otherwise.
#[inline]
pub fn wendland(v: f64, r: f64) -> f64 {
    if v >= r {
        return 0.0;
    }
    let t = v / r;
    let s = 1.0 - t;
    let s2 = s * s;
    s2 * s2 * (1.0 + 4.0 * t)
}

/// `d/dv` of [`wendland`]: `-(20/r) (v/r) (1 - v/r)³` inside the support.
#[inline]
pub fn wendland_deriv(v: f64, r: f64) -> f64 {
    if v >= r {
        return 0.0;
    }
    let t = v / r;
    let s = 1.0 - t;
    -(20.0 / r) * t * s * s * s
}

/// Mean Euclidean distance over all unordered pairs of rows.
///
/// Above [`EXACT_PAIRWISE_LIMIT`] points the mean is estimated from
/// `EXACT_PAIRWISE_LIMIT²` uniformly sampled distinct pairs with a fixed seed.
pub fn mean_pairwise_distance(dim: usize, coords: &[f64]) -> Result<f64> {
    let m = coords.len() / dim;
    if m < 2 {
        return Err(Error::InsufficientPoints {
            requested: 2,
            available: m,
        });
    }
    let row = |i: usize| &coords[i * dim..(i + 1) * dim];
    let mean = if m <= EXACT_PAIRWISE_LIMIT {
        let mut sum = 0.0;
        for i in 0..m {
            for j in (i + 1)..m {
                sum += distance(row(i), row(j));
            }
        }
        sum / (m * (m - 1) / 2) as f64
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(PAIRWISE_SAMPLE_SEED);
        let samples = EXACT_PAIRWISE_LIMIT * EXACT_PAIRWISE_LIMIT;
        let mut sum = 0.0;
        for _ in 0..samples {
            let i = rng.random_range(0..m);
            let mut j = rng.random_range(0..m - 1);
            if j >= i {
                j += 1;
            }
            sum += distance(row(i), row(j));
        }
        sum / samples as f64
    };
    if mean > 0.0 {
        Ok(mean)
    } else {
        Err(Error::DegenerateBandwidth(
            "all points coincide; mean pairwise distance is zero".into(),
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::{DMatrix, SymmetricEigen};
    use proptest::prelude::*;

    #[test]
    fn gaussian_values() {
        assert_eq!(gaussian(&[1.0, 2.0], &[1.0, 2.0], 0.7), 1.0);
        assert_relative_eq!(gaussian(&[0.0], &[1.5], 1.5), 0.36787944117144233, max_relative = 1e-15);
        assert_relative_eq!(gaussian(&[0.0, 0.0], &[0.6, 0.8], 0.5), 0.01831563888873418, max_relative = 1e-14);
    }

    #[test]
    fn gaussian_grad_examples() {
        let mut g = [9.0; 2];
        gaussian_grad_q(&[1.0, 2.0], &[1.0, 2.0], 0.3, &mut g);
        assert_eq!(g, [0.0, 0.0]);
        let sigma = 0.8;
        let mut g = [0.0];
        gaussian_grad_q(&[0.0], &[sigma], sigma, &mut g);
        assert_relative_eq!(g[0], (-1.0f64).exp() * (-2.0 / sigma), max_relative = 1e-15);
    }

    #[test]
    fn wendland_values() {
        let r = 2.5;
        assert_eq!(wendland(0.0, r), 1.0);
        assert_eq!(wendland(r, r), 0.0);
        assert_eq!(wendland(3.0 * r, r), 0.0);
        assert_relative_eq!(wendland(r / 2.0, r), 0.1875, max_relative = 1e-15);
        assert_eq!(wendland_deriv(0.0, r), 0.0);
        assert_eq!(wendland_deriv(r, r), 0.0);
        assert_relative_eq!(wendland_deriv(r / 2.0, r), -1.25 / r, max_relative = 1e-15);
    }

    #[test]
    fn wendland_c1_across_support_boundary() {
        let r = 1.7;
        let step = 1e-9;
        let left = (wendland(r, r) - wendland(r - step, r)) / step;
        let right = (wendland(r + step, r) - wendland(r, r)) / step;
        assert!(left.abs() < 1e-12, "left slope {left}");
        assert_eq!(right, 0.0);
    }

    #[test]
    fn wendland_deriv_matches_finite_differences() {
        let r = 1.3;
        let step = 1e-6 * r;
        for k in 1..100 {
            let v = k as f64 * 0.01 * r;
            let fd = (wendland(v + step, r) - wendland(v - step, r)) / (2.0 * step);
            assert!((fd - wendland_deriv(v, r)).abs() <= 1e-6, "v = {v}");
        }
    }

    #[test]
    fn wendland_monotone() {
        let r = 0.9;
        let mut prev = wendland(0.0, r);
        for k in 1..=2000 {
            let cur = wendland(k as f64 * 1e-3, r);
            assert!(cur <= prev);
            prev = cur;
        }
    }

    #[test]
    fn pairwise_examples() {
        assert_eq!(mean_pairwise_distance(1, &[0.0, 2.0]).unwrap(), 2.0);
        assert_relative_eq!(mean_pairwise_distance(1, &[0.0, 1.0, 2.0]).unwrap(), 4.0 / 3.0);
        assert_eq!(mean_pairwise_distance(2, &[0.0, 0.0, 3.0, 4.0]).unwrap(), 5.0);
        assert!(mean_pairwise_distance(1, &[1.0]).is_err());
        assert!(matches!(
            mean_pairwise_distance(2, &[1.0, 1.0, 1.0, 1.0]),
            Err(Error::DegenerateBandwidth(_))
        ));
    }

    #[test]
    fn pairwise_sampled_estimate_is_close() {
        // 1D uniform grid on [0, 1]: exact mean is (m + 1) / (3 (m - 1)) -> 1/3.
        let m = 3001;
        let coords: Vec<f64> = (0..m).map(|i| i as f64 / (m - 1) as f64).collect();
        let exact = (m as f64 + 1.0) / (3.0 * (m as f64 - 1.0));
        let est = mean_pairwise_distance(1, &coords).unwrap();
        assert_relative_eq!(est, exact, max_relative = 2e-3);
    }

    proptest! {
        #[test]
        fn gaussian_symmetric(x in prop::collection::vec(-5.0f64..5.0, 3), p in prop::collection::vec(-5.0f64..5.0, 3), s in 0.05f64..4.0) {
            prop_assert_eq!(gaussian(&x, &p, s), gaussian(&p, &x, s));
        }

        #[test]
        fn gaussian_grad_matches_fd(x in prop::collection::vec(-2.0f64..2.0, 2), q in prop::collection::vec(-2.0f64..2.0, 2), s in 0.3f64..3.0) {
            let mut g = [0.0; 2];
            gaussian_grad_q(&x, &q, s, &mut g);
            let h = 1e-6 * s;
            let mut fd = [0.0; 2];
            for i in 0..2 {
                let (mut qp, mut qm) = (q.clone(), q.clone());
                qp[i] += h;
                qm[i] -= h;
                fd[i] = (gaussian(&x, &qp, s) - gaussian(&x, &qm, s)) / (2.0 * h);
            }
            let err = ((g[0] - fd[0]).powi(2) + (g[1] - fd[1]).powi(2)).sqrt();
            let norm = (fd[0] * fd[0] + fd[1] * fd[1]).sqrt();
            prop_assert!(err <= 1e-6 * norm.max(1e-3), "err {} norm {}", err, norm);
        }

        #[test]
        fn gaussian_gram_is_psd(coords in prop::collection::vec(-3.0f64..3.0, 4..40), s in 0.2f64..3.0) {
            let mut coords = coords;
            coords.truncate(coords.len() / 2 * 2);
            let m = coords.len() / 2;
            let k = DMatrix::from_fn(m, m, |i, j| gaussian(&coords[2 * i..2 * i + 2], &coords[2 * j..2 * j + 2], s));
            prop_assert_eq!(&k, &k.transpose());
            let trace = k.trace();
            let eig = SymmetricEigen::new(k);
            let min = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
            prop_assert!(min >= -1e-10 * trace);
        }
    }
}
