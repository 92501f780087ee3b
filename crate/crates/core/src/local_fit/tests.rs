use super::*;
use approx::assert_relative_eq;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::kernel::mean_pairwise_distance;

fn random_points(rng: &mut ChaCha8Rng, m: usize, d: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..m * d).map(|_| rng.random_range(lo..hi)).collect()
}

fn fd_grad(model: &LocalModel, q: &[f64], h: f64) -> Vec<f64> {
    (0..q.len())
        .map(|i| {
            let (mut qp, mut qm) = (q.to_vec(), q.to_vec());
            qp[i] += h;
            qm[i] -= h;
            (model.eval(&qp) - model.eval(&qm)) / (2.0 * h)
        })
        .collect()
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

#[test]
fn krr_single_point() {
    let m = fit_krr(1, &[0.4], &[2.0], 1.0, 1.0).unwrap();
    assert_relative_eq!(m.alpha()[0], 1.0, max_relative = 1e-15);
    assert_relative_eq!(m.eval(&[0.4]), 1.0, max_relative = 1e-15);
}

#[test]
fn krr_zero_response() {
    let m = fit_krr(2, &[0.0, 0.0, 1.0, 0.5, -0.2, 0.3], &[0.0; 3], 0.7, 1e-3).unwrap();
    assert!(m.alpha().iter().all(|&a| a == 0.0));
    assert_eq!(m.eval(&[0.1, 0.1]), 0.0);
    assert_eq!(m.grad(&[0.1, 0.1]), vec![0.0, 0.0]);
}

#[test]
fn krr_far_points_near_identity() {
    let m = fit_krr(1, &[0.0, 100.0], &[1.0, 3.0], 1.0, 1e-12).unwrap();
    assert_relative_eq!(m.alpha()[0], 1.0, max_relative = 1e-9);
    assert_relative_eq!(m.alpha()[1], 3.0, max_relative = 1e-9);
}

#[test]
fn krr_rejects_bad_input() {
    assert!(fit_krr(1, &[0.0], &[f64::NAN], 1.0, 1.0).is_err());
    assert!(fit_krr(1, &[0.0], &[1.0], 0.0, 1.0).is_err());
    assert!(fit_krr(1, &[0.0], &[1.0], 1.0, 0.0).is_err());
    assert!(fit_krr(1, &[], &[], 1.0, 1.0).is_err());
}

#[test]
fn krr_residual_small() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..50 {
        let m = rng.random_range(2..40);
        let d = rng.random_range(1..4);
        let pts = random_points(&mut rng, m, d, -1.0, 1.0);
        let y: Vec<f64> = (0..m).map(|_| rng.random_range(-5.0..5.0)).collect();
        let sigma = mean_pairwise_distance(d, &pts).unwrap();
        let eta = 10f64.powi(-rng.random_range(1..6));
        let model = fit_krr(d, &pts, &y, sigma, eta).unwrap();
        let mut a = kernel_matrix(d, &pts, sigma);
        for i in 0..m {
            a[(i, i)] += eta;
        }
        let r = &a * DVector::from_column_slice(model.alpha()) - DVector::from_column_slice(&y);
        assert!(r.norm() <= 1e-8 * norm(&y));
    }
}

#[test]
fn krr_objective_is_stationary() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let pts = random_points(&mut rng, 25, 2, 0.0, 1.0);
    let y: Vec<f64> = pts.chunks(2).map(|p| (3.0 * p[0]).sin() + p[1]).collect();
    let model = fit_krr(2, &pts, &y, 0.5, 1e-2).unwrap();
    let base = model.ridge_objective(&y);
    for i in 0..25 {
        for delta in [-1e-3, 1e-3] {
            let mut alpha = model.alpha().to_vec();
            alpha[i] += delta;
            let perturbed = LocalModel::from_parts(2, pts.clone(), alpha, 0.5, 1e-2, None).unwrap();
            assert!(perturbed.ridge_objective(&y) >= base);
        }
    }
}

#[test]
fn poly_constant_data() {
    let m = fit_krr_poly(1, &[0.0, 1.0], &[1.0, 1.0], 0.8, 1e-8, Some(0), DEFAULT_SVD_THRESHOLD).unwrap();
    assert_relative_eq!(m.lambda()[0], 1.0, max_relative = 1e-10);
    assert!(m.alpha().iter().all(|a| a.abs() < 1e-10));
    assert_relative_eq!(m.eval(&[5.0]), 1.0, max_relative = 1e-10);
}

#[test]
fn poly_reproduces_quadratic() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let pts = random_points(&mut rng, 20, 2, -1.0, 1.0);
    let y: Vec<f64> = pts.chunks(2).map(|p| p[0] * p[0] + 2.0).collect();
    let sigma = mean_pairwise_distance(2, &pts).unwrap();
    let model = fit_krr_poly(2, &pts, &y, sigma, 1e-8, Some(2), DEFAULT_SVD_THRESHOLD).unwrap();
    for _ in 0..200 {
        // held out points inside [-0.5, 0.5]², well within the sampled hull
        let q = [rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5)];
        assert!((model.eval(&q) - (q[0] * q[0] + 2.0)).abs() <= 1e-5);
    }
    assert!(model.constraint_check().unwrap().holds(1e-6));
}

#[test]
fn poly_collinear_points_rank_deficient() {
    let ts: Vec<f64> = (0..15).map(|i| i as f64 / 14.0).collect();
    let pts: Vec<f64> = ts.iter().flat_map(|&t| [t, 2.0 * t - 1.0]).collect();
    let y: Vec<f64> = ts.iter().map(|t| (4.0 * t).cos()).collect();
    let sigma = mean_pairwise_distance(2, &pts).unwrap();
    let model = fit_krr_poly(2, &pts, &y, sigma, 1e-6, Some(2), DEFAULT_SVD_THRESHOLD).unwrap();
    let poly = model.polynomial().unwrap();
    let p = poly.design_matrix(&pts);
    let k = kernel_matrix(2, &pts, sigma);
    let alpha = DVector::from_column_slice(model.alpha());
    let lambda = DVector::from_column_slice(model.lambda());
    let top = (&k + DMatrix::identity(15, 15) * 1e-6) * &alpha + &p * &lambda - DVector::from_column_slice(&y);
    let bottom = p.transpose() * &alpha;
    let residual = (top.norm_squared() + bottom.norm_squared()).sqrt();
    assert!(residual <= 1e-6 * norm(&y), "residual {residual}");
    assert!(model.alpha().iter().chain(model.lambda()).all(|v| v.is_finite()));
}

#[test]
fn pure_polynomial_gradient() {
    let poly = PolynomialTerm {
        basis: MonomialBasis::new(2, 2),
        shift: vec![0.0, 0.0],
        scale: 1.0,
        coeffs: vec![2.0, 0.0, 0.0, 1.0, 0.0, 0.0],
    };
    let m = LocalModel::from_parts(2, vec![], vec![], 1.0, 1.0, Some(poly)).unwrap();
    assert_eq!(m.eval(&[3.0, 0.0]), 11.0);
    assert_eq!(m.grad(&[3.0, 0.0]), vec![6.0, 0.0]);
}

#[test]
fn zero_coefficient_model() {
    let m = LocalModel::from_parts(2, vec![0.0, 1.0, 2.0, 3.0], vec![0.0, 0.0], 1.0, 1.0, None).unwrap();
    assert_eq!(m.eval(&[0.3, 0.2]), 0.0);
    assert_eq!(m.grad(&[0.3, 0.2]), vec![0.0, 0.0]);
}

#[test]
fn no_degree_is_plain_krr() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let pts = random_points(&mut rng, 30, 3, -2.0, 2.0);
    let y: Vec<f64> = (0..30).map(|_| rng.random_range(-1.0..1.0)).collect();
    let a = fit_krr(3, &pts, &y, 1.1, 1e-3).unwrap();
    let b = fit_krr_poly(3, &pts, &y, 1.1, 1e-3, None, DEFAULT_SVD_THRESHOLD).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.kind(), ModelKind::Krr);
}

#[test]
fn grad_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for d in 1..=3 {
        let pts = random_points(&mut rng, 40, d, 0.0, 1.0);
        let y: Vec<f64> = pts.chunks(d).map(|p| p.iter().map(|v| (2.0 * v).sin()).sum()).collect();
        let sigma = mean_pairwise_distance(d, &pts).unwrap();
        for degree in [None, Some(2)] {
            let model = fit_krr_poly(d, &pts, &y, sigma, 1e-4, degree, DEFAULT_SVD_THRESHOLD).unwrap();
            for _ in 0..100 {
                let q: Vec<f64> = (0..d).map(|_| rng.random_range(0.1..0.9)).collect();
                let g = model.grad(&q);
                let fd = fd_grad(&model, &q, 1e-6 * sigma);
                let err: Vec<f64> = g.iter().zip(&fd).map(|(a, b)| a - b).collect();
                assert!(norm(&err) <= 1e-5 * norm(&fd), "d={d} err={} fd={}", norm(&err), norm(&fd));
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn reproduces_random_polynomials(seed in 0u64..10_000, d in 1usize..4, degree in 0usize..3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let basis = MonomialBasis::new(d, degree);
        let coeffs: Vec<f64> = (0..basis.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let f = |q: &[f64]| basis.eval(q).iter().zip(&coeffs).map(|(a, b)| a * b).sum::<f64>();
        let m = 30;
        let pts = random_points(&mut rng, m, d, -1.0, 1.0);
        let y: Vec<f64> = pts.chunks(d).map(f).collect();
        let sigma = mean_pairwise_distance(d, &pts).unwrap();
        let model = fit_krr_poly(d, &pts, &y, sigma, 1e-8, Some(2), DEFAULT_SVD_THRESHOLD).unwrap();
        for _ in 0..50 {
            let q: Vec<f64> = (0..d).map(|_| rng.random_range(-0.5..0.5)).collect();
            prop_assert!((model.eval(&q) - f(&q)).abs() <= 1e-5);
        }
        let check = model.constraint_check().unwrap();
        prop_assert!(check.holds(1e-6), "{:?}", check);
    }
}

