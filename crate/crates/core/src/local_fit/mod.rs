//! Local regression models fitted on the points of one region.
//!
//! Two kinds are supported: plain kernel ridge regression with a Gaussian
//! kernel, and the polynomial-augmented variant whose kernel coefficients are
//! constrained orthogonal to the polynomial space. The augmented system
//!
//! ```text
//! [ K + ηI  P ] [α]   [y]
//! [ Pᵀ      0 ] [λ] = [0]
//! ```
//!
//! is always solved through a thresholded SVD, which also covers point sets
//! on which `P` loses rank.

mod basis;
mod linalg;

pub use basis::{binomial, MonomialBasis};
pub use linalg::{cholesky_solve, svd_solve};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::cloud::distance;
use crate::error::{Error, Result};
use crate::kernel::{gaussian, gaussian_grad_q};

/// Singular values at or below this fraction of the largest are discarded.
pub const DEFAULT_SVD_THRESHOLD: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    Krr,
    KrrPoly,
}

/// `Σ λ_i p_i((q - shift) / scale)` for a monomial basis `p`.
///
/// The affine map only changes the basis, not the spanned space; it keeps the
/// design matrix well scaled when coordinates are large or far from the origin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolynomialTerm {
    pub basis: MonomialBasis,
    pub shift: Vec<f64>,
    pub scale: f64,
    pub coeffs: Vec<f64>,
}

impl PolynomialTerm {
    /// Shift and scale centering the given rows in the unit ball.
    pub fn frame_for(dim: usize, points: &[f64]) -> (Vec<f64>, f64) {
        let m = (points.len() / dim).max(1);
        let mut shift = vec![0.0; dim];
        for p in points.chunks_exact(dim) {
            for (s, v) in shift.iter_mut().zip(p) {
                *s += v;
            }
        }
        shift.iter_mut().for_each(|s| *s /= m as f64);
        let scale = points
            .chunks_exact(dim)
            .map(|p| distance(p, &shift))
            .fold(0.0, f64::max);
        (shift, if scale > 0.0 { scale } else { 1.0 })
    }

    fn local(&self, q: &[f64]) -> Vec<f64> {
        q.iter()
            .zip(&self.shift)
            .map(|(v, s)| (v - s) / self.scale)
            .collect()
    }

    /// Row `i` holds the basis evaluated at point `i`.
    pub fn design_matrix(&self, points: &[f64]) -> DMatrix<f64> {
        let dim = self.basis.dim();
        let m = points.len() / dim;
        let s = self.basis.len();
        let mut p = DMatrix::zeros(m, s);
        let mut row = vec![0.0; s];
        for (i, x) in points.chunks_exact(dim).enumerate() {
            self.basis.eval_into(&self.local(x), &mut row);
            for (j, v) in row.iter().enumerate() {
                p[(i, j)] = *v;
            }
        }
        p
    }

    pub fn eval(&self, q: &[f64]) -> f64 {
        self.basis
            .eval(&self.local(q))
            .iter()
            .zip(&self.coeffs)
            .map(|(p, c)| p * c)
            .sum()
    }

    /// Adds the gradient at `q` into `out`.
    pub fn add_grad(&self, q: &[f64], out: &mut [f64]) {
        let dim = self.basis.dim();
        let g = self.basis.grad(&self.local(q));
        for (row, c) in g.chunks_exact(dim).zip(&self.coeffs) {
            for (o, v) in out.iter_mut().zip(row) {
                *o += c * v / self.scale;
            }
        }
    }

    /// Least-squares polynomial of total degree `degree` through the data.
    pub fn fit_least_squares(
        dim: usize,
        points: &[f64],
        y: &[f64],
        degree: usize,
        svd_threshold: f64,
    ) -> Result<Self> {
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("responses"));
        }
        let (shift, scale) = Self::frame_for(dim, points);
        let mut term = Self {
            basis: MonomialBasis::new(dim, degree),
            shift,
            scale,
            coeffs: Vec::new(),
        };
        let p = term.design_matrix(points);
        let coeffs = svd_solve(p, &DVector::from_column_slice(y), svd_threshold)?;
        term.coeffs = coeffs.iter().copied().collect();
        Ok(term)
    }
}

/// Fitted coefficients of one local model together with its training points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalModel {
    kind: ModelKind,
    dim: usize,
    points: Vec<f64>,
    alpha: Vec<f64>,
    sigma: f64,
    eta: f64,
    poly: Option<PolynomialTerm>,
}

/// Pieces of the orthogonality constraint `Pᵀα = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstraintCheck {
    pub pt_alpha_norm: f64,
    pub alpha_norm: f64,
    pub p_frobenius: f64,
}

impl ConstraintCheck {
    /// `|Pᵀα| <= tol |α| |P|_F`.
    pub fn holds(&self, tol: f64) -> bool {
        self.pt_alpha_norm <= tol * self.alpha_norm * self.p_frobenius
    }
}

fn check_inputs(dim: usize, points: &[f64], y: &[f64], sigma: f64, eta: f64) -> Result<()> {
    if dim == 0 || y.is_empty() {
        return Err(Error::InvalidInput("local fit needs at least one point".into()));
    }
    if points.len() != dim * y.len() {
        return Err(Error::InvalidInput(format!(
            "{} coordinates for {} responses in dimension {}",
            points.len(),
            y.len(),
            dim
        )));
    }
    if points.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("local training points"));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("local responses"));
    }
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::DegenerateBandwidth(format!(
            "bandwidth must be positive, got {sigma}"
        )));
    }
    if !(eta > 0.0 && eta.is_finite()) {
        return Err(Error::InvalidInput(format!("ridge must be positive, got {eta}")));
    }
    Ok(())
}

/// Gaussian Gram matrix of the rows of `points`.
pub fn kernel_matrix(dim: usize, points: &[f64], sigma: f64) -> DMatrix<f64> {
    let m = points.len() / dim;
    let row = |i: usize| &points[i * dim..(i + 1) * dim];
    let mut k = DMatrix::zeros(m, m);
    for i in 0..m {
        k[(i, i)] = 1.0;
        for j in (i + 1)..m {
            let v = gaussian(row(i), row(j), sigma);
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
    }
    k
}

/// Kernel ridge regression: `α = (K + ηI)⁻¹ y`.
///
/// Uses a Cholesky factorization and falls back to a thresholded SVD solve if
/// it breaks down.
pub fn fit_krr(dim: usize, points: &[f64], y: &[f64], sigma: f64, eta: f64) -> Result<LocalModel> {
    check_inputs(dim, points, y, sigma, eta)?;
    let mut a = kernel_matrix(dim, points, sigma);
    for i in 0..y.len() {
        a[(i, i)] += eta;
    }
    let rhs = DVector::from_column_slice(y);
    let alpha = match cholesky_solve(a.clone(), &rhs) {
        Some(alpha) => alpha,
        None => svd_solve(a, &rhs, DEFAULT_SVD_THRESHOLD)?,
    };
    Ok(LocalModel {
        kind: ModelKind::Krr,
        dim,
        points: points.to_vec(),
        alpha: alpha.iter().copied().collect(),
        sigma,
        eta,
        poly: None,
    })
}

/// Polynomial-augmented kernel ridge regression with total degree `degree`.
/// `None` means no polynomial part, which is exactly [`fit_krr`].
pub fn fit_krr_poly(
    dim: usize,
    points: &[f64],
    y: &[f64],
    sigma: f64,
    eta: f64,
    degree: Option<usize>,
    svd_threshold: f64,
) -> Result<LocalModel> {
    let Some(degree) = degree else {
        return fit_krr(dim, points, y, sigma, eta);
    };
    check_inputs(dim, points, y, sigma, eta)?;
    let m = y.len();
    let (shift, scale) = PolynomialTerm::frame_for(dim, points);
    let mut poly = PolynomialTerm {
        basis: MonomialBasis::new(dim, degree),
        shift,
        scale,
        coeffs: Vec::new(),
    };
    let s = poly.basis.len();
    let p = poly.design_matrix(points);
    let k = kernel_matrix(dim, points, sigma);

    let mut a = DMatrix::zeros(m + s, m + s);
    a.view_mut((0, 0), (m, m)).copy_from(&k);
    for i in 0..m {
        a[(i, i)] += eta;
    }
    a.view_mut((0, m), (m, s)).copy_from(&p);
    a.view_mut((m, 0), (s, m)).copy_from(&p.transpose());
    let mut rhs = DVector::zeros(m + s);
    rhs.rows_mut(0, m).copy_from_slice(y);

    let sol = svd_solve(a, &rhs, svd_threshold)?;
    if sol.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("non-finite KRR-POLY coefficients".into()));
    }
    poly.coeffs = sol.rows(m, s).iter().copied().collect();
    let alpha = project_out_range(&p, sol.rows(0, m).into_owned(), svd_threshold);
    Ok(LocalModel {
        kind: ModelKind::KrrPoly,
        dim,
        points: points.to_vec(),
        alpha: alpha.iter().copied().collect(),
        sigma,
        eta,
        poly: Some(poly),
    })
}

/// Removes from `alpha` its component in the column space of `p`, so that
/// `Pᵀα = 0` holds to working precision relative to `|α|`.
fn project_out_range(p: &DMatrix<f64>, alpha: DVector<f64>, rel_threshold: f64) -> DVector<f64> {
    if p.ncols() == 0 || p.nrows() == 0 {
        return alpha;
    }
    let svd = p.clone().svd(true, false);
    let u = svd.u.expect("left singular vectors requested");
    let s_max = svd.singular_values.max();
    let mut out = alpha.clone();
    for (k, &sv) in svd.singular_values.iter().enumerate() {
        if sv > rel_threshold * s_max {
            let col = u.column(k);
            out -= col * col.dot(&alpha);
        }
    }
    out
}

impl LocalModel {
    /// Assembles a model from coefficients, validating shapes.
    pub fn from_parts(
        dim: usize,
        points: Vec<f64>,
        alpha: Vec<f64>,
        sigma: f64,
        eta: f64,
        poly: Option<PolynomialTerm>,
    ) -> Result<Self> {
        if dim == 0 || points.len() != dim * alpha.len() {
            return Err(Error::InvalidInput("kernel points and coefficients disagree".into()));
        }
        if !(sigma > 0.0) || !(eta > 0.0) {
            return Err(Error::InvalidInput("bandwidth and ridge must be positive".into()));
        }
        if let Some(p) = &poly {
            if p.basis.dim() != dim || p.shift.len() != dim || p.coeffs.len() != p.basis.len() {
                return Err(Error::InvalidInput("polynomial term has wrong shape".into()));
            }
            if !(p.scale > 0.0) {
                return Err(Error::InvalidInput("polynomial scale must be positive".into()));
            }
        }
        let all_finite = points
            .iter()
            .chain(&alpha)
            .chain(poly.iter().flat_map(|p| p.coeffs.iter().chain(&p.shift)))
            .all(|v| v.is_finite());
        if !all_finite {
            return Err(Error::NonFinite("local model coefficients"));
        }
        Ok(Self {
            kind: if poly.is_some() {
                ModelKind::KrrPoly
            } else {
                ModelKind::Krr
            },
            dim,
            points,
            alpha,
            sigma,
            eta,
            poly,
        })
    }

    /// Re-checks shapes and finiteness, e.g. after deserialization.
    pub fn validated(self) -> Result<Self> {
        let kind = self.kind;
        let model = Self::from_parts(self.dim, self.points, self.alpha, self.sigma, self.eta, self.poly)?;
        if model.kind != kind {
            return Err(Error::InvalidInput("model kind disagrees with polynomial term".into()));
        }
        Ok(model)
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.alpha.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alpha.is_empty()
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    pub fn lambda(&self) -> &[f64] {
        self.poly.as_ref().map_or(&[], |p| &p.coeffs)
    }

    pub fn polynomial(&self) -> Option<&PolynomialTerm> {
        self.poly.as_ref()
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    /// `Σ α_i K(x_i, q) + Σ λ_i p_i(q)`.
    pub fn eval(&self, q: &[f64]) -> f64 {
        let kernel: f64 = self
            .points
            .chunks_exact(self.dim)
            .zip(&self.alpha)
            .map(|(x, a)| a * gaussian(x, q, self.sigma))
            .sum();
        kernel + self.poly.as_ref().map_or(0.0, |p| p.eval(q))
    }

    /// Exact gradient of [`LocalModel::eval`] with respect to `q`.
    pub fn grad(&self, q: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        self.add_grad(q, &mut out);
        out
    }

    pub fn add_grad(&self, q: &[f64], out: &mut [f64]) {
        let mut g = vec![0.0; self.dim];
        for (x, a) in self.points.chunks_exact(self.dim).zip(&self.alpha) {
            gaussian_grad_q(x, q, self.sigma, &mut g);
            for (o, v) in out.iter_mut().zip(&g) {
                *o += a * v;
            }
        }
        if let Some(p) = &self.poly {
            p.add_grad(q, out);
        }
    }

    /// Norms entering the orthogonality constraint, measured on the basis used
    /// for fitting. `None` for plain KRR.
    pub fn constraint_check(&self) -> Option<ConstraintCheck> {
        let poly = self.poly.as_ref()?;
        let p = poly.design_matrix(&self.points);
        let alpha = DVector::from_column_slice(&self.alpha);
        Some(ConstraintCheck {
            pt_alpha_norm: (p.transpose() * &alpha).norm(),
            alpha_norm: alpha.norm(),
            p_frobenius: p.norm(),
        })
    }

    /// `(y - Kα)ᵀ(y - Kα) + η αᵀKα` for the kernel part of the model.
    pub fn ridge_objective(&self, y: &[f64]) -> f64 {
        let k = kernel_matrix(self.dim, &self.points, self.sigma);
        let alpha = DVector::from_column_slice(&self.alpha);
        let ka = &k * &alpha;
        let r = DVector::from_column_slice(y) - &ka;
        r.dot(&r) + self.eta * alpha.dot(&ka)
    }
}

#[cfg(test)]
mod tests;
