//! Training data container.

use crate::error::{Error, Result};

/// `n` points in `R^d` stored row-major, each with one response value.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    dim: usize,
    coords: Vec<f64>,
    responses: Vec<f64>,
}

impl PointCloud {
    /// Builds a cloud from row-major coordinates. Rejects empty input, ragged
    /// coordinate buffers and non-finite values.
    pub fn new(dim: usize, coords: Vec<f64>, responses: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidInput("dimension must be at least 1".into()));
        }
        if responses.is_empty() {
            return Err(Error::InvalidInput("point cloud is empty".into()));
        }
        if coords.len() != dim * responses.len() {
            return Err(Error::InvalidInput(format!(
                "{} coordinates do not describe {} points in dimension {}",
                coords.len(),
                responses.len(),
                dim
            )));
        }
        if coords.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("point coordinates"));
        }
        if responses.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("responses"));
        }
        Ok(Self {
            dim,
            coords,
            responses,
        })
    }

    /// Builds a cloud from a list of rows.
    pub fn from_rows(rows: &[Vec<f64>], responses: Vec<f64>) -> Result<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::InvalidInput("rows have differing lengths".into()));
        }
        Self::new(dim, rows.concat(), responses)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.responses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.responses.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn response(&self, i: usize) -> f64 {
        self.responses[i]
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn responses(&self) -> &[f64] {
        &self.responses
    }

    pub fn points(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.coords.chunks_exact(self.dim)
    }

    /// Copies the listed rows into a new cloud, in the given order.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        let mut coords = Vec::with_capacity(indices.len() * self.dim);
        let mut responses = Vec::with_capacity(indices.len());
        for &i in indices {
            coords.extend_from_slice(self.point(i));
            responses.push(self.responses[i]);
        }
        Self::new(self.dim, coords, responses)
    }

    /// Same geometry with replaced responses.
    pub fn with_responses(&self, responses: Vec<f64>) -> Result<Self> {
        if responses.len() != self.len() {
            return Err(Error::InvalidInput(format!(
                "expected {} responses, got {}",
                self.len(),
                responses.len()
            )));
        }
        Self::new(self.dim, self.coords.clone(), responses)
    }
}

/// Squared Euclidean distance. All ranking in this crate goes through this.
#[inline]
pub fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Euclidean distance; ball membership is always decided with this function.
#[inline]
pub fn distance(a: &[f64], b: &[f64]) -> f64 {
    squared_distance(a, b).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_ragged_and_non_finite() {
        assert!(PointCloud::new(2, vec![0.0; 3], vec![1.0, 2.0]).is_err());
        assert!(PointCloud::new(1, vec![f64::NAN], vec![1.0]).is_err());
        assert!(PointCloud::new(1, vec![0.0], vec![f64::INFINITY]).is_err());
        assert!(PointCloud::new(1, vec![], vec![]).is_err());
    }

    #[test]
    fn subset_keeps_order() {
        let c = PointCloud::new(1, vec![0.0, 1.0, 2.0], vec![10.0, 11.0, 12.0]).unwrap();
        let s = c.subset(&[2, 0]).unwrap();
        assert_eq!(s.point(0), &[2.0]);
        assert_eq!(s.responses(), &[12.0, 10.0]);
    }
}
