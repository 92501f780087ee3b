use serde::{Deserialize, Serialize};

/// All `d`-variate monomials of total degree `<= degree`, in graded
/// lexicographic order (constant first).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MonomialBasis {
    dim: usize,
    degree: usize,
    exponents: Vec<Vec<u32>>,
}

fn push_exponents(dim: usize, remaining: u32, prefix: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
    if prefix.len() + 1 == dim {
        prefix.push(remaining);
        out.push(prefix.clone());
        prefix.pop();
        return;
    }
    for e in (0..=remaining).rev() {
        prefix.push(e);
        push_exponents(dim, remaining - e, prefix, out);
        prefix.pop();
    }
}

/// `C(n, k)`.
pub fn binomial(n: usize, k: usize) -> usize {
    let k = k.min(n - k);
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

impl MonomialBasis {
    pub fn new(dim: usize, degree: usize) -> Self {
        assert!(dim >= 1, "basis dimension must be at least 1");
        let mut exponents = Vec::with_capacity(binomial(degree + dim, dim));
        for total in 0..=degree as u32 {
            push_exponents(dim, total, &mut Vec::with_capacity(dim), &mut exponents);
        }
        Self {
            dim,
            degree,
            exponents,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn len(&self) -> usize {
        self.exponents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.exponents.is_empty()
    }

    pub fn exponents(&self) -> &[Vec<u32>] {
        &self.exponents
    }

    // powers[k * (degree + 1) + e] = q_k^e
    fn powers(&self, q: &[f64]) -> Vec<f64> {
        let stride = self.degree + 1;
        let mut p = vec![1.0; self.dim * stride];
        for (k, &qk) in q.iter().enumerate() {
            for e in 1..stride {
                p[k * stride + e] = p[k * stride + e - 1] * qk;
            }
        }
        p
    }

    /// Values of every monomial at `q`.
    pub fn eval(&self, q: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.len()];
        self.eval_into(q, &mut out);
        out
    }

    pub fn eval_into(&self, q: &[f64], out: &mut [f64]) {
        let stride = self.degree + 1;
        let p = self.powers(q);
        for (o, exps) in out.iter_mut().zip(&self.exponents) {
            *o = exps
                .iter()
                .enumerate()
                .map(|(k, &e)| p[k * stride + e as usize])
                .product();
        }
    }

    /// Row-major `len() x dim` matrix of partial derivatives at `q`.
    pub fn grad(&self, q: &[f64]) -> Vec<f64> {
        let stride = self.degree + 1;
        let p = self.powers(q);
        let mut out = vec![0.0; self.len() * self.dim];
        for (row, exps) in self.exponents.iter().enumerate() {
            for axis in 0..self.dim {
                let e = exps[axis];
                if e == 0 {
                    continue;
                }
                let mut v = e as f64 * p[axis * stride + e as usize - 1];
                for (k, &ek) in exps.iter().enumerate() {
                    if k != axis {
                        v *= p[k * stride + ek as usize];
                    }
                }
                out[row * self.dim + axis] = v;
            }
        }
        out
    }
}
