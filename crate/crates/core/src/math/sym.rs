use crate::error::{Error, Result};

/// Dense symmetric matrix stored row-major. Used for exact Hessians of
/// small models.
#[derive(Clone, Debug, PartialEq)]
pub struct SymMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SymMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, d) in diag.iter().enumerate() {
            m.set(i, i, *d);
        }
        m
    }

    /// Builds from row-major data, averaging with the transpose.
    pub fn from_rows(n: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n * n {
            return Err(Error::DimensionMismatch {
                expected: n * n,
                got: data.len(),
            });
        }
        let mut m = Self { n, data };
        m.symmetrize();
        Ok(m)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    /// Sets both `(i, j)` and `(j, i)`.
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
        self.data[j * self.n + i] = v;
    }

    pub fn symmetrize(&mut self) {
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                let v = 0.5 * (self.get(i, j) + self.data[j * self.n + i]);
                self.set(i, j, v);
            }
        }
    }

    pub fn max_asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.n {
            for j in 0..self.n {
                worst = worst.max((self.data[i * self.n + j] - self.data[j * self.n + i]).abs());
            }
        }
        worst
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.n);
        (0..self.n).map(|i| super::dot(self.row(i), v)).collect()
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }

    /// `Tr[Σ H]` for diagonal Σ.
    pub fn trace_weighted(&self, sigma_diag: &[f64]) -> f64 {
        assert_eq!(sigma_diag.len(), self.n);
        sigma_diag.iter().enumerate().map(|(i, s)| s * self.get(i, i)).sum()
    }

    /// `Tr[Σ H²]` for diagonal Σ; non-negative whenever Σ is.
    pub fn trace_sq_weighted(&self, sigma_diag: &[f64]) -> f64 {
        assert_eq!(sigma_diag.len(), self.n);
        sigma_diag
            .iter()
            .enumerate()
            .map(|(i, s)| s * self.row(i).iter().map(|h| h * h).sum::<f64>())
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weighted_traces() {
        let h = SymMatrix::from_rows(2, vec![1.0, 2.0, 2.0, -3.0]).unwrap();
        assert_eq!(h.trace(), -2.0);
        assert_eq!(h.trace_weighted(&[0.5, 2.0]), 0.5 - 6.0);
        // H² diag = (1+4, 4+9)
        assert_eq!(h.trace_sq_weighted(&[0.5, 2.0]), 0.5 * 5.0 + 2.0 * 13.0);
        assert_eq!(h.mul_vec(&[1.0, 1.0]), vec![3.0, -1.0]);
    }

    #[test]
    fn from_rows_symmetrizes() {
        let h = SymMatrix::from_rows(2, vec![1.0, 2.0, 4.0, 1.0]).unwrap();
        assert_eq!(h.get(0, 1), 3.0);
        assert_eq!(h.max_asymmetry(), 0.0);
        assert!(SymMatrix::from_rows(2, vec![1.0]).is_err());
    }
}
