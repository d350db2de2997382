use super::{Batch, Objective, HESSIAN_LIMIT};
use crate::error::{Error, Result};
use crate::math::{check_finite, check_len, dot, SymMatrix};

/// `L(θ) = ½ θᵀ diag(a) θ − bᵀθ`.
#[derive(Clone, Debug, PartialEq)]
pub struct DiagonalQuadratic {
    a: Vec<f64>,
    b: Vec<f64>,
}

/// Convex diagonal quadratic; every curvature entry must be positive.
pub fn quadratic_objective(a_diag: Vec<f64>, b: Vec<f64>) -> Result<DiagonalQuadratic> {
    if let Some((index, &value)) = a_diag.iter().enumerate().find(|(_, v)| !(**v > 0.0)) {
        return Err(Error::NonPositiveVariance { index, value });
    }
    DiagonalQuadratic::indefinite(a_diag, b)
}

impl DiagonalQuadratic {
    /// Any finite curvature, including negative entries (saddles).
    pub fn indefinite(a_diag: Vec<f64>, b: Vec<f64>) -> Result<Self> {
        if a_diag.is_empty() {
            return Err(Error::EmptyParams);
        }
        check_len(a_diag.len(), b.len())?;
        check_finite(&a_diag)?;
        check_finite(&b)?;
        Ok(Self { a: a_diag, b })
    }

    pub fn curvature(&self) -> &[f64] {
        &self.a
    }
}

impl Objective for DiagonalQuadratic {
    fn dim(&self) -> usize {
        self.a.len()
    }

    fn value(&self, theta: &[f64], _: Batch<'_>) -> f64 {
        theta
            .iter()
            .zip(&self.a)
            .zip(&self.b)
            .map(|((t, a), b)| 0.5 * a * t * t - b * t)
            .sum()
    }

    fn gradient(&self, theta: &[f64], _: Batch<'_>) -> Vec<f64> {
        theta
            .iter()
            .zip(&self.a)
            .zip(&self.b)
            .map(|((t, a), b)| a * t - b)
            .collect()
    }

    fn hessian(&self, _: &[f64], _: Batch<'_>) -> Option<SymMatrix> {
        (self.dim() <= HESSIAN_LIMIT).then(|| SymMatrix::from_diag(&self.a))
    }

    fn hessian_vector_product(&self, _: &[f64], v: &[f64], _: Batch<'_>) -> Vec<f64> {
        self.a.iter().zip(v).map(|(a, x)| a * x).collect()
    }
}

/// `L(θ) = ½ θᵀ H θ − bᵀθ` with a dense symmetric H.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseQuadratic {
    h: SymMatrix,
    b: Vec<f64>,
}

impl DenseQuadratic {
    pub fn new(h: SymMatrix, b: Vec<f64>) -> Result<Self> {
        if h.dim() == 0 {
            return Err(Error::EmptyParams);
        }
        check_len(h.dim(), b.len())?;
        Ok(Self { h, b })
    }

    pub fn matrix(&self) -> &SymMatrix {
        &self.h
    }
}

impl Objective for DenseQuadratic {
    fn dim(&self) -> usize {
        self.h.dim()
    }

    fn value(&self, theta: &[f64], _: Batch<'_>) -> f64 {
        0.5 * dot(theta, &self.h.mul_vec(theta)) - dot(&self.b, theta)
    }

    fn gradient(&self, theta: &[f64], _: Batch<'_>) -> Vec<f64> {
        let mut g = self.h.mul_vec(theta);
        for (gi, bi) in g.iter_mut().zip(&self.b) {
            *gi -= bi;
        }
        g
    }

    fn hessian(&self, _: &[f64], _: Batch<'_>) -> Option<SymMatrix> {
        (self.dim() <= HESSIAN_LIMIT).then(|| self.h.clone())
    }

    fn hessian_vector_product(&self, _: &[f64], v: &[f64], _: Batch<'_>) -> Vec<f64> {
        self.h.mul_vec(v)
    }
}

/// `L(θ) = cᵀθ`.
#[derive(Clone, Debug, PartialEq)]
pub struct Linear {
    c: Vec<f64>,
}

impl Linear {
    pub fn new(c: Vec<f64>) -> Result<Self> {
        if c.is_empty() {
            return Err(Error::EmptyParams);
        }
        check_finite(&c)?;
        Ok(Self { c })
    }
}

impl Objective for Linear {
    fn dim(&self) -> usize {
        self.c.len()
    }

    fn value(&self, theta: &[f64], _: Batch<'_>) -> f64 {
        dot(&self.c, theta)
    }

    fn gradient(&self, _: &[f64], _: Batch<'_>) -> Vec<f64> {
        self.c.clone()
    }

    fn hessian(&self, _: &[f64], _: Batch<'_>) -> Option<SymMatrix> {
        (self.dim() <= HESSIAN_LIMIT).then(|| SymMatrix::zeros(self.dim()))
    }
}

/// Separable quartic `Σ ¼ q_i θ_i⁴ + ½ a_i θ_i² − b_i θ_i`. A smooth
/// non-quadratic test surface whose Hessian varies with θ.
#[derive(Clone, Debug, PartialEq)]
pub struct Quartic {
    quartic: Vec<f64>,
    quadratic: Vec<f64>,
    linear: Vec<f64>,
}

impl Quartic {
    pub fn new(quartic: Vec<f64>, quadratic: Vec<f64>, linear: Vec<f64>) -> Result<Self> {
        if quartic.is_empty() {
            return Err(Error::EmptyParams);
        }
        check_len(quartic.len(), quadratic.len())?;
        check_len(quartic.len(), linear.len())?;
        Ok(Self {
            quartic,
            quadratic,
            linear,
        })
    }

    fn terms(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        self.quartic
            .iter()
            .zip(&self.quadratic)
            .zip(&self.linear)
            .map(|((q, a), b)| (*q, *a, *b))
    }
}

impl Objective for Quartic {
    fn dim(&self) -> usize {
        self.quartic.len()
    }

    fn value(&self, theta: &[f64], _: Batch<'_>) -> f64 {
        theta
            .iter()
            .zip(self.terms())
            .map(|(t, (q, a, b))| 0.25 * q * t.powi(4) + 0.5 * a * t * t - b * t)
            .sum()
    }

    fn gradient(&self, theta: &[f64], _: Batch<'_>) -> Vec<f64> {
        theta
            .iter()
            .zip(self.terms())
            .map(|(t, (q, a, b))| q * t.powi(3) + a * t - b)
            .collect()
    }

    fn hessian(&self, theta: &[f64], _: Batch<'_>) -> Option<SymMatrix> {
        if self.dim() > HESSIAN_LIMIT {
            return None;
        }
        let diag: Vec<f64> = theta
            .iter()
            .zip(self.terms())
            .map(|(t, (q, a, _))| 3.0 * q * t * t + a)
            .collect();
        Some(SymMatrix::from_diag(&diag))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_examples() {
        let q = quadratic_objective(vec![1.0, 2.0, 3.0], vec![0.0; 3]).unwrap();
        assert_eq!(q.value(&[0.0; 3], Batch::Full), 0.0);
        assert_eq!(q.gradient(&[0.0; 3], Batch::Full), vec![0.0; 3]);
        assert_eq!(q.hessian(&[5.0, -1.0, 2.0], Batch::Full).unwrap().trace(), 6.0);

        let q = quadratic_objective(vec![1.0, 2.0], vec![0.0; 2]).unwrap();
        assert_eq!(q.value(&[1.0, 1.0], Batch::Full), 1.5);
        assert_eq!(q.gradient(&[1.0, 1.0], Batch::Full), vec![1.0, 2.0]);
    }

    #[test]
    fn quadratic_rejects_non_positive_curvature() {
        assert!(quadratic_objective(vec![1.0, 0.0], vec![0.0; 2]).is_err());
        assert!(DiagonalQuadratic::indefinite(vec![1.0, -2.0], vec![0.0; 2]).is_ok());
        assert!(quadratic_objective(vec![1.0], vec![0.0; 2]).is_err());
    }

    #[test]
    fn linear_has_zero_hessian() {
        let l = Linear::new(vec![3.0, -4.0]).unwrap();
        assert_eq!(l.value(&[1.0, 1.0], Batch::Full), -1.0);
        assert_eq!(l.hessian(&[0.0, 0.0], Batch::Full).unwrap().trace(), 0.0);
        assert_eq!(l.hessian_vector_product(&[1.0, 2.0], &[1.0, 1.0], Batch::Full), vec![0.0, 0.0]);
    }
}
