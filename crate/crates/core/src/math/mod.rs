//! Parameter vectors, diagonal covariances, Gaussian draws and the small
//! dense kernels shared by the optimizers and the verification suites.

mod covariance;
mod rng;
mod sym;

pub use covariance::{resolve_sigma, AsamRule, CovarianceSpec, FisherRule, MU_ADAPTIVE_CLAMP};
pub use rng::{sample_eta, sample_rademacher, stream_rng, GaussianSample, Stream};
pub use sym::SymMatrix;

use std::ops::Deref;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A flat, non-empty vector of finite model parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct ParamVector(Vec<f64>);

impl ParamVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyParams);
        }
        check_finite(&values)?;
        Ok(Self(values))
    }

    pub fn zeros(p: usize) -> Result<Self> {
        Self::new(vec![0.0; p])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    /// Applies `f` to the raw values, rejecting the result if it is no
    /// longer finite. The vector is left unchanged on error.
    pub fn update<F: FnOnce(&mut [f64])>(&mut self, f: F) -> Result<()> {
        let mut next = self.0.clone();
        f(&mut next);
        check_finite(&next)?;
        self.0 = next;
        Ok(())
    }
}

impl Deref for ParamVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl TryFrom<Vec<f64>> for ParamVector {
    type Error = Error;

    fn try_from(values: Vec<f64>) -> Result<Self> {
        Self::new(values)
    }
}

impl From<ParamVector> for Vec<f64> {
    fn from(v: ParamVector) -> Self {
        v.0
    }
}

pub(crate) fn check_finite(values: &[f64]) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(index) => Err(Error::NonFinite { index }),
        None => Ok(()),
    }
}

pub(crate) fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}

/// Elementwise `sqrt(sigma_i) * v_i`, i.e. `Σ^{1/2} v` for a diagonal Σ.
pub fn sigma_half_apply(sigma_diag: &[f64], v: &[f64]) -> Vec<f64> {
    assert_eq!(sigma_diag.len(), v.len(), "sigma/vector length mismatch");
    sigma_diag.iter().zip(v).map(|(s, x)| s.sqrt() * x).collect()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `sqrt(gᵀ Σ g)` for diagonal Σ.
pub fn sigma_norm(g: &[f64], sigma_diag: &[f64]) -> f64 {
    g.iter()
        .zip(sigma_diag)
        .map(|(gi, si)| si * gi * gi)
        .sum::<f64>()
        .sqrt()
}
