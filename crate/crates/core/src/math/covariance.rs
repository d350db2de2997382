use serde::{Deserialize, Serialize};

use super::{check_len, ParamVector};
use crate::error::{Error, Result};

/// Clamp range applied to `|1/mu_i|` (or `mu_i^2`) for the mu-adaptive rule.
pub const MU_ADAPTIVE_CLAMP: (f64, f64) = (1e-8, 1e8);

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AsamRule {
    /// `diag(|1/mu_i|)`
    #[default]
    #[serde(rename = "table1")]
    InverseMagnitude,
    /// `diag(mu_i^2)`, scaling the ball with weight magnitude.
    WeightSquared,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FisherRule {
    /// `diag(F) + damping`
    #[default]
    Direct,
    /// `1 / (diag(F) + damping)`
    Inverse,
}

/// Structured diagonal covariance Σ.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CovarianceSpec {
    /// `Σ = (rho^2 / p) I`. `rho = 0` is the zero-radius case and resolves
    /// to an all-zero diagonal.
    Isotropic { rho: f64 },
    /// Explicit diagonal variances.
    Diagonal(Vec<f64>),
    /// `Σ = scale * diag(|1/mu_i|)` (or `scale * diag(mu_i^2)`), clamped.
    MuAdaptive { rule: AsamRule, scale: f64 },
    /// `Σ = scale * (diag(F(mu)) + damping)` with F the empirical Fisher.
    FisherAdaptive {
        damping: f64,
        rule: FisherRule,
        scale: f64,
    },
}

impl CovarianceSpec {
    pub fn isotropic(rho: f64) -> Self {
        Self::Isotropic { rho }
    }

    pub fn mu_adaptive() -> Self {
        Self::MuAdaptive {
            rule: AsamRule::InverseMagnitude,
            scale: 1.0,
        }
    }

    pub fn fisher(damping: f64) -> Self {
        Self::FisherAdaptive {
            damping,
            rule: FisherRule::Direct,
            scale: 1.0,
        }
    }

    pub fn needs_per_example_grads(&self) -> bool {
        matches!(self, Self::FisherAdaptive { .. })
    }
}

/// Binds a covariance spec to a parameter vector (and, for the Fisher rule,
/// per-example gradients at that vector) and returns the Σ diagonal.
pub fn resolve_sigma(
    spec: &CovarianceSpec,
    mu: &ParamVector,
    per_example_grads: Option<&[Vec<f64>]>,
) -> Result<Vec<f64>> {
    let p = mu.len();
    let diag = match spec {
        CovarianceSpec::Isotropic { rho } => {
            if !(rho.is_finite() && *rho >= 0.0) {
                return Err(Error::NonPositiveVariance {
                    index: 0,
                    value: rho * rho / p as f64,
                });
            }
            // zero radius is allowed and skips the positivity check below
            return Ok(vec![rho * rho / p as f64; p]);
        }
        CovarianceSpec::Diagonal(values) => {
            check_len(p, values.len())?;
            values.clone()
        }
        CovarianceSpec::MuAdaptive { rule, scale } => {
            let (lo, hi) = MU_ADAPTIVE_CLAMP;
            mu.iter()
                .map(|m| {
                    let raw = match rule {
                        AsamRule::InverseMagnitude => (1.0 / m).abs(),
                        AsamRule::WeightSquared => m * m,
                    };
                    // 1/0 = inf clamps to the ceiling
                    scale * raw.clamp(lo, hi)
                })
                .collect()
        }
        CovarianceSpec::FisherAdaptive {
            damping,
            rule,
            scale,
        } => {
            let grads = match per_example_grads {
                Some(g) if !g.is_empty() => g,
                _ => return Err(Error::MissingFisherData),
            };
            let mut fisher = vec![0.0; p];
            for g in grads {
                check_len(p, g.len())?;
                for (f, gi) in fisher.iter_mut().zip(g) {
                    *f += gi * gi;
                }
            }
            let n = grads.len() as f64;
            fisher
                .into_iter()
                .map(|f| {
                    let d = f / n + damping;
                    match rule {
                        FisherRule::Direct => scale * d,
                        FisherRule::Inverse => scale / d,
                    }
                })
                .collect()
        }
    };
    if let Some((index, &value)) = diag
        .iter()
        .enumerate()
        .find(|(_, v)| !(v.is_finite() && **v > 0.0))
    {
        return Err(Error::NonPositiveVariance { index, value });
    }
    Ok(diag)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pv(v: &[f64]) -> ParamVector {
        ParamVector::new(v.to_vec()).unwrap()
    }

    #[test]
    fn isotropic_is_rho_squared_over_p() {
        let s = resolve_sigma(&CovarianceSpec::isotropic(0.05), &pv(&[0.0; 4]), None).unwrap();
        for v in s {
            assert!((v - 0.000625).abs() < 1e-18);
        }
    }

    #[test]
    fn mu_adaptive_table1_row() {
        let s = resolve_sigma(&CovarianceSpec::mu_adaptive(), &pv(&[2.0, -0.5]), None).unwrap();
        assert_eq!(s, vec![0.5, 2.0]);
    }

    #[test]
    fn mu_adaptive_clamps_zero_weights() {
        let s = resolve_sigma(&CovarianceSpec::mu_adaptive(), &pv(&[0.0, 1e12]), None).unwrap();
        assert_eq!(s, vec![1e8, 1e-8]);
        let sq = CovarianceSpec::MuAdaptive {
            rule: AsamRule::WeightSquared,
            scale: 1.0,
        };
        assert_eq!(resolve_sigma(&sq, &pv(&[3.0, 0.0]), None).unwrap(), vec![9.0, 1e-8]);
    }

    #[test]
    fn fisher_is_mean_squared_gradient() {
        let grads = vec![vec![1.0, 0.0], vec![0.0, 2.0]];
        let s = resolve_sigma(&CovarianceSpec::fisher(0.0), &pv(&[0.0, 0.0]), Some(&grads)).unwrap();
        assert_eq!(s, vec![0.5, 2.0]);
        let inv = CovarianceSpec::FisherAdaptive {
            damping: 0.0,
            rule: FisherRule::Inverse,
            scale: 1.0,
        };
        assert_eq!(resolve_sigma(&inv, &pv(&[0.0, 0.0]), Some(&grads)).unwrap(), vec![2.0, 0.5]);
    }

    #[test]
    fn fisher_errors() {
        let spec = CovarianceSpec::fisher(0.0);
        assert_eq!(resolve_sigma(&spec, &pv(&[1.0]), None), Err(Error::MissingFisherData));
        assert_eq!(resolve_sigma(&spec, &pv(&[1.0]), Some(&[])), Err(Error::MissingFisherData));
        // a coordinate with zero gradient everywhere and no damping
        let grads = vec![vec![1.0, 0.0]];
        assert!(matches!(
            resolve_sigma(&spec, &pv(&[0.0, 0.0]), Some(&grads)),
            Err(Error::NonPositiveVariance { index: 1, .. })
        ));
    }

    #[test]
    fn diagonal_must_be_positive() {
        let spec = CovarianceSpec::Diagonal(vec![1.0, -1.0]);
        assert!(matches!(
            resolve_sigma(&spec, &pv(&[0.0, 0.0]), None),
            Err(Error::NonPositiveVariance { index: 1, .. })
        ));
        let spec = CovarianceSpec::Diagonal(vec![1.0]);
        assert!(matches!(
            resolve_sigma(&spec, &pv(&[0.0, 0.0]), None),
            Err(Error::DimensionMismatch { .. })
        ));
    }
}
