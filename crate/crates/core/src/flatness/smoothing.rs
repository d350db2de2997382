use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::{check_len, sample_eta, sample_rademacher, sigma_half_apply, Stream};
use crate::objectives::{Batch, Objective};

/// Monte-Carlo mean with its standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub mean: f64,
    pub se: f64,
    pub n: usize,
}

/// Welford accumulator.
#[derive(Clone, Copy, Debug, Default)]
pub struct RunningMean {
    n: usize,
    mean: f64,
    m2: f64,
}

impl RunningMean {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    pub fn estimate(&self) -> McEstimate {
        let var = if self.n > 1 { self.m2 / (self.n - 1) as f64 } else { 0.0 };
        McEstimate {
            mean: self.mean,
            se: (var / self.n as f64).sqrt(),
            n: self.n,
        }
    }
}

fn check_samples(n: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::InvalidConfig(format!("need at least 2 samples, got {n}")));
    }
    Ok(())
}

/// `E L(μ + Σ^{1/2} η)`, sample `i` drawn from stream `Sample(i)` under
/// `seed`. Reusing the seed across different μ gives common random numbers.
pub fn mc_smoothed_loss<O: Objective + ?Sized>(
    objective: &O,
    mu: &[f64],
    sigma_diag: &[f64],
    n_samples: usize,
    seed: u64,
) -> Result<McEstimate> {
    check_samples(n_samples)?;
    check_len(objective.dim(), mu.len())?;
    check_len(mu.len(), sigma_diag.len())?;
    let p = mu.len();
    let mut acc = RunningMean::default();
    let mut theta = vec![0.0; p];
    for i in 0..n_samples {
        let eta = sample_eta(p, seed, Stream::Sample(i as u64)).eta;
        for j in 0..p {
            theta[j] = mu[j] + sigma_diag[j].sqrt() * eta[j];
        }
        acc.push(objective.value(&theta, Batch::Full));
    }
    Ok(acc.estimate())
}

/// Unbiased estimate of `Tr[ΣH(μ)]` from Rademacher probes `z`:
/// `(Σ^{1/2}z)ᵀ H (Σ^{1/2}z)`.
pub fn hutchinson_trace<O: Objective + ?Sized>(
    objective: &O,
    mu: &[f64],
    sigma_diag: &[f64],
    n_probes: usize,
    seed: u64,
) -> Result<McEstimate> {
    check_samples(n_probes)?;
    check_len(objective.dim(), mu.len())?;
    check_len(mu.len(), sigma_diag.len())?;
    let mut acc = RunningMean::default();
    for i in 0..n_probes {
        let z = sample_rademacher(mu.len(), seed, Stream::Sample(i as u64));
        let v = sigma_half_apply(sigma_diag, &z);
        let hv = objective.hessian_vector_product(mu, &v, Batch::Full);
        acc.push(crate::math::dot(&v, &hv));
    }
    Ok(acc.estimate())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objectives::quadratic_objective;

    #[test]
    fn quadratic_expectation() {
        let q = quadratic_objective(vec![1.0, 2.0], vec![0.0, 0.0]).unwrap();
        let est = mc_smoothed_loss(&q, &[1.0, 0.0], &[0.01, 0.01], 100_000, 4).unwrap();
        assert!((est.mean - 0.515).abs() < 3.0 * est.se, "{est:?}");
    }

    #[test]
    fn zero_variance_is_exact_and_seeded_runs_repeat() {
        let q = quadratic_objective(vec![1.0, 2.0], vec![0.3, 0.0]).unwrap();
        let mu = [0.7, -0.2];
        let est = mc_smoothed_loss(&q, &mu, &[0.0, 0.0], 10, 1).unwrap();
        assert_eq!(est.mean, q.value(&mu, Batch::Full));
        assert_eq!(est.se, 0.0);
        let a = mc_smoothed_loss(&q, &mu, &[0.1, 0.2], 500, 9).unwrap();
        let b = mc_smoothed_loss(&q, &mu, &[0.1, 0.2], 500, 9).unwrap();
        assert_eq!(a.mean.to_bits(), b.mean.to_bits());
        assert!(mc_smoothed_loss(&q, &mu, &[0.1, 0.2], 1, 9).is_err());
    }

    #[test]
    fn running_mean_matches_two_pass() {
        let xs = [1.0, 4.0, -2.0, 8.5, 3.25];
        let mut acc = RunningMean::default();
        xs.iter().for_each(|x| acc.push(*x));
        let m = xs.iter().sum::<f64>() / 5.0;
        let var = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / 4.0;
        let est = acc.estimate();
        assert!((est.mean - m).abs() < 1e-14);
        assert!((est.se - (var / 5.0).sqrt()).abs() < 1e-14);
    }
}
