use serde::{Deserialize, Serialize};

use super::{mc_smoothed_loss, worst_case_ball_max, BallResolution, McEstimate};
use crate::error::{Error, Result};
use crate::math::{check_len, sigma_norm};
use crate::objectives::{Batch, Objective};

/// Least-squares slope of `ln y` against `ln x`. NaN when any value is not
/// strictly positive or fewer than two points are given.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> f64 {
    if xs.len() != ys.len() || xs.len() < 2 || xs.iter().chain(ys).any(|v| !(*v > 0.0)) {
        return f64::NAN;
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Prop1Report {
    pub rhos: Vec<f64>,
    /// `|ball max − (L + √p‖g‖_Σ)|` per radius.
    pub errors: Vec<f64>,
    pub slope: f64,
}

/// Residual of the first-order SAM approximation at each radius, with
/// `Σ(ρ) = (ρ²/p)·shape`.
pub fn prop1_check<O: Objective + ?Sized>(
    objective: &O,
    mu: &[f64],
    shape: &[f64],
    rhos: &[f64],
    resolution: BallResolution,
) -> Result<Prop1Report> {
    check_len(mu.len(), shape.len())?;
    if rhos.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::InvalidConfig("rho sequence must be strictly decreasing".into()));
    }
    let p = mu.len() as f64;
    let (loss, g) = objective.value_and_gradient(mu, Batch::Full);
    let mut errors = Vec::with_capacity(rhos.len());
    for &rho in rhos {
        let sigma: Vec<f64> = shape.iter().map(|s| rho * rho / p * s).collect();
        let ball = worst_case_ball_max(objective, mu, &sigma, resolution)?;
        let taylor = loss + p.sqrt() * sigma_norm(&g, &sigma);
        errors.push((ball - taylor).abs());
    }
    Ok(Prop1Report {
        rhos: rhos.to_vec(),
        slope: loglog_slope(rhos, &errors),
        errors,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Prop3Report {
    pub mc: McEstimate,
    /// `L(μ) + ½Tr[ΣH(μ)]`
    pub trace_formula: f64,
    pub z: f64,
}

/// Compares the Gaussian-smoothed loss with its second-order expansion.
pub fn prop3_check<O: Objective + ?Sized>(
    objective: &O,
    mu: &[f64],
    sigma_diag: &[f64],
    n_samples: usize,
    seed: u64,
) -> Result<Prop3Report> {
    check_len(objective.dim(), mu.len())?;
    let h = objective
        .hessian(mu, Batch::Full)
        .ok_or(Error::HessianUnavailable { p: mu.len() })?;
    let mc = mc_smoothed_loss(objective, mu, sigma_diag, n_samples, seed)?;
    let trace_formula = objective.value(mu, Batch::Full) + 0.5 * h.trace_weighted(sigma_diag);
    Ok(Prop3Report {
        z: z_score(mc.mean - trace_formula, mc.se),
        mc,
        trace_formula,
    })
}

fn z_score(diff: f64, se: f64) -> f64 {
    if se > 0.0 {
        diff / se
    } else if diff == 0.0 {
        0.0
    } else {
        diff.signum() * f64::INFINITY
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UpperBoundReport {
    pub mc: McEstimate,
    pub ball_max: f64,
    /// `mc.mean ≤ ball_max + 3·se`
    pub holds: bool,
    /// `ball_max + 3·se − mc.mean`; negative when the relation fails.
    pub margin: f64,
}

/// Gaussian expectation of the loss against the worst case over the
/// ellipsoid the Gaussian concentrates on.
pub fn upper_bound_check<O: Objective + ?Sized>(
    objective: &O,
    mu: &[f64],
    sigma_diag: &[f64],
    n_samples: usize,
    seed: u64,
    resolution: BallResolution,
) -> Result<UpperBoundReport> {
    let ball_max = worst_case_ball_max(objective, mu, sigma_diag, resolution)?;
    let mc = mc_smoothed_loss(objective, mu, sigma_diag, n_samples, seed)?;
    let margin = ball_max + 3.0 * mc.se - mc.mean;
    Ok(UpperBoundReport {
        mc,
        ball_max,
        holds: margin >= 0.0,
        margin,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objectives::{quadratic_objective, Linear};

    #[test]
    fn slope_of_power_law() {
        let xs = [1.0, 0.5, 0.25, 0.125];
        let ys: Vec<f64> = xs.iter().map(|x: &f64| 3.0 * x.powi(2)).collect();
        assert!((loglog_slope(&xs, &ys) - 2.0).abs() < 1e-12);
        assert!(loglog_slope(&xs, &[1.0, 0.0, 1.0, 1.0]).is_nan());
    }

    #[test]
    fn quadratic_prop1_order() {
        let q = quadratic_objective(vec![1.0, 4.0], vec![0.0, 0.0]).unwrap();
        let rhos = [0.1, 0.05, 0.025, 0.0125, 0.00625];
        let r = prop1_check(&q, &[1.0, 0.5], &[1.0, 1.0], &rhos, BallResolution::coarse()).unwrap();
        assert!((1.8..=2.2).contains(&r.slope), "{r:?}");
    }

    #[test]
    fn linear_prop1_exact() {
        let lin = Linear::new(vec![1.0, 2.0]).unwrap();
        let r = prop1_check(&lin, &[0.0, 0.0], &[1.0, 1.0], &[0.4, 0.2, 0.1], BallResolution::coarse()).unwrap();
        assert!(r.errors.iter().all(|e| *e < 1e-10), "{r:?}");
        assert!(prop1_check(&lin, &[0.0, 0.0], &[1.0, 1.0], &[0.1, 0.2], BallResolution::coarse()).is_err());
    }

    #[test]
    fn prop3_trace_term() {
        let q = quadratic_objective(vec![1.0, 2.0, 3.0], vec![0.0; 3]).unwrap();
        let sigma = vec![0.09 / 3.0; 3];
        let r = prop3_check(&q, &[0.0; 3], &sigma, 20_000, 5).unwrap();
        assert!((r.trace_formula - 0.09).abs() < 1e-15);
        assert!(r.z.abs() < 3.0, "{r:?}");
    }

    #[test]
    fn prop3_needs_hessian() {
        struct Plain;
        impl Objective for Plain {
            fn dim(&self) -> usize {
                1
            }
            fn value(&self, t: &[f64], _: Batch<'_>) -> f64 {
                t[0].cos()
            }
            fn gradient(&self, t: &[f64], _: Batch<'_>) -> Vec<f64> {
                vec![-t[0].sin()]
            }
        }
        assert!(matches!(
            prop3_check(&Plain, &[0.0], &[0.1], 10, 0),
            Err(Error::HessianUnavailable { p: 1 })
        ));
    }

    #[test]
    fn linear_upper_bound_gap() {
        let lin = Linear::new(vec![3.0, 4.0]).unwrap();
        let rho: f64 = 0.3;
        let sigma = vec![rho * rho / 2.0; 2];
        let r = upper_bound_check(&lin, &[1.0, 1.0], &sigma, 1000, 2, BallResolution::coarse()).unwrap();
        assert!(r.holds);
        assert!((r.ball_max - 7.0 - rho * 5.0).abs() < 1e-10);
        assert!((r.mc.mean - 7.0).abs() < 3.0 * r.mc.se);
    }
}
