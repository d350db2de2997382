use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{loglog_slope, weighted_traces};
use crate::error::{Error, Result};
use crate::math::{check_len, norm2, sigma_norm, stream_rng, Stream};
use crate::objectives::{Batch, Objective};
use crate::optim::{sam_perturbation, DEGENERATE_THRESHOLD};

pub const MAX_TRAJECTORY_DIM: usize = 10;
/// Integrator tolerance, relative and absolute.
pub const FLOW_TOLERANCE: f64 = 1e-10;
/// Antithetic pairs averaged per expected-MFVI step.
pub const MFVI_PAIRS: usize = 500;
const MFVI_SEED: u64 = 0;

/// Integrates `y' = f(t, y)` from `t_eval[0]` with the adaptive
/// Dormand–Prince 5(4) pair, landing exactly on every requested time.
pub fn dopri5<F>(mut f: F, y0: &[f64], t_eval: &[f64], tol: f64) -> Result<Vec<Vec<f64>>>
where
    F: FnMut(f64, &[f64]) -> Vec<f64>,
{
    const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
    const A: [[f64; 6]; 7] = [
        [0.0; 6],
        [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
        [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
        [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
        [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
        [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
    ];
    const B: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
    const B4: [f64; 7] = [
        5179.0 / 57600.0,
        0.0,
        7571.0 / 16695.0,
        393.0 / 640.0,
        -92097.0 / 339200.0,
        187.0 / 2100.0,
        1.0 / 40.0,
    ];

    let n = y0.len();
    let mut out = Vec::with_capacity(t_eval.len());
    let Some(&t0) = t_eval.first() else {
        return Ok(out);
    };
    let mut t = t0;
    let mut y = y0.to_vec();
    out.push(y.clone());
    let mut h = t_eval.get(1).map_or(1e-3, |t1| (t1 - t0) * 0.1).max(1e-8);
    let mut k: Vec<Vec<f64>> = vec![Vec::new(); 7];
    let mut stage = vec![0.0; n];
    for &target in &t_eval[1..] {
        while t < target {
            let last = t + h >= target;
            let step = if last { target - t } else { h };
            if step <= 1e-14 * (1.0 + t.abs()) {
                return Err(Error::IntegratorFailure { t });
            }
            k[0] = f(t, &y);
            for s in 1..7 {
                for i in 0..n {
                    stage[i] = y[i] + step * (0..s).map(|j| A[s][j] * k[j][i]).sum::<f64>();
                }
                k[s] = f(t + C[s] * step, &stage);
            }
            // stage now holds the fifth-order solution (row 7 equals B)
            let mut err = 0.0;
            for i in 0..n {
                let e = step * (0..7).map(|j| (B[j] - B4[j]) * k[j][i]).sum::<f64>();
                let scale = tol + tol * y[i].abs().max(stage[i].abs());
                err += (e / scale).powi(2);
            }
            let err = (err / n as f64).sqrt();
            if !err.is_finite() {
                return Err(Error::IntegratorFailure { t });
            }
            if err <= 1.0 {
                t = if last { target } else { t + step };
                y.copy_from_slice(&stage);
            }
            let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            if !(last && err <= 1.0) {
                h = step * factor;
            }
        }
        out.push(y.clone());
    }
    Ok(out)
}

/// Which discrete update is compared with its modified flow.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrajectoryKind {
    /// `μ ← μ − δ ∇L(μ + ε*(μ))`
    Sam,
    /// `μ ← μ − δ E_η ∇L(μ + Σ^{1/2}η)`, the expectation taken over
    /// antithetic pairs.
    MfviExpected,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryReport {
    pub delta: f64,
    pub steps: usize,
    /// Max over step times of `‖μ_k − y(kδ)‖₂` for gradient flow on `L`.
    pub deviation_original: f64,
    /// Same against the flow on the tabulated effective loss.
    pub deviation_modified: f64,
    /// SAM only: the flow on `E + (δ/4)‖∇E‖²` with `E = L + √p‖g‖_Σ`.
    pub deviation_intermediate: Option<f64>,
}

fn discrete_path<O: Objective + ?Sized>(
    kind: TrajectoryKind,
    objective: &O,
    mu0: &[f64],
    sigma: &[f64],
    delta: f64,
    steps: usize,
) -> Vec<Vec<f64>> {
    let p = mu0.len();
    let half: Vec<f64> = sigma.iter().map(|s| s.sqrt()).collect();
    let mut mu = mu0.to_vec();
    let mut path = Vec::with_capacity(steps + 1);
    path.push(mu.clone());
    let mut plus = vec![0.0; p];
    let mut minus = vec![0.0; p];
    for k in 0..steps {
        let dir = match kind {
            TrajectoryKind::Sam => {
                let g = objective.gradient(&mu, Batch::Full);
                let (eps, _) = sam_perturbation(&g, sigma);
                let shifted: Vec<f64> = mu.iter().zip(&eps).map(|(m, e)| m + e).collect();
                objective.gradient(&shifted, Batch::Full)
            }
            TrajectoryKind::MfviExpected => {
                let mut rng = stream_rng(MFVI_SEED, Stream::Step(k as u64));
                let mut acc = vec![0.0; p];
                for _ in 0..MFVI_PAIRS {
                    for i in 0..p {
                        let e: f64 = StandardNormal.sample(&mut rng);
                        plus[i] = mu[i] + half[i] * e;
                        minus[i] = mu[i] - half[i] * e;
                    }
                    let gp = objective.gradient(&plus, Batch::Full);
                    let gm = objective.gradient(&minus, Batch::Full);
                    for i in 0..p {
                        acc[i] += gp[i] + gm[i];
                    }
                }
                acc.iter().map(|a| a / (2 * MFVI_PAIRS) as f64).collect()
            }
        };
        for (m, d) in mu.iter_mut().zip(&dir) {
            *m -= delta * d;
        }
        path.push(mu.clone());
    }
    path
}

/// `∇(L + √p‖g‖_Σ) = g + √p HΣg / ‖g‖_Σ`.
fn sam_loss_gradient<O: Objective + ?Sized>(objective: &O, mu: &[f64], sigma: &[f64]) -> Vec<f64> {
    let g = objective.gradient(mu, Batch::Full);
    let norm = sigma_norm(&g, sigma);
    if !(norm >= DEGENERATE_THRESHOLD) {
        return g;
    }
    let sg: Vec<f64> = g.iter().zip(sigma).map(|(g, s)| g * s).collect();
    let hsg = objective.hessian_vector_product(mu, &sg, Batch::Full);
    let c = (mu.len() as f64).sqrt() / norm;
    g.iter().zip(&hsg).map(|(g, h)| g + c * h).collect()
}

fn modified_gradient<O: Objective + ?Sized>(
    kind: TrajectoryKind,
    objective: &O,
    mu: &[f64],
    sigma: &[f64],
    delta: f64,
) -> Vec<f64> {
    let g = objective.gradient(mu, Batch::Full);
    let hg = objective.hessian_vector_product(mu, &g, Batch::Full);
    match kind {
        TrajectoryKind::Sam => {
            let e = sam_loss_gradient(objective, mu, sigma);
            e.iter().zip(&hg).map(|(e, h)| e + 0.5 * delta * h).collect()
        }
        TrajectoryKind::MfviExpected => {
            let mut out: Vec<f64> = g.iter().zip(&hg).map(|(g, h)| g + 0.5 * delta * h).collect();
            let mut x = mu.to_vec();
            for j in 0..mu.len() {
                let h = 1e-5 * (1.0 + mu[j].abs());
                x[j] = mu[j] + h;
                let up = weighted_traces(objective, &x, sigma).map_or(0.0, |t| t.1);
                x[j] = mu[j] - h;
                let down = weighted_traces(objective, &x, sigma).map_or(0.0, |t| t.1);
                x[j] = mu[j];
                out[j] += 0.25 * delta * (up - down) / (2.0 * h);
            }
            out
        }
    }
}

/// `∇E + (δ/2) ∇²E ∇E`, the Hessian-vector product by central difference
/// of `∇E`.
fn intermediate_gradient<O: Objective + ?Sized>(objective: &O, mu: &[f64], sigma: &[f64], delta: f64) -> Vec<f64> {
    let v = sam_loss_gradient(objective, mu, sigma);
    let vn = norm2(&v);
    if vn == 0.0 {
        return v;
    }
    let h = 1e-5 * (1.0 + norm2(mu)) / vn;
    let up: Vec<f64> = mu.iter().zip(&v).map(|(m, d)| m + h * d).collect();
    let down: Vec<f64> = mu.iter().zip(&v).map(|(m, d)| m - h * d).collect();
    let gu = sam_loss_gradient(objective, &up, sigma);
    let gd = sam_loss_gradient(objective, &down, sigma);
    v.iter()
        .zip(gu.iter().zip(&gd))
        .map(|(v, (a, b))| v + 0.5 * delta * (a - b) / (2.0 * h))
        .collect()
}

fn max_deviation(path: &[Vec<f64>], flow: &[Vec<f64>]) -> f64 {
    path.iter()
        .zip(flow)
        .map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt())
        .fold(0.0, f64::max)
}

fn run<O: Objective + ?Sized>(
    kind: TrajectoryKind,
    objective: &O,
    mu0: &[f64],
    sigma: &[f64],
    delta: f64,
    steps: usize,
) -> Result<TrajectoryReport> {
    let p = mu0.len();
    if p > MAX_TRAJECTORY_DIM {
        return Err(Error::DimensionTooLarge {
            p,
            max: MAX_TRAJECTORY_DIM,
        });
    }
    check_len(objective.dim(), p)?;
    check_len(p, sigma.len())?;
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::InvalidConfig(format!("step size must be positive, got {delta}")));
    }
    let times: Vec<f64> = (0..=steps).map(|k| k as f64 * delta).collect();
    let path = discrete_path(kind, objective, mu0, sigma, delta, steps);
    let neg = |v: Vec<f64>| v.into_iter().map(|x| -x).collect::<Vec<_>>();
    let original = dopri5(|_, y| neg(objective.gradient(y, Batch::Full)), mu0, &times, FLOW_TOLERANCE)?;
    let modified = dopri5(
        |_, y| neg(modified_gradient(kind, objective, y, sigma, delta)),
        mu0,
        &times,
        FLOW_TOLERANCE,
    )?;
    let deviation_intermediate = match kind {
        TrajectoryKind::Sam => {
            let flow = dopri5(
                |_, y| neg(intermediate_gradient(objective, y, sigma, delta)),
                mu0,
                &times,
                FLOW_TOLERANCE,
            )?;
            Some(max_deviation(&path, &flow))
        }
        TrajectoryKind::MfviExpected => None,
    };
    Ok(TrajectoryReport {
        delta,
        steps,
        deviation_original: max_deviation(&path, &original),
        deviation_modified: max_deviation(&path, &modified),
        deviation_intermediate,
    })
}

/// Runs `horizon` discrete steps of size `delta` and measures the distance
/// to both continuous paths at the step times.
pub fn backward_error_trajectory_check<O: Objective + ?Sized>(
    kind: TrajectoryKind,
    objective: &O,
    mu0: &[f64],
    sigma_diag: &[f64],
    delta: f64,
    horizon: usize,
) -> Result<TrajectoryReport> {
    run(kind, objective, mu0, sigma_diag, delta, horizon)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrderReport {
    pub runs: Vec<TrajectoryReport>,
    pub slope_original: f64,
    pub slope_modified: f64,
    pub slope_intermediate: Option<f64>,
}

/// Halves `delta0` `halvings` times over the fixed time span
/// `horizon·delta0` and fits the log-log order of each deviation.
pub fn trajectory_order_check<O: Objective + ?Sized>(
    kind: TrajectoryKind,
    objective: &O,
    mu0: &[f64],
    sigma_diag: &[f64],
    delta0: f64,
    horizon: usize,
    halvings: usize,
) -> Result<OrderReport> {
    let runs = (0..=halvings)
        .map(|j| run(kind, objective, mu0, sigma_diag, delta0 / (1u64 << j) as f64, horizon << j))
        .collect::<Result<Vec<_>>>()?;
    let deltas: Vec<f64> = runs.iter().map(|r| r.delta).collect();
    let slope = |f: &dyn Fn(&TrajectoryReport) -> f64| {
        let ys: Vec<f64> = runs.iter().map(f).collect();
        loglog_slope(&deltas, &ys)
    };
    let slope_intermediate = match kind {
        TrajectoryKind::Sam => Some(slope(&|r| r.deviation_intermediate.unwrap_or(f64::NAN))),
        TrajectoryKind::MfviExpected => None,
    };
    Ok(OrderReport {
        slope_original: slope(&|r| r.deviation_original),
        slope_modified: slope(&|r| r.deviation_modified),
        slope_intermediate,
        runs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objectives::quadratic_objective;

    #[test]
    fn dopri5_exponential() {
        let times: Vec<f64> = (0..=10).map(|k| k as f64 * 0.1).collect();
        let ys = dopri5(|_, y| vec![-2.0 * y[0], y[0]], &[1.0, 0.0], &times, 1e-10).unwrap();
        for (t, y) in times.iter().zip(&ys) {
            assert!((y[0] - (-2.0 * t).exp()).abs() < 1e-9);
            assert!((y[1] - 0.5 * (1.0 - (-2.0 * t).exp())).abs() < 1e-9);
        }
    }

    #[test]
    fn stationary_start_has_no_deviation() {
        let q = quadratic_objective(vec![1.0, 3.0], vec![0.0, 0.0]).unwrap();
        for kind in [TrajectoryKind::Sam, TrajectoryKind::MfviExpected] {
            let r = backward_error_trajectory_check(kind, &q, &[0.0, 0.0], &[1e-3, 1e-3], 0.01, 20).unwrap();
            assert_eq!(r.deviation_original, 0.0);
            assert_eq!(r.deviation_modified, 0.0);
        }
    }

    #[test]
    fn sam_closer_to_modified_flow() {
        let q = quadratic_objective(vec![1.0, 3.0], vec![0.0, 0.0]).unwrap();
        let sigma = [0.05f64.powi(2) / 2.0; 2];
        let r = backward_error_trajectory_check(TrajectoryKind::Sam, &q, &[1.0, 1.0], &sigma, 0.01, 100).unwrap();
        assert!(r.deviation_modified < r.deviation_original, "{r:?}");
        assert!(r.deviation_intermediate.unwrap() < r.deviation_modified);
    }

    #[test]
    fn too_many_parameters() {
        let q = quadratic_objective(vec![1.0; 11], vec![0.0; 11]).unwrap();
        let err = backward_error_trajectory_check(TrajectoryKind::Sam, &q, &[1.0; 11], &[0.1; 11], 0.1, 2);
        assert!(matches!(err, Err(Error::DimensionTooLarge { p: 11, .. })));
    }
}
