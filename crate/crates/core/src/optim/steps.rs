use super::{sam_perturbation, OptimizerConfig, OptimizerState, Penalty, Perturbation, SigmaState};
use crate::error::{Error, Result};
use crate::math::{check_len, sample_eta, sigma_half_apply, sigma_norm, Stream};
use crate::objectives::{Batch, Objective};

/// What happened during one step.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct StepReport {
    /// `‖ε‖₂` of the perturbation used for the μ-gradient.
    pub perturbation_norm: f64,
    /// The worst-case direction was undefined (vanishing `Σ^{1/2} g`).
    pub degenerate: bool,
    pub grad_evals: usize,
}

/// Dispatches on perturbation type and whether Σ is learned.
pub fn step<O: Objective + ?Sized>(
    state: &mut OptimizerState,
    objective: &O,
    batch: Batch<'_>,
    config: &OptimizerConfig,
    epoch: usize,
) -> Result<StepReport> {
    match (config.perturbation, config.learned_sigma) {
        (Perturbation::None, _) => sgd_step(state, objective, batch, config, epoch),
        (Perturbation::WorstCase, false) => sam_step(state, objective, batch, config, epoch),
        (Perturbation::WorstCase, true) => vsam_step(state, objective, batch, config, epoch),
        (Perturbation::Gaussian, false) => random_sam_step(state, objective, batch, config, epoch),
        (Perturbation::Gaussian, true) => mfvi_step(state, objective, batch, config, epoch),
    }
}

fn check_dim<O: Objective + ?Sized>(state: &OptimizerState, objective: &O) -> Result<()> {
    check_len(objective.dim(), state.dim())
}

/// Heavy-ball update of μ along `direction + 2αμ`.
fn descend(state: &mut OptimizerState, config: &OptimizerConfig, mut direction: Vec<f64>, lr_scale: f64) -> Result<()> {
    let alpha = config.penalty.alpha();
    for (d, m) in direction.iter_mut().zip(state.mu.iter()) {
        *d += 2.0 * alpha * m;
    }
    let momentum = config.momentum;
    for (b, d) in state.momentum_buf.iter_mut().zip(&direction) {
        *b = momentum * *b + d;
    }
    let lr = config.lr_mu * lr_scale;
    let buf = &state.momentum_buf;
    state.mu.update(|mu| {
        for (m, b) in mu.iter_mut().zip(buf) {
            *m -= lr * b;
        }
    })?;
    state.step += 1;
    Ok(())
}

fn learned_var(state: &OptimizerState) -> Result<Vec<f64>> {
    match &state.sigma {
        SigmaState::Learned { log_var } => Ok(log_var.iter().map(|v| v.exp()).collect()),
        SigmaState::Fixed(_) => Err(Error::InvalidConfig("step needs a learned covariance".into())),
    }
}

fn update_log_var(state: &mut OptimizerState, grad_log_var: &[f64], lr: f64) -> Result<()> {
    if let SigmaState::Learned { log_var } = &mut state.sigma {
        let next: Vec<f64> = log_var.iter().zip(grad_log_var).map(|(v, g)| v - lr * g).collect();
        crate::math::check_finite(&next)?;
        *log_var = next;
    }
    Ok(())
}

pub fn sgd_step<O: Objective + ?Sized>(
    state: &mut OptimizerState,
    objective: &O,
    batch: Batch<'_>,
    config: &OptimizerConfig,
    epoch: usize,
) -> Result<StepReport> {
    check_dim(state, objective)?;
    let g = objective.gradient(&state.mu, batch);
    descend(state, config, g, config.schedule.multiplier(epoch))?;
    Ok(StepReport {
        grad_evals: 1,
        ..Default::default()
    })
}

/// Two gradient evaluations: `g₁ = ∇L(μ)`, then `∇L(μ + ε*(g₁))`.
pub fn sam_step<O: Objective + ?Sized>(
    state: &mut OptimizerState,
    objective: &O,
    batch: Batch<'_>,
    config: &OptimizerConfig,
    epoch: usize,
) -> Result<StepReport> {
    check_dim(state, objective)?;
    let g1 = objective.gradient(&state.mu, batch);
    let per_example = match &state.sigma {
        SigmaState::Fixed(spec) if spec.needs_per_example_grads() => {
            Some(objective.per_example_gradients(&state.mu, batch).ok_or(Error::MissingFisherData)?)
        }
        _ => None,
    };
    let sigma = state.sigma_diag(per_example.as_deref())?;
    let (eps, degenerate) = sam_perturbation(&g1, &sigma);
    let (g2, evals) = if degenerate {
        (g1, 1)
    } else {
        let shifted: Vec<f64> = state.mu.iter().zip(&eps).map(|(m, e)| m + e).collect();
        (objective.gradient(&shifted, batch), 2)
    };
    descend(state, config, g2, config.schedule.multiplier(epoch))?;
    Ok(StepReport {
        perturbation_norm: crate::math::norm2(&eps),
        degenerate,
        grad_evals: evals,
    })
}

/// One gradient evaluation at `μ + Σ^{1/2} η` with fresh `η ~ N(0, I)` drawn
/// from the `(seed, step)` stream.
pub fn random_sam_step<O: Objective + ?Sized>(
    state: &mut OptimizerState,
    objective: &O,
    batch: Batch<'_>,
    config: &OptimizerConfig,
    epoch: usize,
) -> Result<StepReport> {
    check_dim(state, objective)?;
    let per_example = match &state.sigma {
        SigmaState::Fixed(spec) if spec.needs_per_example_grads() => {
            Some(objective.per_example_gradients(&state.mu, batch).ok_or(Error::MissingFisherData)?)
        }
        _ => None,
    };
    let sigma = state.sigma_diag(per_example.as_deref())?;
    let eta = sample_eta(state.dim(), state.seed, Stream::Step(state.step)).eta;
    let eps = sigma_half_apply(&sigma, &eta);
    let theta: Vec<f64> = state.mu.iter().zip(&eps).map(|(m, e)| m + e).collect();
    let g = objective.gradient(&theta, batch);
    descend(state, config, g, config.schedule.multiplier(epoch))?;
    Ok(StepReport {
        perturbation_norm: crate::math::norm2(&eps),
        degenerate: false,
        grad_evals: 1,
    })
}

/// Gradient of the single-sample MFVI loss
/// `L(μ + exp(φ/2) ⊙ η) + (1/N) KL` with respect to `φ = log σ²`, given the
/// loss gradient at the perturbed point.
pub fn mfvi_log_var_gradient(grad_at_perturbed: &[f64], eta: &[f64], var: &[f64], penalty: &Penalty) -> Vec<f64> {
    grad_at_perturbed
        .iter()
        .zip(eta)
        .zip(var)
        .map(|((g, e), v)| {
            // d sqrt(v)/dφ = sqrt(v)/2
            0.5 * g * e * v.sqrt() + penalty.kl_var_gradient(*v) * v
        })
        .collect()
}

/// μ and Σ share one η per step.
pub fn mfvi_step<O: Objective + ?Sized>(
    state: &mut OptimizerState,
    objective: &O,
    batch: Batch<'_>,
    config: &OptimizerConfig,
    epoch: usize,
) -> Result<StepReport> {
    check_dim(state, objective)?;
    let var = learned_var(state)?;
    let eta = sample_eta(state.dim(), state.seed, Stream::Step(state.step)).eta;
    let eps = sigma_half_apply(&var, &eta);
    let theta: Vec<f64> = state.mu.iter().zip(&eps).map(|(m, e)| m + e).collect();
    let g = objective.gradient(&theta, batch);
    let grad_log_var = mfvi_log_var_gradient(&g, &eta, &var, &config.penalty);
    let scale = config.schedule.multiplier(epoch);
    update_log_var(state, &grad_log_var, config.lr_sigma * scale)?;
    descend(state, config, g, scale)?;
    Ok(StepReport {
        perturbation_norm: crate::math::norm2(&eps),
        degenerate: false,
        grad_evals: 1,
    })
}

/// Gradient in `σ²` of the first-order VariationalSAM surrogate
/// `√p √(gᵀΣg) + (1/(2Nσ₀²)) Tr Σ − (1/(2N)) log det Σ`, with `g` held
/// fixed. The square-root term is dropped when `Σ^{1/2} g` vanishes, which
/// is reported through the flag.
pub fn vsam_var_gradient(g: &[f64], var: &[f64], penalty: &Penalty) -> (Vec<f64>, bool) {
    let p = g.len() as f64;
    let norm = sigma_norm(g, var);
    let degenerate = !(norm >= super::DEGENERATE_THRESHOLD);
    let grad = g
        .iter()
        .zip(var)
        .map(|(gi, v)| {
            let sharp = if degenerate { 0.0 } else { p.sqrt() * gi * gi / (2.0 * norm) };
            sharp + penalty.kl_var_gradient(*v)
        })
        .collect();
    (grad, degenerate)
}

/// μ follows the SAM update with the learned Σ; Σ follows the surrogate
/// gradient evaluated with `g = ∇L(μ)` from the first backward pass.
pub fn vsam_step<O: Objective + ?Sized>(
    state: &mut OptimizerState,
    objective: &O,
    batch: Batch<'_>,
    config: &OptimizerConfig,
    epoch: usize,
) -> Result<StepReport> {
    check_dim(state, objective)?;
    let var = learned_var(state)?;
    let g1 = objective.gradient(&state.mu, batch);
    let (eps, degenerate) = sam_perturbation(&g1, &var);
    let g2 = if degenerate {
        g1.clone()
    } else {
        let shifted: Vec<f64> = state.mu.iter().zip(&eps).map(|(m, e)| m + e).collect();
        objective.gradient(&shifted, batch)
    };
    let (grad_var, _) = vsam_var_gradient(&g1, &var, &config.penalty);
    let grad_log_var: Vec<f64> = grad_var.iter().zip(&var).map(|(g, v)| g * v).collect();
    let scale = config.schedule.multiplier(epoch);
    update_log_var(state, &grad_log_var, config.lr_sigma * scale)?;
    descend(state, config, g2, scale)?;
    Ok(StepReport {
        perturbation_norm: crate::math::norm2(&eps),
        degenerate,
        grad_evals: if degenerate { 1 } else { 2 },
    })
}
