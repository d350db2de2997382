//! One perturbed-gradient stepper covering SGD, SAM, ASAM, FSAM, RandomSAM,
//! MFVI and VariationalSAM.
//!
//! Every method evaluates the loss gradient at `μ + Σ^{1/2} η` and adds the
//! penalty gradient `2αμ`. They differ in how `η` is chosen (worst case or
//! Gaussian), how Σ is formed (fixed, adaptive or learned) and which
//! penalty is used.

mod perturbation;
mod schedule;
mod steps;

pub use perturbation::{sam_perturbation, DEGENERATE_THRESHOLD};
pub use schedule::{apply_schedule, StepSchedule};
pub use steps::{
    mfvi_log_var_gradient, mfvi_step, random_sam_step, sam_step, sgd_step, step, vsam_step,
    vsam_var_gradient, StepReport,
};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::{resolve_sigma, AsamRule, CovarianceSpec, FisherRule, ParamVector};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Perturbation {
    WorstCase,
    Gaussian,
    None,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Penalty {
    None,
    /// `α‖μ‖²`
    L2 { alpha: f64 },
    /// `(1/N) KL[N(μ, Σ) ‖ N(0, σ₀² I)]`, whose μ-part is `α‖μ‖²` with
    /// `α = 1/(2Nσ₀²)`.
    Kl { sigma0: f64, n: usize },
}

impl Penalty {
    pub fn alpha(&self) -> f64 {
        match *self {
            Penalty::None => 0.0,
            Penalty::L2 { alpha } => alpha,
            Penalty::Kl { sigma0, n } => 1.0 / (2.0 * n as f64 * sigma0 * sigma0),
        }
    }

    /// `∂/∂σ²_i` of the per-datum KL term; zero unless the penalty is KL.
    pub fn kl_var_gradient(&self, var: f64) -> f64 {
        match *self {
            Penalty::Kl { sigma0, n } => {
                crate::pacbayes::kl_var_gradient(var, sigma0 * sigma0) / n as f64
            }
            _ => 0.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub perturbation: Perturbation,
    pub covariance: CovarianceSpec,
    /// Learn a diagonal Σ alongside μ (MFVI, VariationalSAM).
    pub learned_sigma: bool,
    pub penalty: Penalty,
    pub lr_mu: f64,
    pub lr_sigma: f64,
    pub momentum: f64,
    pub schedule: StepSchedule,
    pub seed: u64,
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if !(self.lr_mu.is_finite() && self.lr_mu >= 0.0) {
            return bad(format!("lr must be non-negative, got {}", self.lr_mu));
        }
        if !(self.lr_sigma.is_finite() && self.lr_sigma >= 0.0) {
            return bad(format!("lr_sigma must be non-negative, got {}", self.lr_sigma));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return bad(format!("momentum must lie in [0, 1), got {}", self.momentum));
        }
        if self.learned_sigma {
            if !matches!(self.covariance, CovarianceSpec::Diagonal(_)) {
                return bad("a learned covariance must start from a Diagonal spec".into());
            }
            if !(self.lr_sigma > 0.0) {
                return bad("a learned covariance needs lr_sigma > 0".into());
            }
        }
        match self.penalty {
            Penalty::L2 { alpha } if !(alpha.is_finite() && alpha >= 0.0) => {
                bad(format!("L2 coefficient must be non-negative, got {alpha}"))
            }
            Penalty::Kl { sigma0, n } if !(sigma0.is_finite() && sigma0 > 0.0) || n == 0 => {
                bad(format!("KL penalty needs sigma0 > 0 and N > 0, got ({sigma0}, {n})"))
            }
            _ => Ok(()),
        }
    }

    /// Standard configuration of a named method for a model with `p`
    /// parameters.
    pub fn preset(kind: OptimizerKind, hyper: &Hyper, p: usize) -> Result<Self> {
        let rho = hyper.rho;
        let radius_scale = rho * rho / p as f64;
        let l2 = Penalty::L2 {
            alpha: hyper.weight_decay / 2.0,
        };
        let kl = match hyper.sigma0 {
            Some(sigma0) => Penalty::Kl {
                sigma0,
                n: hyper.n_train,
            },
            // match the L2 strength: 1/(2Nσ₀²) = wd/2
            None if hyper.weight_decay > 0.0 => Penalty::Kl {
                sigma0: (1.0 / (hyper.n_train as f64 * hyper.weight_decay)).sqrt(),
                n: hyper.n_train,
            },
            None => Penalty::None,
        };
        let learned = || -> Result<CovarianceSpec> {
            if !(rho > 0.0) {
                return Err(Error::InvalidConfig(format!(
                    "{kind} learns Σ and needs rho > 0 for its initial value"
                )));
            }
            Ok(CovarianceSpec::Diagonal(vec![radius_scale; p]))
        };
        let (perturbation, covariance, learned_sigma, penalty) = match kind {
            OptimizerKind::Sgd => (Perturbation::None, CovarianceSpec::isotropic(0.0), false, l2),
            OptimizerKind::Sam => (Perturbation::WorstCase, CovarianceSpec::isotropic(rho), false, l2),
            OptimizerKind::Asam => (
                Perturbation::WorstCase,
                CovarianceSpec::MuAdaptive {
                    rule: hyper.asam_rule,
                    scale: radius_scale,
                },
                false,
                l2,
            ),
            OptimizerKind::Fsam => (
                Perturbation::WorstCase,
                CovarianceSpec::FisherAdaptive {
                    damping: hyper.fisher_damping,
                    rule: hyper.fisher_rule,
                    scale: radius_scale,
                },
                false,
                l2,
            ),
            OptimizerKind::Rsam => (Perturbation::Gaussian, CovarianceSpec::isotropic(rho), false, kl),
            OptimizerKind::Mfvi => (Perturbation::Gaussian, learned()?, true, kl),
            OptimizerKind::Vsam => (Perturbation::WorstCase, learned()?, true, kl),
        };
        let cfg = Self {
            perturbation,
            covariance,
            learned_sigma,
            penalty,
            lr_mu: hyper.lr,
            lr_sigma: hyper.lr_sigma,
            momentum: hyper.momentum,
            schedule: hyper.schedule.clone(),
            seed: hyper.seed,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

/// The named methods.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimizerKind {
    Sgd,
    Sam,
    Asam,
    Fsam,
    Rsam,
    Mfvi,
    Vsam,
}

impl OptimizerKind {
    pub const ALL: [OptimizerKind; 7] = [
        Self::Sgd,
        Self::Sam,
        Self::Asam,
        Self::Fsam,
        Self::Rsam,
        Self::Mfvi,
        Self::Vsam,
    ];

    /// Gradient evaluations per step.
    pub fn backprops(self) -> usize {
        match self {
            Self::Sgd | Self::Rsam | Self::Mfvi => 1,
            Self::Sam | Self::Asam | Self::Fsam | Self::Vsam => 2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Sgd => "sgd",
            Self::Sam => "sam",
            Self::Asam => "asam",
            Self::Fsam => "fsam",
            Self::Rsam => "rsam",
            Self::Mfvi => "mfvi",
            Self::Vsam => "vsam",
        }
    }
}

impl fmt::Display for OptimizerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for OptimizerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown optimizer {s:?}")))
    }
}

/// Method-independent hyperparameters used by [`OptimizerConfig::preset`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Hyper {
    pub rho: f64,
    /// Prior standard deviation; derived from `weight_decay` when absent.
    pub sigma0: Option<f64>,
    pub n_train: usize,
    pub weight_decay: f64,
    pub lr: f64,
    pub lr_sigma: f64,
    pub momentum: f64,
    pub schedule: StepSchedule,
    pub seed: u64,
    pub asam_rule: AsamRule,
    pub fisher_rule: FisherRule,
    pub fisher_damping: f64,
}

impl Default for Hyper {
    fn default() -> Self {
        Self {
            rho: 0.05,
            sigma0: None,
            n_train: 1,
            weight_decay: 0.0005,
            lr: 0.1,
            lr_sigma: 0.01,
            momentum: 0.9,
            schedule: StepSchedule::constant(),
            seed: 0,
            asam_rule: AsamRule::InverseMagnitude,
            fisher_rule: FisherRule::Direct,
            fisher_damping: 1e-8,
        }
    }
}

/// Current covariance: a fixed spec re-resolved every step, or a learned
/// diagonal stored as `log σ²_i` so it stays positive.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SigmaState {
    Fixed(CovarianceSpec),
    Learned { log_var: Vec<f64> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizerState {
    pub mu: ParamVector,
    pub sigma: SigmaState,
    pub momentum_buf: Vec<f64>,
    /// Completed steps; also the stream index for the step's noise draw.
    pub step: u64,
    pub seed: u64,
}

impl OptimizerState {
    pub fn new(mu: ParamVector, config: &OptimizerConfig) -> Result<Self> {
        config.validate()?;
        let p = mu.len();
        let sigma = if config.learned_sigma {
            let init = resolve_sigma(&config.covariance, &mu, None)?;
            SigmaState::Learned {
                log_var: init.iter().map(|v| v.ln()).collect(),
            }
        } else {
            SigmaState::Fixed(config.covariance.clone())
        };
        Ok(Self {
            mu,
            sigma,
            momentum_buf: vec![0.0; p],
            step: 0,
            seed: config.seed,
        })
    }

    pub fn dim(&self) -> usize {
        self.mu.len()
    }

    /// Σ diagonal at the current μ. Fisher specs need per-example gradients.
    pub fn sigma_diag(&self, per_example_grads: Option<&[Vec<f64>]>) -> Result<Vec<f64>> {
        match &self.sigma {
            SigmaState::Fixed(spec) => resolve_sigma(spec, &self.mu, per_example_grads),
            SigmaState::Learned { log_var } => Ok(log_var.iter().map(|v| v.exp()).collect()),
        }
    }

    /// Mean of the Σ diagonal, or 0 when it cannot be resolved without data.
    pub fn mean_sigma2(&self) -> f64 {
        self.sigma_diag(None)
            .map(|d| d.iter().sum::<f64>() / d.len() as f64)
            .unwrap_or(0.0)
    }
}
