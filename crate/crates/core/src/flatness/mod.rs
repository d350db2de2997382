//! Numerical checks of the flatness penalties implied by SAM and MFVI:
//! worst-case ball maxima, Gaussian smoothing, Hessian traces, effective
//! losses and backward-error trajectory comparisons.

mod ball;
mod checks;
mod landscape;
mod smoothing;
mod trajectory;

pub use ball::{worst_case_ball_argmax, worst_case_ball_max, BallMax, BallResolution, BALL_MAX_DIM};
pub use checks::{
    loglog_slope, prop1_check, prop3_check, upper_bound_check, Prop1Report, Prop3Report, UpperBoundReport,
};
pub use landscape::{landscape_value, LandscapeConfig, Panel, DEFAULT_GRID_SCALE};
pub use smoothing::{hutchinson_trace, mc_smoothed_loss, McEstimate, RunningMean};
pub use trajectory::{
    backward_error_trajectory_check, dopri5, trajectory_order_check, OrderReport, TrajectoryKind,
    TrajectoryReport, MAX_TRAJECTORY_DIM,
};

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::math::{check_len, norm2, sigma_norm, SymMatrix};
use crate::objectives::{Batch, Objective};

/// `(Tr[ΣH], Tr[ΣH²])` at μ, from the exact Hessian when the objective has
/// one and from `p` Hessian-vector products otherwise.
pub fn weighted_traces<O: Objective + ?Sized>(objective: &O, mu: &[f64], sigma_diag: &[f64]) -> Result<(f64, f64)> {
    check_len(objective.dim(), mu.len())?;
    check_len(mu.len(), sigma_diag.len())?;
    let h = hessian_or_columns(objective, mu);
    Ok((h.trace_weighted(sigma_diag), h.trace_sq_weighted(sigma_diag)))
}

pub(crate) fn hessian_or_columns<O: Objective + ?Sized>(objective: &O, mu: &[f64]) -> SymMatrix {
    if let Some(h) = objective.hessian(mu, Batch::Full) {
        return h;
    }
    let p = mu.len();
    let mut h = SymMatrix::zeros(p);
    let mut e = vec![0.0; p];
    for j in 0..p {
        e[j] = 1.0;
        let col = objective.hessian_vector_product(mu, &e, Batch::Full);
        e[j] = 0.0;
        for (i, v) in col.into_iter().enumerate() {
            // average the two estimates of each off-diagonal entry
            if i < j {
                h.set(i, j, 0.5 * (h.get(i, j) + v));
            } else {
                h.set(i, j, v);
            }
        }
    }
    h
}

/// Column of the effective-loss table.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum TableRow {
    #[serde(rename = "sam_row")]
    Sam,
    #[serde(rename = "mfvi_row")]
    Mfvi,
}

impl fmt::Display for TableRow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TableRow::Sam => "sam_row",
            TableRow::Mfvi => "mfvi_row",
        })
    }
}

/// Terms of the finite-step effective loss.
///
/// SAM: `L + √p‖g‖_Σ + (δ/4)‖g‖²`. MFVI: `L + (δ/4)‖g‖² + (δ/4)Tr[ΣH²]`.
/// `trace_pen = ½Tr[ΣH]` is the zero-step MFVI penalty and is reported for
/// both rows without entering either total.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EffectiveLossReport {
    pub row: TableRow,
    pub loss: f64,
    pub grad_norm_pen: f64,
    pub trace_pen: f64,
    pub trace_sq_pen: f64,
    pub gd_bias: f64,
    pub delta: f64,
    /// `√(Tr Σ)`, the isotropic radius with the same total variance.
    pub rho: f64,
}

impl EffectiveLossReport {
    pub const CSV_HEADER: &'static str = "row_kind,L,grad_norm_pen,trace_pen,trace_sq_pen,gd_bias,delta,rho";

    pub fn total(&self) -> f64 {
        match self.row {
            TableRow::Sam => self.loss + self.grad_norm_pen + self.gd_bias,
            TableRow::Mfvi => self.loss + self.gd_bias + self.trace_sq_pen,
        }
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            self.row,
            self.loss,
            self.grad_norm_pen,
            self.trace_pen,
            self.trace_sq_pen,
            self.gd_bias,
            self.delta,
            self.rho
        )
    }
}

pub fn modified_loss<O: Objective + ?Sized>(
    row: TableRow,
    objective: &O,
    mu: &[f64],
    sigma_diag: &[f64],
    delta: f64,
) -> Result<EffectiveLossReport> {
    check_len(objective.dim(), mu.len())?;
    check_len(mu.len(), sigma_diag.len())?;
    let (loss, g) = objective.value_and_gradient(mu, Batch::Full);
    let p = mu.len() as f64;
    let (tr, tr_sq) = weighted_traces(objective, mu, sigma_diag)?;
    let gn = norm2(&g);
    Ok(EffectiveLossReport {
        row,
        loss,
        grad_norm_pen: p.sqrt() * sigma_norm(&g, sigma_diag),
        trace_pen: 0.5 * tr,
        trace_sq_pen: 0.25 * delta * tr_sq,
        gd_bias: 0.25 * delta * gn * gn,
        delta,
        rho: sigma_diag.iter().sum::<f64>().sqrt(),
    })
}
