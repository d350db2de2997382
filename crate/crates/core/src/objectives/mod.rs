//! Differentiable losses with analytic gradients, plus the synthetic
//! datasets the desk-scale experiments train on.

mod data;
mod mlp;
mod quadratic;
mod toy;

pub use data::{make_blobs, make_two_moons, Dataset};
pub use mlp::{mlp_objective, Mlp};
pub use quadratic::{quadratic_objective, DenseQuadratic, DiagonalQuadratic, Linear, Quartic};
pub use toy::{toy_landscape, ToyLandscape};

use crate::math::{norm2, SymMatrix};

/// Largest parameter count for which an exact Hessian is offered.
pub const HESSIAN_LIMIT: usize = 64;

/// Which examples a loss evaluation averages over.
#[derive(Clone, Copy, Debug, Default)]
pub enum Batch<'a> {
    #[default]
    Full,
    Indices(&'a [usize]),
}

/// A twice-differentiable scalar loss `L(theta)`.
///
/// Analytic objectives ignore the batch; data-backed ones average over the
/// selected examples.
pub trait Objective {
    fn dim(&self) -> usize;

    fn value(&self, theta: &[f64], batch: Batch<'_>) -> f64;

    fn gradient(&self, theta: &[f64], batch: Batch<'_>) -> Vec<f64>;

    fn value_and_gradient(&self, theta: &[f64], batch: Batch<'_>) -> (f64, Vec<f64>) {
        (self.value(theta, batch), self.gradient(theta, batch))
    }

    /// Per-example gradients whose mean is [`Objective::gradient`]. `None`
    /// for objectives without an example structure.
    fn per_example_gradients(&self, _theta: &[f64], _batch: Batch<'_>) -> Option<Vec<Vec<f64>>> {
        None
    }

    /// Exact Hessian, only for `dim() <= HESSIAN_LIMIT`.
    fn hessian(&self, _theta: &[f64], _batch: Batch<'_>) -> Option<SymMatrix> {
        None
    }

    /// `H(theta) v`: exact when a Hessian is available, otherwise a central
    /// difference of the gradient.
    fn hessian_vector_product(&self, theta: &[f64], v: &[f64], batch: Batch<'_>) -> Vec<f64> {
        if let Some(h) = self.hessian(theta, batch) {
            return h.mul_vec(v);
        }
        gradient_difference_hvp(self, theta, v, batch)
    }
}

/// Central difference of the gradient along `v`.
pub fn gradient_difference_hvp<O: Objective + ?Sized>(
    objective: &O,
    theta: &[f64],
    v: &[f64],
    batch: Batch<'_>,
) -> Vec<f64> {
    let vn = norm2(v);
    if vn == 0.0 {
        return vec![0.0; v.len()];
    }
    let h = 1e-5 * (1.0 + norm2(theta)) / vn;
    let plus: Vec<f64> = theta.iter().zip(v).map(|(t, d)| t + h * d).collect();
    let minus: Vec<f64> = theta.iter().zip(v).map(|(t, d)| t - h * d).collect();
    let gp = objective.gradient(&plus, batch);
    let gm = objective.gradient(&minus, batch);
    gp.iter().zip(&gm).map(|(a, b)| (a - b) / (2.0 * h)).collect()
}

/// Hessian assembled column by column from central differences of the
/// analytic gradient, then symmetrized.
pub(crate) fn gradient_difference_hessian<O: Objective + ?Sized>(
    objective: &O,
    theta: &[f64],
    batch: Batch<'_>,
) -> SymMatrix {
    let p = theta.len();
    let mut data = vec![0.0; p * p];
    let mut work = theta.to_vec();
    for j in 0..p {
        let h = 1e-5 * (1.0 + theta[j].abs());
        work[j] = theta[j] + h;
        let gp = objective.gradient(&work, batch);
        work[j] = theta[j] - h;
        let gm = objective.gradient(&work, batch);
        work[j] = theta[j];
        for i in 0..p {
            data[i * p + j] = (gp[i] - gm[i]) / (2.0 * h);
        }
    }
    SymMatrix::from_rows(p, data).expect("square by construction")
}

impl<T: Objective + ?Sized> Objective for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn value(&self, theta: &[f64], batch: Batch<'_>) -> f64 {
        (**self).value(theta, batch)
    }
    fn gradient(&self, theta: &[f64], batch: Batch<'_>) -> Vec<f64> {
        (**self).gradient(theta, batch)
    }
    fn value_and_gradient(&self, theta: &[f64], batch: Batch<'_>) -> (f64, Vec<f64>) {
        (**self).value_and_gradient(theta, batch)
    }
    fn per_example_gradients(&self, theta: &[f64], batch: Batch<'_>) -> Option<Vec<Vec<f64>>> {
        (**self).per_example_gradients(theta, batch)
    }
    fn hessian(&self, theta: &[f64], batch: Batch<'_>) -> Option<SymMatrix> {
        (**self).hessian(theta, batch)
    }
    fn hessian_vector_product(&self, theta: &[f64], v: &[f64], batch: Batch<'_>) -> Vec<f64> {
        (**self).hessian_vector_product(theta, v, batch)
    }
}
