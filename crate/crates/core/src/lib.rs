//! Perturbed-gradient optimizers (SGD, SAM and its adaptive variants,
//! RandomSAM, mean-field VI, VariationalSAM) with numerical checks of the
//! flatness penalties they induce and a PAC-Bayes bound calculator.
//!
//! ```
//! use flatopt::optim::sam_perturbation;
//!
//! let (eps, degenerate) = sam_perturbation(&[3.0, 4.0], &[0.005, 0.005]);
//! assert!(!degenerate);
//! assert!((eps[0] - 0.06).abs() < 1e-12 && (eps[1] - 0.08).abs() < 1e-12);
//! ```

pub mod error;
pub mod flatness;
pub mod math;
pub mod objectives;
pub mod optim;
pub mod pacbayes;
pub mod train;

pub use error::{Error, Result};
pub use math::{CovarianceSpec, ParamVector};
pub use objectives::{Batch, Objective};
pub use optim::{OptimizerConfig, OptimizerKind, OptimizerState};
