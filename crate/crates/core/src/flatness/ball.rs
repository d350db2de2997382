use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::{check_len, sigma_half_apply};
use crate::objectives::{Batch, Objective};

/// Largest dimension the brute-force sweep accepts.
pub const BALL_MAX_DIM: usize = 3;

/// Sweep density: `directions` unit vectors times `shells` radii. In one
/// dimension the sweep is `directions * shells` evenly spaced points.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BallResolution {
    pub directions: usize,
    pub shells: usize,
}

impl BallResolution {
    /// About 10⁶ points.
    pub fn dense() -> Self {
        Self {
            directions: 20_000,
            shells: 50,
        }
    }

    /// Cheap enough to run at every point of a landscape grid.
    pub fn coarse() -> Self {
        Self {
            directions: 256,
            shells: 8,
        }
    }
}

impl Default for BallResolution {
    fn default() -> Self {
        Self::dense()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BallMax {
    /// `max L(μ + ε)` over `εᵀΣ⁻¹ε ≤ p`.
    pub value: f64,
    pub epsilon: Vec<f64>,
}

/// Maximum of `L(μ + ε)` over the ellipsoid `εᵀΣ⁻¹ε ≤ p`, by a radial and
/// angular sweep followed by a projected compass search from the best
/// sweep point.
pub fn worst_case_ball_max<O: Objective + ?Sized>(
    objective: &O,
    mu: &[f64],
    sigma_diag: &[f64],
    resolution: BallResolution,
) -> Result<f64> {
    worst_case_ball_argmax(objective, mu, sigma_diag, resolution).map(|b| b.value)
}

pub fn worst_case_ball_argmax<O: Objective + ?Sized>(
    objective: &O,
    mu: &[f64],
    sigma_diag: &[f64],
    resolution: BallResolution,
) -> Result<BallMax> {
    let p = mu.len();
    if p > BALL_MAX_DIM {
        return Err(Error::DimensionTooLarge { p, max: BALL_MAX_DIM });
    }
    if p == 0 {
        return Err(Error::EmptyParams);
    }
    check_len(p, sigma_diag.len())?;
    check_len(p, objective.dim())?;
    // ε = √p Σ^{1/2} u with ‖u‖ ≤ 1
    let scale: Vec<f64> = sigma_half_apply(sigma_diag, &vec![(p as f64).sqrt(); p]);
    let mut theta = mu.to_vec();
    let mut eval = |u: &[f64]| {
        for i in 0..p {
            theta[i] = mu[i] + scale[i] * u[i];
        }
        objective.value(&theta, Batch::Full)
    };

    let dirs = directions(p, resolution.directions.max(1));
    let shells = resolution.shells.max(1);
    let mut best_u = vec![0.0; p];
    let mut best = eval(&best_u);
    let mut u = vec![0.0; p];
    if p == 1 {
        let m = (resolution.directions * shells).max(2);
        for k in 0..=m {
            u[0] = -1.0 + 2.0 * k as f64 / m as f64;
            let v = eval(&u);
            if v > best {
                best = v;
                best_u.copy_from_slice(&u);
            }
        }
    } else {
        for d in &dirs {
            for s in 1..=shells {
                let r = s as f64 / shells as f64;
                for i in 0..p {
                    u[i] = r * d[i];
                }
                let v = eval(&u);
                if v > best {
                    best = v;
                    best_u.copy_from_slice(&u);
                }
            }
        }
    }

    let spacing = if p == 1 {
        2.0 / (resolution.directions * shells).max(2) as f64
    } else {
        let angular = std::f64::consts::TAU / (dirs.len() as f64).powf(1.0 / (p - 1) as f64);
        angular.max(1.0 / shells as f64)
    };
    let mut step = spacing;
    while step > 1e-13 {
        let mut improved = false;
        for i in 0..p {
            for sign in [1.0, -1.0] {
                u.copy_from_slice(&best_u);
                u[i] += sign * step;
                project_unit_ball(&mut u);
                let v = eval(&u);
                if v > best {
                    best = v;
                    best_u.copy_from_slice(&u);
                    improved = true;
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    let epsilon = best_u.iter().zip(&scale).map(|(u, s)| u * s).collect();
    Ok(BallMax { value: best, epsilon })
}

fn project_unit_ball(u: &mut [f64]) {
    let n = u.iter().map(|x| x * x).sum::<f64>().sqrt();
    if n > 1.0 {
        u.iter_mut().for_each(|x| *x /= n);
    }
}

/// Unit vectors: `±1` in 1-d, evenly spaced angles in 2-d, a Fibonacci
/// lattice in 3-d.
fn directions(p: usize, count: usize) -> Vec<Vec<f64>> {
    match p {
        1 => vec![vec![1.0], vec![-1.0]],
        2 => (0..count)
            .map(|j| {
                let a = std::f64::consts::TAU * j as f64 / count as f64;
                vec![a.cos(), a.sin()]
            })
            .collect(),
        _ => {
            let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
            (0..count)
                .map(|j| {
                    let z = 1.0 - 2.0 * (j as f64 + 0.5) / count as f64;
                    let r = (1.0 - z * z).sqrt();
                    let a = golden * j as f64;
                    vec![r * a.cos(), r * a.sin(), z]
                })
                .collect()
        }
    }
}
