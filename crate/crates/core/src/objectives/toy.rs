use serde::{Deserialize, Serialize};

use super::{Batch, Objective};
use crate::error::{Error, Result};
use crate::math::SymMatrix;

/// Two Gaussian wells on a weak quadratic bowl:
///
/// `L(x) = −a₁ exp(−‖x−c₁‖²/(2s₁²)) − a₂ exp(−‖x−c₂‖²/(2s₂²)) + κ‖x‖²`
///
/// Well 1 is the narrow one. This is a stand-in surface with one sharp and
/// one wide minimum; it is not the exact function of any published figure.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ToyLandscape {
    pub sharp_center: [f64; 2],
    pub flat_center: [f64; 2],
    pub sharp_depth: f64,
    pub flat_depth: f64,
    pub sharp_width: f64,
    pub flat_width: f64,
    pub confinement: f64,
}

impl Default for ToyLandscape {
    fn default() -> Self {
        Self {
            sharp_center: [-2.0, 0.0],
            flat_center: [2.0, 0.0],
            sharp_depth: 1.0,
            flat_depth: 1.0,
            sharp_width: 0.3,
            flat_width: 1.5,
            confinement: 0.01,
        }
    }
}

pub fn toy_landscape(params: ToyLandscape) -> Result<ToyLandscape> {
    let positive = [params.sharp_depth, params.flat_depth, params.sharp_width, params.flat_width];
    if positive.iter().any(|v| !(v.is_finite() && *v > 0.0)) || !(params.confinement >= 0.0) {
        return Err(Error::InvalidConfig("toy landscape depths/widths must be positive".into()));
    }
    if params.sharp_width >= params.flat_width {
        return Err(Error::InvalidConfig("sharp well must be narrower than the flat well".into()));
    }
    Ok(params)
}

impl ToyLandscape {
    fn wells(&self) -> [([f64; 2], f64, f64); 2] {
        [
            (self.sharp_center, self.sharp_depth, self.sharp_width),
            (self.flat_center, self.flat_depth, self.flat_width),
        ]
    }

    pub fn eval(&self, x: [f64; 2]) -> f64 {
        let mut v = self.confinement * (x[0] * x[0] + x[1] * x[1]);
        for (c, a, s) in self.wells() {
            let r2 = (x[0] - c[0]).powi(2) + (x[1] - c[1]).powi(2);
            v -= a * (-r2 / (2.0 * s * s)).exp();
        }
        v
    }

    pub fn grad(&self, x: [f64; 2]) -> [f64; 2] {
        let mut g = [2.0 * self.confinement * x[0], 2.0 * self.confinement * x[1]];
        for (c, a, s) in self.wells() {
            let d = [x[0] - c[0], x[1] - c[1]];
            let e = a * (-(d[0] * d[0] + d[1] * d[1]) / (2.0 * s * s)).exp() / (s * s);
            g[0] += e * d[0];
            g[1] += e * d[1];
        }
        g
    }

    pub fn hess(&self, x: [f64; 2]) -> [[f64; 2]; 2] {
        let k = 2.0 * self.confinement;
        let mut h = [[k, 0.0], [0.0, k]];
        for (c, a, s) in self.wells() {
            let d = [x[0] - c[0], x[1] - c[1]];
            let s2 = s * s;
            let e = a * (-(d[0] * d[0] + d[1] * d[1]) / (2.0 * s2)).exp();
            for i in 0..2 {
                for j in 0..2 {
                    let id = if i == j { 1.0 } else { 0.0 };
                    h[i][j] += e * (id / s2 - d[i] * d[j] / (s2 * s2));
                }
            }
        }
        h
    }

    /// Newton-refined local minima nearest the two well centres, returned as
    /// `(sharp, flat)`.
    pub fn minima(&self) -> ([f64; 2], [f64; 2]) {
        (self.newton(self.sharp_center), self.newton(self.flat_center))
    }

    fn newton(&self, mut x: [f64; 2]) -> [f64; 2] {
        for _ in 0..100 {
            let g = self.grad(x);
            let h = self.hess(x);
            let det = h[0][0] * h[1][1] - h[0][1] * h[1][0];
            if det.abs() < 1e-300 {
                break;
            }
            let step = [
                (h[1][1] * g[0] - h[0][1] * g[1]) / det,
                (h[0][0] * g[1] - h[1][0] * g[0]) / det,
            ];
            x = [x[0] - step[0], x[1] - step[1]];
            if step[0].abs() + step[1].abs() < 1e-15 {
                break;
            }
        }
        x
    }
}

fn pt(theta: &[f64]) -> [f64; 2] {
    assert_eq!(theta.len(), 2, "toy landscape is two-dimensional");
    [theta[0], theta[1]]
}

impl Objective for ToyLandscape {
    fn dim(&self) -> usize {
        2
    }

    fn value(&self, theta: &[f64], _: Batch<'_>) -> f64 {
        self.eval(pt(theta))
    }

    fn gradient(&self, theta: &[f64], _: Batch<'_>) -> Vec<f64> {
        self.grad(pt(theta)).to_vec()
    }

    fn hessian(&self, theta: &[f64], _: Batch<'_>) -> Option<SymMatrix> {
        let h = self.hess(pt(theta));
        Some(SymMatrix::from_rows(2, vec![h[0][0], h[0][1], h[1][0], h[1][1]]).expect("2x2"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lambda_max(h: [[f64; 2]; 2]) -> f64 {
        let tr = h[0][0] + h[1][1];
        let det = h[0][0] * h[1][1] - h[0][1] * h[1][0];
        0.5 * tr + (0.25 * tr * tr - det).sqrt()
    }

    #[test]
    fn flat_center_is_critical_without_confinement() {
        let toy = ToyLandscape {
            confinement: 0.0,
            ..Default::default()
        };
        let g = toy.grad(toy.flat_center);
        assert!(g[0].abs() < 1e-8 && g[1].abs() < 1e-8, "{g:?}");
    }

    #[test]
    fn sharp_minimum_is_sharper() {
        let toy = ToyLandscape::default();
        let (sharp, flat) = toy.minima();
        assert!(lambda_max(toy.hess(sharp)) > lambda_max(toy.hess(flat)));
        assert!(toy.grad(sharp)[0].abs() < 1e-12 && toy.grad(flat)[0].abs() < 1e-12);
    }

    #[test]
    fn grid_finds_two_basins() {
        let toy = ToyLandscape::default();
        let n = 400;
        let coord = |i: usize| -4.0 + 8.0 * i as f64 / (n - 1) as f64;
        let vals: Vec<f64> = (0..n * n).map(|k| toy.eval([coord(k / n), coord(k % n)])).collect();
        let mut minima = Vec::new();
        for i in 0..n {
            for j in 0..n {
                let v = vals[i * n + j];
                let mut is_min = true;
                for di in -1i64..=1 {
                    for dj in -1i64..=1 {
                        let (a, b) = (i as i64 + di, j as i64 + dj);
                        if (di, dj) == (0, 0) || a < 0 || b < 0 || a >= n as i64 || b >= n as i64 {
                            continue;
                        }
                        if vals[a as usize * n + b as usize] < v {
                            is_min = false;
                        }
                    }
                }
                // the lattice straddles y = 0, so a minimum can be a tied pair
                let h = 8.0 / (n - 1) as f64;
                let x = [coord(i), coord(j)];
                let seen = minima
                    .iter()
                    .any(|m: &[f64; 2]| (m[0] - x[0]).abs() <= 1.5 * h && (m[1] - x[1]).abs() <= 1.5 * h);
                if is_min && !seen {
                    minima.push(x);
                }
            }
        }
        assert_eq!(minima.len(), 2, "{minima:?}");
        assert!(minima.iter().any(|m| m[0] < 0.0) && minima.iter().any(|m| m[0] > 0.0));
    }

    #[test]
    fn rejects_inverted_widths() {
        let bad = ToyLandscape {
            sharp_width: 2.0,
            ..Default::default()
        };
        assert!(toy_landscape(bad).is_err());
        assert!(toy_landscape(ToyLandscape::default()).is_ok());
    }
}
