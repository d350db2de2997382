use crate::math::sigma_half_apply;

/// `‖Σ^{1/2} g‖` below this is treated as a vanishing gradient.
pub const DEGENERATE_THRESHOLD: f64 = 1e-12;

/// First-order worst-case perturbation on the ellipsoid `εᵀΣ⁻¹ε = p`:
///
/// `g̃ = Σ^{1/2} g`, `η = √p g̃ / ‖g̃‖`, `ε* = Σ^{1/2} η`.
///
/// Returns `(ε*, degenerate)`. When `‖g̃‖` vanishes the perturbation is zero
/// and `degenerate` is set, so the caller falls back to a plain gradient
/// step.
pub fn sam_perturbation(grad: &[f64], sigma_diag: &[f64]) -> (Vec<f64>, bool) {
    let p = grad.len();
    let g_tilde = sigma_half_apply(sigma_diag, grad);
    let norm = g_tilde.iter().map(|v| v * v).sum::<f64>().sqrt();
    if !(norm >= DEGENERATE_THRESHOLD) {
        return (vec![0.0; p], true);
    }
    let scale = (p as f64).sqrt() / norm;
    let eta: Vec<f64> = g_tilde.iter().map(|v| v * scale).collect();
    (sigma_half_apply(sigma_diag, &eta), false)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn constraint(eps: &[f64], sigma: &[f64]) -> f64 {
        eps.iter().zip(sigma).map(|(e, s)| e * e / s).sum()
    }

    #[test]
    fn isotropic_reduces_to_scaled_gradient() {
        let rho: f64 = 0.1;
        let sigma = vec![rho * rho / 2.0; 2];
        let (eps, deg) = sam_perturbation(&[3.0, 4.0], &sigma);
        assert!(!deg);
        assert!((eps[0] - 0.06).abs() < 1e-15 && (eps[1] - 0.08).abs() < 1e-15);
    }

    #[test]
    fn zero_gradient_is_degenerate() {
        let (eps, deg) = sam_perturbation(&[0.0, 0.0, 0.0], &[1.0; 3]);
        assert!(deg);
        assert_eq!(eps, vec![0.0; 3]);
    }

    #[test]
    fn anisotropic_example_on_constraint() {
        let sigma = [1.0, 4.0];
        let (eps, _) = sam_perturbation(&[1.0, 1.0], &sigma);
        let c = (2.0f64).sqrt() / (5.0f64).sqrt();
        assert!((eps[0] - c).abs() < 1e-14 && (eps[1] - 4.0 * c).abs() < 1e-14);
        assert!((constraint(&eps, &sigma) - 2.0).abs() < 1e-14);
    }
}
