//! Gaussian KL divergence to an isotropic prior and the PAC-Bayes bound on
//! the expected loss of a SAM-trained mean.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::check_len;

/// `KL[N(μ, diag σ²) ‖ N(0, σ₀² I)]` in nats.
pub fn gaussian_kl(mu: &[f64], sigma_diag: &[f64], sigma0_sq: f64) -> Result<f64> {
    check_len(mu.len(), sigma_diag.len())?;
    if !(sigma0_sq > 0.0 && sigma0_sq.is_finite()) {
        return Err(Error::NonPositiveVariance {
            index: usize::MAX,
            value: sigma0_sq,
        });
    }
    let mut total = 0.0;
    for (i, (&m, &v)) in mu.iter().zip(sigma_diag).enumerate() {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::NonPositiveVariance { index: i, value: v });
        }
        let r = v / sigma0_sq;
        // r - 1 - ln r is >= 0 termwise; ln_1p keeps it accurate near r = 1
        total += (r - 1.0) - (r - 1.0).ln_1p() + m * m / sigma0_sq;
    }
    Ok(0.5 * total)
}

/// `∂ KL / ∂σ²_i = ½ (1/σ₀² − 1/σ²_i)`.
pub fn kl_var_gradient(var: f64, sigma0_sq: f64) -> f64 {
    0.5 * (1.0 / sigma0_sq - 1.0 / var)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GammaForm {
    /// `√p (1 + √(ln n / p))`
    #[default]
    Main,
    /// `p (1 + √(ln n / p))`
    #[serde(rename = "appendix")]
    Linear,
}

/// Radius of the ball holding a standard Gaussian in `p` dimensions with
/// high probability.
pub fn gamma_radius(p: usize, n: usize, form: GammaForm) -> f64 {
    let pf = p as f64;
    let tail = 1.0 + ((n as f64).ln() / pf).sqrt();
    match form {
        GammaForm::Main => pf.sqrt() * tail,
        GammaForm::Linear => pf * tail,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundInputs {
    pub p: usize,
    pub n: usize,
    pub delta: f64,
    /// Worst-case loss in the γ-ball around μ on the training set.
    pub empirical_sam_loss: f64,
    pub kl_value: f64,
    /// Loss ceiling.
    pub l_max: f64,
}

impl BoundInputs {
    pub fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::InvalidDelta(self.delta));
        }
        if self.n < 2 {
            return Err(Error::InvalidConfig(format!("bound needs n >= 2, got {}", self.n)));
        }
        if !(self.kl_value >= 0.0) || !(self.l_max >= 0.0) || !self.empirical_sam_loss.is_finite() {
            return Err(Error::InvalidConfig(
                "bound needs finite loss, kl >= 0 and l_max >= 0".into(),
            ));
        }
        Ok(())
    }
}

/// `emp + L_max/√n + √((KL + ln(n/δ) + c_cover·p) / (2(n−1)))`.
pub fn pac_bound(inputs: &BoundInputs, c_cover: f64) -> Result<f64> {
    inputs.validate()?;
    if !(c_cover >= 0.0 && c_cover.is_finite()) {
        return Err(Error::InvalidConfig(format!("c_cover must be non-negative, got {c_cover}")));
    }
    let n = inputs.n as f64;
    let numerator = inputs.kl_value + (n / inputs.delta).ln() + c_cover * inputs.p as f64;
    Ok(inputs.empirical_sam_loss + inputs.l_max / n.sqrt() + (numerator / (2.0 * (n - 1.0))).sqrt())
}

/// The bound with and without its covering term, plus γ.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub p: usize,
    pub n: usize,
    pub delta: f64,
    pub kl: f64,
    pub gamma: f64,
    pub bound_with_cover: f64,
    pub bound_without_cover: f64,
}

impl BoundReport {
    pub const CSV_HEADER: &'static str = "p,n,delta,kl,gamma,bound_with_cover,bound_without_cover";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            self.p, self.n, self.delta, self.kl, self.gamma, self.bound_with_cover, self.bound_without_cover
        )
    }
}

pub fn bound_report(inputs: &BoundInputs, c_cover: f64, form: GammaForm) -> Result<BoundReport> {
    Ok(BoundReport {
        p: inputs.p,
        n: inputs.n,
        delta: inputs.delta,
        kl: inputs.kl_value,
        gamma: gamma_radius(inputs.p.max(1), inputs.n, form),
        bound_with_cover: pac_bound(inputs, c_cover)?,
        bound_without_cover: pac_bound(inputs, 0.0)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn inputs() -> BoundInputs {
        BoundInputs {
            p: 0,
            n: 101,
            delta: 0.5,
            empirical_sam_loss: 0.0,
            kl_value: 0.0,
            l_max: 0.0,
        }
    }

    #[test]
    fn kl_examples() {
        assert_eq!(gaussian_kl(&[0.0, 0.0], &[2.0, 2.0], 2.0).unwrap(), 0.0);
        assert!((gaussian_kl(&[1.0], &[1.0], 1.0).unwrap() - 0.5).abs() < 1e-15);
        let v = gaussian_kl(&[0.0, 0.0], &[2.0, 2.0], 1.0).unwrap();
        assert!((v - (1.0 - 2f64.ln())).abs() < 1e-12);
        assert!(matches!(
            gaussian_kl(&[0.0], &[0.0], 1.0),
            Err(Error::NonPositiveVariance { index: 0, .. })
        ));
    }

    #[test]
    fn gamma_examples() {
        assert!((gamma_radius(2, 100, GammaForm::Main) - 3.5601).abs() < 1e-3);
        assert_eq!(gamma_radius(5, 1, GammaForm::Main), 5f64.sqrt());
        assert_eq!(gamma_radius(5, 1, GammaForm::Linear), 5.0);
        let mut last = 0.0;
        for n in [10, 100, 1000, 10_000, 100_000, 1_000_000] {
            let g = gamma_radius(3, n, GammaForm::Main);
            assert!(g > last);
            last = g;
        }
    }

    #[test]
    fn bound_examples() {
        let b = pac_bound(&inputs(), 1.0).unwrap();
        let expect = (202f64.ln() / 200.0).sqrt();
        assert!((b - expect).abs() < 1e-15);
        assert!((b - 0.16294).abs() < 1e-4);

        let far = BoundInputs {
            n: 1_000_000_000,
            l_max: 1.0,
            empirical_sam_loss: 0.3,
            ..inputs()
        };
        assert!((pac_bound(&far, 1.0).unwrap() - 0.3).abs() < 1e-3);

        let a = BoundInputs { kl_value: 2.0, ..inputs() };
        let b2 = BoundInputs { kl_value: 4.0, ..inputs() };
        assert!(pac_bound(&b2, 1.0).unwrap() > pac_bound(&a, 1.0).unwrap());
    }

    #[test]
    fn bound_errors() {
        for delta in [0.0, 1.0, -0.1, f64::NAN] {
            let bad = BoundInputs { delta, ..inputs() };
            assert!(matches!(pac_bound(&bad, 1.0), Err(Error::InvalidDelta(_))));
        }
        let bad = BoundInputs { n: 1, ..inputs() };
        assert!(pac_bound(&bad, 1.0).is_err());
    }

    #[test]
    fn report_row() {
        let r = bound_report(&BoundInputs { p: 2, ..inputs() }, 1.0, GammaForm::Main).unwrap();
        assert!(r.bound_with_cover > r.bound_without_cover);
        assert_eq!(r.csv_row().split(',').count(), 7);
    }
}
