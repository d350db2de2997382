use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{mc_smoothed_loss, worst_case_ball_max, BallResolution};
use crate::error::{Error, Result};
use crate::objectives::{toy_landscape, ToyLandscape};

/// The four surfaces drawn over the toy landscape.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Panel {
    /// `L`
    Original,
    /// `E L(x + Σ^{1/2}η)`
    Smoothed,
    /// `max_{εᵀΣ⁻¹ε ≤ p} L(x + ε)`
    BallMax,
    /// `L + ρ‖∇L‖`
    Taylor,
}

impl Panel {
    pub const ALL: [Panel; 4] = [Panel::Original, Panel::Smoothed, Panel::BallMax, Panel::Taylor];

    pub fn name(self) -> &'static str {
        match self {
            Panel::Original => "original",
            Panel::Smoothed => "smoothed",
            Panel::BallMax => "ball_max",
            Panel::Taylor => "taylor",
        }
    }

    pub fn letter(self) -> char {
        match self {
            Panel::Original => 'a',
            Panel::Smoothed => 'b',
            Panel::BallMax => 'c',
            Panel::Taylor => 'd',
        }
    }
}

impl fmt::Display for Panel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Panel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Panel::ALL
            .into_iter()
            .find(|p| p.name() == s || s.len() == 1 && s.starts_with(p.letter()))
            .ok_or_else(|| Error::InvalidConfig(format!("unknown panel {s:?}")))
    }
}

/// Lattice spacing of the default 200-point grid on `[-4, 4]`.
pub const DEFAULT_GRID_SCALE: f64 = 8.0 / 199.0;

/// Square lattice over the toy landscape. The perturbation radius is
/// `rho · grid_scale` in landscape units, so `rho` counts grid cells of the
/// default lattice.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LandscapeConfig {
    pub toy: ToyLandscape,
    pub rho: f64,
    pub grid_scale: f64,
    pub lo: f64,
    pub hi: f64,
    pub resolution: usize,
    pub mc_samples: usize,
    pub seed: u64,
    pub ball: BallResolution,
}

impl Default for LandscapeConfig {
    fn default() -> Self {
        Self {
            toy: ToyLandscape::default(),
            rho: 8.0,
            grid_scale: DEFAULT_GRID_SCALE,
            lo: -4.0,
            hi: 4.0,
            resolution: 200,
            mc_samples: 200,
            seed: 0,
            ball: BallResolution::coarse(),
        }
    }
}

impl LandscapeConfig {
    pub fn validate(&self) -> Result<()> {
        toy_landscape(self.toy.clone())?;
        let bad = |m: &str| Err(Error::InvalidConfig(m.into()));
        if !(self.rho >= 0.0 && self.rho.is_finite()) || !(self.grid_scale > 0.0 && self.grid_scale.is_finite()) {
            return bad("rho must be non-negative and grid_scale positive");
        }
        if !(self.lo < self.hi) || !self.lo.is_finite() || !self.hi.is_finite() {
            return bad("grid bounds must satisfy lo < hi");
        }
        if self.resolution < 2 {
            return bad("grid resolution must be at least 2");
        }
        if self.mc_samples < 2 {
            return bad("mc_samples must be at least 2");
        }
        Ok(())
    }

    pub fn effective_rho(&self) -> f64 {
        self.rho * self.grid_scale
    }

    /// Isotropic `Σ = (ρ²/2) I`.
    pub fn sigma(&self) -> [f64; 2] {
        let r = self.effective_rho();
        [r * r / 2.0; 2]
    }

    pub fn axis(&self) -> Vec<f64> {
        let n = self.resolution;
        (0..n)
            .map(|i| self.lo + (self.hi - self.lo) * i as f64 / (n - 1) as f64)
            .collect()
    }

    /// Lattice points, `x` varying fastest.
    pub fn points(&self) -> Vec<[f64; 2]> {
        let axis = self.axis();
        axis.iter().flat_map(|&y| axis.iter().map(move |&x| [x, y])).collect()
    }
}

pub fn landscape_value(config: &LandscapeConfig, panel: Panel, x: [f64; 2]) -> Result<f64> {
    let toy = &config.toy;
    let sigma = config.sigma();
    match panel {
        Panel::Original => Ok(toy.eval(x)),
        Panel::Smoothed => Ok(mc_smoothed_loss(toy, &x, &sigma, config.mc_samples, config.seed)?.mean),
        Panel::BallMax => worst_case_ball_max(toy, &x, &sigma, config.ball),
        Panel::Taylor => {
            let g = toy.grad(x);
            Ok(toy.eval(x) + config.effective_rho() * g[0].hypot(g[1]))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> LandscapeConfig {
        LandscapeConfig {
            resolution: 41,
            mc_samples: 50,
            ..Default::default()
        }
    }

    #[test]
    fn zero_radius_panels_agree() {
        let cfg = LandscapeConfig { rho: 0.0, ..small() };
        for x in [[0.3, -1.0], [-2.0, 0.1], [2.5, 2.5]] {
            let a = landscape_value(&cfg, Panel::Original, x).unwrap();
            for panel in [Panel::Smoothed, Panel::BallMax, Panel::Taylor] {
                assert_eq!(landscape_value(&cfg, panel, x).unwrap(), a, "{panel}");
            }
        }
    }

    #[test]
    fn ball_max_moves_argmin_to_wide_basin() {
        let cfg = small();
        let argmin = |panel| {
            cfg.points()
                .into_iter()
                .map(|x| (landscape_value(&cfg, panel, x).unwrap(), x))
                .min_by(|a, b| a.0.total_cmp(&b.0))
                .unwrap()
        };
        let (_, xc) = argmin(Panel::BallMax);
        assert!(xc[0] > 0.0, "{xc:?}");
        let (sharp, _) = cfg.toy.minima();
        let a = landscape_value(&cfg, Panel::Original, sharp).unwrap();
        let c = landscape_value(&cfg, Panel::BallMax, sharp).unwrap();
        assert!(c > a);
    }

    #[test]
    fn panel_names_parse() {
        for p in Panel::ALL {
            assert_eq!(p.name().parse::<Panel>().unwrap(), p);
            assert_eq!(p.letter().to_string().parse::<Panel>().unwrap(), p);
        }
        assert!("e".parse::<Panel>().is_err());
    }
}
