//! WebAssembly bindings for the static demo page in `www/`.

use wasm_bindgen::prelude::*;

use flatopt::flatness::{landscape_value, BallResolution, LandscapeConfig, Panel, DEFAULT_GRID_SCALE};
use flatopt::objectives::{toy_landscape, Batch, ToyLandscape};
use flatopt::optim::{step, Hyper, OptimizerConfig, OptimizerKind, OptimizerState};
use flatopt::pacbayes::{bound_report, gaussian_kl, BoundInputs, GammaForm};
use flatopt::{Error, ParamVector};

fn js(e: Error) -> JsError {
    JsError::new(&e.to_string())
}

/// Row-major panel values over a `resolution × resolution` grid on
/// `[-4, 4]²` (x fastest).
pub fn panel_grid(panel: &str, rho: f64, resolution: usize, mc_samples: usize) -> flatopt::Result<Vec<f64>> {
    let panel: Panel = panel.parse()?;
    let cfg = LandscapeConfig {
        rho,
        resolution,
        mc_samples,
        ball: BallResolution {
            directions: 64,
            shells: 4,
        },
        ..LandscapeConfig::default()
    };
    cfg.validate()?;
    cfg.points().into_iter().map(|x| landscape_value(&cfg, panel, x)).collect()
}

/// Flattened `[x0, y0, x1, y1, …]` path of an optimizer on the toy
/// landscape, `steps + 1` points. `rho` is in grid cells, as for the panels.
pub fn trajectory(
    optimizer: &str,
    start: [f64; 2],
    rho: f64,
    lr: f64,
    momentum: f64,
    steps: usize,
    seed: u64,
) -> flatopt::Result<Vec<f64>> {
    let kind: OptimizerKind = optimizer.parse()?;
    let toy = toy_landscape(ToyLandscape::default())?;
    let hyper = Hyper {
        rho: rho * DEFAULT_GRID_SCALE,
        sigma0: Some(1.0),
        n_train: 100,
        weight_decay: 0.0,
        lr,
        lr_sigma: lr,
        momentum,
        seed,
        ..Hyper::default()
    };
    let cfg = OptimizerConfig::preset(kind, &hyper, 2)?;
    let mut state = OptimizerState::new(ParamVector::new(start.to_vec())?, &cfg)?;
    let mut path = Vec::with_capacity(2 * (steps + 1));
    path.extend_from_slice(&start);
    for _ in 0..steps {
        step(&mut state, &toy, Batch::Full, &cfg, 0)?;
        path.extend_from_slice(state.mu.as_slice());
    }
    Ok(path)
}

/// `[kl, gamma, bound_with_cover, bound_without_cover]`.
#[allow(clippy::too_many_arguments)]
pub fn kl_and_bound(
    mu: &[f64],
    sigma2: &[f64],
    sigma0_sq: f64,
    n: usize,
    delta: f64,
    empirical_loss: f64,
    l_max: f64,
    c_cover: f64,
) -> flatopt::Result<Vec<f64>> {
    let kl = gaussian_kl(mu, sigma2, sigma0_sq)?;
    let inputs = BoundInputs {
        p: mu.len(),
        n,
        delta,
        empirical_sam_loss: empirical_loss,
        kl_value: kl,
        l_max,
    };
    let r = bound_report(&inputs, c_cover, GammaForm::Main)?;
    Ok(vec![kl, r.gamma, r.bound_with_cover, r.bound_without_cover])
}

#[wasm_bindgen(js_name = panelGrid)]
pub fn panel_grid_js(panel: &str, rho: f64, resolution: usize, mc_samples: usize) -> Result<Vec<f64>, JsError> {
    panel_grid(panel, rho, resolution, mc_samples).map_err(js)
}

#[wasm_bindgen(js_name = toyTrajectory)]
#[allow(clippy::too_many_arguments)]
pub fn trajectory_js(
    optimizer: &str,
    x0: f64,
    y0: f64,
    rho: f64,
    lr: f64,
    momentum: f64,
    steps: usize,
    seed: u64,
) -> Result<Vec<f64>, JsError> {
    trajectory(optimizer, [x0, y0], rho, lr, momentum, steps, seed).map_err(js)
}

#[wasm_bindgen(js_name = klBound)]
#[allow(clippy::too_many_arguments)]
pub fn kl_bound_js(
    mu: &[f64],
    sigma2: &[f64],
    sigma0_sq: f64,
    n: usize,
    delta: f64,
    empirical_loss: f64,
    l_max: f64,
    c_cover: f64,
) -> Result<Vec<f64>, JsError> {
    kl_and_bound(mu, sigma2, sigma0_sq, n, delta, empirical_loss, l_max, c_cover).map_err(js)
}
