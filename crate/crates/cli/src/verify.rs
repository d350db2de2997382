//! Named invariant suites run by `flatopt verify`.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use flatopt::flatness::{
    prop1_check, prop3_check, trajectory_order_check, upper_bound_check, BallResolution, OrderReport,
    TrajectoryKind,
};
use flatopt::math::{stream_rng, Stream, SymMatrix};
use flatopt::objectives::{quadratic_objective, toy_landscape, DenseQuadratic, Linear, Quartic, ToyLandscape};
use flatopt::pacbayes::{gamma_radius, gaussian_kl, pac_bound, BoundInputs, GammaForm};

use crate::error::{ConfigError, Result};

pub const SUITES: [&str; 7] = ["prop1", "prop2", "prop3", "prop4", "upperbound", "kl", "bound"];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub check: String,
    pub value: f64,
    pub tolerance: f64,
    pub pass: bool,
}

fn at_most(check: impl Into<String>, value: f64, tolerance: f64) -> Check {
    Check {
        check: check.into(),
        value,
        tolerance,
        pass: value <= tolerance,
    }
}

fn at_least(check: impl Into<String>, value: f64, tolerance: f64) -> Check {
    Check {
        check: check.into(),
        value,
        tolerance,
        pass: value >= tolerance,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub suite: String,
    pub pass: bool,
    pub checks: Vec<Check>,
}

/// Expands `all` and rejects unknown names.
pub fn resolve_suites(name: &str) -> Result<Vec<&'static str>, ConfigError> {
    if name == "all" {
        return Ok(SUITES.to_vec());
    }
    SUITES
        .iter()
        .find(|s| **s == name)
        .map(|s| vec![*s])
        .ok_or_else(|| ConfigError::UnknownSuite(name.to_string()))
}

/// Runs the named suite (or all of them, in parallel on the current pool).
pub fn run(name: &str) -> Result<VerifyReport> {
    let suites = resolve_suites(name)?;
    let per_suite: Vec<Vec<Check>> = suites.par_iter().map(|s| run_one(s)).collect::<Result<_>>()?;
    let checks: Vec<Check> = per_suite.into_iter().flatten().collect();
    Ok(VerifyReport {
        suite: name.to_string(),
        pass: checks.iter().all(|c| c.pass),
        checks,
    })
}

fn run_one(suite: &str) -> Result<Vec<Check>> {
    Ok(match suite {
        "prop1" => prop1()?,
        "prop2" => prop2()?,
        "prop3" => prop3()?,
        "prop4" => prop4()?,
        "upperbound" => upperbound()?,
        "kl" => kl()?,
        "bound" => bound()?,
        other => return Err(ConfigError::UnknownSuite(other.to_string()).into()),
    })
}

fn log_uniform(rng: &mut impl Rng, lo: f64, hi: f64) -> f64 {
    (lo.ln() + rng.random::<f64>() * (hi.ln() - lo.ln())).exp()
}

fn prop1() -> Result<Vec<Check>> {
    let quartic = Quartic::new(vec![1.0, 0.5], vec![0.5, 2.0], vec![0.0, 0.0])?;
    let toy = toy_landscape(ToyLandscape::default())?;
    let rhos = [0.1, 0.05, 0.025, 0.0125];
    let a = prop1_check(&quartic, &[0.8, -0.6], &[1.0, 1.0], &rhos, BallResolution::dense())?;
    let b = prop1_check(&toy, &[1.0, 0.8], &[1.0, 1.0], &rhos, BallResolution::dense())?;
    Ok(vec![
        at_most("prop1/quartic |slope - 2|", (a.slope - 2.0).abs(), 0.2),
        at_most("prop1/toy |slope - 2|", (b.slope - 2.0).abs(), 0.2),
    ])
}

fn trajectory_checks(prefix: &str, r: &OrderReport, intermediate: bool) -> Vec<Check> {
    let run = &r.runs[0];
    let (modified, slope) = if intermediate {
        (run.deviation_intermediate.unwrap_or(f64::NAN), r.slope_intermediate.unwrap_or(f64::NAN))
    } else {
        (run.deviation_modified, r.slope_modified)
    };
    vec![
        at_least(format!("{prefix} deviation ratio"), run.deviation_original / modified, 2.0),
        at_most(format!("{prefix} |order - 2|"), (slope - 2.0).abs(), 0.4),
    ]
}

const TRAJ_CURVATURE: [f64; 2] = [1.0, 3.0];
const TRAJ_START: [f64; 2] = [1.0, 1.0];

fn iso(rho: f64) -> [f64; 2] {
    [rho * rho / 2.0; 2]
}

fn prop2() -> Result<Vec<Check>> {
    let q = quadratic_objective(TRAJ_CURVATURE.to_vec(), vec![0.0, 0.0])?;
    let small = trajectory_order_check(TrajectoryKind::Sam, &q, &TRAJ_START, &iso(1e-3), 0.01, 100, 3)?;
    let wide = trajectory_order_check(TrajectoryKind::Sam, &q, &TRAJ_START, &iso(0.05), 0.01, 100, 3)?;
    let mut checks = trajectory_checks("prop2/sam rho=1e-3", &small, false);
    checks.extend(trajectory_checks("prop2/sam rho=0.05 intermediate form", &wide, true));
    Ok(checks)
}

fn prop4() -> Result<Vec<Check>> {
    let q = quadratic_objective(TRAJ_CURVATURE.to_vec(), vec![0.0, 0.0])?;
    let r = trajectory_order_check(TrajectoryKind::MfviExpected, &q, &TRAJ_START, &iso(0.05), 0.01, 100, 3)?;
    Ok(trajectory_checks("prop4/expected mfvi rho=0.05", &r, false))
}

fn prop3() -> Result<Vec<Check>> {
    let mut rng = stream_rng(12, Stream::Raw(0));
    let mut checks = Vec::new();
    for case in 0..20u64 {
        let p = rng.random_range(1..=16);
        let mut h = SymMatrix::zeros(p);
        for i in 0..p {
            for j in 0..=i {
                h.set(i, j, rng.sample::<f64, _>(StandardNormal));
            }
        }
        let b: Vec<f64> = (0..p).map(|_| rng.sample(StandardNormal)).collect();
        let mu: Vec<f64> = (0..p).map(|_| rng.sample(StandardNormal)).collect();
        let sigma: Vec<f64> = (0..p).map(|_| log_uniform(&mut rng, 1e-3, 1.0)).collect();
        let q = DenseQuadratic::new(h, b)?;
        let r = prop3_check(&q, &mu, &sigma, 100_000, 100 + case)?;
        checks.push(at_most(format!("prop3/quadratic {case} (p={p}) |z|"), r.z.abs(), 3.0));
    }
    Ok(checks)
}

fn upperbound() -> Result<Vec<Check>> {
    let n = 4000;
    let res = BallResolution::dense();
    let mut checks = Vec::new();
    let quadratics = [
        (vec![1.0], vec![0.0], vec![0.5], 0.3),
        (vec![1.0, 10.0], vec![0.0, 0.0], vec![0.0, 0.0], 0.1),
        (vec![2.0, 0.5], vec![1.0, -1.0], vec![0.3, 2.0], 0.8),
        (vec![1.0, 2.0, 3.0], vec![0.0; 3], vec![1.0, -1.0, 0.5], 0.5),
        (vec![5.0, 5.0, 0.1], vec![0.2, 0.0, 0.0], vec![0.0; 3], 1.0),
    ];
    for (i, (a, b, mu, rho)) in quadratics.into_iter().enumerate() {
        let p = mu.len();
        let q = quadratic_objective(a, b)?;
        let r = upper_bound_check(&q, &mu, &vec![rho * rho / p as f64; p], n, i as u64, res)?;
        checks.push(at_least(format!("upperbound/quadratic {i} margin"), r.margin, 0.0));
    }
    let lin = Linear::new(vec![1.0, -2.0, 0.5])?;
    let r = upper_bound_check(&lin, &[0.3, 0.1, -1.0], &[0.1, 0.2, 0.05], n, 9, res)?;
    checks.push(at_least("upperbound/linear margin", r.margin, 0.0));

    let toy = toy_landscape(ToyLandscape::default())?;
    let mut rng = stream_rng(15, Stream::Raw(0));
    let mut holds = 0;
    for i in 0..50 {
        let mu = [rng.random_range(-4.0..4.0), rng.random_range(-4.0..4.0)];
        let rho: f64 = rng.random_range(0.05..=1.0);
        if upper_bound_check(&toy, &mu, &[rho * rho / 2.0; 2], n, 1000 + i, res)?.holds {
            holds += 1;
        }
    }
    checks.push(at_least("upperbound/toy cases holding (of 50)", holds as f64, 48.0));
    Ok(checks)
}

/// `∫ q ln(q/p)` for `q = N(m, v)`, `p = N(0, s0sq)` by composite Simpson
/// in the standardized variable over `[−12, 12]`.
fn kl_quadrature(m: f64, v: f64, s0sq: f64) -> f64 {
    let n = 20_000;
    let (lo, hi) = (-12.0, 12.0);
    let h = (hi - lo) / n as f64;
    let tau = 2.0 * std::f64::consts::PI;
    let f = |z: f64| {
        let x = m + v.sqrt() * z;
        let log_q = -0.5 * z * z - 0.5 * (tau * v).ln();
        let log_p = -0.5 * x * x / s0sq - 0.5 * (tau * s0sq).ln();
        (-0.5 * z * z).exp() / tau.sqrt() * (log_q - log_p)
    };
    let mut s = f(lo) + f(hi);
    for i in 1..n {
        s += f(lo + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

fn kl() -> Result<Vec<Check>> {
    let half_ln = gaussian_kl(&[0.0, 0.0], &[2.0, 2.0], 1.0)?;
    let unit = gaussian_kl(&[1.0], &[1.0], 1.0)?;
    let prior = gaussian_kl(&[0.0; 3], &[0.7; 3], 0.7)?;
    let mut rng = stream_rng(13, Stream::Raw(0));
    let mut worst: f64 = 0.0;
    let mut min_kl = f64::INFINITY;
    for _ in 0..100 {
        let m = rng.random_range(-3.0..3.0);
        let v = log_uniform(&mut rng, 0.05, 20.0);
        let s0sq = log_uniform(&mut rng, 0.05, 20.0);
        let formula = gaussian_kl(&[m], &[v], s0sq)?;
        min_kl = min_kl.min(formula);
        worst = worst.max((formula - kl_quadrature(m, v, s0sq)).abs());
    }
    Ok(vec![
        at_most("kl/1 - ln 2 case error", (half_ln - (1.0 - 2f64.ln())).abs(), 1e-10),
        at_most("kl/unit mean case error", (unit - 0.5).abs(), 1e-12),
        at_most("kl/prior is zero", prior.abs(), 0.0),
        at_most("kl/max quadrature error (100 cases)", worst, 1e-8),
        at_least("kl/min over random cases", min_kl, 0.0),
    ])
}

fn bound() -> Result<Vec<Check>> {
    let arithmetic = BoundInputs {
        p: 0,
        n: 101,
        delta: 0.5,
        empirical_sam_loss: 0.0,
        kl_value: 0.0,
        l_max: 0.0,
    };
    let want = (202f64.ln() / 200.0).sqrt();
    let limit = BoundInputs {
        p: 10,
        n: 1_000_000_000,
        delta: 0.05,
        empirical_sam_loss: 0.3,
        kl_value: 5.0,
        l_max: 1.0,
    };
    let mut rng = stream_rng(14, Stream::Raw(0));
    let mut violations = 0;
    for _ in 0..1000 {
        let base = BoundInputs {
            p: rng.random_range(1..1000),
            n: rng.random_range(2..100_000),
            delta: rng.random_range(0.001..0.999),
            empirical_sam_loss: rng.random_range(0.0..2.0),
            kl_value: rng.random_range(0.0..1000.0),
            l_max: rng.random_range(0.0..5.0),
        };
        let b0 = pac_bound(&base, 1.0)?;
        let more_n = BoundInputs {
            n: base.n + 1 + base.n / 2,
            ..base.clone()
        };
        let more_kl = BoundInputs {
            kl_value: base.kl_value * 2.0 + 0.1,
            ..base.clone()
        };
        let less_delta = BoundInputs {
            delta: base.delta * 0.5,
            ..base.clone()
        };
        if pac_bound(&more_n, 1.0)? > b0 || pac_bound(&more_kl, 1.0)? <= b0 || pac_bound(&less_delta, 1.0)? < b0 {
            violations += 1;
        }
    }
    let gamma = gamma_radius(2, 100, GammaForm::Main);
    Ok(vec![
        at_most("bound/arithmetic case error", (pac_bound(&arithmetic, 1.0)? - want).abs(), 1e-12),
        at_most("bound/large-n limit gap", pac_bound(&limit, 1.0)? - limit.empirical_sam_loss, 1e-3),
        at_most("bound/gamma(2, 100) error", (gamma - 3.5601).abs(), 1e-3),
        at_most("bound/monotonicity violations (of 1000)", violations as f64, 0.0),
    ])
}
