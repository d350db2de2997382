//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::time::{Duration, Instant};

use rand::Rng;
use rand_distr::StandardNormal;

use flatopt::flatness::{
    prop1_check, prop3_check, trajectory_order_check, upper_bound_check, BallResolution, TrajectoryKind,
    DEFAULT_GRID_SCALE,
};
use flatopt::math::{stream_rng, CovarianceSpec, ParamVector, Stream, SymMatrix};
use flatopt::objectives::{quadratic_objective, toy_landscape, Batch, DenseQuadratic, Linear, Quartic, ToyLandscape};
use flatopt::optim::{
    sam_perturbation, step, Hyper, OptimizerConfig, OptimizerKind, OptimizerState, Penalty, Perturbation,
    StepSchedule,
};
use flatopt::pacbayes::{gamma_radius, gaussian_kl, pac_bound, BoundInputs, GammaForm};
use flatopt::train::{train, DatasetSpec, EpochParity, TrainConfig};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn main() {
    let criteria: Vec<(&str, u64, fn() -> Outcome)> = vec![
        ("constraint exactness", 5, constraint_exactness),
        ("first-order SAM residual order", 30, prop1_order),
        ("smoothed loss trace formula", 60, prop3_exactness),
        ("modified-flow trajectories", 120, trajectory),
        ("gaussian kl", 5, gaussian_kl_quadrature),
        ("pac bound sanity", 2, pac_bound_sanity),
        ("gaussian mean below ball max", 60, upper_bound_relation),
        ("wide-basin attraction", 120, wide_basin_attraction),
        ("two-moons training", 600, two_moons_training),
        ("zero-radius collapse", 10, zero_radius_collapse),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failures = 0;
    for (name, budget, run) in criteria {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let start = Instant::now();
        let mut result = run();
        let elapsed = start.elapsed();
        if elapsed > Duration::from_secs(budget) {
            result.pass = false;
            result.detail.push_str(&format!("; over runtime budget {budget} s"));
        }
        if !result.pass {
            failures += 1;
        }
        println!(
            "{} {name}: {} [{:.2} s / {budget} s]",
            if result.pass { "PASS" } else { "FAIL" },
            result.detail,
            elapsed.as_secs_f64()
        );
    }
    if failures > 0 {
        println!("{failures} criteria failed");
        std::process::exit(1);
    }
}

fn log_uniform(rng: &mut impl Rng, lo: f64, hi: f64) -> f64 {
    (lo.ln() + rng.random::<f64>() * (hi.ln() - lo.ln())).exp()
}

fn constraint_exactness() -> Outcome {
    let mut rng = stream_rng(11, Stream::Raw(0));
    let mut worst: f64 = 0.0;
    let mut degenerate = 0;
    for _ in 0..10_000 {
        let p = rng.random_range(1..=512);
        let scale = log_uniform(&mut rng, 1e-3, 1e3);
        let g: Vec<f64> = (0..p).map(|_| scale * rng.sample::<f64, _>(StandardNormal)).collect();
        let sigma: Vec<f64> = (0..p).map(|_| log_uniform(&mut rng, 1e-4, 1e2)).collect();
        let (eps, deg) = sam_perturbation(&g, &sigma);
        if deg {
            degenerate += 1;
            continue;
        }
        let q: f64 = eps.iter().zip(&sigma).map(|(e, s)| e * e / s).sum();
        worst = worst.max((q - p as f64).abs() / p as f64);
    }
    outcome(
        worst <= 1e-9 && degenerate == 0,
        format!("max |εᵀΣ⁻¹ε − p|/p = {worst:.2e} over 10⁴ draws (≤ 1e-9)"),
    )
}

fn prop1_order() -> Outcome {
    let quartic = Quartic::new(vec![1.0, 0.5], vec![0.5, 2.0], vec![0.0, 0.0]).unwrap();
    let toy = toy_landscape(ToyLandscape::default()).unwrap();
    let rhos = [0.1, 0.05, 0.025, 0.0125];
    let a = prop1_check(&quartic, &[0.8, -0.6], &[1.0, 1.0], &rhos, BallResolution::dense()).unwrap();
    let b = prop1_check(&toy, &[1.0, 0.8], &[1.0, 1.0], &rhos, BallResolution::dense()).unwrap();
    let ok = |s: f64| (1.8..=2.2).contains(&s);
    outcome(
        ok(a.slope) && ok(b.slope),
        format!(
            "log-log slopes: quartic {:.3}, toy {:.3} (band [1.8, 2.2])",
            a.slope, b.slope
        ),
    )
}

fn prop3_exactness() -> Outcome {
    let mut rng = stream_rng(12, Stream::Raw(0));
    let mut within = 0;
    let mut worst: f64 = 0.0;
    for case in 0..20 {
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
        let q = DenseQuadratic::new(h, b).unwrap();
        let r = prop3_check(&q, &mu, &sigma, 100_000, 100 + case).unwrap();
        worst = worst.max(r.z.abs());
        if r.z.abs() < 3.0 {
            within += 1;
        }
    }
    outcome(
        within >= 19,
        format!("{within}/20 random quadratics with |z| < 3 at n = 10⁵ (need ≥ 19); max |z| = {worst:.2}"),
    )
}

fn trajectory() -> Outcome {
    let q = quadratic_objective(vec![1.0, 3.0], vec![0.0, 0.0]).unwrap();
    let mu0 = [1.0, 1.0];
    let iso = |rho: f64| [rho * rho / 2.0; 2];
    let band = |s: f64| (1.6..=2.4).contains(&s);
    let ratio = |r: &flatopt::flatness::OrderReport| r.runs[0].deviation_original / r.runs[0].deviation_modified;

    let sam = trajectory_order_check(TrajectoryKind::Sam, &q, &mu0, &iso(1e-3), 0.01, 100, 3).unwrap();
    let sam_wide = trajectory_order_check(TrajectoryKind::Sam, &q, &mu0, &iso(0.05), 0.01, 100, 3).unwrap();
    let mfvi = trajectory_order_check(TrajectoryKind::MfviExpected, &q, &mu0, &iso(0.05), 0.01, 100, 3).unwrap();
    let sam_wide_int = sam_wide.runs[0].deviation_original / sam_wide.runs[0].deviation_intermediate.unwrap();
    let int_slope = sam_wide.slope_intermediate.unwrap();

    let pass = ratio(&sam) >= 2.0
        && band(sam.slope_modified)
        && ratio(&mfvi) >= 2.0
        && band(mfvi.slope_modified)
        && sam_wide_int >= 2.0
        && band(int_slope);
    outcome(
        pass,
        format!(
            "SAM ρ=1e-3: ratio {:.1}, order {:.3}; expected MFVI ρ=0.05: ratio {:.1}, order {:.3}; \
             SAM ρ=0.05 intermediate form: ratio {:.1}, order {:.3}; \
             SAM ρ=0.05 tabulated form (reported): ratio {:.1}, order {:.3} \
             (need ratio ≥ 2, order in [1.6, 2.4])",
            ratio(&sam),
            sam.slope_modified,
            ratio(&mfvi),
            mfvi.slope_modified,
            sam_wide_int,
            int_slope,
            ratio(&sam_wide),
            sam_wide.slope_modified,
        ),
    )
}

/// `∫ q ln(q/p)` for `q = N(m, v)`, `p = N(0, s0sq)` by composite Simpson
/// over `z = (x − m)/√v ∈ [−12, 12]`.
fn kl_quadrature(m: f64, v: f64, s0sq: f64) -> f64 {
    let n = 20_000;
    let (lo, hi) = (-12.0, 12.0);
    let h = (hi - lo) / n as f64;
    let f = |z: f64| {
        let x = m + v.sqrt() * z;
        let log_q = -0.5 * z * z - 0.5 * (2.0 * std::f64::consts::PI * v).ln();
        let log_p = -0.5 * x * x / s0sq - 0.5 * (2.0 * std::f64::consts::PI * s0sq).ln();
        let density = (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt();
        density * (log_q - log_p)
    };
    let mut s = f(lo) + f(hi);
    for i in 1..n {
        s += f(lo + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

fn gaussian_kl_quadrature() -> Outcome {
    let mut rng = stream_rng(13, Stream::Raw(0));
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let m = rng.random_range(-3.0..3.0);
        let v = log_uniform(&mut rng, 0.05, 20.0);
        let s0 = log_uniform(&mut rng, 0.05, 20.0);
        let formula = gaussian_kl(&[m], &[v], s0).unwrap();
        worst = worst.max((formula - kl_quadrature(m, v, s0)).abs());
    }
    let special = gaussian_kl(&[0.0, 0.0], &[2.0, 2.0], 1.0).unwrap();
    let special_err = (special - (1.0 - 2f64.ln())).abs();
    outcome(
        worst <= 1e-8 && special_err <= 1e-10,
        format!("max |formula − quadrature| = {worst:.2e} (≤ 1e-8); 1 − ln 2 case error {special_err:.1e} (≤ 1e-10)"),
    )
}

fn pac_bound_sanity() -> Outcome {
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
        let b0 = pac_bound(&base, 1.0).unwrap();
        let more_n = BoundInputs { n: base.n + 1 + base.n / 2, ..base.clone() };
        let more_kl = BoundInputs { kl_value: base.kl_value * 2.0 + 0.1, ..base.clone() };
        let less_delta = BoundInputs { delta: base.delta * 0.5, ..base.clone() };
        if pac_bound(&more_n, 1.0).unwrap() > b0
            || pac_bound(&more_kl, 1.0).unwrap() < b0
            || pac_bound(&less_delta, 1.0).unwrap() < b0
        {
            violations += 1;
        }
    }
    let gamma = gamma_radius(2, 100, GammaForm::Main);
    outcome(
        violations == 0 && (gamma - 3.5601).abs() <= 1e-3,
        format!("{violations} monotonicity violations in 10³ sweeps; γ(2, 100) = {gamma:.5} (3.5601 ± 1e-3)"),
    )
}

fn upper_bound_relation() -> Outcome {
    let n = 4000;
    let res = BallResolution::dense();
    let mut convex_fail = Vec::new();
    let quadratics = [
        (vec![1.0], vec![0.0], vec![0.5], 0.3),
        (vec![1.0, 10.0], vec![0.0, 0.0], vec![0.0, 0.0], 0.1),
        (vec![2.0, 0.5], vec![1.0, -1.0], vec![0.3, 2.0], 0.8),
        (vec![1.0, 2.0, 3.0], vec![0.0; 3], vec![1.0, -1.0, 0.5], 0.5),
        (vec![5.0, 5.0, 0.1], vec![0.2, 0.0, 0.0], vec![0.0; 3], 1.0),
    ];
    for (i, (a, b, mu, rho)) in quadratics.into_iter().enumerate() {
        let p = mu.len();
        let q = quadratic_objective(a, b).unwrap();
        let sigma = vec![rho * rho / p as f64; p];
        let r = upper_bound_check(&q, &mu, &sigma, n, i as u64, res).unwrap();
        if !r.holds {
            convex_fail.push(format!("quadratic {i} margin {:.3e}", r.margin));
        }
    }
    let lin = Linear::new(vec![1.0, -2.0, 0.5]).unwrap();
    let r = upper_bound_check(&lin, &[0.3, 0.1, -1.0], &[0.1, 0.2, 0.05], n, 9, res).unwrap();
    if !r.holds {
        convex_fail.push(format!("linear margin {:.3e}", r.margin));
    }

    let toy = toy_landscape(ToyLandscape::default()).unwrap();
    let mut rng = stream_rng(15, Stream::Raw(0));
    let mut toy_fail = Vec::new();
    for i in 0..50 {
        let mu = [rng.random_range(-4.0..4.0), rng.random_range(-4.0..4.0)];
        let rho: f64 = rng.random_range(0.05..=1.0);
        let sigma = [rho * rho / 2.0; 2];
        let r = upper_bound_check(&toy, &mu, &sigma, n, 1000 + i, res).unwrap();
        if !r.holds {
            toy_fail.push(format!("(μ = ({:.2}, {:.2}), ρ = {rho:.2}, margin {:.2e})", mu[0], mu[1], r.margin));
        }
    }
    let toy_hold = 50 - toy_fail.len();
    outcome(
        convex_fail.is_empty() && toy_hold >= 48,
        format!(
            "convex battery failures: {}; toy landscape holds in {toy_hold}/50 (need ≥ 48){}",
            if convex_fail.is_empty() { "none".to_string() } else { convex_fail.join(", ") },
            if toy_fail.is_empty() { String::new() } else { format!("; failures {}", toy_fail.join(" ")) }
        ),
    )
}

/// Number of uniform random starts on `[−4, 4]²` whose final iterate lies
/// within `WIDE_TOLERANCE` of the wide minimum.
fn wide_count(perturbation: Perturbation, rho: f64, momentum: f64, inits: &[[f64; 2]]) -> usize {
    let toy = toy_landscape(ToyLandscape::default()).unwrap();
    let (_, flat) = toy.minima();
    let mut wide = 0;
    for (i, x0) in inits.iter().enumerate() {
        let config = OptimizerConfig {
            perturbation,
            covariance: CovarianceSpec::isotropic(if perturbation == Perturbation::None { 0.0 } else { rho }),
            learned_sigma: false,
            penalty: Penalty::None,
            lr_mu: FIG_LR,
            lr_sigma: 0.0,
            momentum,
            schedule: StepSchedule::constant(),
            seed: i as u64,
        };
        let mut state = OptimizerState::new(ParamVector::new(x0.to_vec()).unwrap(), &config).unwrap();
        for _ in 0..FIG_STEPS {
            step(&mut state, &toy, Batch::Full, &config, 0).unwrap();
        }
        if (state.mu[0] - flat[0]).hypot(state.mu[1] - flat[1]) < WIDE_TOLERANCE {
            wide += 1;
        }
    }
    wide
}

const FIG_LR: f64 = 0.05;
const FIG_MOMENTUM: f64 = 0.9;
const FIG_STEPS: usize = 2000;
/// A third of the wide well's width.
const WIDE_TOLERANCE: f64 = 0.5;

fn wide_basin_attraction() -> Outcome {
    let mut rng = stream_rng(16, Stream::Raw(0));
    let inits: Vec<[f64; 2]> = (0..500)
        .map(|_| [rng.random_range(-4.0..4.0), rng.random_range(-4.0..4.0)])
        .collect();
    let rho = 8.0 * DEFAULT_GRID_SCALE;
    let counts = |momentum: f64| {
        (
            wide_count(Perturbation::None, 0.0, momentum, &inits),
            wide_count(Perturbation::WorstCase, rho, momentum, &inits),
            wide_count(Perturbation::Gaussian, rho, momentum, &inits),
        )
    };
    let (sgd, sam, rsam) = counts(FIG_MOMENTUM);
    let (sgd0, sam0, rsam0) = counts(0.0);
    outcome(
        sam > sgd && rsam > sgd,
        format!(
            "starts converging to the wide minimum (of 500) at ρ = 8 cells = {rho:.4}, momentum {FIG_MOMENTUM}: \
             SGD {sgd}, SAM {sam}, RandomSAM {rsam} (need SAM > SGD and RandomSAM > SGD); \
             without momentum, reported: SGD {sgd0}, SAM {sam0}, RandomSAM {rsam0}"
        ),
    )
}

fn training_config(kind: OptimizerKind, seed: u64) -> TrainConfig {
    TrainConfig {
        optimizer: kind,
        hyper: Hyper {
            seed,
            schedule: "50:0.2,75:0.04".parse().unwrap(),
            ..Hyper::default()
        },
        dataset: DatasetSpec::TwoMoons { n: 400, noise: 0.1 },
        n_test: 400,
        hidden: vec![32],
        label_smoothing: 0.1,
        epochs: 100,
        batch_size: 32,
        epoch_parity: EpochParity::Flops,
    }
}

fn two_moons_training() -> Outcome {
    let kinds = [
        OptimizerKind::Sgd,
        OptimizerKind::Sam,
        OptimizerKind::Rsam,
        OptimizerKind::Mfvi,
        OptimizerKind::Vsam,
    ];
    let mut pass = true;
    let mut parts = Vec::new();
    for kind in kinds {
        let mut train_acc = 0.0;
        let mut test_acc = 0.0;
        let mut reproducible = true;
        for seed in 1..=3 {
            let run = train(training_config(kind, seed)).unwrap();
            let last = run.last().unwrap();
            train_acc += last.train_acc / 3.0;
            test_acc += last.test_acc / 3.0;
            if seed == 1 {
                let again = train(training_config(kind, seed)).unwrap();
                let bits = |r: &[flatopt::train::EpochMetrics]| r.iter().map(|m| m.csv_row()).collect::<Vec<_>>();
                reproducible = bits(&run) == bits(&again);
            }
        }
        let ok = train_acc >= 0.95 && test_acc >= 0.90 && reproducible;
        pass &= ok;
        parts.push(format!(
            "{kind} train {train_acc:.4} test {test_acc:.4}{}",
            if reproducible { "" } else { " NOT REPRODUCIBLE" }
        ));
    }
    outcome(pass, format!("{} (need train ≥ 0.95, test ≥ 0.90, identical reruns)", parts.join(", ")))
}

fn zero_radius_collapse() -> Outcome {
    let q = quadratic_objective(vec![1.0, 3.0, 0.5], vec![0.2, -0.1, 0.0]).unwrap();
    let mu0 = vec![1.0, -1.0, 2.0];
    let steps = 200;
    let run = |kind: OptimizerKind, rho: f64| {
        let hyper = Hyper {
            rho,
            n_train: 100,
            seed: 5,
            ..Hyper::default()
        };
        let config = OptimizerConfig::preset(kind, &hyper, mu0.len()).unwrap();
        let mut state = OptimizerState::new(ParamVector::new(mu0.clone()).unwrap(), &config).unwrap();
        let mut path = vec![mu0.clone()];
        for _ in 0..steps {
            step(&mut state, &q, Batch::Full, &config, 0).unwrap();
            path.push(state.mu.to_vec());
        }
        path
    };
    let mut pass = true;
    let mut parts = Vec::new();
    for rho in [1e-2, 1e-3, 1e-4] {
        let sgd = run(OptimizerKind::Sgd, rho);
        for kind in [OptimizerKind::Sam, OptimizerKind::Rsam, OptimizerKind::Vsam] {
            let path = run(kind, rho);
            let dev = path
                .iter()
                .zip(&sgd)
                .map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt())
                .fold(0.0, f64::max);
            pass &= dev <= 10.0 * rho;
            parts.push(format!("{kind}@{rho:e}: {:.2}ρ", dev / rho));
        }
    }
    outcome(pass, format!("max deviation from SGD {} (need ≤ 10ρ)", parts.join(", ")))
}
