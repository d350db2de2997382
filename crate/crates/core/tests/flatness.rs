use rand::Rng;
use rand_distr::StandardNormal;

use flatopt::flatness::{
    hutchinson_trace, mc_smoothed_loss, modified_loss, weighted_traces, worst_case_ball_max, BallResolution,
    TableRow,
};
use flatopt::math::{stream_rng, SymMatrix, Stream};
use flatopt::objectives::{quadratic_objective, toy_landscape, DenseQuadratic, Objective, ToyLandscape};

fn random_sym(p: usize, seed: u64) -> SymMatrix {
    let mut rng = stream_rng(seed, Stream::Raw(0));
    let mut m = SymMatrix::zeros(p);
    for i in 0..p {
        for j in 0..=i {
            let v: f64 = rng.sample(StandardNormal);
            m.set(i, j, v);
            m.set(j, i, v);
        }
    }
    m
}

#[test]
fn ball_max_matches_boundary_sweep_on_convex_quadratic() {
    let q = quadratic_objective(vec![1.0, 6.0], vec![0.2, -0.5]).unwrap();
    let mu = [0.3, -0.2];
    let sigma: [f64; 2] = [0.02, 0.05];
    // convex: the maximum sits on the boundary εᵀΣ⁻¹ε = 2
    let n = 1_000_000;
    let sweep = (0..n)
        .map(|k| {
            let t = std::f64::consts::TAU * k as f64 / n as f64;
            let x = [mu[0] + (2.0 * sigma[0]).sqrt() * t.cos(), mu[1] + (2.0 * sigma[1]).sqrt() * t.sin()];
            q.value(&x, flatopt::Batch::Full)
        })
        .fold(f64::NEG_INFINITY, f64::max);
    let got = worst_case_ball_max(&q, &mu, &sigma, BallResolution::coarse()).unwrap();
    assert!(got <= sweep + 1e-12);
    assert!((sweep - got) / sweep.abs() < 1e-6, "{got} vs {sweep}");
}

#[test]
fn hutchinson_is_unbiased() {
    let p = 32;
    let h = random_sym(p, 11);
    let q = DenseQuadratic::new(h.clone(), vec![0.0; p]).unwrap();
    let mut rng = stream_rng(12, Stream::Raw(0));
    let sigma: Vec<f64> = (0..p).map(|_| rng.random_range(0.01..1.0)).collect();
    let mu: Vec<f64> = (0..p).map(|_| rng.sample(StandardNormal)).collect();
    let exact: f64 = (0..p).map(|i| sigma[i] * h.get(i, i)).sum();
    let est = hutchinson_trace(&q, &mu, &sigma, 4000, 5).unwrap();
    assert!((est.mean - exact).abs() < 3.0 * est.se, "{} ± {} vs {exact}", est.mean, est.se);
    let (tr, _) = weighted_traces(&q, &mu, &sigma).unwrap();
    assert!((tr - exact).abs() < 1e-12);
}

#[test]
fn weighted_square_trace_is_nonnegative() {
    let mut rng = stream_rng(13, Stream::Raw(0));
    for case in 0..100 {
        let p = rng.random_range(1..8);
        let q = DenseQuadratic::new(random_sym(p, 100 + case), vec![0.0; p]).unwrap();
        let sigma: Vec<f64> = (0..p).map(|_| rng.random_range(1e-4..10.0)).collect();
        let (_, tr_sq) = weighted_traces(&q, &vec![0.0; p], &sigma).unwrap();
        assert!(tr_sq >= 0.0, "case {case}: {tr_sq}");
    }
}

#[test]
fn smoothed_quadratic_example() {
    let q = quadratic_objective(vec![1.0], vec![0.0]).unwrap();
    let est = mc_smoothed_loss(&q, &[1.0], &[0.03], 20_000, 9).unwrap();
    assert!((est.mean - 0.515).abs() < 3.0 * est.se, "{} ± {}", est.mean, est.se);
}

#[test]
fn sharp_minimum_scores_worse_on_every_surrogate() {
    let toy = toy_landscape(ToyLandscape::default()).unwrap();
    let (sharp, flat) = toy.minima();
    let sigma = [0.1, 0.1];
    let score = |mu: [f64; 2]| {
        let mc = mc_smoothed_loss(&toy, &mu, &sigma, 4000, 1).unwrap().mean;
        let ball = worst_case_ball_max(&toy, &mu, &sigma, BallResolution::coarse()).unwrap();
        let (tr, tr_sq) = weighted_traces(&toy, &mu, &sigma).unwrap();
        let mfvi = modified_loss(TableRow::Mfvi, &toy, &mu, &sigma, 0.1).unwrap();
        let base = toy.eval(mu);
        [mc - base, ball - base, tr, tr_sq, mfvi.total() - base]
    };
    let (s, f) = (score(sharp), score(flat));
    // the gradient-norm row vanishes at any stationary point
    let sam = modified_loss(TableRow::Sam, &toy, &sharp, &sigma, 0.1).unwrap();
    assert!(sam.grad_norm_pen < 1e-6);
    for (i, (a, b)) in s.iter().zip(&f).enumerate() {
        assert!(a > b, "surrogate {i}: sharp {a} flat {b}");
    }
}
