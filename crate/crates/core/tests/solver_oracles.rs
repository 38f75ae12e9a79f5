//! Minimizers against independent oracles: closed forms, a scalar fixed
//! point and brute-force grid search.

mod common;

use nalgebra::DVector;
use prefmono::solver::{Gauge, SolverSettings};
use prefmono::{Comparison, Dataset, LossFamily, Problem, ProblemSpace, Regularizer, ScoreModel};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn pair(family: LossFamily, comparisons: Vec<Comparison>, lambda: f64) -> Problem {
    Problem::new(
        Dataset::new(family.domain(), comparisons).unwrap(),
        family,
        ScoreModel::one_hot(ProblemSpace::new(["x"], ["y", "z"]).unwrap()),
        Regularizer::l2(lambda, DVector::zeros(2)).unwrap(),
    )
    .unwrap()
}

#[test]
fn gaussian_single_datum_closed_form() {
    for (c, lambda) in [(1.0, 1.0), (-0.4, 2.0), (3.0, 0.5)] {
        let p = pair(LossFamily::GaussianGbt, vec![Comparison::new("x", "y", "z", c)], lambda);
        let r = p.minimize(&p.default_init(), &SolverSettings::default()).unwrap();
        // stationarity: λt = c - 2t
        let t = c / (lambda + 2.0);
        assert!(r.converged);
        assert!((r.theta_star[0] - t).abs() < 1e-10 && (r.theta_star[1] + t).abs() < 1e-10);
    }
}

#[test]
fn bradley_terry_fixed_point() {
    let p = pair(LossFamily::BradleyTerry, vec![Comparison::new("x", "y", "z", 1.0)], 1.0);
    let r = p.minimize(&p.default_init(), &SolverSettings::default()).unwrap();
    // fixed-point iteration t ← σ(-2t), damped for convergence
    let mut t = 0.0f64;
    for _ in 0..200 {
        t = 0.5 * t + 0.5 / (1.0 + (2.0 * t).exp());
    }
    assert!((t - 0.337_416).abs() < 1e-6);
    assert!((r.theta_star[0] - t).abs() < 1e-9);
}

#[test]
fn one_dimensional_linear_problems_match_grid_search() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..10 {
        let space = ProblemSpace::new(["x0"], ["a", "b", "c"]).unwrap();
        let features: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
        let model = ScoreModel::linear(space, |_, y| vec![features[(y.as_bytes()[0] - b'a') as usize]]).unwrap();
        let family = LossFamily::UniformGbt;
        let comparisons = common::random_comparisons(
            &mut rng,
            &family,
            &common::names("x", 1),
            &["a".into(), "b".into(), "c".into()],
            5,
        );
        let p = Problem::new(
            Dataset::new(family.domain(), comparisons).unwrap(),
            family,
            model,
            Regularizer::l2(rng.random_range(0.1..2.0), DVector::zeros(1)).unwrap(),
        )
        .unwrap();
        let r = p.minimize(&p.default_init(), &SolverSettings::default()).unwrap();
        let loss = |t: f64| p.loss(&DVector::from_vec(vec![t])).unwrap();
        // coarse grid then golden-section refinement
        let mut best = (-20.0f64, f64::INFINITY);
        for i in 0..=4000 {
            let t = -20.0 + i as f64 * 0.01;
            let v = loss(t);
            if v < best.1 {
                best = (t, v);
            }
        }
        let (mut a, mut b) = (best.0 - 0.01, best.0 + 0.01);
        let g = (5f64.sqrt() - 1.0) / 2.0;
        for _ in 0..200 {
            let (c, d) = (b - g * (b - a), a + g * (b - a));
            if loss(c) < loss(d) {
                b = d
            } else {
                a = c
            }
        }
        assert!((r.theta_star[0] - 0.5 * (a + b)).abs() < 1e-6);
        assert!(p.certify_minimum(&r.theta_star).unwrap().is_strict_local_min);
    }
}

#[test]
fn warm_start_reaches_the_same_optimum() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..20 {
        let sc = common::random_convex_scenario(&mut rng);
        let settings = SolverSettings::default();
        let cold = sc
            .problem
            .minimize(&DVector::zeros(sc.problem.dim()), &settings)
            .unwrap();
        let far = DVector::from_fn(sc.problem.dim(), |_, _| rng.random_range(-3.0..3.0));
        let warm = sc.problem.minimize(&far, &settings).unwrap();
        assert!(cold.converged && warm.converged, "{}", sc.label);
        assert!((cold.theta_star - warm.theta_star).amax() < 1e-8, "{}", sc.label);
    }
}

#[test]
fn gauge_fixing_is_rejected_with_a_regularizer() {
    let p = pair(LossFamily::GaussianGbt, vec![Comparison::new("x", "y", "z", 1.0)], 1.0);
    let settings = SolverSettings {
        gauge: Gauge::MeanZeroPerBackground,
        ..SolverSettings::default()
    };
    assert!(p.minimize(&p.default_init(), &settings).is_err());
}
