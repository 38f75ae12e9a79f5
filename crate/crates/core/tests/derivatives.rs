//! Analytic derivatives against finite differences, plus structural
//! identities of the losses and score models.

mod common;

use common::{central_difference, relative_error};
use nalgebra::DVector;
use prefmono::loss::{sigmoid, softplus};
use prefmono::{LossFamily, ProblemSpace, RootLaw, ScoreModel};
use proptest::prelude::*;

fn smooth_family() -> impl Strategy<Value = LossFamily> {
    prop_oneof![
        Just(LossFamily::BradleyTerry),
        Just(LossFamily::UniformGbt),
        Just(LossFamily::GaussianGbt),
        Just(LossFamily::Ipo),
        Just(LossFamily::Gbt(RootLaw::TwoPoint)),
        Just(LossFamily::Gbt(RootLaw::Uniform { lo: -3.0, hi: 3.0 })),
    ]
}

fn value_in(family: &LossFamily, u: f64) -> f64 {
    let domain = family.domain();
    match (domain.min(), domain.max()) {
        (Some(lo), Some(hi)) if domain.is_interval() => lo + (hi - lo) * u,
        (Some(lo), Some(hi)) => {
            if u < 0.5 {
                lo
            } else {
                hi
            }
        }
        _ => 6.0 * u - 3.0,
    }
}

proptest! {
    #[test]
    fn loss_derivatives_match_finite_differences(family in smooth_family(), s in -12.0f64..12.0, u in 0.0f64..1.0) {
        let c = value_in(&family, u);
        let fd1 = central_difference(|t| family.loss_value(t, c).unwrap(), s, 1e-5);
        let fd2 = central_difference(|t| family.dloss_ds(t, c).unwrap(), s, 1e-5);
        prop_assert!(relative_error(family.dloss_ds(s, c).unwrap(), fd1, 1e-4) < 1e-6);
        prop_assert!(relative_error(family.d2loss_ds2(s, c).unwrap(), fd2, 1e-4) < 1e-6);
    }

    #[test]
    fn interval_cross_partial_matches_finite_differences(family in smooth_family(), s in -8.0f64..8.0, u in 0.05f64..0.95) {
        prop_assume!(family.domain().is_interval());
        let c = value_in(&family, u);
        let fd = central_difference(|t| family.dloss_ds(s, t).unwrap(), c, 1e-5);
        prop_assert!((family.dcds_cross(s, c).unwrap() - fd).abs() < 1e-7);
    }

    #[test]
    fn convex_losses_have_nonnegative_curvature(family in smooth_family(), s in -30.0f64..30.0, u in 0.0f64..1.0) {
        let c = value_in(&family, u);
        prop_assert!(family.d2loss_ds2(s, c).unwrap() >= 0.0);
        prop_assert!(family.loss_value(s, c).unwrap().is_finite());
    }

    #[test]
    fn bradley_terry_is_softplus(s in -40.0f64..40.0) {
        let bt = LossFamily::BradleyTerry;
        prop_assert!((bt.loss_value(s, 1.0).unwrap() - softplus(-s)).abs() < 1e-12);
        prop_assert!((bt.dloss_ds(s, 1.0).unwrap() + sigmoid(-s)).abs() < 1e-15);
        prop_assert!((bt.loss_value(s, -1.0).unwrap() - bt.loss_value(-s, 1.0).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn two_point_root_law_is_log_cosh(s in -50.0f64..50.0) {
        let root = RootLaw::TwoPoint;
        let expected = s.abs() + (-2.0 * s.abs()).exp().ln_1p() - std::f64::consts::LN_2;
        prop_assert!((root.cumulant(s).unwrap() - expected).abs() < 1e-12);
        prop_assert!((root.cumulant_prime(s).unwrap() - s.tanh()).abs() < 1e-15);
    }

    #[test]
    fn score_gradients_match_finite_differences(seed in 0u64..1000, kind in 0usize..3) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let space = ProblemSpace::new(["p", "q"], ["a", "b", "c"]).unwrap();
        let model = match kind {
            0 => ScoreModel::one_hot(space),
            1 => common::random_linear(&mut rng, space, 4),
            _ => ScoreModel::dpo_softmax(space, &[0.3, -0.1, 0.0, 0.5, 0.2, -0.7], 0.4).unwrap(),
        };
        let theta = DVector::from_fn(model.dim(), |_, _| rng.random_range(-2.0..2.0));
        for (x, y, z) in [(0, 0, 1), (1, 2, 0)] {
            let g = model.score_gradient_at(&theta, x, y).unwrap();
            let gd = model.score_difference_gradient_at(&theta, x, y, z).unwrap();
            let h = model.score_hessian_at(&theta, x, y).unwrap();
            for i in 0..model.dim() {
                let bump = |t: f64| {
                    let mut th = theta.clone();
                    th[i] = t;
                    th
                };
                let fd = central_difference(|t| model.score_at(&bump(t), x, y).unwrap(), theta[i], 1e-6);
                prop_assert!((g[i] - fd).abs() < 1e-8);
                let fd = central_difference(|t| model.score_difference_at(&bump(t), x, y, z).unwrap(), theta[i], 1e-6);
                prop_assert!((gd[i] - fd).abs() < 1e-8);
                for j in 0..model.dim() {
                    let fd = central_difference(|t| model.score_gradient_at(&bump(t), x, y).unwrap()[j], theta[i], 1e-6);
                    prop_assert!((h[(i, j)] - fd).abs() < 1e-7);
                }
            }
            let diff = model.score_difference_at(&theta, x, y, z).unwrap();
            let by_parts = model.score_at(&theta, x, y).unwrap() - model.score_at(&theta, x, z).unwrap();
            prop_assert!((diff - by_parts).abs() < 1e-12);
            let p = model.probabilities_at(&theta, x).unwrap();
            prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }
}

#[test]
fn uniform_root_law_stays_accurate_across_branches() {
    // log(sinh s / s) against a long Taylor series in exact-ish arithmetic
    let reference = |s: f64| {
        let (mut term, mut sum) = (1.0f64, 0.0f64);
        for k in 1..60 {
            let m = (2 * k) as f64;
            term *= s * s / (m * (m + 1.0));
            sum += term;
        }
        sum.ln_1p()
    };
    let root = RootLaw::Uniform { lo: -1.0, hi: 1.0 };
    for s in [1e-6, 5e-3, 0.0099, 0.0101, 0.3, 0.999, 1.001, 2.5, 7.0] {
        let got = root.cumulant(s).unwrap();
        assert!(
            relative_error(got, reference(s), 0.0) < 1e-13,
            "s = {s}: {got} vs {}",
            reference(s)
        );
    }
}

#[test]
fn slic_kink_is_not_differentiable() {
    let slic = LossFamily::Slic;
    assert!(slic.dloss_ds(1.0, 1.0).is_err());
    assert!(slic.dloss_ds(-1.0, -1.0).is_err());
    assert_eq!(slic.dloss_ds(0.5, 1.0).unwrap(), -1.0);
    assert_eq!(slic.dloss_ds(1.5, 1.0).unwrap(), 0.0);
}
