//! Random scenario generators shared by the integration tests.
#![allow(dead_code)]

use nalgebra::DVector;
use prefmono::{Comparison, Dataset, LossFamily, Mode, Problem, ProblemSpace, Regularizer, ScoreModel};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub struct Scenario {
    pub problem: Problem,
    pub x: String,
    pub y: String,
    pub z: String,
    pub mode: Mode,
    pub label: String,
}

pub fn names(prefix: &str, n: usize) -> Vec<String> {
    (0..n).map(|i| format!("{prefix}{i}")).collect()
}

fn random_value(rng: &mut ChaCha8Rng, family: &LossFamily) -> f64 {
    match family {
        LossFamily::BradleyTerry | LossFamily::Slic | LossFamily::Ipo => {
            if rng.random_bool(0.7) {
                1.0
            } else {
                -1.0
            }
        }
        LossFamily::UniformGbt => rng.random_range(-1.0..=1.0),
        _ => rng.random_range(-2.0..=2.0),
    }
}

pub fn random_comparisons(
    rng: &mut ChaCha8Rng,
    family: &LossFamily,
    backgrounds: &[String],
    alternatives: &[String],
    n: usize,
) -> Vec<Comparison> {
    (0..n)
        .map(|_| {
            let x = &backgrounds[rng.random_range(0..backgrounds.len())];
            let y = rng.random_range(0..alternatives.len());
            let z = (y + rng.random_range(1..alternatives.len())) % alternatives.len();
            let c = random_value(rng, family);
            Comparison::new(x, &alternatives[y], &alternatives[z], c).with_weight(rng.random_range(0.5..2.0))
        })
        .collect()
}

pub fn random_linear(rng: &mut ChaCha8Rng, space: ProblemSpace, dim: usize) -> ScoreModel {
    ScoreModel::linear(space, |_, _| (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap()
}

/// Convex, L2-regularized problem: Bradley-Terry audited by unequivocal
/// addition, uniform or Gaussian GBT audited by intensifying an existing
/// comparison.
pub fn random_convex_scenario(rng: &mut ChaCha8Rng) -> Scenario {
    let family = match rng.random_range(0..3) {
        0 => LossFamily::BradleyTerry,
        1 => LossFamily::UniformGbt,
        _ => LossFamily::GaussianGbt,
    };
    let backgrounds = names("x", rng.random_range(1..=2));
    let alternatives = names("a", rng.random_range(3..=4));
    let space = ProblemSpace::new(backgrounds.clone(), alternatives.clone()).unwrap();
    let linear = rng.random_bool(0.5);
    let model = if linear {
        random_linear(rng, space, 3)
    } else {
        ScoreModel::one_hot(space)
    };
    let lambda = 10f64.powf(rng.random_range(-1.0..1.0));
    let n = rng.random_range(2..=8);
    let comparisons = random_comparisons(rng, &family, &backgrounds, &alternatives, n);
    let (x, y, z, mode) = if family == LossFamily::BradleyTerry {
        let y = rng.random_range(0..alternatives.len());
        let z = (y + 1) % alternatives.len();
        (
            backgrounds[0].clone(),
            alternatives[y].clone(),
            alternatives[z].clone(),
            Mode::Unequivocal,
        )
    } else {
        let c = &comparisons[0];
        (c.x.clone(), c.y.clone(), c.z.clone(), Mode::Intensification)
    };
    let label = format!("{} {} λ={lambda:.3} n={n}", family.name(), model.kind());
    let dim = model.dim();
    let problem = Problem::new(
        Dataset::new(family.domain(), comparisons).unwrap(),
        family,
        model,
        Regularizer::l2(lambda, DVector::from_fn(dim, |_, _| rng.random_range(-0.5..0.5))).unwrap(),
    )
    .unwrap();
    Scenario {
        problem,
        x,
        y,
        z,
        mode,
        label,
    }
}

/// GBT with one-hot scores over `n_alternatives`, at most ten comparisons,
/// audited by intensifying the first comparison.
pub fn random_gbt_one_hot(rng: &mut ChaCha8Rng, n_alternatives: usize) -> Scenario {
    let family = if rng.random_bool(0.5) {
        LossFamily::UniformGbt
    } else {
        LossFamily::GaussianGbt
    };
    let backgrounds = names("x", 1);
    let alternatives = names("a", n_alternatives);
    let space = ProblemSpace::new(backgrounds.clone(), alternatives.clone()).unwrap();
    let n = rng.random_range(1..=10);
    let comparisons = random_comparisons(rng, &family, &backgrounds, &alternatives, n);
    let c = comparisons[0].clone();
    let lambda = 10f64.powf(rng.random_range(-1.0..1.0));
    let label = format!("{} one_hot |A|={n_alternatives} n={n}", family.name());
    let problem = Problem::new(
        Dataset::new(family.domain(), comparisons).unwrap(),
        family,
        ScoreModel::one_hot(space),
        Regularizer::l2(lambda, DVector::zeros(n_alternatives)).unwrap(),
    )
    .unwrap();
    Scenario {
        problem,
        x: c.x,
        y: c.y,
        z: c.z,
        mode: Mode::Intensification,
        label,
    }
}

/// Central finite difference of `f` at `t`.
pub fn central_difference(f: impl Fn(f64) -> f64, t: f64, h: f64) -> f64 {
    (f(t + h) - f(t - h)) / (2.0 * h)
}

/// `|a - b| / max(|a|, |b|, floor)`.
pub fn relative_error(a: f64, b: f64, floor: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(floor)
}
