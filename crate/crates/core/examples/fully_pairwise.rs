//! Fully-pairwise and probability audits: one-hot Gaussian scores on a
//! random dataset, then linear features where a third alternative gains on y.

use nalgebra::DVector;
use prefmono::{Auditor, Comparison, Dataset, LossFamily, Problem, ProblemSpace, Regularizer, ScoreModel};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> prefmono::Result<()> {
    let auditor = Auditor::default();
    let names = ["a", "b", "c", "d", "e"];
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut comparisons = vec![Comparison::new("x", "a", "b", 0.4)];
    for _ in 0..8 {
        let y = rng.random_range(0..names.len());
        let z = (y + rng.random_range(1..names.len())) % names.len();
        comparisons.push(Comparison::new("x", names[y], names[z], rng.random_range(-2.0..2.0)));
    }
    let problem = Problem::new(
        Dataset::new(LossFamily::GaussianGbt.domain(), comparisons)?,
        LossFamily::GaussianGbt,
        ScoreModel::one_hot(ProblemSpace::new(["x"], names)?),
        Regularizer::l2(0.5, DVector::zeros(5))?,
    )?;
    let audit = auditor.audit_fully_pairwise_and_probability(&problem, "x", "a", "b", 1e-3)?;
    println!("one-hot Gaussian: {:?}", audit.local.verdicts);
    println!("  implication consistent: {}", audit.implication_consistent);

    let linear = ScoreModel::linear(ProblemSpace::new(["x"], ["y", "z", "w"])?, |_, y| match y {
        "y" => vec![1.0, 0.0],
        "z" => vec![0.0, 1.0],
        _ => vec![1.2, 0.1],
    })?;
    let problem = Problem::new(
        Dataset::new(
            LossFamily::BradleyTerry.domain(),
            vec![Comparison::new("x", "y", "z", 1.0)],
        )?,
        LossFamily::BradleyTerry,
        linear,
        Regularizer::l2(1.0, DVector::zeros(2))?,
    )?;
    let audit = auditor.audit_fully_pairwise_and_probability(&problem, "x", "y", "z", 1e-3)?;
    let shift = audit.local.shift.as_ref().expect("solves converge");
    println!("shared features: {:?}", audit.local.verdicts);
    println!(
        "  Δs_yz = {:.3e}, worst Δs_yw = {:?}",
        shift.pairwise,
        shift.worst_chosen_versus()
    );
    Ok(())
}
