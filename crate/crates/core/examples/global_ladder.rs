//! Re-solves along cumulative perturbation ladders and checks that s_yz
//! never decreases.

use nalgebra::DVector;
use prefmono::{Auditor, Comparison, Dataset, LossFamily, Mode, Problem, ProblemSpace, Regularizer, ScoreModel};

fn main() -> prefmono::Result<()> {
    let space = ProblemSpace::new(["x"], ["y", "z"])?;
    let auditor = Auditor::default();

    let gaussian = Problem::new(
        Dataset::new(
            LossFamily::GaussianGbt.domain(),
            vec![Comparison::new("x", "y", "z", 1.0)],
        )?,
        LossFamily::GaussianGbt,
        ScoreModel::one_hot(space.clone()),
        Regularizer::l2(1.0, DVector::zeros(2))?,
    )?;
    let rungs: Vec<f64> = (1..=10).map(|k| k as f64 / 10.0).collect();
    let ladder = auditor.audit_global_ladder(&gaussian, "x", "y", "z", Mode::Intensification, &rungs)?;
    println!(
        "Gaussian intensification: {} {:?}",
        ladder.verdict, ladder.score_differences
    );

    let bt = Problem::new(
        Dataset::empty(LossFamily::BradleyTerry.domain()),
        LossFamily::BradleyTerry,
        ScoreModel::one_hot(space),
        Regularizer::l2(1.0, DVector::zeros(2))?,
    )?;
    let ladder = auditor.audit_global_ladder(&bt, "x", "y", "z", Mode::Unequivocal, &[0.5, 1.0, 2.0, 4.0])?;
    println!(
        "Bradley-Terry unequivocal: {} {:?}",
        ladder.verdict, ladder.score_differences
    );
    Ok(())
}
