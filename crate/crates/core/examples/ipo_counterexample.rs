//! IPO pulls score differences toward 1. With the optimum pinned at
//! s_yz = 3, an unequivocal comparison in favor of y lowers s_yz.

use nalgebra::DVector;
use prefmono::{Auditor, Dataset, LossFamily, Mode, Problem, ProblemSpace, Regularizer, ScoreModel};

fn main() -> prefmono::Result<()> {
    let problem = Problem::new(
        Dataset::empty(LossFamily::Ipo.domain()),
        LossFamily::Ipo,
        ScoreModel::one_hot(ProblemSpace::new(["x"], ["y", "z"])?),
        Regularizer::l2(1.0, DVector::from_vec(vec![1.5, -1.5]))?,
    )?;
    let audit = Auditor::default().audit_local_pairwise(&problem, "x", "y", "z", Mode::Unequivocal, 1e-2)?;
    println!("loss assumption: {}", audit.loss_assumption);
    if let Some(v) = &audit.assumption_at_optimum {
        println!("at the optimum: {v}");
    }
    println!(
        "predicted Δs = {:.6}, realized Δs = {:.6}, verdict {}",
        audit.predicted_delta().unwrap(),
        audit.realized_delta().unwrap(),
        audit.verdicts.pairwise
    );
    Ok(())
}
