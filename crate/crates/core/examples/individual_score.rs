//! Links individual-score monotonicity to max-diagonal dominance of
//! G = ∇sᵀ H⁻¹ ∇s, on one-hot scores and on shared linear features.

use nalgebra::DVector;
use prefmono::{Auditor, Comparison, Dataset, LossFamily, Problem, ProblemSpace, Regularizer, ScoreModel};

fn main() -> prefmono::Result<()> {
    let data = Dataset::new(
        LossFamily::GaussianGbt.domain(),
        vec![Comparison::new("x", "y", "z", 1.0)],
    )?;
    let one_hot = ScoreModel::one_hot(ProblemSpace::new(["x"], ["y", "z"])?);
    let shared = ScoreModel::linear(ProblemSpace::new(["x"], ["y", "z", "w"])?, |_, y| match y {
        "y" => vec![1.0, 0.0],
        "z" => vec![0.0, 1.0],
        _ => vec![0.9, 0.9],
    })?;
    let auditor = Auditor::default();
    for model in [one_hot, shared] {
        let dim = model.dim();
        let problem = Problem::new(
            data.clone(),
            LossFamily::GaussianGbt,
            model,
            Regularizer::l2(1.0, DVector::zeros(dim))?,
        )?;
        let audit = auditor.audit_individual_score(&problem, "x", "y", "z", 1e-3)?;
        println!("{} model", problem.model().kind());
        if let Some(g) = &audit.g_matrix {
            println!("  G = {g:.4}");
        }
        println!("  {}", audit.link);
    }
    Ok(())
}
