//! One explicit gradient step on an unequivocal comparison: the predicates
//! on score-gradient inner products and the realized rates.

use nalgebra::DVector;
use prefmono::{Auditor, Dataset, LossFamily, Problem, ProblemSpace, Regularizer, ScoreModel};

fn main() -> prefmono::Result<()> {
    let space = ProblemSpace::new(["x"], ["y", "z", "w"])?;
    let models = [
        (
            ScoreModel::one_hot(space.clone()),
            DVector::from_vec(vec![0.3, -0.2, 0.5]),
        ),
        (
            ScoreModel::dpo_softmax(space, &[0.2, -0.4, 0.0], 0.5)?,
            DVector::from_vec(vec![0.1, 0.7, -0.3]),
        ),
    ];
    for (model, theta) in models {
        let problem = Problem::new(
            Dataset::empty(LossFamily::BradleyTerry.domain()),
            LossFamily::BradleyTerry,
            model,
            Regularizer::None,
        )?;
        let audit = Auditor::default().audit_gradient_descent(&problem, &theta, "x", "y", "z", 1e-4)?;
        let p = &audit.predicates;
        println!("{} model, α = {:.4}", problem.model().kind(), audit.alpha);
        println!(
            "  ∇s_yz·∇s_y = {:.4}, ∇s_yz·∇s_z = {:.4}, min ∇s_yw·∇s_yz = {:.4}",
            p.chosen_alignment, p.rejected_alignment, p.min_chosen_versus_alignment
        );
        for (name, residual) in audit.rate_residuals(1e-6) {
            println!("  {name:<9} rate residual {residual:.2e}");
        }
        println!(
            "  {:?}, violations explained: {}",
            audit.verdicts,
            audit.violations_explained()
        );
    }
    Ok(())
}
