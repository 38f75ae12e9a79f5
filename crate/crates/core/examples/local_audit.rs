//! Intensifies the only comparison of a Gaussian problem and compares the
//! realized change of s_yz with the first-order rate 2/3.

use nalgebra::DVector;
use prefmono::audit::DEFAULT_EPSILONS;
use prefmono::{Auditor, Comparison, Dataset, LossFamily, Mode, Problem, ProblemSpace, Regularizer, ScoreModel};

fn main() -> prefmono::Result<()> {
    let problem = Problem::new(
        Dataset::new(
            LossFamily::GaussianGbt.domain(),
            vec![Comparison::new("x", "y", "z", 1.0)],
        )?,
        LossFamily::GaussianGbt,
        ScoreModel::one_hot(ProblemSpace::new(["x"], ["y", "z"])?),
        Regularizer::l2(1.0, DVector::zeros(2))?,
    )?;
    let auditor = Auditor::default();
    let audits = auditor.audit_local_sweep(&problem, "x", "y", "z", Mode::Intensification, &DEFAULT_EPSILONS)?;
    let first = &audits[0];
    let p = first.prediction.as_ref().expect("Hessian is positive definite");
    println!(
        "θ* = {:?}, α = {}, β = {:.12}",
        first.base.theta_star.as_slice(),
        p.alpha,
        p.rate_beta
    );
    for h in &first.hypotheses {
        println!("  {:<32} {} ({})", h.name, h.holds, h.detail);
    }
    for a in &audits {
        println!(
            "ε = {:.0e}: predicted {:.6e}, realized {:.6e}, residual {:.2e}, in basin {:?}",
            a.epsilon,
            a.predicted_delta().unwrap(),
            a.realized_delta().unwrap(),
            a.relative_residual().unwrap(),
            a.within_basin,
        );
        for (flavor, verdict) in a.verdicts.iter() {
            println!("    {flavor:<24} {verdict}");
        }
    }
    Ok(())
}
