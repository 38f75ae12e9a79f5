//! Fits regularized problems by damped Newton and certifies the optimum.

use nalgebra::DVector;
use prefmono::solver::SolverSettings;
use prefmono::{Comparison, Dataset, LossFamily, Problem, ProblemSpace, Regularizer, ScoreModel};

fn main() -> prefmono::Result<()> {
    let space = ProblemSpace::new(["x"], ["y", "z"])?;
    for family in [LossFamily::GaussianGbt, LossFamily::BradleyTerry] {
        let data = Dataset::new(family.domain(), vec![Comparison::new("x", "y", "z", 1.0)])?;
        let problem = Problem::new(
            data,
            family.clone(),
            ScoreModel::one_hot(space.clone()),
            Regularizer::l2(1.0, DVector::zeros(2))?,
        )?;
        let result = problem.minimize(&problem.default_init(), &SolverSettings::default())?;
        let cert = problem.certify_minimum(&result.theta_star)?;
        println!(
            "{}: θ* = {:?} after {} iterations, ‖∇‖∞ = {:.1e}, λ_min = {:.4}, strict minimum: {}",
            family.name(),
            result.theta_star.as_slice(),
            result.iterations,
            cert.grad_norm,
            cert.min_eigenvalue,
            cert.is_strict_local_min,
        );
    }
    Ok(())
}
