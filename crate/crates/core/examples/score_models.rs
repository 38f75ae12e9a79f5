//! Scores, score gradients and generation probabilities for the one-hot,
//! linear and softmax-policy score models.

use nalgebra::DVector;
use prefmono::{ProblemSpace, ScoreModel};

fn main() -> prefmono::Result<()> {
    let space = ProblemSpace::new(["x"], ["y", "z", "w"])?;
    let one_hot = ScoreModel::one_hot(space.clone());
    let linear = ScoreModel::linear(space.clone(), |_, y| match y {
        "y" => vec![1.0, 0.0],
        "z" => vec![0.0, 1.0],
        _ => vec![0.9, 0.9],
    })?;
    let dpo = ScoreModel::dpo_softmax(space, &[0.5, -0.2, 0.1], 0.1)?;

    let models = [
        (one_hot, DVector::from_vec(vec![0.4, -0.1, 0.2])),
        (linear, DVector::from_vec(vec![0.3, -0.5])),
        (dpo, DVector::from_vec(vec![1.0, 0.0, -1.0])),
    ];
    for (model, theta) in &models {
        println!("{} model, {} parameters", model.kind(), model.dim());
        for y in ["y", "z", "w"] {
            println!(
                "  s({y}|x) = {:+.4}  π({y}|x) = {:.4}  ∇s = {:?}",
                model.score(theta, "x", y)?,
                model.probability(theta, "x", y)?,
                model.score_gradient(theta, "x", y)?.as_slice(),
            );
        }
        println!("  s(y,z|x) = {:+.4}", model.score_difference(theta, "x", "y", "z")?);
    }
    Ok(())
}
