use super::{Auditor, FlavorVerdicts, ScoreShift, Triple, Verdict, GRADIENT_STEP_TOLERANCE};
use crate::error::{Error, Result};
use crate::loss::{ComparisonDomain, LossFamily};
use crate::score::{ParameterVector, ScoreModel};
use crate::solver::{Problem, Regularizer};

/// Inner-product conditions that make one gradient step monotone.
///
/// Each flag already folds in `α > 0`, the sign of the pull toward `max C`.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientPredicates {
    pub alpha_positive: bool,
    /// `‖∇s_{yz|x}‖`.
    pub gradient_norm: f64,
    /// `∇s_{yz|x} · ∇s_{y|x}`.
    pub chosen_alignment: f64,
    /// `∇s_{yz|x} · ∇s_{z|x}`.
    pub rejected_alignment: f64,
    /// `min over w ≠ y of ∇s_{yw|x} · ∇s_{yz|x}`, `+∞` with one alternative.
    pub min_chosen_versus_alignment: f64,
    pub pairwise: bool,
    pub individual_y: bool,
    pub individual_z: bool,
    pub fully_pairwise: bool,
}

/// First-order rates of change per unit step length.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientRates {
    /// `α ‖∇s_{yz|x}‖²`.
    pub pairwise: f64,
    /// `α (‖∇s_{y|x}‖² - ∇s_{y|x}·∇s_{z|x})`.
    pub chosen: f64,
    /// `α (∇s_{y|x}·∇s_{z|x} - ‖∇s_{z|x}‖²)`.
    pub rejected: f64,
    /// `α ∇s_{yw|x}·∇s_{yz|x}` for every `w ≠ y`.
    pub chosen_versus: Vec<(String, f64)>,
}

/// One explicit gradient step `θ ← θ + ε α ∇s_{yz|x}` on `ℓ(s_{yz|x}, max C)`.
///
/// Unlike the local audits, `verdicts.fully_pairwise` covers only `s_{yw|x}`
/// for `w ≠ y` and `verdicts.individual_probability` only `π(y|x)`.
#[derive(Debug, Clone)]
pub struct GradientStepAudit {
    pub epsilon: f64,
    /// `-∂sℓ(s_{yz|x}(θ), max C)`.
    pub alpha: f64,
    pub theta: ParameterVector,
    pub theta_step: ParameterVector,
    pub predicates: GradientPredicates,
    pub rates: GradientRates,
    pub shift: ScoreShift,
    pub verdicts: FlavorVerdicts,
}

impl GradientStepAudit {
    /// Every realized violation has a failed predicate for the same flavor.
    pub fn violations_explained(&self) -> bool {
        let p = &self.predicates;
        let v = &self.verdicts;
        let ok = |verdict: Verdict, predicted: bool| !(predicted && verdict == Verdict::Violated);
        ok(v.pairwise, p.pairwise)
            && ok(v.individual_score_y, p.individual_y)
            && ok(v.individual_score_z, p.individual_z)
            && ok(v.fully_pairwise, p.fully_pairwise)
            && ok(v.individual_probability, p.fully_pairwise)
    }

    /// `|realized/ε - rate| / |rate|` for the pairwise, chosen and rejected
    /// scores, skipping rates with magnitude below `floor`.
    pub fn rate_residuals(&self, floor: f64) -> Vec<(&'static str, f64)> {
        let eps = self.epsilon;
        [
            ("pairwise", self.shift.pairwise, self.rates.pairwise),
            ("chosen", self.shift.chosen, self.rates.chosen),
            ("rejected", self.shift.rejected, self.rates.rejected),
        ]
        .into_iter()
        .filter(|(_, _, rate)| rate.abs() >= floor)
        .map(|(name, realized, rate)| (name, (realized / eps - rate).abs() / rate.abs()))
        .collect()
    }

    /// Worst relative residual over the `s_{yw|x}` rates above `floor`.
    pub fn chosen_versus_residual(&self, floor: f64) -> Option<f64> {
        self.shift
            .chosen_versus
            .iter()
            .zip(&self.rates.chosen_versus)
            .filter(|(_, (_, rate))| rate.abs() >= floor)
            .map(|((_, realized), (_, rate))| (realized / self.epsilon - rate).abs() / rate.abs())
            .max_by(f64::total_cmp)
    }
}

/// Takes one gradient step of length `epsilon` on the unequivocal datum
/// `(x, y, z, max C)` from `theta` and audits every flavor.
pub fn gradient_step(
    family: &LossFamily,
    model: &ScoreModel,
    domain: &ComparisonDomain,
    theta: &ParameterVector,
    triple: Triple,
    epsilon: f64,
) -> Result<GradientStepAudit> {
    if !(epsilon.is_finite() && epsilon >= 0.0) {
        return Err(Error::InvalidInput(format!(
            "step length {epsilon} must be finite and nonnegative"
        )));
    }
    let c_max = domain
        .max()
        .ok_or_else(|| Error::Unsupported(format!("gradient step needs a maximal comparison, got {domain}")))?;
    let Triple { x, y, z } = triple;
    let s = model.score_difference_at(theta, x, y, z)?;
    let alpha = -family.dloss_ds(s, c_max)?;
    let g_yz = model.score_difference_gradient_at(theta, x, y, z)?;
    let g_y = model.score_gradient_at(theta, x, y)?;
    let g_z = model.score_gradient_at(theta, x, z)?;

    let names = model.space().alternatives();
    let mut chosen_versus = Vec::new();
    let mut min_alignment = f64::INFINITY;
    for w in (0..names.len()).filter(|&w| w != y) {
        let dot = model.score_difference_gradient_at(theta, x, y, w)?.dot(&g_yz);
        min_alignment = min_alignment.min(dot);
        chosen_versus.push((names[w].clone(), alpha * dot));
    }
    let chosen_alignment = g_yz.dot(&g_y);
    let rejected_alignment = g_yz.dot(&g_z);
    let alpha_positive = alpha > 0.0;
    let gradient_norm = g_yz.norm();
    let predicates = GradientPredicates {
        alpha_positive,
        gradient_norm,
        chosen_alignment,
        rejected_alignment,
        min_chosen_versus_alignment: min_alignment,
        pairwise: alpha_positive && gradient_norm > 0.0,
        individual_y: alpha_positive && chosen_alignment > 0.0,
        individual_z: alpha_positive && rejected_alignment < 0.0,
        fully_pairwise: alpha_positive && min_alignment > 0.0,
    };
    let rates = GradientRates {
        pairwise: alpha * gradient_norm * gradient_norm,
        chosen: alpha * chosen_alignment,
        rejected: alpha * rejected_alignment,
        chosen_versus,
    };
    let theta_step = theta + &g_yz * (epsilon * alpha);
    let shift = ScoreShift::between(model, theta, &theta_step, triple)?;
    // a single step only makes claims about y against everything else
    let mut verdicts = shift.verdicts(GRADIENT_STEP_TOLERANCE);
    verdicts.fully_pairwise = shift.chosen_versus.iter().fold(Verdict::Holds, |acc, (_, d)| {
        acc.and(Verdict::from_delta(*d, GRADIENT_STEP_TOLERANCE))
    });
    verdicts.individual_probability = Verdict::from_delta(shift.probability_chosen, GRADIENT_STEP_TOLERANCE);
    Ok(GradientStepAudit {
        epsilon,
        alpha,
        theta: theta.clone(),
        verdicts,
        theta_step,
        predicates,
        rates,
        shift,
    })
}

impl Auditor {
    /// [`gradient_step`] on an unregularized problem.
    pub fn audit_gradient_descent(
        &self,
        problem: &Problem,
        theta: &ParameterVector,
        x: &str,
        y: &str,
        z: &str,
        epsilon: f64,
    ) -> Result<GradientStepAudit> {
        if *problem.regularizer() != Regularizer::None {
            return Err(Error::Precondition(
                "gradient-step audits need an unregularized problem".into(),
            ));
        }
        let triple = Triple::resolve(problem.model(), x, y, z)?;
        gradient_step(
            problem.family(),
            problem.model(),
            problem.dataset().domain(),
            theta,
            triple,
            epsilon,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::score::ProblemSpace;
    use nalgebra::DVector;

    #[test]
    fn one_hot_predicates_all_hold() {
        let space = ProblemSpace::new(["x"], ["y", "z", "w"]).unwrap();
        let model = ScoreModel::one_hot(space);
        let theta = DVector::from_vec(vec![0.3, -0.2, 0.5]);
        let triple = Triple::resolve(&model, "x", "y", "z").unwrap();
        let audit = gradient_step(
            &LossFamily::BradleyTerry,
            &model,
            &ComparisonDomain::binary(),
            &theta,
            triple,
            1e-4,
        )
        .unwrap();
        let p = &audit.predicates;
        assert_eq!(p.chosen_alignment, 1.0);
        assert_eq!(p.min_chosen_versus_alignment, 1.0);
        assert!(p.pairwise && p.individual_y && p.individual_z && p.fully_pairwise);
        assert_eq!(audit.verdicts.pairwise, Verdict::Holds);
        assert_eq!(audit.verdicts.individual_probability, Verdict::Holds);
        assert!(audit.violations_explained());
        let alignments: Vec<f64> = audit.rates.chosen_versus.iter().map(|(_, r)| r / audit.alpha).collect();
        assert_eq!(alignments, vec![2.0, 1.0]);
    }

    #[test]
    fn identical_features_give_zero_gradient() {
        let space = ProblemSpace::new(["x"], ["y", "z"]).unwrap();
        let model = ScoreModel::linear(space, |_, _| vec![1.0, 0.5]).unwrap();
        let theta = DVector::from_vec(vec![0.1, 0.2]);
        let triple = Triple::resolve(&model, "x", "y", "z").unwrap();
        let audit = gradient_step(
            &LossFamily::BradleyTerry,
            &model,
            &ComparisonDomain::binary(),
            &theta,
            triple,
            1e-3,
        )
        .unwrap();
        assert!(!audit.predicates.pairwise);
        assert_eq!(audit.shift.pairwise, 0.0);
    }

    #[test]
    fn slic_kink_is_reported() {
        let space = ProblemSpace::new(["x"], ["y", "z"]).unwrap();
        let model = ScoreModel::one_hot(space);
        let theta = DVector::from_vec(vec![0.5, -0.5]);
        let triple = Triple::resolve(&model, "x", "y", "z").unwrap();
        let err = gradient_step(
            &LossFamily::Slic,
            &model,
            &ComparisonDomain::binary(),
            &theta,
            triple,
            1e-3,
        )
        .unwrap_err();
        assert!(matches!(err, Error::NonDifferentiable { .. }));
    }
}
