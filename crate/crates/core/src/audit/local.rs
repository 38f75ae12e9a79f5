use nalgebra::DMatrix;

use super::{
    all_hold, AuditPrediction, Auditor, FlavorVerdicts, Hypothesis, Mode, ScoreShift, Triple, Verdict, BASIN_FACTOR,
    VIOLATION_TOLERANCE,
};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::loss::{AssumptionVerdict, AssumptionViolation};
use crate::score::ParameterVector;
use crate::solver::{solve_spd, Problem, SolveResult};
use crate::spectral::{is_max_diag_dominant, DominanceVerdict, SymmetricMatrix};

/// Outcome of one local audit at one ε.
#[derive(Debug, Clone)]
pub struct LocalAudit {
    pub x: String,
    pub y: String,
    pub z: String,
    pub mode: Mode,
    pub epsilon: f64,
    pub base: SolveResult,
    pub perturbed: Option<SolveResult>,
    /// Present whenever the Hessian at `θ*` is positive definite, even if
    /// other hypotheses fail; its sign then tells which way the loss pulls.
    pub prediction: Option<AuditPrediction>,
    pub hypotheses: Vec<Hypothesis>,
    pub loss_assumption: AssumptionVerdict,
    /// The loss-assumption violation at the audited `s*`, if any.
    pub assumption_at_optimum: Option<AssumptionViolation>,
    pub shift: Option<ScoreShift>,
    pub verdicts: FlavorVerdicts,
    pub within_basin: Option<bool>,
    pub inconclusive: Option<String>,
}

impl LocalAudit {
    pub fn hypotheses_hold(&self) -> bool {
        all_hold(&self.hypotheses)
    }

    pub fn predicted_delta(&self) -> Option<f64> {
        self.prediction.as_ref().map(|p| p.predicted_delta(self.epsilon))
    }

    pub fn realized_delta(&self) -> Option<f64> {
        self.shift.as_ref().map(|s| s.pairwise)
    }

    /// `|realized - predicted| / |predicted|`.
    pub fn relative_residual(&self) -> Option<f64> {
        let predicted = self.predicted_delta()?;
        let realized = self.realized_delta()?;
        (predicted != 0.0).then(|| (realized - predicted).abs() / predicted.abs())
    }
}

/// Scores of `s_{yz|x}` along a ladder of cumulative perturbations.
#[derive(Debug, Clone)]
pub struct LadderAudit {
    pub mode: Mode,
    pub epsilons: Vec<f64>,
    /// `s_{yz|x}` at the base optimum followed by one value per rung.
    pub score_differences: Vec<f64>,
    pub verdict: Verdict,
    pub hypotheses: Vec<Hypothesis>,
    pub reason: Option<String>,
}

impl LadderAudit {
    /// Smallest step between consecutive rungs.
    pub fn min_increment(&self) -> Option<f64> {
        self.score_differences
            .windows(2)
            .map(|w| w[1] - w[0])
            .min_by(f64::total_cmp)
    }
}

#[derive(Debug, Clone)]
pub struct IndividualScoreAudit {
    pub local: Option<LocalAudit>,
    /// `∇s_{·|x}ᵀ H⁻¹ ∇s_{·|x}` over the alternatives of `x`.
    pub g_matrix: Option<DMatrix<f64>>,
    pub dominance: Option<DominanceVerdict>,
    pub predicted_chosen: Option<f64>,
    pub predicted_rejected: Option<f64>,
    pub link: String,
    pub not_applicable: Option<String>,
}

impl IndividualScoreAudit {
    pub fn verdicts(&self) -> FlavorVerdicts {
        self.local
            .as_ref()
            .map(|l| l.verdicts)
            .unwrap_or_else(FlavorVerdicts::not_applicable)
    }
}

#[derive(Debug, Clone)]
pub struct FullyPairwiseAudit {
    pub local: LocalAudit,
    pub implication_consistent: bool,
}

impl Auditor {
    pub fn solve_base(&self, problem: &Problem) -> Result<SolveResult> {
        problem.minimize(&problem.default_init(), &self.solver)
    }

    /// First-order sensitivity of `s_{yz|x}` at `θ*` without checking the
    /// hypotheses that make it a guarantee.
    pub fn first_order(
        &self,
        problem: &Problem,
        theta_star: &ParameterVector,
        triple: Triple,
        mode: Mode,
    ) -> Result<AuditPrediction> {
        let model = problem.model();
        let family = problem.family();
        let domain = problem.dataset().domain();
        let Triple { x, y, z } = triple;
        let s = model.score_difference_at(theta_star, x, y, z)?;
        let gradient_s = model.score_difference_gradient_at(theta_star, x, y, z)?;
        let (alpha, occurrences) = match mode {
            Mode::Unequivocal => {
                let c_max = domain.max().ok_or_else(|| {
                    Error::Unsupported(format!("unequivocal comparison on the unbounded domain {domain}"))
                })?;
                (-family.dloss_ds(s, c_max)?, 1)
            }
            Mode::Intensification => {
                if !domain.is_interval() {
                    return Err(Error::Unsupported(format!(
                        "intensification sensitivity on the discrete domain {domain}"
                    )));
                }
                let names = model.space();
                let (xs, ys, zs) = (
                    &names.backgrounds()[x],
                    &names.alternatives()[y],
                    &names.alternatives()[z],
                );
                let mut alpha = 0.0;
                let mut count = 0;
                for cmp in problem.dataset().comparisons() {
                    let forward = cmp.matches(xs, ys, zs);
                    let reverse = cmp.matches(xs, zs, ys);
                    if !(forward || reverse) {
                        continue;
                    }
                    // a push into the boundary leaves the datum unchanged
                    let saturated = if forward {
                        domain.max().is_some_and(|hi| cmp.c >= hi)
                    } else {
                        domain.min().is_some_and(|lo| cmp.c <= lo)
                    };
                    if saturated {
                        continue;
                    }
                    let s_k = if forward { s } else { -s };
                    alpha -= cmp.weight * family.dcds_cross(s_k, cmp.c)?;
                    count += 1;
                }
                (alpha, count)
            }
        };
        let hessian = problem.hessian(theta_star)?;
        let u = solve_spd(&hessian, &gradient_s)?;
        let rate_beta = alpha * gradient_s.dot(&u);
        Ok(AuditPrediction {
            mode,
            alpha,
            rate_beta,
            gradient_s,
            direction: u * alpha,
            occurrences,
        })
    }

    /// First-order prediction at a certified strict local minimum, with the
    /// loss assumption for `mode` verified.
    pub fn predict_local_delta(
        &self,
        problem: &Problem,
        theta_star: &ParameterVector,
        x: &str,
        y: &str,
        z: &str,
        mode: Mode,
    ) -> Result<AuditPrediction> {
        let triple = Triple::resolve(problem.model(), x, y, z)?;
        let cert = problem.certify_minimum(theta_star)?;
        if !cert.is_strict_local_min {
            return Err(Error::Precondition(format!(
                "θ* is not a strict local minimum (‖∇Loss‖∞ = {:e}, λ_min(∇²Loss) = {:e})",
                cert.grad_norm, cert.min_eigenvalue
            )));
        }
        let s = problem
            .model()
            .score_difference_at(theta_star, triple.x, triple.y, triple.z)?;
        let verdict = self.loss_assumption(problem.family(), mode, s);
        if !verdict.holds() {
            return Err(Error::Precondition(format!(
                "{} loss assumption: {verdict}",
                mode.as_str()
            )));
        }
        if mode == Mode::Intensification && problem.dataset().occurrences(x, y, z) == 0 {
            return Err(Error::Precondition(format!(
                "triple ({x}, {y}, {z}) does not appear in the dataset"
            )));
        }
        self.first_order(problem, theta_star, triple, mode)
    }

    fn hypotheses(
        &self,
        problem: &Problem,
        base: &SolveResult,
        triple: Triple,
        mode: Mode,
    ) -> Result<(Vec<Hypothesis>, AssumptionVerdict, Option<AssumptionViolation>)> {
        let model = problem.model();
        let theta = &base.theta_star;
        let mut out = Vec::new();
        out.push(Hypothesis::new(
            "converged",
            base.converged,
            format!("‖∇Loss‖∞ = {:e} after {} iterations", base.grad_norm, base.iterations),
        ));
        let cert = problem.certify_minimum(theta)?;
        out.push(Hypothesis::new(
            "strict_local_minimum",
            cert.is_strict_local_min,
            format!(
                "‖∇Loss‖∞ = {:e}, λ_min(∇²Loss) = {:e}",
                cert.grad_norm, cert.min_eigenvalue
            ),
        ));
        let s = model.score_difference_at(theta, triple.x, triple.y, triple.z)?;
        let assumption = self.loss_assumption(problem.family(), mode, s);
        let at_optimum = match &assumption {
            AssumptionVerdict::Violated { violations } => violations.iter().find(|v| v.s == s).cloned(),
            _ => None,
        };
        let detail = match &at_optimum {
            Some(v) => format!("{assumption}; at s* {v}"),
            None => assumption.to_string(),
        };
        let name = match mode {
            Mode::Unequivocal => "max_comparison_pushes_up",
            Mode::Intensification => "cross_partial_negative",
        };
        out.push(Hypothesis::new(name, assumption.holds(), detail));
        let grad = model.score_difference_gradient_at(theta, triple.x, triple.y, triple.z)?;
        out.push(Hypothesis::new(
            "nonzero_score_gradient",
            grad.norm() > 0.0,
            format!("‖∇s_yz(θ*)‖ = {:e}", grad.norm()),
        ));
        if mode == Mode::Intensification {
            let names = model.space();
            let (xs, ys, zs) = (
                &names.backgrounds()[triple.x],
                &names.alternatives()[triple.y],
                &names.alternatives()[triple.z],
            );
            let count = problem.dataset().occurrences(xs, ys, zs);
            out.push(Hypothesis::new(
                "triple_present",
                count > 0,
                format!("{count} occurrence(s)"),
            ));
            let mut zero = 0;
            for cmp in problem.dataset().comparisons() {
                let t = Triple::resolve(model, &cmp.x, &cmp.y, &cmp.z)?;
                if model.score_difference_gradient_at(theta, t.x, t.y, t.z)?.norm() == 0.0 {
                    zero += 1;
                }
            }
            out.push(Hypothesis::new(
                "nonzero_score_gradients_dataset",
                zero == 0,
                format!("{zero} datum(s) with ∇s = 0"),
            ));
        }
        Ok((out, assumption, at_optimum))
    }

    fn perturb(dataset: &Dataset, names: (&str, &str, &str), mode: Mode, epsilon: f64) -> Result<Dataset> {
        let (x, y, z) = names;
        match mode {
            Mode::Unequivocal => dataset.add_unequivocal(x, y, z, epsilon),
            Mode::Intensification => dataset.intensify(x, y, z, epsilon),
        }
    }

    fn local_from_base(
        &self,
        problem: &Problem,
        base: &SolveResult,
        names: (&str, &str, &str),
        mode: Mode,
        epsilon: f64,
    ) -> Result<LocalAudit> {
        if !(epsilon.is_finite() && epsilon >= 0.0) {
            return Err(Error::InvalidInput(format!(
                "ε = {epsilon} must be finite and nonnegative"
            )));
        }
        let triple = Triple::resolve(problem.model(), names.0, names.1, names.2)?;
        let (hypotheses, loss_assumption, assumption_at_optimum) = self.hypotheses(problem, base, triple, mode)?;
        let mut audit = LocalAudit {
            x: names.0.to_string(),
            y: names.1.to_string(),
            z: names.2.to_string(),
            mode,
            epsilon,
            base: base.clone(),
            perturbed: None,
            prediction: None,
            hypotheses,
            loss_assumption,
            assumption_at_optimum,
            shift: None,
            verdicts: FlavorVerdicts::not_applicable(),
            within_basin: None,
            inconclusive: None,
        };
        if !base.converged {
            audit.inconclusive = Some(format!("base solve did not converge (‖∇Loss‖∞ = {:e})", base.grad_norm));
            return Ok(audit);
        }
        audit.prediction = self.first_order(problem, &base.theta_star, triple, mode).ok();
        let perturbed_problem = problem.with_dataset(Self::perturb(problem.dataset(), names, mode, epsilon)?)?;
        let perturbed = perturbed_problem.minimize(&base.theta_star, &self.solver)?;
        if !perturbed.converged {
            audit.inconclusive = Some(format!(
                "perturbed solve did not converge (‖∇Loss‖∞ = {:e})",
                perturbed.grad_norm
            ));
            audit.perturbed = Some(perturbed);
            return Ok(audit);
        }
        let shift = ScoreShift::between(problem.model(), &base.theta_star, &perturbed.theta_star, triple)?;
        audit.verdicts = shift.verdicts(VIOLATION_TOLERANCE);
        if let Some(pred) = &audit.prediction {
            let radius = BASIN_FACTOR * pred.direction.norm() * epsilon;
            let moved = (&perturbed.theta_star - &base.theta_star).norm();
            audit.within_basin = Some(moved <= radius.max(1e-12));
        }
        audit.shift = Some(shift);
        audit.perturbed = Some(perturbed);
        Ok(audit)
    }

    /// Solves the base problem, perturbs it by ε in favor of `y` against `z`
    /// and re-solves from `θ*`.
    pub fn audit_local_pairwise(
        &self,
        problem: &Problem,
        x: &str,
        y: &str,
        z: &str,
        mode: Mode,
        epsilon: f64,
    ) -> Result<LocalAudit> {
        let base = self.solve_base(problem)?;
        self.local_from_base(problem, &base, (x, y, z), mode, epsilon)
    }

    /// [`Auditor::audit_local_pairwise`] over several ε with a shared base solve.
    pub fn audit_local_sweep(
        &self,
        problem: &Problem,
        x: &str,
        y: &str,
        z: &str,
        mode: Mode,
        epsilons: &[f64],
    ) -> Result<Vec<LocalAudit>> {
        let base = self.solve_base(problem)?;
        epsilons
            .iter()
            .map(|&eps| self.local_from_base(problem, &base, (x, y, z), mode, eps))
            .collect()
    }

    /// Re-solves along increasing cumulative perturbations and checks that
    /// `s_{yz|x}` never decreases. Only applicable to strongly convex problems:
    /// L2 regularizer, convex loss, scores linear in the parameters.
    pub fn audit_global_ladder(
        &self,
        problem: &Problem,
        x: &str,
        y: &str,
        z: &str,
        mode: Mode,
        ladder: &[f64],
    ) -> Result<LadderAudit> {
        let triple = Triple::resolve(problem.model(), x, y, z)?;
        if ladder.iter().any(|e| !(e.is_finite() && *e >= 0.0)) {
            return Err(Error::InvalidInput(
                "ladder rungs must be finite and nonnegative".into(),
            ));
        }
        if ladder.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::InvalidInput("ladder rungs must be nondecreasing".into()));
        }
        let mut hypotheses = vec![
            Hypothesis::new(
                "strongly_convex_regularizer",
                problem.regularizer().is_strongly_convex(),
                "L2 regularizer required",
            ),
            Hypothesis::new("convex_loss", problem.family().is_convex(), problem.family().name()),
            Hypothesis::new(
                "scores_linear_in_parameters",
                problem.model().is_linear_in_parameters(),
                problem.model().kind(),
            ),
        ];
        let base = self.solve_base(problem)?;
        let s0 = problem
            .model()
            .score_difference_at(&base.theta_star, triple.x, triple.y, triple.z)?;
        let assumption = self.loss_assumption(problem.family(), mode, s0);
        hypotheses.push(Hypothesis::new(
            "loss_assumption",
            assumption.holds(),
            assumption.to_string(),
        ));
        let mut audit = LadderAudit {
            mode,
            epsilons: ladder.to_vec(),
            score_differences: vec![s0],
            verdict: Verdict::NotApplicable,
            hypotheses,
            reason: None,
        };
        if !all_hold(&audit.hypotheses) {
            let failed: Vec<&str> = audit.hypotheses.iter().filter(|h| !h.holds).map(|h| h.name).collect();
            audit.reason = Some(format!("hypotheses unmet: {}", failed.join(", ")));
            return Ok(audit);
        }
        if !base.converged {
            audit.reason = Some("base solve did not converge".into());
            return Ok(audit);
        }
        let mut theta = base.theta_star;
        for &eps in ladder {
            let rung = problem.with_dataset(Self::perturb(problem.dataset(), (x, y, z), mode, eps)?)?;
            let solved = rung.minimize(&theta, &self.solver)?;
            if !solved.converged {
                audit.reason = Some(format!("solve at ε = {eps} did not converge"));
                return Ok(audit);
            }
            theta = solved.theta_star;
            audit.score_differences.push(
                problem
                    .model()
                    .score_difference_at(&theta, triple.x, triple.y, triple.z)?,
            );
        }
        audit.verdict = match audit.min_increment() {
            Some(step) => Verdict::from_delta(step, VIOLATION_TOLERANCE),
            None => Verdict::Holds,
        };
        Ok(audit)
    }

    /// Intensification audit of the individual scores of `y` and `z`, linked
    /// to max-diagonal dominance of `G = ∇s_{·|x}ᵀ H⁻¹ ∇s_{·|x}`.
    pub fn audit_individual_score(
        &self,
        problem: &Problem,
        x: &str,
        y: &str,
        z: &str,
        epsilon: f64,
    ) -> Result<IndividualScoreAudit> {
        let model = problem.model();
        if model.space().n_alternatives() < 2 {
            return Ok(IndividualScoreAudit {
                local: None,
                g_matrix: None,
                dominance: None,
                predicted_chosen: None,
                predicted_rejected: None,
                link: "fewer than two alternatives".into(),
                not_applicable: Some("background has a single alternative".into()),
            });
        }
        let triple = Triple::resolve(model, x, y, z)?;
        let domain = problem.dataset().domain();
        if !domain.is_interval() {
            return Err(Error::Precondition(format!(
                "intensification needs an interval comparison domain, got {domain}"
            )));
        }
        if problem.dataset().occurrences(x, y, z) == 0 {
            return Err(Error::Precondition(format!(
                "triple ({x}, {y}, {z}) does not appear in the dataset"
            )));
        }
        let local = self.audit_local_pairwise(problem, x, y, z, Mode::Intensification, epsilon)?;
        let theta = &local.base.theta_star;
        let n = model.space().n_alternatives();
        let mut scores = DMatrix::zeros(model.dim(), n);
        for w in 0..n {
            scores.set_column(w, &model.score_gradient_at(theta, triple.x, w)?);
        }
        let (g_matrix, dominance) = match problem.hessian(theta)?.cholesky() {
            Some(chol) => {
                let solved = chol.solve(&scores);
                let g = scores.transpose() * solved;
                let g = (&g + g.transpose()) * 0.5;
                let verdict = is_max_diag_dominant(&SymmetricMatrix::new(g.clone())?);
                (Some(g), Some(verdict))
            }
            None => (None, None),
        };
        let predicted = |w: usize| -> Result<Option<f64>> {
            Ok(match &local.prediction {
                Some(p) => Some(epsilon * model.score_gradient_at(theta, triple.x, w)?.dot(&p.direction)),
                None => None,
            })
        };
        let predicted_chosen = predicted(triple.y)?;
        let predicted_rejected = predicted(triple.z)?;
        let names = model.space().alternatives();
        let dominance_text = match (&dominance, &g_matrix) {
            (Some(d), _) if d.holds => "G is max-diagonally dominant".to_string(),
            (
                Some(DominanceVerdict {
                    witness: Some((i, j)), ..
                }),
                Some(g),
            ) => format!(
                "G is not max-diagonally dominant: G[{a},{b}] = {:.6} > G[{a},{a}] = {:.6}",
                g[(*i, *j)],
                g[(*i, *i)],
                a = names[*i],
                b = names[*j],
            ),
            _ => "G unavailable: Hessian is not positive definite".to_string(),
        };
        let outcome = format!(
            "individual score {y}: {}, {z}: {}",
            local.verdicts.individual_score_y, local.verdicts.individual_score_z
        );
        let dominant = dominance.as_ref().is_some_and(|d| d.holds);
        let held =
            local.verdicts.individual_score_y == Verdict::Holds && local.verdicts.individual_score_z == Verdict::Holds;
        let conclusion = match (dominant, held) {
            (true, true) => "consistent with the dominance guarantee",
            (true, false) => "dominance guarantee contradicted",
            (false, true) => "monotone without the sufficient dominance condition",
            (false, false) => "violation realized where dominance fails",
        };
        Ok(IndividualScoreAudit {
            local: Some(local),
            g_matrix,
            dominance,
            predicted_chosen,
            predicted_rejected,
            link: format!("{dominance_text}; {outcome}; {conclusion}"),
            not_applicable: None,
        })
    }

    /// Checks every `s_{yw|x}`, `s_{wz|x}` and both generation probabilities
    /// after perturbing the dataset. Intensification is used when the
    /// triple is present on an interval domain, unequivocal addition
    /// otherwise.
    pub fn audit_fully_pairwise_and_probability(
        &self,
        problem: &Problem,
        x: &str,
        y: &str,
        z: &str,
        epsilon: f64,
    ) -> Result<FullyPairwiseAudit> {
        let domain = problem.dataset().domain();
        let mode = if domain.is_interval() && problem.dataset().occurrences(x, y, z) > 0 {
            Mode::Intensification
        } else {
            Mode::Unequivocal
        };
        let local = self.audit_local_pairwise(problem, x, y, z, mode, epsilon)?;
        Ok(FullyPairwiseAudit {
            implication_consistent: local.verdicts.implication_consistent(),
            local,
        })
    }
}
