use std::path::{Path, PathBuf};

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::config::{AuditSpec, Experiment, Flavor};
use super::records::{emit_report, AuditRecord, Format, StepTraceRecord, SCHEMA_VERSION};
use crate::audit::{
    gradient_step, Auditor, FlavorVerdicts, GradientStepAudit, LocalAudit, Mode, ScoreShift, Triple, Verdict,
    DEFAULT_EPSILONS,
};
use crate::error::{Error, Result};
use crate::spectral::{lemma_inverse_difference_check, random_dominant_m_matrix};

/// Overrides applied on top of a config file.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub out_dir: Option<PathBuf>,
    pub format: Option<Format>,
    pub seed: Option<u64>,
}

impl RunOptions {
    fn out_dir(&self, exp: &Experiment) -> PathBuf {
        self.out_dir
            .clone()
            .or_else(|| exp.config.output.dir.clone())
            .unwrap_or_else(|| PathBuf::from("reports"))
    }

    fn format(&self, exp: &Experiment) -> Format {
        self.format.unwrap_or(exp.config.output.format)
    }

    fn seed(&self, exp: &Experiment) -> u64 {
        self.seed.unwrap_or(exp.config.seed)
    }
}

/// Records and per-audit details of every audit in a config.
#[derive(Debug, Clone, Default)]
pub struct AuditRun {
    /// Sorted by scenario id; rows of one audit keep their order.
    pub records: Vec<AuditRecord>,
    pub details: Vec<(String, Value)>,
    /// `(scenario id, message)` for audits that could not run.
    pub errors: Vec<(String, String)>,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub run: AuditRun,
    pub files: Vec<PathBuf>,
}

impl RunOutcome {
    /// 0 unless an audit errored; violations are findings, not errors.
    pub fn exit_code(&self) -> i32 {
        i32::from(!self.run.errors.is_empty())
    }
}

struct Row<'a> {
    spec: &'a AuditSpec,
    mode: &'a str,
    epsilon: f64,
}

impl Row<'_> {
    fn record(&self, flavor: &str, status: &str, verdict: Verdict) -> AuditRecord {
        AuditRecord {
            schema_version: SCHEMA_VERSION,
            scenario: self.spec.id.clone(),
            audit: self.spec.flavor.as_str().to_string(),
            flavor: flavor.to_string(),
            mode: self.mode.to_string(),
            x: self.spec.x.clone(),
            y: self.spec.y.clone(),
            z: self.spec.z.clone(),
            epsilon: self.epsilon,
            status: status.to_string(),
            verdict: verdict.as_str().to_string(),
            predicted: None,
            realized: None,
            relative_residual: None,
            alpha: None,
            rate_beta: None,
            predicate: None,
            within_basin: None,
            detail: String::new(),
        }
    }
}

/// The signed quantity each flavor requires to be nonnegative.
fn margins(shift: &ScoreShift) -> [(&'static str, f64); 5] {
    let fully = shift
        .chosen_versus
        .iter()
        .chain(&shift.versus_rejected)
        .map(|(_, d)| *d)
        .fold(f64::INFINITY, f64::min);
    [
        ("pairwise", shift.pairwise),
        ("fully_pairwise", fully),
        ("individual_score_y", shift.chosen),
        ("individual_score_z", -shift.rejected),
        (
            "individual_probability",
            shift.probability_chosen.min(-shift.probability_rejected),
        ),
    ]
}

fn local_rows(spec: &AuditSpec, audit: &LocalAudit) -> Vec<AuditRecord> {
    let row = Row {
        spec,
        mode: audit.mode.as_str(),
        epsilon: audit.epsilon,
    };
    let failed: Vec<String> = audit
        .hypotheses
        .iter()
        .filter(|h| !h.holds)
        .map(|h| format!("{}: {}", h.name, h.detail))
        .collect();
    let mut detail = failed.join("; ");
    if let Some(reason) = &audit.inconclusive {
        detail = if detail.is_empty() {
            reason.clone()
        } else {
            format!("{reason}; {detail}")
        };
    }
    let Some(shift) = &audit.shift else {
        return FlavorVerdicts::not_applicable()
            .iter()
            .map(|(flavor, _)| {
                let mut r = row.record(flavor, "inconclusive", Verdict::NotApplicable);
                r.detail = detail.clone();
                r
            })
            .collect();
    };
    let verdicts: Vec<(&str, Verdict)> = audit.verdicts.iter().collect();
    margins(shift)
        .into_iter()
        .zip(verdicts)
        .map(|((flavor, margin), (_, verdict))| {
            let mut r = row.record(flavor, "ok", verdict);
            r.realized = Some(margin);
            r.within_basin = audit.within_basin;
            if flavor == "pairwise" {
                if let Some(p) = &audit.prediction {
                    r.alpha = Some(p.alpha);
                    r.rate_beta = Some(p.rate_beta);
                    r.predicted = Some(p.predicted_delta(audit.epsilon));
                }
                r.relative_residual = audit.relative_residual();
                r.predicate = Some(audit.hypotheses_hold());
                r.detail = detail.clone();
            }
            r
        })
        .collect()
}

fn local_detail(audit: &LocalAudit) -> Value {
    json!({
        "epsilon": audit.epsilon,
        "mode": audit.mode.as_str(),
        "theta_star": audit.base.theta_star.as_slice(),
        "theta_perturbed": audit.perturbed.as_ref().map(|p| p.theta_star.as_slice().to_vec()),
        "hypotheses": audit.hypotheses,
        "loss_assumption": audit.loss_assumption,
        "assumption_at_optimum": audit.assumption_at_optimum,
        "alpha": audit.prediction.as_ref().map(|p| p.alpha),
        "rate_beta": audit.prediction.as_ref().map(|p| p.rate_beta),
        "predicted_delta": audit.predicted_delta(),
        "realized_delta": audit.realized_delta(),
        "within_basin": audit.within_basin,
        "verdicts": audit.verdicts,
        "chosen_versus": audit.shift.as_ref().map(|s| s.chosen_versus.clone()),
        "versus_rejected": audit.shift.as_ref().map(|s| s.versus_rejected.clone()),
        "inconclusive": audit.inconclusive,
    })
}

fn gradient_rows(spec: &AuditSpec, audit: &GradientStepAudit) -> Vec<AuditRecord> {
    let row = Row {
        spec,
        mode: Mode::Unequivocal.as_str(),
        epsilon: audit.epsilon,
    };
    let p = &audit.predicates;
    let s = &audit.shift;
    let eps = audit.epsilon;
    let chosen_side = s.chosen_versus.iter().map(|(_, d)| *d).fold(f64::INFINITY, f64::min);
    let min_rate = audit
        .rates
        .chosen_versus
        .iter()
        .map(|(_, r)| *r)
        .fold(f64::INFINITY, f64::min);
    let v = &audit.verdicts;
    let rows = [
        (
            "pairwise",
            v.pairwise,
            p.pairwise,
            s.pairwise,
            Some(audit.rates.pairwise),
        ),
        (
            "individual_score_y",
            v.individual_score_y,
            p.individual_y,
            s.chosen,
            Some(audit.rates.chosen),
        ),
        (
            "individual_score_z",
            v.individual_score_z,
            p.individual_z,
            -s.rejected,
            Some(-audit.rates.rejected),
        ),
        (
            "fully_pairwise",
            v.fully_pairwise,
            p.fully_pairwise,
            chosen_side,
            min_rate.is_finite().then_some(min_rate),
        ),
        (
            "individual_probability",
            v.individual_probability,
            p.fully_pairwise,
            s.probability_chosen,
            None,
        ),
    ];
    rows.into_iter()
        .map(|(flavor, verdict, predicate, realized, rate)| {
            let mut r = row.record(flavor, "ok", verdict);
            r.alpha = Some(audit.alpha);
            r.rate_beta = rate;
            r.predicted = rate.map(|rate| eps * rate);
            r.realized = realized.is_finite().then_some(realized);
            r.relative_residual = rate
                .filter(|rate| *rate != 0.0)
                .map(|rate| (realized / eps - rate).abs() / rate.abs());
            r.predicate = Some(predicate);
            r
        })
        .collect()
}

fn gradient_detail(audit: &GradientStepAudit) -> Value {
    let p = &audit.predicates;
    json!({
        "epsilon": audit.epsilon,
        "alpha": audit.alpha,
        "theta": audit.theta.as_slice(),
        "theta_step": audit.theta_step.as_slice(),
        "gradient_norm": p.gradient_norm,
        "chosen_alignment": p.chosen_alignment,
        "rejected_alignment": p.rejected_alignment,
        "min_chosen_versus_alignment": p.min_chosen_versus_alignment.is_finite().then_some(p.min_chosen_versus_alignment),
        "rates": {
            "pairwise": audit.rates.pairwise,
            "chosen": audit.rates.chosen,
            "rejected": audit.rates.rejected,
            "chosen_versus": audit.rates.chosen_versus,
        },
        "verdicts": audit.verdicts,
        "violations_explained": audit.violations_explained(),
    })
}

fn run_audit(exp: &Experiment, auditor: &Auditor, spec: &AuditSpec) -> Result<(Vec<AuditRecord>, Value)> {
    let problem = &exp.problem;
    let mode = exp.mode_for(spec);
    let epsilons = spec.epsilons.clone().unwrap_or_else(|| DEFAULT_EPSILONS.to_vec());
    let (x, y, z) = (spec.x.as_str(), spec.y.as_str(), spec.z.as_str());
    let mut records = Vec::new();
    let mut details = Vec::new();
    match spec.flavor {
        Flavor::LocalPairwise => {
            for audit in auditor.audit_local_sweep(problem, x, y, z, mode, &epsilons)? {
                records.extend(local_rows(spec, &audit));
                details.push(local_detail(&audit));
            }
        }
        Flavor::FullyPairwise => {
            for &eps in &epsilons {
                let audit = auditor.audit_fully_pairwise_and_probability(problem, x, y, z, eps)?;
                let mut rows = local_rows(spec, &audit.local);
                for r in rows.iter_mut().filter(|r| r.flavor == "individual_probability") {
                    if !audit.implication_consistent {
                        r.detail = "fully-pairwise holds but probability violated".into();
                    }
                }
                records.extend(rows);
                let mut d = local_detail(&audit.local);
                d["implication_consistent"] = json!(audit.implication_consistent);
                details.push(d);
            }
        }
        Flavor::IndividualScore => {
            for &eps in &epsilons {
                let audit = auditor.audit_individual_score(problem, x, y, z, eps)?;
                let Some(local) = &audit.local else {
                    let row = Row {
                        spec,
                        mode: Mode::Intensification.as_str(),
                        epsilon: eps,
                    };
                    let mut r = row.record("individual_score_y", "not_applicable", Verdict::NotApplicable);
                    r.detail = audit.not_applicable.clone().unwrap_or_default();
                    records.push(r);
                    details.push(json!({ "epsilon": eps, "not_applicable": audit.not_applicable }));
                    continue;
                };
                let dominant = audit.dominance.as_ref().map(|d| d.holds);
                let mut rows = local_rows(spec, local);
                for r in rows.iter_mut() {
                    match r.flavor.as_str() {
                        "individual_score_y" => r.predicted = audit.predicted_chosen,
                        "individual_score_z" => r.predicted = audit.predicted_rejected.map(|p| -p),
                        _ => continue,
                    }
                    r.predicate = dominant;
                    r.detail = audit.link.clone();
                }
                records.extend(rows);
                let mut d = local_detail(local);
                d["g_matrix"] = json!(audit.g_matrix.as_ref().map(|g| g
                    .row_iter()
                    .map(|row| row.iter().copied().collect::<Vec<f64>>())
                    .collect::<Vec<_>>()));
                d["dominance"] = json!(audit.dominance);
                d["link"] = json!(audit.link);
                details.push(d);
            }
        }
        Flavor::GlobalLadder => {
            let ladder = auditor.audit_global_ladder(problem, x, y, z, mode, &epsilons)?;
            let row = |eps: f64| Row {
                spec,
                mode: mode.as_str(),
                epsilon: eps,
            };
            let hold = ladder.hypotheses.iter().all(|h| h.holds);
            if ladder.score_differences.len() < epsilons.len() + 1 {
                let mut r = row(0.0).record("global_ladder", "not_applicable", Verdict::NotApplicable);
                r.predicate = Some(hold);
                r.detail = ladder.reason.clone().unwrap_or_default();
                records.push(r);
            } else {
                for (i, &eps) in epsilons.iter().enumerate() {
                    let step = ladder.score_differences[i + 1] - ladder.score_differences[i];
                    let mut r = row(eps).record(
                        "global_ladder",
                        "ok",
                        Verdict::from_delta(step, crate::audit::VIOLATION_TOLERANCE),
                    );
                    r.realized = Some(step);
                    r.predicate = Some(hold);
                    records.push(r);
                }
            }
            details.push(json!({
                "mode": mode.as_str(),
                "epsilons": ladder.epsilons,
                "score_differences": ladder.score_differences,
                "verdict": ladder.verdict,
                "hypotheses": ladder.hypotheses,
                "reason": ladder.reason,
            }));
        }
        Flavor::GradientStep => {
            // the step is on the bare loss of one datum, so the regularizer is dropped
            let bare = problem.without_regularizer()?;
            let theta = exp.theta_for(spec);
            for &eps in &epsilons {
                let audit = auditor.audit_gradient_descent(&bare, &theta, x, y, z, eps)?;
                records.extend(gradient_rows(spec, &audit));
                details.push(gradient_detail(&audit));
            }
        }
    }
    let detail = json!({
        "schema_version": SCHEMA_VERSION,
        "scenario": spec.id,
        "audit": spec.flavor.as_str(),
        "x": spec.x,
        "y": spec.y,
        "z": spec.z,
        "runs": details,
    });
    Ok((records, detail))
}

type AuditResult<'a> = (&'a AuditSpec, Result<(Vec<AuditRecord>, Value)>);

/// Runs every audit of `exp` concurrently and merges the results by
/// scenario id.
pub fn run_audits(exp: &Experiment) -> AuditRun {
    let auditor = Auditor::new(exp.config.solver.clone());
    let mut results: Vec<AuditResult> = exp
        .config
        .audit
        .par_iter()
        .map(|spec| (spec, run_audit(exp, &auditor, spec)))
        .collect();
    results.sort_by(|a, b| a.0.id.cmp(&b.0.id));
    let mut run = AuditRun::default();
    for (spec, result) in results {
        match result {
            Ok((records, detail)) => {
                run.records.extend(records);
                run.details.push((spec.id.clone(), detail));
            }
            Err(e) => {
                let epsilon = spec.epsilons.as_ref().and_then(|e| e.first().copied()).unwrap_or(0.0);
                let mode = exp.mode_for(spec);
                let row = Row {
                    spec,
                    mode: mode.as_str(),
                    epsilon,
                };
                let mut r = row.record(spec.flavor.as_str(), "error", Verdict::NotApplicable);
                r.detail = e.to_string();
                run.records.push(r);
                run.errors.push((spec.id.clone(), e.to_string()));
            }
        }
    }
    run
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

/// Loads a config, runs its audits and writes the summary report plus one
/// JSON detail file per audit.
pub fn run_config(path: impl AsRef<Path>, options: &RunOptions) -> Result<RunOutcome> {
    let exp = Experiment::load(path)?;
    let run = run_audits(&exp);
    let dir = options.out_dir(&exp);
    create_dir(&dir)?;
    let mut files = Vec::new();
    for &format in options.format(&exp).encodings() {
        let file = dir.join(format!("{}-audit.{}", exp.name, format.extension()));
        emit_report(&run.records, format, &file)?;
        files.push(file);
    }
    for (id, detail) in &run.details {
        let file = dir.join(format!("{}-{id}.json", exp.name));
        let text = serde_json::to_string_pretty(detail).expect("detail values are plain JSON");
        std::fs::write(&file, text + "\n").map_err(|e| Error::io(&file, e))?;
        files.push(file);
    }
    Ok(RunOutcome { run, files })
}

/// Sequential explicit gradient steps on `ℓ(s_{yz|x}, max C)` over pairs
/// drawn uniformly with `seed`. The regularizer is ignored.
pub fn run_figure1_analog(exp: &Experiment, seed: u64) -> Result<Vec<StepTraceRecord>> {
    let fig = exp
        .config
        .figure1
        .as_ref()
        .ok_or_else(|| Error::config("figure1", "section missing"))?;
    let problem = &exp.problem;
    let model = problem.model();
    let domain = problem.dataset().domain();
    let mut theta = match &fig.init {
        Some(init) => DVector::from_column_slice(init),
        None => DVector::zeros(problem.dim()),
    };
    let triples = fig
        .pairs
        .iter()
        .map(|p| Triple::resolve(model, &p.x, &p.chosen, &p.rejected).map(|t| (p, t)))
        .collect::<Result<Vec<_>>>()?;
    if triples.is_empty() {
        return Ok(Vec::new());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut trace = Vec::with_capacity(fig.steps);
    for step in 0..fig.steps {
        let (pair, triple) = &triples[rng.random_range(0..triples.len())];
        let chosen_before = model.score_at(&theta, triple.x, triple.y)?;
        let rejected_before = model.score_at(&theta, triple.x, triple.z)?;
        let audit = gradient_step(problem.family(), model, domain, &theta, *triple, fig.learning_rate)?;
        let chosen_after = model.score_at(&audit.theta_step, triple.x, triple.y)?;
        let rejected_after = model.score_at(&audit.theta_step, triple.x, triple.z)?;
        let p = &audit.predicates;
        let v = &audit.verdicts;
        trace.push(StepTraceRecord {
            schema_version: SCHEMA_VERSION,
            step,
            x: pair.x.clone(),
            chosen: pair.chosen.clone(),
            rejected: pair.rejected.clone(),
            chosen_score_before: chosen_before,
            rejected_score_before: rejected_before,
            chosen_delta: chosen_after - chosen_before,
            rejected_delta: rejected_after - rejected_before,
            pairwise_delta: audit.shift.pairwise,
            alpha: audit.alpha,
            chosen_alignment: p.chosen_alignment,
            rejected_alignment: p.rejected_alignment,
            min_chosen_versus_alignment: p.min_chosen_versus_alignment,
            predicate_pairwise: p.pairwise,
            predicate_chosen: p.individual_y,
            predicate_rejected: p.individual_z,
            predicate_fully_pairwise: p.fully_pairwise,
            verdict_pairwise: v.pairwise.as_str().into(),
            verdict_chosen: v.individual_score_y.as_str().into(),
            verdict_rejected: v.individual_score_z.as_str().into(),
            verdict_fully_pairwise: v.fully_pairwise.as_str().into(),
            verdict_probability: v.individual_probability.as_str().into(),
        });
        theta = audit.theta_step;
    }
    Ok(trace)
}

/// Loads a config, runs its gradient-step trace and writes it.
pub fn run_figure1_config(
    path: impl AsRef<Path>,
    options: &RunOptions,
) -> Result<(Vec<StepTraceRecord>, Vec<PathBuf>)> {
    let exp = Experiment::load(path)?;
    let trace = run_figure1_analog(&exp, options.seed(&exp))?;
    let dir = options.out_dir(&exp);
    create_dir(&dir)?;
    let mut files = Vec::new();
    for &format in options.format(&exp).encodings() {
        let file = dir.join(format!("{}-figure1.{}", exp.name, format.extension()));
        emit_report(&trace, format, &file)?;
        files.push(file);
    }
    Ok((trace, files))
}

/// Outcome of the randomized inverse-difference check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LemmaSummary {
    pub dim: usize,
    pub trials: usize,
    pub seed: u64,
    pub passed: usize,
    pub worst_margin: f64,
    pub worst_trial: Option<usize>,
}

/// Draws `trials` random strictly diagonally dominant matrices with
/// nonpositive off-diagonals and checks the inverse-difference inequality.
pub fn check_lemma(dim: usize, trials: usize, seed: u64) -> Result<LemmaSummary> {
    if dim == 0 {
        return Err(Error::InvalidInput("dimension must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut summary = LemmaSummary {
        dim,
        trials,
        seed,
        passed: 0,
        worst_margin: f64::INFINITY,
        worst_trial: None,
    };
    for trial in 0..trials {
        let m = random_dominant_m_matrix(&mut rng, dim);
        let verdict = lemma_inverse_difference_check(&m)?;
        summary.passed += usize::from(verdict.holds);
        if verdict.worst_margin < summary.worst_margin {
            summary.worst_margin = verdict.worst_margin;
            summary.worst_trial = Some(trial);
        }
    }
    Ok(summary)
}
