//! Minimization of `Loss(θ | D) = R(θ) + Σ wᵢ ℓ(s_{yᵢzᵢ|xᵢ}(θ), cᵢ)` with its
//! exact gradient and Hessian, and certification of strict local minima.
//!
//! All linear algebra is dense; problems are expected to have at most a few
//! thousand parameters.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::loss::LossFamily;
use crate::score::{check_parameters, ParameterVector, ScoreModel};

/// Gradient max-norm below which a point counts as stationary.
pub const STATIONARY_TOLERANCE: f64 = 1e-8;
/// Smallest Hessian eigenvalue accepted as positive definite.
pub const POSITIVE_DEFINITE_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub enum Regularizer {
    None,
    /// `½ λ ‖θ - center‖²`.
    L2 {
        lambda: f64,
        center: ParameterVector,
    },
}

impl Regularizer {
    pub fn l2(lambda: f64, center: ParameterVector) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "L2 strength λ = {lambda} must be positive"
            )));
        }
        if center.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("L2 center has non-finite entries".into()));
        }
        Ok(Regularizer::L2 { lambda, center })
    }

    pub fn is_strongly_convex(&self) -> bool {
        matches!(self, Regularizer::L2 { .. })
    }

    fn check_dim(&self, dim: usize) -> Result<()> {
        match self {
            Regularizer::L2 { center, .. } if center.len() != dim => Err(Error::InvalidInput(format!(
                "L2 center has length {}, expected {dim}",
                center.len()
            ))),
            _ => Ok(()),
        }
    }

    pub fn value(&self, theta: &ParameterVector) -> Result<f64> {
        match self {
            Regularizer::None => Ok(0.0),
            Regularizer::L2 { lambda, center } => {
                self.check_dim(theta.len())?;
                Ok(0.5 * lambda * (theta - center).norm_squared())
            }
        }
    }

    fn add_gradient(&self, theta: &ParameterVector, out: &mut DVector<f64>) {
        if let Regularizer::L2 { lambda, center } = self {
            *out += (theta - center) * *lambda;
        }
    }

    fn add_hessian(&self, out: &mut DMatrix<f64>) {
        if let Regularizer::L2 { lambda, .. } = self {
            for i in 0..out.nrows() {
                out[(i, i)] += lambda;
            }
        }
    }
}

/// Optional removal of the per-background translation symmetry of one-hot and
/// softmax-policy models when no regularizer pins it down.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Gauge {
    #[default]
    None,
    MeanZeroPerBackground,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSettings {
    /// Stop once `‖∇Loss‖∞` falls to this value.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Initial Levenberg shift, relative to the Hessian scale, tried when the
    /// Hessian is not positive definite.
    pub damping: f64,
    pub gauge: Gauge,
}

impl Default for SolverSettings {
    fn default() -> Self {
        SolverSettings {
            tolerance: 1e-10,
            max_iterations: 500,
            damping: 1e-8,
            gauge: Gauge::None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub theta_star: ParameterVector,
    pub grad_norm: f64,
    pub hessian_min_eigenvalue: f64,
    pub converged: bool,
    pub iterations: usize,
    /// Whether Levenberg damping had to be applied to a non-positive-definite
    /// Hessian along the way.
    pub damped: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub grad_norm: f64,
    pub min_eigenvalue: f64,
    pub is_strict_local_min: bool,
}

#[derive(Debug, Clone, Copy)]
struct Term {
    x: usize,
    y: usize,
    z: usize,
    c: f64,
    weight: f64,
}

/// A dataset, loss family, score model and regularizer bound together, with
/// identifiers resolved to dense indices.
#[derive(Debug, Clone)]
pub struct Problem {
    dataset: Dataset,
    family: LossFamily,
    model: ScoreModel,
    regularizer: Regularizer,
    terms: Vec<Term>,
}

impl Problem {
    pub fn new(dataset: Dataset, family: LossFamily, model: ScoreModel, regularizer: Regularizer) -> Result<Self> {
        family.validate()?;
        regularizer.check_dim(model.dim())?;
        let domain = family.domain();
        let mut terms = Vec::with_capacity(dataset.len());
        for cmp in dataset.comparisons() {
            domain.check(cmp.c)?;
            let (x, y) = model.lookup(&cmp.x, &cmp.y)?;
            let z = model.space().alternative(&cmp.z)?;
            terms.push(Term {
                x,
                y,
                z,
                c: cmp.c,
                weight: cmp.weight,
            });
        }
        Ok(Problem {
            dataset,
            family,
            model,
            regularizer,
            terms,
        })
    }

    /// Same family, model and regularizer over another dataset.
    pub fn with_dataset(&self, dataset: Dataset) -> Result<Self> {
        Problem::new(
            dataset,
            self.family.clone(),
            self.model.clone(),
            self.regularizer.clone(),
        )
    }

    pub fn without_regularizer(&self) -> Result<Self> {
        Problem::new(
            self.dataset.clone(),
            self.family.clone(),
            self.model.clone(),
            Regularizer::None,
        )
    }

    pub fn dataset(&self) -> &Dataset {
        &self.dataset
    }

    pub fn family(&self) -> &LossFamily {
        &self.family
    }

    pub fn model(&self) -> &ScoreModel {
        &self.model
    }

    pub fn regularizer(&self) -> &Regularizer {
        &self.regularizer
    }

    pub fn dim(&self) -> usize {
        self.model.dim()
    }

    /// The regularizer center, or zero.
    pub fn default_init(&self) -> ParameterVector {
        match &self.regularizer {
            Regularizer::L2 { center, .. } => center.clone(),
            Regularizer::None => DVector::zeros(self.dim()),
        }
    }

    pub fn loss(&self, theta: &ParameterVector) -> Result<f64> {
        check_parameters(theta, self.dim())?;
        let mut total = self.regularizer.value(theta)?;
        for t in &self.terms {
            let s = self.model.score_difference_at(theta, t.x, t.y, t.z)?;
            total += t.weight * self.family.loss_value(s, t.c)?;
        }
        Ok(total)
    }

    fn name_term(&self, i: usize, err: Error) -> Error {
        match err {
            Error::NonDifferentiable { s, c, .. } => {
                let cmp = &self.dataset.comparisons()[i];
                Error::NonDifferentiable {
                    s,
                    c,
                    context: Some(format!("datum #{i} ({}, {}, {}, {})", cmp.x, cmp.y, cmp.z, cmp.c)),
                }
            }
            other => other,
        }
    }

    pub fn gradient(&self, theta: &ParameterVector) -> Result<DVector<f64>> {
        check_parameters(theta, self.dim())?;
        let mut g = DVector::zeros(self.dim());
        self.regularizer.add_gradient(theta, &mut g);
        for (i, t) in self.terms.iter().enumerate() {
            if t.weight == 0.0 {
                continue;
            }
            let s = self.model.score_difference_at(theta, t.x, t.y, t.z)?;
            let d = self.family.dloss_ds(s, t.c).map_err(|e| self.name_term(i, e))?;
            let grad_s = self.model.score_difference_gradient_at(theta, t.x, t.y, t.z)?;
            g.axpy(t.weight * d, &grad_s, 1.0);
        }
        Ok(g)
    }

    pub fn hessian(&self, theta: &ParameterVector) -> Result<DMatrix<f64>> {
        check_parameters(theta, self.dim())?;
        let dim = self.dim();
        let mut h = DMatrix::zeros(dim, dim);
        self.regularizer.add_hessian(&mut h);
        let curved = !self.model.is_linear_in_parameters();
        for (i, t) in self.terms.iter().enumerate() {
            if t.weight == 0.0 {
                continue;
            }
            let s = self.model.score_difference_at(theta, t.x, t.y, t.z)?;
            let d2 = self.family.d2loss_ds2(s, t.c).map_err(|e| self.name_term(i, e))?;
            let grad_s = self.model.score_difference_gradient_at(theta, t.x, t.y, t.z)?;
            h.ger(t.weight * d2, &grad_s, &grad_s, 1.0);
            if curved {
                let d1 = self.family.dloss_ds(s, t.c).map_err(|e| self.name_term(i, e))?;
                let hs = self.model.score_difference_hessian_at(theta, t.x, t.y, t.z)?;
                h += hs * (t.weight * d1);
            }
        }
        // exact symmetry
        let ht = h.transpose();
        Ok((h + ht) * 0.5)
    }

    fn gauge_directions(&self, gauge: Gauge) -> Vec<DVector<f64>> {
        match (gauge, &self.model) {
            (Gauge::MeanZeroPerBackground, ScoreModel::OneHot { space })
            | (Gauge::MeanZeroPerBackground, ScoreModel::DpoSoftmax { space, .. }) => {
                let n = space.n_alternatives();
                let norm = 1.0 / (n as f64).sqrt();
                (0..space.n_backgrounds())
                    .map(|x| {
                        let mut u = DVector::zeros(self.dim());
                        for y in 0..n {
                            u[space.cell(x, y)] = norm;
                        }
                        u
                    })
                    .collect()
            }
            _ => Vec::new(),
        }
    }

    /// Hessian restricted to the gauge-fixed subspace; the gauge directions
    /// are mapped to a large positive eigenvalue so they never limit the
    /// spectrum.
    fn gauged_hessian(&self, h: DMatrix<f64>, directions: &[DVector<f64>]) -> DMatrix<f64> {
        if directions.is_empty() {
            return h;
        }
        let dim = h.nrows();
        let mut p = DMatrix::identity(dim, dim);
        for u in directions {
            p.ger(-1.0, u, u, 1.0);
        }
        let mut out = &p * h * &p;
        let scale = 1e6 * (1.0 + out.amax());
        for u in directions {
            out.ger(scale, u, u, 1.0);
        }
        out
    }

    fn project_gauge(theta: &mut DVector<f64>, directions: &[DVector<f64>]) {
        for u in directions {
            let coef = u.dot(theta);
            theta.axpy(-coef, u, 1.0);
        }
    }

    pub fn certify_minimum(&self, theta: &ParameterVector) -> Result<Certificate> {
        self.certify_with(theta, Gauge::None)
    }

    pub fn certify_with(&self, theta: &ParameterVector, gauge: Gauge) -> Result<Certificate> {
        let grad_norm = self.gradient(theta)?.amax();
        let directions = self.gauge_directions(gauge);
        let h = self.gauged_hessian(self.hessian(theta)?, &directions);
        let min_eigenvalue = min_eigenvalue(&h);
        Ok(Certificate {
            grad_norm,
            min_eigenvalue,
            is_strict_local_min: grad_norm <= STATIONARY_TOLERANCE && min_eigenvalue >= POSITIVE_DEFINITE_TOLERANCE,
        })
    }

    /// Damped Newton descent with backtracking, falling back to the negative
    /// gradient when the Newton direction does not descend.
    pub fn minimize(&self, init: &ParameterVector, settings: &SolverSettings) -> Result<SolveResult> {
        check_parameters(init, self.dim())?;
        let directions = self.gauge_directions(settings.gauge);
        let mut theta = init.clone();
        if !directions.is_empty() {
            if self.regularizer.is_strongly_convex() {
                return Err(Error::InvalidInput(
                    "gauge fixing only applies to unregularized problems".into(),
                ));
            }
            Self::project_gauge(&mut theta, &directions);
        }
        let mut damped = false;
        let mut iterations = 0;
        let mut converged = false;
        let mut grad = self.gradient(&theta)?;
        while iterations < settings.max_iterations {
            if grad.amax() <= settings.tolerance {
                converged = true;
                break;
            }
            iterations += 1;
            let h = self.gauged_hessian(self.hessian(&theta)?, &directions);
            let (mut step, was_damped) = damped_newton_step(&h, &grad, settings.damping);
            damped |= was_damped;
            let mut slope = grad.dot(&step);
            if slope.is_nan() || slope >= 0.0 || step.iter().any(|v| !v.is_finite()) {
                step = -&grad;
                slope = -grad.norm_squared();
            }
            let f0 = self.loss(&theta)?;
            let slack = 8.0 * f64::EPSILON * (1.0 + f0.abs());
            let mut t = 1.0;
            let mut next = &theta + &step * t;
            loop {
                match self.loss(&next) {
                    Ok(f) if f <= f0 + 1e-4 * t * slope + slack => break,
                    _ => {}
                }
                t *= 0.5;
                if t < 1e-20 {
                    break;
                }
                next = &theta + &step * t;
            }
            if t < 1e-20 {
                // no progress possible in this direction
                break;
            }
            Self::project_gauge(&mut next, &directions);
            theta = next;
            grad = self.gradient(&theta)?;
        }
        if !converged && grad.amax() <= settings.tolerance {
            converged = true;
        }
        let h = self.gauged_hessian(self.hessian(&theta)?, &directions);
        Ok(SolveResult {
            grad_norm: grad.amax(),
            hessian_min_eigenvalue: min_eigenvalue(&h),
            theta_star: theta,
            converged,
            iterations,
            damped,
        })
    }
}

fn damped_newton_step(h: &DMatrix<f64>, grad: &DVector<f64>, damping: f64) -> (DVector<f64>, bool) {
    let scale = 1.0f64.max(h.amax());
    let mut mu = 0.0;
    let mut damped = false;
    for _ in 0..60 {
        let mut shifted = h.clone();
        for i in 0..shifted.nrows() {
            shifted[(i, i)] += mu;
        }
        if let Some(chol) = shifted.cholesky() {
            return (-chol.solve(grad), damped);
        }
        damped = true;
        mu = if mu == 0.0 {
            damping.max(1e-14) * scale
        } else {
            mu * 10.0
        };
    }
    (-grad.clone(), true)
}

pub fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return f64::INFINITY;
    }
    SymmetricEigen::new(m.clone())
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// Solves `M u = v` for symmetric positive-definite `M`.
pub fn solve_spd(m: &DMatrix<f64>, v: &DVector<f64>) -> Result<DVector<f64>> {
    m.clone()
        .cholesky()
        .map(|c| c.solve(v))
        .ok_or_else(|| Error::Singular("Cholesky factorization failed".into()))
}
