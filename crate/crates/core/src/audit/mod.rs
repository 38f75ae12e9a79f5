//! Executable monotonicity audits.
//!
//! Each audit solves the base problem, perturbs the dataset in favor of `y`
//! against `z` under `x`, re-solves, and compares what moved against what
//! first-order sensitivity analysis predicts. Flavors:
//!
//! - **pairwise**: `s_{yz|x}` does not decrease;
//! - **fully pairwise**: `s_{yw|x}` does not decrease for any `w ≠ y`, and
//!   `s_{wz|x}` does not decrease for any `w ≠ z`;
//! - **individual score**: `s_{y|x}` does not decrease and `s_{z|x}` does not
//!   increase;
//! - **individual probability**: the same for `π(y|x)` and `π(z|x)`.
//!
//! "Local" is operationalized by warm-starting the re-solve at `θ*` and
//! checking the new optimum stays within `10·α·‖H⁻¹∇s‖·ε` of it.

mod gradient;
mod local;

use std::fmt;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

pub use gradient::{gradient_step, GradientPredicates, GradientRates, GradientStepAudit};
pub use local::{FullyPairwiseAudit, IndividualScoreAudit, LadderAudit, LocalAudit};

use crate::error::{Error, Result};
use crate::loss::{self, ComparisonDomain, LossFamily};
use crate::score::{ParameterVector, ScoreModel};
use crate::solver::SolverSettings;

/// Realized deltas below `-VIOLATION_TOLERANCE` count as violations.
pub const VIOLATION_TOLERANCE: f64 = 1e-9;
/// Violation threshold for single explicit gradient steps, which carry no
/// solver error.
pub const GRADIENT_STEP_TOLERANCE: f64 = 1e-12;
/// Basin radius factor for the locality check.
pub const BASIN_FACTOR: f64 = 10.0;

/// The ε sweep applied when an audit does not specify one.
pub const DEFAULT_EPSILONS: [f64; 3] = [1e-2, 1e-3, 1e-4];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Holds,
    Violated,
    NotApplicable,
}

impl Verdict {
    pub fn from_delta(delta: f64, tolerance: f64) -> Self {
        if delta >= -tolerance {
            Verdict::Holds
        } else {
            Verdict::Violated
        }
    }

    fn and(self, other: Verdict) -> Verdict {
        match (self, other) {
            (Verdict::NotApplicable, v) | (v, Verdict::NotApplicable) => v,
            (Verdict::Holds, Verdict::Holds) => Verdict::Holds,
            _ => Verdict::Violated,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Holds => "holds",
            Verdict::Violated => "violated",
            Verdict::NotApplicable => "not_applicable",
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// How the dataset is perturbed in favor of `y` against `z`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Append `(x, y, z, max C)` with weight ε.
    Unequivocal,
    /// Push existing comparisons on the triple by ε.
    Intensification,
}

impl Mode {
    pub fn as_str(&self) -> &'static str {
        match self {
            Mode::Unequivocal => "unequivocal",
            Mode::Intensification => "intensification",
        }
    }
}

/// First-order prediction of how `s_{yz|x}` moves under the perturbation.
#[derive(Debug, Clone, PartialEq)]
pub struct AuditPrediction {
    pub mode: Mode,
    /// Loss sensitivity: `-∂sℓ(s*, max C)` for unequivocal additions, or the
    /// weighted sum of `-∂c∂sℓ` over the unsaturated occurrences of the
    /// triple for intensification.
    pub alpha: f64,
    /// `α ∇sᵀ H⁻¹ ∇s`: predicted `d s_{yz|x} / dε` at ε = 0.
    pub rate_beta: f64,
    /// `∇θ s_{yz|x}(θ*)`.
    pub gradient_s: DVector<f64>,
    /// `α H⁻¹ ∇s`: predicted `dθ/dε` at ε = 0.
    pub direction: DVector<f64>,
    /// Occurrences of the triple (either orientation) that the push moves.
    pub occurrences: usize,
}

impl AuditPrediction {
    pub fn predicted_delta(&self, epsilon: f64) -> f64 {
        epsilon * self.rate_beta
    }
}

/// A named hypothesis of a monotonicity guarantee and whether it holds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hypothesis {
    pub name: &'static str,
    pub holds: bool,
    pub detail: String,
}

impl Hypothesis {
    fn new(name: &'static str, holds: bool, detail: impl Into<String>) -> Self {
        Hypothesis {
            name,
            holds,
            detail: detail.into(),
        }
    }
}

pub(crate) fn all_hold(hypotheses: &[Hypothesis]) -> bool {
    hypotheses.iter().all(|h| h.holds)
}

/// Score movements between two parameter vectors for one background.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreShift {
    /// `Δ s_{yz|x}`.
    pub pairwise: f64,
    /// `Δ s_{y|x}`.
    pub chosen: f64,
    /// `Δ s_{z|x}`.
    pub rejected: f64,
    /// `Δ s_{yw|x}` for every `w ≠ y`.
    pub chosen_versus: Vec<(String, f64)>,
    /// `Δ s_{wz|x}` for every `w ≠ z`.
    pub versus_rejected: Vec<(String, f64)>,
    /// `Δ π(y|x)`.
    pub probability_chosen: f64,
    /// `Δ π(z|x)`.
    pub probability_rejected: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlavorVerdicts {
    pub pairwise: Verdict,
    pub fully_pairwise: Verdict,
    pub individual_score_y: Verdict,
    pub individual_score_z: Verdict,
    pub individual_probability: Verdict,
}

impl FlavorVerdicts {
    pub fn not_applicable() -> Self {
        FlavorVerdicts {
            pairwise: Verdict::NotApplicable,
            fully_pairwise: Verdict::NotApplicable,
            individual_score_y: Verdict::NotApplicable,
            individual_score_z: Verdict::NotApplicable,
            individual_probability: Verdict::NotApplicable,
        }
    }

    /// The softmax implication: fully-pairwise monotonicity forces
    /// individual-probability monotonicity.
    pub fn implication_consistent(&self) -> bool {
        !(self.fully_pairwise == Verdict::Holds && self.individual_probability == Verdict::Violated)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&'static str, Verdict)> {
        [
            ("pairwise", self.pairwise),
            ("fully_pairwise", self.fully_pairwise),
            ("individual_score_y", self.individual_score_y),
            ("individual_score_z", self.individual_score_z),
            ("individual_probability", self.individual_probability),
        ]
        .into_iter()
    }
}

impl ScoreShift {
    pub fn between(
        model: &ScoreModel,
        before: &ParameterVector,
        after: &ParameterVector,
        triple: Triple,
    ) -> Result<Self> {
        let Triple { x, y, z } = triple;
        let n = model.space().n_alternatives();
        let diff = |a: usize, b: usize| -> Result<f64> {
            Ok(model.score_difference_at(after, x, a, b)? - model.score_difference_at(before, x, a, b)?)
        };
        let names = model.space().alternatives();
        let mut chosen_versus = Vec::with_capacity(n.saturating_sub(1));
        let mut versus_rejected = Vec::with_capacity(n.saturating_sub(1));
        for (w, name) in names.iter().enumerate().take(n) {
            if w != y {
                chosen_versus.push((name.clone(), diff(y, w)?));
            }
            if w != z {
                versus_rejected.push((name.clone(), diff(w, z)?));
            }
        }
        let p0 = model.probabilities_at(before, x)?;
        let p1 = model.probabilities_at(after, x)?;
        Ok(ScoreShift {
            pairwise: diff(y, z)?,
            chosen: model.score_at(after, x, y)? - model.score_at(before, x, y)?,
            rejected: model.score_at(after, x, z)? - model.score_at(before, x, z)?,
            chosen_versus,
            versus_rejected,
            probability_chosen: p1[y] - p0[y],
            probability_rejected: p1[z] - p0[z],
        })
    }

    pub fn verdicts(&self, tolerance: f64) -> FlavorVerdicts {
        let all = |deltas: &[(String, f64)]| {
            deltas.iter().fold(Verdict::Holds, |acc, (_, d)| {
                acc.and(Verdict::from_delta(*d, tolerance))
            })
        };
        FlavorVerdicts {
            pairwise: Verdict::from_delta(self.pairwise, tolerance),
            fully_pairwise: all(&self.chosen_versus).and(all(&self.versus_rejected)),
            individual_score_y: Verdict::from_delta(self.chosen, tolerance),
            individual_score_z: Verdict::from_delta(-self.rejected, tolerance),
            individual_probability: Verdict::from_delta(self.probability_chosen, tolerance)
                .and(Verdict::from_delta(-self.probability_rejected, tolerance)),
        }
    }

    /// Smallest `Δ s_{yw|x}` over `w ≠ y`, with its `w`.
    pub fn worst_chosen_versus(&self) -> Option<(&str, f64)> {
        self.chosen_versus
            .iter()
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .map(|(w, d)| (w.as_str(), *d))
    }
}

/// Dense indices of `(x, y, z)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Triple {
    pub x: usize,
    pub y: usize,
    pub z: usize,
}

impl Triple {
    pub fn resolve(model: &ScoreModel, x: &str, y: &str, z: &str) -> Result<Self> {
        if y == z {
            return Err(Error::InvalidInput(format!(
                "audited alternatives must differ, got `{y}` twice"
            )));
        }
        let (xi, yi) = model.lookup(x, y)?;
        let zi = model.space().alternative(z)?;
        Ok(Triple { x: xi, y: yi, z: zi })
    }
}

/// Runs audits with shared solver settings and assumption grids.
#[derive(Debug, Clone)]
pub struct Auditor {
    pub solver: SolverSettings,
    /// Score differences at which the loss assumptions are checked; the
    /// audited `s*` is always added.
    pub s_grid: Vec<f64>,
}

impl Default for Auditor {
    fn default() -> Self {
        Auditor {
            solver: SolverSettings::default(),
            s_grid: loss::default_s_grid(),
        }
    }
}

impl Auditor {
    pub fn new(solver: SolverSettings) -> Self {
        Auditor {
            solver,
            ..Auditor::default()
        }
    }

    fn grid_with(&self, s: f64) -> Vec<f64> {
        let mut grid = self.s_grid.clone();
        grid.push(s);
        grid
    }

    fn c_grid(domain: &ComparisonDomain) -> Vec<f64> {
        match (domain.min(), domain.max()) {
            (Some(lo), Some(hi)) => loss::linspace(lo, hi, 21),
            _ => loss::linspace(-20.0, 20.0, 41),
        }
    }

    /// The loss assumption the mode relies on, evaluated on the grid plus `s`.
    pub fn loss_assumption(&self, family: &LossFamily, mode: Mode, s: f64) -> loss::AssumptionVerdict {
        let grid = self.grid_with(s);
        match mode {
            Mode::Unequivocal => loss::check_assumption_max(family, &grid),
            Mode::Intensification => loss::check_assumption_cross(family, &grid, &Self::c_grid(&family.domain())),
        }
    }
}
