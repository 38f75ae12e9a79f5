//! Parameterized score models `s_{y|x}(θ)`.
//!
//! Backgrounds (prompts) and alternatives (responses) are opaque string ids
//! mapped to dense indices when a [`ProblemSpace`] is built. One-hot and
//! softmax-policy models lay out their parameters background-major: the
//! coordinate of `(x, y)` is `x * |A| + y`.
//!
//! The softmax-policy model scores with the reference-relative log-ratio
//! `β (log π_θ(y|x) - log π_ref(y|x))`. The per-background normalizer
//! `β log Z_x(θ)` that turns this into the full DPO reward is not included:
//! it cancels in every score difference, so losses, their derivatives and
//! every audit are unaffected. Individual scores of this model therefore
//! have difference-only semantics.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

pub type ParameterVector = DVector<f64>;

/// Rejects parameter vectors with the wrong length or non-finite entries.
pub fn check_parameters(theta: &ParameterVector, dim: usize) -> Result<()> {
    if theta.len() != dim {
        return Err(Error::InvalidInput(format!(
            "parameter vector has length {}, expected {dim}",
            theta.len()
        )));
    }
    if theta.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("parameter vector has non-finite entries".into()));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSpace {
    backgrounds: Vec<String>,
    alternatives: Vec<String>,
    background_index: HashMap<String, usize>,
    alternative_index: HashMap<String, usize>,
}

impl ProblemSpace {
    pub fn new<B, A>(backgrounds: B, alternatives: A) -> Result<Self>
    where
        B: IntoIterator,
        B::Item: Into<String>,
        A: IntoIterator,
        A::Item: Into<String>,
    {
        let backgrounds: Vec<String> = backgrounds.into_iter().map(Into::into).collect();
        let alternatives: Vec<String> = alternatives.into_iter().map(Into::into).collect();
        if backgrounds.is_empty() || alternatives.is_empty() {
            return Err(Error::InvalidInput(
                "problem space needs at least one background and one alternative".into(),
            ));
        }
        let background_index = index_of(&backgrounds, "background")?;
        let alternative_index = index_of(&alternatives, "alternative")?;
        Ok(ProblemSpace {
            backgrounds,
            alternatives,
            background_index,
            alternative_index,
        })
    }

    pub fn backgrounds(&self) -> &[String] {
        &self.backgrounds
    }

    pub fn alternatives(&self) -> &[String] {
        &self.alternatives
    }

    pub fn n_backgrounds(&self) -> usize {
        self.backgrounds.len()
    }

    pub fn n_alternatives(&self) -> usize {
        self.alternatives.len()
    }

    pub fn background(&self, id: &str) -> Result<usize> {
        self.background_index.get(id).copied().ok_or_else(|| Error::Lookup {
            kind: "background",
            id: id.to_string(),
        })
    }

    pub fn alternative(&self, id: &str) -> Result<usize> {
        self.alternative_index.get(id).copied().ok_or_else(|| Error::Lookup {
            kind: "alternative",
            id: id.to_string(),
        })
    }

    /// Dense coordinate of `(x, y)` in a background-major table.
    pub fn cell(&self, x: usize, y: usize) -> usize {
        x * self.alternatives.len() + y
    }

    pub fn n_cells(&self) -> usize {
        self.backgrounds.len() * self.alternatives.len()
    }
}

fn index_of(ids: &[String], kind: &'static str) -> Result<HashMap<String, usize>> {
    let mut map = HashMap::with_capacity(ids.len());
    for (i, id) in ids.iter().enumerate() {
        if map.insert(id.clone(), i).is_some() {
            return Err(Error::InvalidInput(format!("duplicate {kind} identifier `{id}`")));
        }
    }
    Ok(map)
}

#[derive(Debug, Clone, PartialEq)]
pub enum ScoreModel {
    /// `s_{y|x}(θ) = θ_{xy}`.
    OneHot { space: ProblemSpace },
    /// `s_{y|x}(θ) = θ · f(x, y)`; `embedding` is indexed by cell.
    Linear {
        space: ProblemSpace,
        embedding: Vec<DVector<f64>>,
        dim: usize,
    },
    /// Softmax policy with logits `θ`, scored relative to a reference policy.
    DpoSoftmax {
        space: ProblemSpace,
        /// `log π_ref(y|x)`, indexed by cell.
        reference_log_probs: Vec<f64>,
        beta: f64,
    },
}

impl ScoreModel {
    pub fn one_hot(space: ProblemSpace) -> Self {
        ScoreModel::OneHot { space }
    }

    /// `embedding(x, y)` is called once per cell.
    pub fn linear<F>(space: ProblemSpace, mut embedding: F) -> Result<Self>
    where
        F: FnMut(&str, &str) -> Vec<f64>,
    {
        let mut table = Vec::with_capacity(space.n_cells());
        for x in space.backgrounds() {
            for y in space.alternatives() {
                table.push(DVector::from_vec(embedding(x, y)));
            }
        }
        Self::linear_from_table(space, table)
    }

    pub fn linear_from_table(space: ProblemSpace, table: Vec<DVector<f64>>) -> Result<Self> {
        if table.len() != space.n_cells() {
            return Err(Error::InvalidInput(format!(
                "embedding table has {} rows, expected {}",
                table.len(),
                space.n_cells()
            )));
        }
        let dim = table[0].len();
        if dim == 0 {
            return Err(Error::InvalidInput("embedding dimension must be positive".into()));
        }
        for f in &table {
            if f.len() != dim {
                return Err(Error::InvalidInput("embedding vectors differ in length".into()));
            }
            if f.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidInput("embedding has non-finite entries".into()));
            }
        }
        Ok(ScoreModel::Linear {
            space,
            embedding: table,
            dim,
        })
    }

    /// `reference_logits` is indexed by cell; it is normalized per background.
    pub fn dpo_softmax(space: ProblemSpace, reference_logits: &[f64], beta: f64) -> Result<Self> {
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::InvalidInput(format!("temperature β = {beta} must be positive")));
        }
        if reference_logits.len() != space.n_cells() {
            return Err(Error::InvalidInput(format!(
                "reference logits have length {}, expected {}",
                reference_logits.len(),
                space.n_cells()
            )));
        }
        if reference_logits.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("reference logits must be finite".into()));
        }
        let n = space.n_alternatives();
        let mut reference_log_probs = Vec::with_capacity(reference_logits.len());
        for row in reference_logits.chunks(n) {
            let lse = log_sum_exp(row);
            reference_log_probs.extend(row.iter().map(|l| l - lse));
        }
        Ok(ScoreModel::DpoSoftmax {
            space,
            reference_log_probs,
            beta,
        })
    }

    pub fn space(&self) -> &ProblemSpace {
        match self {
            ScoreModel::OneHot { space } | ScoreModel::Linear { space, .. } | ScoreModel::DpoSoftmax { space, .. } => {
                space
            }
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            ScoreModel::OneHot { .. } => "one_hot",
            ScoreModel::Linear { .. } => "linear",
            ScoreModel::DpoSoftmax { .. } => "dpo_softmax",
        }
    }

    /// Number of parameters `D`.
    pub fn dim(&self) -> usize {
        match self {
            ScoreModel::OneHot { space } | ScoreModel::DpoSoftmax { space, .. } => space.n_cells(),
            ScoreModel::Linear { dim, .. } => *dim,
        }
    }

    /// Whether every score Hessian is identically zero.
    pub fn is_linear_in_parameters(&self) -> bool {
        !matches!(self, ScoreModel::DpoSoftmax { .. })
    }

    pub fn lookup(&self, x: &str, y: &str) -> Result<(usize, usize)> {
        let space = self.space();
        Ok((space.background(x)?, space.alternative(y)?))
    }

    pub fn score(&self, theta: &ParameterVector, x: &str, y: &str) -> Result<f64> {
        let (xi, yi) = self.lookup(x, y)?;
        self.score_at(theta, xi, yi)
    }

    pub fn score_difference(&self, theta: &ParameterVector, x: &str, y: &str, z: &str) -> Result<f64> {
        let (xi, yi) = self.lookup(x, y)?;
        let zi = self.space().alternative(z)?;
        self.score_difference_at(theta, xi, yi, zi)
    }

    pub fn score_gradient(&self, theta: &ParameterVector, x: &str, y: &str) -> Result<DVector<f64>> {
        let (xi, yi) = self.lookup(x, y)?;
        self.score_gradient_at(theta, xi, yi)
    }

    pub fn score_hessian(&self, theta: &ParameterVector, x: &str, y: &str) -> Result<DMatrix<f64>> {
        let (xi, yi) = self.lookup(x, y)?;
        self.score_hessian_at(theta, xi, yi)
    }

    pub fn probability(&self, theta: &ParameterVector, x: &str, y: &str) -> Result<f64> {
        let (xi, yi) = self.lookup(x, y)?;
        Ok(self.probabilities_at(theta, xi)?[yi])
    }

    /// Score of `(x, y)` by dense indices.
    pub fn score_at(&self, theta: &ParameterVector, x: usize, y: usize) -> Result<f64> {
        check_parameters(theta, self.dim())?;
        let space = self.space();
        Ok(match self {
            ScoreModel::OneHot { .. } => theta[space.cell(x, y)],
            ScoreModel::Linear { embedding, .. } => theta.dot(&embedding[space.cell(x, y)]),
            ScoreModel::DpoSoftmax {
                reference_log_probs,
                beta,
                ..
            } => {
                let logits = self.logits_of(theta, x);
                let lse = log_sum_exp(logits);
                beta * (logits[y] - lse - reference_log_probs[space.cell(x, y)])
            }
        })
    }

    pub fn score_difference_at(&self, theta: &ParameterVector, x: usize, y: usize, z: usize) -> Result<f64> {
        check_parameters(theta, self.dim())?;
        if y == z {
            return Ok(0.0);
        }
        let space = self.space();
        Ok(match self {
            ScoreModel::OneHot { .. } => theta[space.cell(x, y)] - theta[space.cell(x, z)],
            ScoreModel::Linear { embedding, .. } => {
                theta.dot(&(&embedding[space.cell(x, y)] - &embedding[space.cell(x, z)]))
            }
            ScoreModel::DpoSoftmax {
                reference_log_probs,
                beta,
                ..
            } => {
                let (cy, cz) = (space.cell(x, y), space.cell(x, z));
                beta * ((theta[cy] - theta[cz]) - (reference_log_probs[cy] - reference_log_probs[cz]))
            }
        })
    }

    pub fn score_gradient_at(&self, theta: &ParameterVector, x: usize, y: usize) -> Result<DVector<f64>> {
        check_parameters(theta, self.dim())?;
        let space = self.space();
        Ok(match self {
            ScoreModel::OneHot { .. } => {
                let mut g = DVector::zeros(self.dim());
                g[space.cell(x, y)] = 1.0;
                g
            }
            ScoreModel::Linear { embedding, .. } => embedding[space.cell(x, y)].clone(),
            ScoreModel::DpoSoftmax { beta, .. } => {
                let pi = softmax(self.logits_of(theta, x));
                let mut g = DVector::zeros(self.dim());
                let start = space.cell(x, 0);
                for (w, p) in pi.iter().enumerate() {
                    g[start + w] = -beta * p;
                }
                g[start + y] += *beta;
                g
            }
        })
    }

    /// `∇s_{yz|x}(θ)`.
    pub fn score_difference_gradient_at(
        &self,
        theta: &ParameterVector,
        x: usize,
        y: usize,
        z: usize,
    ) -> Result<DVector<f64>> {
        check_parameters(theta, self.dim())?;
        let space = self.space();
        Ok(match self {
            ScoreModel::OneHot { .. } | ScoreModel::DpoSoftmax { .. } => {
                let scale = match self {
                    ScoreModel::DpoSoftmax { beta, .. } => *beta,
                    _ => 1.0,
                };
                let mut g = DVector::zeros(self.dim());
                g[space.cell(x, y)] += scale;
                g[space.cell(x, z)] -= scale;
                g
            }
            ScoreModel::Linear { embedding, .. } => &embedding[space.cell(x, y)] - &embedding[space.cell(x, z)],
        })
    }

    pub fn score_hessian_at(&self, theta: &ParameterVector, x: usize, _y: usize) -> Result<DMatrix<f64>> {
        check_parameters(theta, self.dim())?;
        let d = self.dim();
        let mut h = DMatrix::zeros(d, d);
        if let ScoreModel::DpoSoftmax { space, beta, .. } = self {
            // ∇² log π(y|x) = -(diag π - π πᵀ) on the background-x block
            let pi = softmax(self.logits_of(theta, x));
            let start = space.cell(x, 0);
            for (i, pi_i) in pi.iter().enumerate() {
                for (j, pi_j) in pi.iter().enumerate() {
                    let diag = if i == j { *pi_i } else { 0.0 };
                    h[(start + i, start + j)] = -beta * (diag - pi_i * pi_j);
                }
            }
        }
        Ok(h)
    }

    /// Hessian of the score difference `s_{yz|x}`; zero for every model here
    /// since the softmax normalizer cancels.
    pub fn score_difference_hessian_at(
        &self,
        theta: &ParameterVector,
        x: usize,
        y: usize,
        z: usize,
    ) -> Result<DMatrix<f64>> {
        Ok(self.score_hessian_at(theta, x, y)? - self.score_hessian_at(theta, x, z)?)
    }

    /// Generation probabilities over all alternatives of background `x`.
    ///
    /// The softmax policy uses its own logits `θ_{x·}`. One-hot and linear
    /// models treat their scores as logits.
    pub fn probabilities_at(&self, theta: &ParameterVector, x: usize) -> Result<Vec<f64>> {
        check_parameters(theta, self.dim())?;
        Ok(match self {
            ScoreModel::OneHot { .. } | ScoreModel::DpoSoftmax { .. } => softmax(self.logits_of(theta, x)),
            ScoreModel::Linear { .. } => {
                let n = self.space().n_alternatives();
                let scores: Vec<f64> = (0..n).map(|y| self.score_at(theta, x, y)).collect::<Result<_>>()?;
                softmax(&scores)
            }
        })
    }

    fn logits_of<'a>(&self, theta: &'a ParameterVector, x: usize) -> &'a [f64] {
        let n = self.space().n_alternatives();
        &theta.as_slice()[x * n..(x + 1) * n]
    }
}

pub fn log_sum_exp(values: &[f64]) -> f64 {
    let m = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    m + values.iter().map(|v| (v - m).exp()).sum::<f64>().ln()
}

pub fn softmax(values: &[f64]) -> Vec<f64> {
    let m = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = values.iter().map(|v| (v - m).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn space(n_alt: usize) -> ProblemSpace {
        ProblemSpace::new(["x"], (0..n_alt).map(|i| format!("a{i}"))).unwrap()
    }

    #[test]
    fn one_hot_scores_are_coordinates() {
        let model = ScoreModel::one_hot(space(3));
        let mut theta = DVector::zeros(3);
        theta[1] = 1.0;
        assert_eq!(model.score(&theta, "x", "a1").unwrap(), 1.0);
        assert_eq!(model.score_gradient(&theta, "x", "a1").unwrap(), theta);
        theta[1] = 2.0;
        theta[2] = -1.0;
        assert_eq!(model.score_difference(&theta, "x", "a1", "a2").unwrap(), 3.0);
        assert_eq!(model.score_difference(&theta, "x", "a1", "a1").unwrap(), 0.0);
    }

    #[test]
    fn linear_score_is_a_dot_product() {
        let model = ScoreModel::linear(space(1), |_, _| vec![1.0, 2.0]).unwrap();
        let theta = DVector::from_vec(vec![3.0, -1.0]);
        assert_eq!(model.score(&theta, "x", "a0").unwrap(), 1.0);
        assert_eq!(
            model.score_gradient(&theta, "x", "a0").unwrap(),
            DVector::from_vec(vec![1.0, 2.0])
        );
    }

    #[test]
    fn dpo_scores_vanish_at_the_reference() {
        let refs = [0.3, -1.2, 2.0];
        let model = ScoreModel::dpo_softmax(space(3), &refs, 0.7).unwrap();
        let theta = DVector::from_column_slice(&refs);
        for y in ["a0", "a1", "a2"] {
            assert!(model.score(&theta, "x", y).unwrap().abs() < 1e-14);
        }
    }

    #[test]
    fn dpo_difference_is_scaled_logit_difference() {
        let model = ScoreModel::dpo_softmax(space(2), &[0.0, 0.0], 2.0).unwrap();
        let theta = DVector::from_vec(vec![1.0, 0.0]);
        assert_relative_eq!(model.score_difference(&theta, "x", "a0", "a1").unwrap(), 2.0);
    }

    #[test]
    fn probabilities() {
        let model = ScoreModel::one_hot(space(4));
        let p = model.probabilities_at(&DVector::from_element(4, 0.7), 0).unwrap();
        for v in p {
            assert_relative_eq!(v, 0.25);
        }
        let model = ScoreModel::one_hot(space(2));
        let theta = DVector::from_vec(vec![3.0f64.ln(), 0.0]);
        assert_relative_eq!(model.probability(&theta, "x", "a0").unwrap(), 0.75);
        assert_relative_eq!(model.probability(&theta, "x", "a1").unwrap(), 0.25);
    }

    #[test]
    fn lookup_errors() {
        let model = ScoreModel::one_hot(space(2));
        let theta = DVector::zeros(2);
        assert!(matches!(
            model.score(&theta, "nope", "a0"),
            Err(Error::Lookup { kind: "background", .. })
        ));
        assert!(matches!(
            model.score(&theta, "x", "nope"),
            Err(Error::Lookup {
                kind: "alternative",
                ..
            })
        ));
        assert!(model.score(&DVector::zeros(3), "x", "a0").is_err());
    }

    #[test]
    fn construction_errors() {
        assert!(ProblemSpace::new(["x", "x"], ["a"]).is_err());
        assert!(ProblemSpace::new(Vec::<String>::new(), ["a"]).is_err());
        assert!(ScoreModel::dpo_softmax(space(2), &[0.0, 0.0], 0.0).is_err());
        assert!(ScoreModel::dpo_softmax(space(2), &[0.0], 1.0).is_err());
        assert!(ScoreModel::linear(space(2), |_, y| if y == "a0" { vec![1.0] } else { vec![1.0, 2.0] }).is_err());
    }

    #[test]
    fn dpo_score_hessian_matches_gradient_differences() {
        let model = ScoreModel::dpo_softmax(space(3), &[0.1, 0.2, -0.3], 1.5).unwrap();
        let theta = DVector::from_vec(vec![0.4, -0.9, 1.1]);
        let h = model.score_hessian_at(&theta, 0, 1).unwrap();
        let step = 1e-6;
        for j in 0..3 {
            let mut plus = theta.clone();
            let mut minus = theta.clone();
            plus[j] += step;
            minus[j] -= step;
            let fd = (model.score_gradient_at(&plus, 0, 1).unwrap() - model.score_gradient_at(&minus, 0, 1).unwrap())
                / (2.0 * step);
            for i in 0..3 {
                assert!((fd[i] - h[(i, j)]).abs() < 1e-8);
            }
        }
        let dh = model.score_difference_hessian_at(&theta, 0, 1, 2).unwrap();
        assert!(dh.amax() < 1e-15);
    }
}
