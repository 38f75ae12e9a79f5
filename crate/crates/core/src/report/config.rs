//! Experiment configuration files.
//!
//! ```toml
//! schema_version = 1
//! seed = 7
//!
//! [model]
//! kind = "one_hot"
//! backgrounds = ["x"]
//! alternatives = ["y", "z"]
//!
//! [loss]
//! family = "gaussian_gbt"
//!
//! [regularizer]
//! kind = "l2"
//! lambda = 1.0
//!
//! [data]
//! comparisons = [{ x = "x", y = "y", z = "z", c = 1.0 }]
//!
//! [[audit]]
//! id = "gaussian"
//! flavor = "local_pairwise"
//! x = "x"
//! y = "y"
//! z = "z"
//! mode = "intensification"
//! ```

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::records::{Format, SCHEMA_VERSION};
use crate::audit::{Mode, Triple};
use crate::data::{Comparison, Dataset};
use crate::error::{Error, Result};
use crate::loss::LossFamily;
use crate::score::{ParameterVector, ProblemSpace, ScoreModel};
use crate::solver::{Problem, Regularizer, SolverSettings};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    #[serde(default)]
    pub seed: u64,
    pub model: ModelSpec,
    pub loss: LossFamily,
    #[serde(default)]
    pub regularizer: RegularizerSpec,
    #[serde(default)]
    pub solver: SolverSettings,
    #[serde(default)]
    pub data: DataSpec,
    #[serde(default)]
    pub audit: Vec<AuditSpec>,
    #[serde(default)]
    pub output: OutputSpec,
    pub figure1: Option<Figure1Spec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelSpec {
    OneHot {
        backgrounds: Vec<String>,
        alternatives: Vec<String>,
    },
    Linear {
        backgrounds: Vec<String>,
        alternatives: Vec<String>,
        /// One row per `(x, y)` cell.
        embedding: Vec<EmbeddingRow>,
    },
    DpoSoftmax {
        backgrounds: Vec<String>,
        alternatives: Vec<String>,
        beta: f64,
        /// Reference logits; missing cells default to 0.
        #[serde(default)]
        reference: Vec<ReferenceRow>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmbeddingRow {
    pub x: String,
    pub y: String,
    pub features: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceRow {
    pub x: String,
    pub y: String,
    pub logit: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum RegularizerSpec {
    #[default]
    None,
    L2 {
        lambda: f64,
        /// Defaults to the origin.
        center: Option<Vec<f64>>,
    },
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataSpec {
    /// Comparison CSV, relative to the config file.
    pub path: Option<PathBuf>,
    #[serde(default)]
    pub comparisons: Vec<InlineComparison>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InlineComparison {
    pub x: String,
    pub y: String,
    pub z: String,
    pub c: f64,
    #[serde(default = "unit_weight")]
    pub weight: f64,
}

fn unit_weight() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Flavor {
    /// Local audit of `s_{yz|x}`, also reporting every other flavor.
    LocalPairwise,
    /// Cumulative ε ladder under strong convexity.
    GlobalLadder,
    /// Individual scores linked to max-diagonal dominance.
    IndividualScore,
    /// `s_{yw|x}`, `s_{wz|x}` and the two probabilities.
    FullyPairwise,
    /// One explicit gradient step on the unregularized loss.
    GradientStep,
}

impl Flavor {
    pub fn as_str(&self) -> &'static str {
        match self {
            Flavor::LocalPairwise => "local_pairwise",
            Flavor::GlobalLadder => "global_ladder",
            Flavor::IndividualScore => "individual_score",
            Flavor::FullyPairwise => "fully_pairwise",
            Flavor::GradientStep => "gradient_step",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AuditSpec {
    pub id: String,
    pub flavor: Flavor,
    pub x: String,
    pub y: String,
    pub z: String,
    /// Defaults to intensification when the triple is present on an
    /// interval domain, unequivocal addition otherwise.
    pub mode: Option<Mode>,
    /// ε sweep, ladder rungs or gradient step lengths.
    pub epsilons: Option<Vec<f64>>,
    /// Starting parameters for gradient-step audits.
    pub theta: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    /// Relative paths resolve against the working directory.
    pub dir: Option<PathBuf>,
    #[serde(default)]
    pub format: Format,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Figure1Spec {
    pub steps: usize,
    pub learning_rate: f64,
    /// Pairs are drawn uniformly with the experiment seed.
    #[serde(default)]
    pub pairs: Vec<PairSpec>,
    /// Starting parameters; zeros when absent.
    pub init: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairSpec {
    pub x: String,
    pub chosen: String,
    pub rejected: String,
}

/// A parsed and validated configuration with its problem built.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub name: String,
    pub config: ExperimentConfig,
    pub problem: Problem,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> std::result::Result<Self, String> {
        toml::from_str(text).map_err(|e| e.to_string())
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::config("", e.to_string()))
    }
}

impl Experiment {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let config = ExperimentConfig::from_toml(&text).map_err(|message| Error::Parse {
            path: path.to_path_buf(),
            message,
        })?;
        let name = path
            .file_stem()
            .and_then(|s| s.to_str())
            .unwrap_or("experiment")
            .to_string();
        Self::build(name, config, path.parent().unwrap_or(Path::new(".")))
    }

    /// Validates `config`, reading any data file relative to `base_dir`.
    pub fn build(name: impl Into<String>, config: ExperimentConfig, base_dir: &Path) -> Result<Self> {
        if config.schema_version != SCHEMA_VERSION {
            return Err(Error::config(
                "schema_version",
                format!(
                    "unsupported version {}, expected {SCHEMA_VERSION}",
                    config.schema_version
                ),
            ));
        }
        config
            .loss
            .validate()
            .map_err(|e| Error::config("loss", e.to_string()))?;
        let model = build_model(&config.model)?;
        let regularizer = match &config.regularizer {
            RegularizerSpec::None => Regularizer::None,
            RegularizerSpec::L2 { lambda, center } => {
                let center = match center {
                    Some(c) => DVector::from_column_slice(c),
                    None => DVector::zeros(model.dim()),
                };
                Regularizer::l2(*lambda, center).map_err(|e| Error::config("regularizer", e.to_string()))?
            }
        };
        let domain = config.loss.domain();
        let mut comparisons = Vec::new();
        if let Some(rel) = &config.data.path {
            let path = base_dir.join(rel);
            comparisons.extend(Dataset::read_csv(&path, domain.clone())?.comparisons().iter().cloned());
        }
        comparisons.extend(
            config
                .data
                .comparisons
                .iter()
                .map(|c| Comparison::new(&c.x, &c.y, &c.z, c.c).with_weight(c.weight)),
        );
        let dataset = Dataset::new(domain, comparisons).map_err(|e| Error::config("data", e.to_string()))?;
        let problem = Problem::new(dataset, config.loss.clone(), model, regularizer)
            .map_err(|e| Error::config("model", e.to_string()))?;

        let mut seen = HashSet::new();
        for (i, audit) in config.audit.iter().enumerate() {
            let field = format!("audit[{i}]");
            if audit.id.is_empty() || !seen.insert(audit.id.as_str()) {
                return Err(Error::config(
                    format!("{field}.id"),
                    format!("`{}` is empty or repeated", audit.id),
                ));
            }
            Triple::resolve(problem.model(), &audit.x, &audit.y, &audit.z)
                .map_err(|e| Error::config(format!("{field} ({})", audit.id), e.to_string()))?;
            if let Some(eps) = &audit.epsilons {
                if eps.is_empty() || eps.iter().any(|e| !(e.is_finite() && *e >= 0.0)) {
                    return Err(Error::config(
                        format!("{field}.epsilons"),
                        "must be a nonempty list of finite nonnegative values",
                    ));
                }
            }
            if let Some(theta) = &audit.theta {
                if theta.len() != problem.dim() {
                    return Err(Error::config(
                        format!("{field}.theta"),
                        format!("has length {}, the model has {} parameters", theta.len(), problem.dim()),
                    ));
                }
            }
        }
        if let Some(fig) = &config.figure1 {
            if !(fig.learning_rate.is_finite() && fig.learning_rate >= 0.0) {
                return Err(Error::config("figure1.learning_rate", "must be finite and nonnegative"));
            }
            if let Some(init) = &fig.init {
                if init.len() != problem.dim() {
                    return Err(Error::config(
                        "figure1.init",
                        format!("has length {}, the model has {} parameters", init.len(), problem.dim()),
                    ));
                }
            }
            for (i, pair) in fig.pairs.iter().enumerate() {
                Triple::resolve(problem.model(), &pair.x, &pair.chosen, &pair.rejected)
                    .map_err(|e| Error::config(format!("figure1.pairs[{i}]"), e.to_string()))?;
            }
        }
        Ok(Experiment {
            name: name.into(),
            config,
            problem,
        })
    }

    /// The mode an audit runs under, applying the default rule.
    pub fn mode_for(&self, audit: &AuditSpec) -> Mode {
        audit.mode.unwrap_or_else(|| {
            let data = self.problem.dataset();
            if data.domain().is_interval() && data.occurrences(&audit.x, &audit.y, &audit.z) > 0 {
                Mode::Intensification
            } else {
                Mode::Unequivocal
            }
        })
    }

    pub fn theta_for(&self, audit: &AuditSpec) -> ParameterVector {
        match &audit.theta {
            Some(t) => DVector::from_column_slice(t),
            None => self.problem.default_init(),
        }
    }
}

fn build_model(spec: &ModelSpec) -> Result<ScoreModel> {
    let space = |b: &[String], a: &[String]| {
        ProblemSpace::new(b.iter().cloned(), a.iter().cloned()).map_err(|e| Error::config("model", e.to_string()))
    };
    match spec {
        ModelSpec::OneHot {
            backgrounds,
            alternatives,
        } => Ok(ScoreModel::one_hot(space(backgrounds, alternatives)?)),
        ModelSpec::Linear {
            backgrounds,
            alternatives,
            embedding,
        } => {
            let space = space(backgrounds, alternatives)?;
            let mut table: Vec<Option<DVector<f64>>> = vec![None; space.n_cells()];
            for row in embedding {
                let x = space
                    .background(&row.x)
                    .map_err(|e| Error::config("model.embedding", e.to_string()))?;
                let y = space
                    .alternative(&row.y)
                    .map_err(|e| Error::config("model.embedding", e.to_string()))?;
                table[space.cell(x, y)] = Some(DVector::from_column_slice(&row.features));
            }
            let mut cells = Vec::with_capacity(table.len());
            for (i, cell) in table.into_iter().enumerate() {
                let n = space.n_alternatives();
                cells.push(cell.ok_or_else(|| {
                    Error::config(
                        "model.embedding",
                        format!(
                            "no features for ({}, {})",
                            space.backgrounds()[i / n],
                            space.alternatives()[i % n]
                        ),
                    )
                })?);
            }
            ScoreModel::linear_from_table(space, cells).map_err(|e| Error::config("model.embedding", e.to_string()))
        }
        ModelSpec::DpoSoftmax {
            backgrounds,
            alternatives,
            beta,
            reference,
        } => {
            let space = space(backgrounds, alternatives)?;
            let mut logits = vec![0.0; space.n_cells()];
            for row in reference {
                let x = space
                    .background(&row.x)
                    .map_err(|e| Error::config("model.reference", e.to_string()))?;
                let y = space
                    .alternative(&row.y)
                    .map_err(|e| Error::config("model.reference", e.to_string()))?;
                logits[space.cell(x, y)] = row.logit;
            }
            ScoreModel::dpo_softmax(space, &logits, *beta).map_err(|e| Error::config("model", e.to_string()))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
schema_version = 1
[model]
kind = "one_hot"
backgrounds = ["x"]
alternatives = ["y", "z"]
[loss]
family = "gbt"
root = "uniform"
lo = -1.0
hi = 1.0
"#;

    #[test]
    fn minimal_config_parses() {
        let config = ExperimentConfig::from_toml(MINIMAL).unwrap();
        assert_eq!(
            config.loss,
            LossFamily::Gbt(crate::loss::RootLaw::Uniform { lo: -1.0, hi: 1.0 })
        );
        let exp = Experiment::build("m", config.clone(), Path::new(".")).unwrap();
        assert!(exp.problem.dataset().is_empty());
        let again = ExperimentConfig::from_toml(&config.to_toml().unwrap()).unwrap();
        assert_eq!(again, config);
    }

    #[test]
    fn parse_errors_carry_the_line() {
        let bad = MINIMAL.replace("kind = \"one_hot\"", "kind = \"one_hot\"\ncolour = 3");
        let err = ExperimentConfig::from_toml(&bad).unwrap_err();
        assert!(err.contains("line"), "{err}");
    }

    #[test]
    fn unresolved_identifiers_name_the_audit() {
        let text =
            format!("{MINIMAL}\n[[audit]]\nid = \"a\"\nflavor = \"local_pairwise\"\nx = \"x\"\ny = \"y\"\nz = \"q\"\n");
        let config = ExperimentConfig::from_toml(&text).unwrap();
        let err = Experiment::build("m", config, Path::new(".")).unwrap_err();
        assert!(err.to_string().contains("audit[0] (a)"), "{err}");
    }

    #[test]
    fn wrong_schema_version_is_rejected() {
        let config = ExperimentConfig::from_toml(&MINIMAL.replace("schema_version = 1", "schema_version = 2")).unwrap();
        assert!(matches!(
            Experiment::build("m", config, Path::new(".")),
            Err(Error::Config { .. })
        ));
    }
}
