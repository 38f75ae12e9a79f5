//! Weighted comparison datasets and the two perturbations the audits apply
//! to them: adding an unequivocal comparison and intensifying an existing one.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::loss::{ComparisonDomain, LossFamily, TieBreak};
use crate::score::{ParameterVector, ScoreModel};
use crate::solver::Regularizer;

/// One weighted comparison: under background `x`, `y` is preferred to `z`
/// with strength `c`. Weight 1 is an ordinary datum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub x: String,
    pub y: String,
    pub z: String,
    pub c: f64,
    pub weight: f64,
}

impl Comparison {
    pub fn new(x: impl Into<String>, y: impl Into<String>, z: impl Into<String>, c: f64) -> Self {
        Comparison {
            x: x.into(),
            y: y.into(),
            z: z.into(),
            c,
            weight: 1.0,
        }
    }

    pub fn with_weight(mut self, weight: f64) -> Self {
        self.weight = weight;
        self
    }

    pub fn matches(&self, x: &str, y: &str, z: &str) -> bool {
        self.x == x && self.y == y && self.z == z
    }

    fn validate(&self, domain: &ComparisonDomain) -> Result<()> {
        if self.y == self.z {
            return Err(Error::InvalidInput(format!(
                "comparison under `{}` compares `{}` with itself",
                self.x, self.y
            )));
        }
        if !(self.weight.is_finite() && self.weight >= 0.0) {
            return Err(Error::InvalidInput(format!(
                "comparison weight {} must be finite and nonnegative",
                self.weight
            )));
        }
        domain.check(self.c)
    }
}

/// An immutable weighted multiset of comparisons over one comparison domain.
/// Perturbations return new datasets.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    comparisons: Vec<Comparison>,
    domain: ComparisonDomain,
}

impl Dataset {
    pub fn new(domain: ComparisonDomain, comparisons: Vec<Comparison>) -> Result<Self> {
        domain.validate()?;
        for cmp in &comparisons {
            cmp.validate(&domain)?;
        }
        Ok(Dataset { comparisons, domain })
    }

    pub fn empty(domain: ComparisonDomain) -> Self {
        Dataset {
            comparisons: Vec::new(),
            domain,
        }
    }

    pub fn comparisons(&self) -> &[Comparison] {
        &self.comparisons
    }

    pub fn domain(&self) -> &ComparisonDomain {
        &self.domain
    }

    pub fn len(&self) -> usize {
        self.comparisons.len()
    }

    pub fn is_empty(&self) -> bool {
        self.comparisons.is_empty()
    }

    /// Number of comparisons on `(x, y, z)` in either orientation.
    pub fn occurrences(&self, x: &str, y: &str, z: &str) -> usize {
        self.comparisons
            .iter()
            .filter(|c| c.matches(x, y, z) || c.matches(x, z, y))
            .count()
    }

    /// The dataset plus `(x, y, z, max C)` carrying weight `epsilon`.
    pub fn add_unequivocal(&self, x: &str, y: &str, z: &str, epsilon: f64) -> Result<Dataset> {
        let Some(c_max) = self.domain.max() else {
            return Err(Error::Unsupported(format!(
                "unequivocal comparison on the unbounded domain {}",
                self.domain
            )));
        };
        if !(epsilon.is_finite() && epsilon >= 0.0) {
            return Err(Error::InvalidInput(format!(
                "unequivocal weight {epsilon} must be finite and nonnegative"
            )));
        }
        let added = Comparison::new(x, y, z, c_max).with_weight(epsilon);
        added.validate(&self.domain)?;
        let mut comparisons = self.comparisons.clone();
        comparisons.push(added);
        Ok(Dataset {
            comparisons,
            domain: self.domain.clone(),
        })
    }

    /// Pushes every comparison on `(x, y, z)` up by `epsilon` and every
    /// comparison on `(x, z, y)` down by `epsilon`, projecting back onto the
    /// domain. Ties on a discrete domain go in the direction of the push.
    /// A negative `epsilon` intensifies in favor of `z`.
    pub fn intensify(&self, x: &str, y: &str, z: &str, epsilon: f64) -> Result<Dataset> {
        if y == z {
            return Err(Error::InvalidInput(format!("cannot intensify `{y}` against itself")));
        }
        if !epsilon.is_finite() {
            return Err(Error::InvalidInput(format!("intensity {epsilon} is not finite")));
        }
        let up = if epsilon >= 0.0 { TieBreak::Up } else { TieBreak::Down };
        let down = if epsilon >= 0.0 { TieBreak::Down } else { TieBreak::Up };
        let comparisons = self
            .comparisons
            .iter()
            .map(|cmp| {
                let mut out = cmp.clone();
                if cmp.matches(x, y, z) {
                    out.c = self.domain.project(cmp.c + epsilon, up);
                } else if cmp.matches(x, z, y) {
                    out.c = self.domain.project(cmp.c - epsilon, down);
                }
                out
            })
            .collect();
        Ok(Dataset {
            comparisons,
            domain: self.domain.clone(),
        })
    }

    /// Reads the delimited dataset format: a `x,y,z,c,weight` header then one
    /// comparison per line.
    pub fn read_csv(path: impl AsRef<Path>, domain: ComparisonDomain) -> Result<Dataset> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::from_reader(file, domain).map_err(|e| match e {
            Error::Parse { message, .. } => Error::Parse {
                path: path.to_path_buf(),
                message,
            },
            other => other,
        })
    }

    pub fn from_reader<R: Read>(reader: R, domain: ComparisonDomain) -> Result<Dataset> {
        let parse_err = |message: String| Error::Parse {
            path: "<dataset>".into(),
            message,
        };
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .comment(Some(b'#'))
            .from_reader(reader);
        let headers = rdr.headers().map_err(|e| parse_err(e.to_string()))?.clone();
        let expected = ["x", "y", "z", "c", "weight"];
        if headers.iter().collect::<Vec<_>>() != expected {
            return Err(parse_err(format!(
                "expected header `{}`, found `{}`",
                expected.join(","),
                headers.iter().collect::<Vec<_>>().join(",")
            )));
        }
        let mut comparisons = Vec::new();
        for (row, record) in rdr.records().enumerate() {
            let record = record.map_err(|e| parse_err(e.to_string()))?;
            let line = record.position().map(|p| p.line()).unwrap_or(row as u64 + 2);
            let number = |i: usize| -> Result<f64> {
                record[i].parse::<f64>().map_err(|_| {
                    parse_err(format!(
                        "line {line}: `{}` is not a number ({})",
                        &record[i], expected[i]
                    ))
                })
            };
            comparisons.push(Comparison {
                x: record[0].to_string(),
                y: record[1].to_string(),
                z: record[2].to_string(),
                c: number(3)?,
                weight: number(4)?,
            });
        }
        Dataset::new(domain, comparisons)
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        self.to_writer(file).map_err(|e| Error::io(path, e))
    }

    pub fn to_writer<W: Write>(&self, writer: W) -> std::io::Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        wtr.write_record(["x", "y", "z", "c", "weight"])?;
        for cmp in &self.comparisons {
            wtr.write_record([
                cmp.x.as_str(),
                cmp.y.as_str(),
                cmp.z.as_str(),
                &format_real(cmp.c),
                &format_real(cmp.weight),
            ])?;
        }
        wtr.flush()
    }
}

/// Shortest decimal form that parses back to the same `f64`.
pub fn format_real(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 || (1e-4..1e15).contains(&a) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

/// `R(θ) + Σ wᵢ ℓ(s_{yᵢzᵢ|xᵢ}(θ), cᵢ)`.
pub fn loss_of(
    dataset: &Dataset,
    family: &LossFamily,
    model: &ScoreModel,
    regularizer: &Regularizer,
    theta: &ParameterVector,
) -> Result<f64> {
    let mut total = regularizer.value(theta)?;
    for cmp in dataset.comparisons() {
        let s = model.score_difference(theta, &cmp.x, &cmp.y, &cmp.z)?;
        total += cmp.weight * family.loss_value(s, cmp.c)?;
    }
    Ok(total)
}
