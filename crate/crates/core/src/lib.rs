//! Monotonicity audits for preference-learning losses.
//!
//! A dataset of comparisons `(x, y, z, c)` is fitted by minimizing a
//! score-difference loss plus a regularizer. The audits ask whether making
//! the data favor `y` over `z` a little more actually moves the fitted
//! scores that way.

pub mod audit;
pub mod data;
pub mod error;
pub mod loss;
pub mod report;
pub mod score;
pub mod solver;
pub mod spectral;

pub use audit::{Auditor, Mode, Verdict};
pub use data::{Comparison, Dataset};
pub use error::{Error, Result};
pub use loss::{ComparisonDomain, LossFamily, RootLaw};
pub use score::{ParameterVector, ProblemSpace, ScoreModel};
pub use solver::{Problem, Regularizer, SolverSettings};
