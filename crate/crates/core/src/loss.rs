//! Per-comparison losses `ℓ(s, c)` acting on a score difference `s` and a
//! comparison value `c`.
//!
//! Every family exposes its value, the first two derivatives in `s` and (for
//! the generalized Bradley–Terry families) the cross-partial `∂c∂s ℓ`. The
//! GBT families are built on the cumulant-generating function of a root law,
//! see [`RootLaw`].

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Slack used when testing membership of a comparison value in a domain.
pub const DOMAIN_TOLERANCE: f64 = 1e-12;

/// Below this magnitude the uniform root law switches to its Taylor series.
const UNIFORM_SERIES_CUTOFF: f64 = 1e-2;

/// The set of admissible comparison values. Always symmetric about zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ComparisonDomain {
    Discrete { values: Vec<f64> },
    Interval { lo: f64, hi: f64 },
    RealLine,
}

/// Which way a tie is broken when projecting onto a discrete domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TieBreak {
    Up,
    Down,
}

impl ComparisonDomain {
    pub fn discrete(values: Vec<f64>) -> Result<Self> {
        let domain = ComparisonDomain::Discrete { values };
        domain.validate()?;
        Ok(domain)
    }

    pub fn interval(lo: f64, hi: f64) -> Result<Self> {
        let domain = ComparisonDomain::Interval { lo, hi };
        domain.validate()?;
        Ok(domain)
    }

    /// `{-1, +1}`, the binary comparisons of Bradley–Terry and GPO losses.
    pub fn binary() -> Self {
        ComparisonDomain::Discrete {
            values: vec![-1.0, 1.0],
        }
    }

    /// `[-1, 1]`.
    pub fn unit_interval() -> Self {
        ComparisonDomain::Interval { lo: -1.0, hi: 1.0 }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ComparisonDomain::Discrete { values } => {
                if values.is_empty() {
                    return Err(Error::InvalidInput("discrete domain is empty".into()));
                }
                if values.iter().any(|v| !v.is_finite()) {
                    return Err(Error::InvalidInput("discrete domain has non-finite values".into()));
                }
                if values.windows(2).any(|w| w[0] >= w[1]) {
                    return Err(Error::InvalidInput(
                        "discrete domain must be strictly increasing".into(),
                    ));
                }
                let n = values.len();
                for i in 0..n {
                    if (values[i] + values[n - 1 - i]).abs() > DOMAIN_TOLERANCE {
                        return Err(Error::InvalidInput("discrete domain must be symmetric about 0".into()));
                    }
                }
                Ok(())
            }
            ComparisonDomain::Interval { lo, hi } => {
                if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                    return Err(Error::InvalidInput(format!(
                        "interval [{lo}, {hi}] must satisfy lo < hi"
                    )));
                }
                if (lo + hi).abs() > DOMAIN_TOLERANCE {
                    return Err(Error::InvalidInput(format!(
                        "interval [{lo}, {hi}] must be symmetric about 0"
                    )));
                }
                Ok(())
            }
            ComparisonDomain::RealLine => Ok(()),
        }
    }

    pub fn max(&self) -> Option<f64> {
        match self {
            ComparisonDomain::Discrete { values } => values.last().copied(),
            ComparisonDomain::Interval { hi, .. } => Some(*hi),
            ComparisonDomain::RealLine => None,
        }
    }

    pub fn min(&self) -> Option<f64> {
        match self {
            ComparisonDomain::Discrete { values } => values.first().copied(),
            ComparisonDomain::Interval { lo, .. } => Some(*lo),
            ComparisonDomain::RealLine => None,
        }
    }

    /// True for bounded intervals and for the real line.
    pub fn is_interval(&self) -> bool {
        !matches!(self, ComparisonDomain::Discrete { .. })
    }

    pub fn contains(&self, c: f64) -> bool {
        if !c.is_finite() {
            return false;
        }
        match self {
            ComparisonDomain::Discrete { values } => values.iter().any(|v| (v - c).abs() <= DOMAIN_TOLERANCE),
            ComparisonDomain::Interval { lo, hi } => c >= lo - DOMAIN_TOLERANCE && c <= hi + DOMAIN_TOLERANCE,
            ComparisonDomain::RealLine => true,
        }
    }

    pub fn check(&self, c: f64) -> Result<()> {
        if self.contains(c) {
            Ok(())
        } else {
            Err(Error::DomainViolation {
                value: c,
                domain: self.to_string(),
            })
        }
    }

    /// Nearest point of the domain to `t`. Exact ties on a discrete domain go
    /// the way `tie` says.
    pub fn project(&self, t: f64, tie: TieBreak) -> f64 {
        match self {
            ComparisonDomain::Discrete { values } => {
                let mut best = values[0];
                let mut best_dist = (t - best).abs();
                for &v in &values[1..] {
                    let dist = (t - v).abs();
                    let better = dist < best_dist || (dist == best_dist && tie == TieBreak::Up);
                    if better {
                        best = v;
                        best_dist = dist;
                    }
                }
                best
            }
            ComparisonDomain::Interval { lo, hi } => t.clamp(*lo, *hi),
            ComparisonDomain::RealLine => t,
        }
    }
}

impl fmt::Display for ComparisonDomain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ComparisonDomain::Discrete { values } => {
                let parts: Vec<String> = values.iter().map(|v| v.to_string()).collect();
                write!(f, "{{{}}}", parts.join(", "))
            }
            ComparisonDomain::Interval { lo, hi } => write!(f, "[{lo}, {hi}]"),
            ComparisonDomain::RealLine => write!(f, "ℝ"),
        }
    }
}

/// Base distribution over comparison values that characterizes a
/// generalized Bradley–Terry model through its cumulant-generating function
/// `Φ(s) = log ∫ exp(sγ) f(γ) dγ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "root", rename_all = "snake_case")]
pub enum RootLaw {
    /// Masses ½ at ±1.
    TwoPoint,
    /// Uniform density on `[lo, hi]` with `lo = -hi`.
    Uniform { lo: f64, hi: f64 },
    /// Standard normal density (unnormalized), supported on the real line.
    Gaussian,
    /// Density values on a sorted grid, integrated with the trapezoidal rule.
    Tabulated { support: Vec<f64>, weights: Vec<f64> },
}

impl RootLaw {
    pub fn tabulated(support: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        let law = RootLaw::Tabulated { support, weights };
        law.validate()?;
        Ok(law)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            RootLaw::TwoPoint | RootLaw::Gaussian => Ok(()),
            RootLaw::Uniform { lo, hi } => ComparisonDomain::interval(*lo, *hi).map(|_| ()),
            RootLaw::Tabulated { support, weights } => {
                if support.len() < 2 || support.len() != weights.len() {
                    return Err(Error::InvalidInput(
                        "tabulated root law needs at least two grid points and one weight per point".into(),
                    ));
                }
                if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
                    return Err(Error::InvalidInput(
                        "tabulated weights must be finite and nonnegative".into(),
                    ));
                }
                let total: f64 = weights.iter().sum();
                if !(total > 0.0 && total.is_finite()) {
                    return Err(Error::InvalidInput(
                        "tabulated weights must have a positive finite total".into(),
                    ));
                }
                ComparisonDomain::interval(support[0], support[support.len() - 1])?;
                if support.windows(2).any(|w| w[0] >= w[1]) {
                    return Err(Error::InvalidInput(
                        "tabulated support must be strictly increasing".into(),
                    ));
                }
                Ok(())
            }
        }
    }

    /// The comparison domain on which the law lives.
    pub fn domain(&self) -> ComparisonDomain {
        match self {
            RootLaw::TwoPoint => ComparisonDomain::binary(),
            RootLaw::Uniform { lo, hi } => ComparisonDomain::Interval { lo: *lo, hi: *hi },
            RootLaw::Gaussian => ComparisonDomain::RealLine,
            RootLaw::Tabulated { support, .. } => ComparisonDomain::Interval {
                lo: support[0],
                hi: support[support.len() - 1],
            },
        }
    }

    pub fn cumulant(&self, s: f64) -> Result<f64> {
        Ok(self.derivatives(s)?.0)
    }

    pub fn cumulant_prime(&self, s: f64) -> Result<f64> {
        Ok(self.derivatives(s)?.1)
    }

    pub fn cumulant_second(&self, s: f64) -> Result<f64> {
        Ok(self.derivatives(s)?.2)
    }

    /// `(Φ(s), Φ'(s), Φ''(s))`.
    pub fn derivatives(&self, s: f64) -> Result<(f64, f64, f64)> {
        if !s.is_finite() {
            return Err(Error::InvalidInput(format!("score difference {s} is not finite")));
        }
        let out = match self {
            RootLaw::TwoPoint => {
                let t = s.tanh();
                (log_cosh(s), t, 1.0 - t * t)
            }
            RootLaw::Uniform { hi, .. } => {
                let a = *hi;
                let u = a * s;
                let (phi, d1, d2) = uniform_unit(u);
                (phi, a * d1, a * a * d2)
            }
            RootLaw::Gaussian => (0.5 * s * s, s, 1.0),
            RootLaw::Tabulated { support, weights } => tabulated(support, weights, s),
        };
        if out.0.is_finite() && out.1.is_finite() && out.2.is_finite() {
            Ok(out)
        } else {
            Err(Error::NonFinite("cumulant"))
        }
    }
}

fn log_cosh(s: f64) -> f64 {
    let a = s.abs();
    a + (-2.0 * a).exp().ln_1p() - std::f64::consts::LN_2
}

/// Cumulant of the uniform law on `[-1, 1]` and its two derivatives.
fn uniform_unit(u: f64) -> (f64, f64, f64) {
    if u.abs() < UNIFORM_SERIES_CUTOFF {
        let u2 = u * u;
        let phi = u2 * (1.0 / 6.0 - u2 * (1.0 / 180.0 - u2 * (1.0 / 2835.0 - u2 / 37800.0)));
        let d1 = u * (1.0 / 3.0 - u2 * (1.0 / 45.0 - u2 * (2.0 / 945.0 - u2 / 4725.0)));
        let d2 = 1.0 / 3.0 - u2 * (1.0 / 15.0 - u2 * (2.0 / 189.0 - u2 / 675.0));
        return (phi, d1, d2);
    }
    let a = u.abs();
    if a < 1.0 {
        // sinh terms summed directly avoid the cancellation of the closed form
        let u2 = u * u;
        let (mut odd, mut even, mut term) = (0.0, 0.0, 1.0);
        for k in 1..=12 {
            let m = (2 * k) as f64;
            term *= u2 / (m * (m + 1.0));
            odd += term;
            even += term * m;
        }
        // odd = sinh(u)/u - 1, even = (u cosh u - sinh u)/u
        let sinh_over_u = 1.0 + odd;
        let phi = odd.ln_1p();
        let d1 = even / (u * sinh_over_u);
        let d2 = odd * (2.0 + odd) / (u2 * sinh_over_u * sinh_over_u);
        return (phi, d1, d2);
    }
    // log(sinh a / a) = a + log(1 - e^{-2a}) - log 2 - log a
    let phi = a + (-(-2.0 * a).exp()).ln_1p() - std::f64::consts::LN_2 - a.ln();
    let d1 = 1.0 / u.tanh() - 1.0 / u;
    let csch2 = if a > 350.0 {
        0.0
    } else {
        let sh = u.sinh();
        1.0 / (sh * sh)
    };
    let d2 = 1.0 / (u * u) - csch2;
    (phi, d1, d2)
}

fn tabulated(support: &[f64], weights: &[f64], s: f64) -> (f64, f64, f64) {
    let n = support.len();
    let shift = support.iter().map(|g| s * g).fold(f64::NEG_INFINITY, f64::max);
    let mut z = 0.0;
    let mut m1 = 0.0;
    let mut m2 = 0.0;
    for i in 0..n {
        let left = if i > 0 { support[i] - support[i - 1] } else { 0.0 };
        let right = if i + 1 < n { support[i + 1] - support[i] } else { 0.0 };
        let coef = 0.5 * (left + right) * weights[i] * (s * support[i] - shift).exp();
        z += coef;
        m1 += coef * support[i];
        m2 += coef * support[i] * support[i];
    }
    let mean = m1 / z;
    let var = (m2 / z - mean * mean).max(0.0);
    (shift + z.ln(), mean, var)
}

/// A per-comparison loss family. The comparison domain is implied by the
/// family; see [`LossFamily::domain`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum LossFamily {
    BradleyTerry,
    Gbt(RootLaw),
    UniformGbt,
    GaussianGbt,
    Slic,
    Ipo,
}

impl LossFamily {
    pub fn name(&self) -> &'static str {
        match self {
            LossFamily::BradleyTerry => "bradley_terry",
            LossFamily::Gbt(_) => "gbt",
            LossFamily::UniformGbt => "uniform_gbt",
            LossFamily::GaussianGbt => "gaussian_gbt",
            LossFamily::Slic => "slic",
            LossFamily::Ipo => "ipo",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            LossFamily::Gbt(root) => root.validate(),
            _ => Ok(()),
        }
    }

    pub fn domain(&self) -> ComparisonDomain {
        match self {
            LossFamily::BradleyTerry | LossFamily::Slic | LossFamily::Ipo => ComparisonDomain::binary(),
            LossFamily::Gbt(root) => root.domain(),
            LossFamily::UniformGbt => ComparisonDomain::unit_interval(),
            LossFamily::GaussianGbt => ComparisonDomain::RealLine,
        }
    }

    /// The root law behind a GBT-derived family.
    pub fn root_law(&self) -> Option<RootLaw> {
        match self {
            LossFamily::Gbt(root) => Some(root.clone()),
            LossFamily::UniformGbt => Some(RootLaw::Uniform { lo: -1.0, hi: 1.0 }),
            LossFamily::GaussianGbt => Some(RootLaw::Gaussian),
            _ => None,
        }
    }

    /// Whether `s ↦ ℓ(s, c)` is convex for every admissible `c`.
    pub fn is_convex(&self) -> bool {
        true
    }

    pub fn is_twice_differentiable(&self) -> bool {
        !matches!(self, LossFamily::Slic)
    }

    fn check_args(&self, s: f64, c: f64) -> Result<()> {
        if !s.is_finite() {
            return Err(Error::InvalidInput(format!("score difference {s} is not finite")));
        }
        self.domain().check(c)
    }

    pub fn loss_value(&self, s: f64, c: f64) -> Result<f64> {
        self.check_args(s, c)?;
        Ok(match self {
            LossFamily::BradleyTerry => softplus(-c * s),
            LossFamily::Slic => (1.0 - c * s).max(0.0),
            LossFamily::Ipo => {
                let r = 1.0 - c * s;
                r * r
            }
            LossFamily::GaussianGbt => 0.5 * s * s - c * s,
            _ => self.root_law().expect("gbt family").cumulant(s)? - c * s,
        })
    }

    pub fn dloss_ds(&self, s: f64, c: f64) -> Result<f64> {
        self.check_args(s, c)?;
        Ok(match self {
            LossFamily::BradleyTerry => -c * sigmoid(-c * s),
            LossFamily::Slic => {
                let m = c * s;
                if m == 1.0 {
                    return Err(Error::NonDifferentiable { s, c, context: None });
                }
                if m < 1.0 {
                    -c
                } else {
                    0.0
                }
            }
            LossFamily::Ipo => -2.0 * c * (1.0 - c * s),
            LossFamily::GaussianGbt => s - c,
            _ => self.root_law().expect("gbt family").cumulant_prime(s)? - c,
        })
    }

    pub fn d2loss_ds2(&self, s: f64, c: f64) -> Result<f64> {
        self.check_args(s, c)?;
        Ok(match self {
            LossFamily::BradleyTerry => sigmoid(c * s) * sigmoid(-c * s) * c * c,
            LossFamily::Slic => {
                if c * s == 1.0 {
                    return Err(Error::NonDifferentiable { s, c, context: None });
                }
                0.0
            }
            LossFamily::Ipo => 2.0 * c * c,
            LossFamily::GaussianGbt => 1.0,
            _ => self.root_law().expect("gbt family").cumulant_second(s)?,
        })
    }

    /// `∂c∂s ℓ(s, c)`, defined only for families on an interval domain.
    pub fn dcds_cross(&self, s: f64, c: f64) -> Result<f64> {
        if !self.domain().is_interval() {
            return Err(Error::Unsupported(format!(
                "cross-partial ∂c∂sℓ for {} on the discrete domain {}",
                self.name(),
                self.domain()
            )));
        }
        self.check_args(s, c)?;
        // ℓ = Φ(s) - cs for every interval family
        Ok(-1.0)
    }
}

pub fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + e^t)`.
pub fn softplus(t: f64) -> f64 {
    t.max(0.0) + (-t.abs()).exp().ln_1p()
}

/// 401 points evenly spaced on `[-20, 20]`.
pub fn default_s_grid() -> Vec<f64> {
    linspace(-20.0, 20.0, 401)
}

pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect(),
    }
}

/// A grid point at which an assumption on the loss fails.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssumptionViolation {
    pub s: f64,
    /// The offending derivative, `None` where the loss is not differentiable.
    pub derivative: Option<f64>,
}

impl fmt::Display for AssumptionViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.derivative {
            Some(d) => write!(f, "s = {}: derivative {} ≥ 0", self.s, d + 0.0),
            None => write!(f, "s = {}: not differentiable", self.s),
        }
    }
}

/// Outcome of a grid-based check of an assumption on the loss.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum AssumptionVerdict {
    Holds,
    NoMaximum,
    NotInterval,
    Violated { violations: Vec<AssumptionViolation> },
}

impl AssumptionVerdict {
    pub fn holds(&self) -> bool {
        matches!(self, AssumptionVerdict::Holds)
    }
}

impl fmt::Display for AssumptionVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AssumptionVerdict::Holds => write!(f, "holds"),
            AssumptionVerdict::NoMaximum => write!(f, "comparison domain has no maximum"),
            AssumptionVerdict::NotInterval => write!(f, "comparison domain is not an interval"),
            AssumptionVerdict::Violated { violations } => {
                write!(f, "violated at {} point(s)", violations.len())?;
                if let Some(first) = violations.first() {
                    write!(f, ", first {first}")?;
                }
                Ok(())
            }
        }
    }
}

/// Grid surrogate for "the maximal comparison always pushes the score
/// difference up": `∂sℓ(s, max C) < 0` at every grid point, with the loss
/// twice differentiable there.
pub fn check_assumption_max(family: &LossFamily, s_grid: &[f64]) -> AssumptionVerdict {
    let Some(c_max) = family.domain().max() else {
        return AssumptionVerdict::NoMaximum;
    };
    let mut violations = Vec::new();
    for &s in s_grid {
        match (family.dloss_ds(s, c_max), family.d2loss_ds2(s, c_max)) {
            (Ok(d), Ok(_)) if d < 0.0 => {}
            (Ok(d), Ok(_)) => violations.push(AssumptionViolation { s, derivative: Some(d) }),
            _ => violations.push(AssumptionViolation { s, derivative: None }),
        }
    }
    if violations.is_empty() {
        AssumptionVerdict::Holds
    } else {
        AssumptionVerdict::Violated { violations }
    }
}

/// Grid surrogate for "intensifying a comparison pushes the score difference
/// up": interval domain and `∂c∂sℓ(s, c) < 0` on the grid product.
pub fn check_assumption_cross(family: &LossFamily, s_grid: &[f64], c_grid: &[f64]) -> AssumptionVerdict {
    let domain = family.domain();
    if !domain.is_interval() {
        return AssumptionVerdict::NotInterval;
    }
    let mut violations = Vec::new();
    for &s in s_grid {
        for &c in c_grid.iter().filter(|c| domain.contains(**c)) {
            let ok = family.d2loss_ds2(s, c).is_ok();
            match family.dcds_cross(s, c) {
                Ok(d) if d < 0.0 && ok => {}
                Ok(d) => violations.push(AssumptionViolation { s, derivative: Some(d) }),
                Err(_) => violations.push(AssumptionViolation { s, derivative: None }),
            }
        }
    }
    if violations.is_empty() {
        AssumptionVerdict::Holds
    } else {
        AssumptionVerdict::Violated { violations }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn loss_values_at_reference_points() {
        let ln2 = std::f64::consts::LN_2;
        assert_relative_eq!(LossFamily::BradleyTerry.loss_value(0.0, 1.0).unwrap(), ln2);
        assert_eq!(LossFamily::GaussianGbt.loss_value(1.0, 1.0).unwrap(), -0.5);
        assert_eq!(LossFamily::UniformGbt.loss_value(0.0, 0.3).unwrap(), 0.0);
        assert_eq!(LossFamily::Ipo.loss_value(2.0, 1.0).unwrap(), 1.0);
        assert_eq!(LossFamily::Slic.loss_value(0.5, 1.0).unwrap(), 0.5);
    }

    #[test]
    fn derivatives_at_reference_points() {
        assert_eq!(LossFamily::BradleyTerry.dloss_ds(0.0, 1.0).unwrap(), -0.5);
        assert_eq!(LossFamily::GaussianGbt.dloss_ds(0.0, 1.0).unwrap(), -1.0);
        assert_eq!(LossFamily::UniformGbt.dloss_ds(0.0, 1.0).unwrap(), -1.0);
        assert_eq!(LossFamily::BradleyTerry.d2loss_ds2(0.0, 1.0).unwrap(), 0.25);
        for s in [-7.0, 0.0, 3.5] {
            assert_eq!(LossFamily::GaussianGbt.d2loss_ds2(s, 0.4).unwrap(), 1.0);
        }
        assert_eq!(LossFamily::Ipo.d2loss_ds2(0.3, -1.0).unwrap(), 2.0);
    }

    #[test]
    fn cross_partial_is_minus_one_for_gbt() {
        assert_eq!(LossFamily::GaussianGbt.dcds_cross(3.0, 0.2).unwrap(), -1.0);
        assert_eq!(LossFamily::UniformGbt.dcds_cross(-1.0, 0.0).unwrap(), -1.0);
        let grid = linspace(-1.0, 1.0, 11);
        let tab = LossFamily::Gbt(RootLaw::tabulated(grid, vec![0.5; 11]).unwrap());
        assert_eq!(tab.dcds_cross(0.7, -0.3).unwrap(), -1.0);
        assert!(matches!(
            LossFamily::BradleyTerry.dcds_cross(0.0, 1.0),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn errors_for_bad_inputs() {
        assert!(matches!(
            LossFamily::BradleyTerry.loss_value(0.0, 0.5),
            Err(Error::DomainViolation { .. })
        ));
        assert!(matches!(
            LossFamily::UniformGbt.loss_value(0.0, 1.5),
            Err(Error::DomainViolation { .. })
        ));
        assert!(matches!(
            LossFamily::GaussianGbt.loss_value(f64::NAN, 1.0),
            Err(Error::InvalidInput(_))
        ));
        assert!(matches!(
            LossFamily::Slic.dloss_ds(1.0, 1.0),
            Err(Error::NonDifferentiable { .. })
        ));
        assert!(matches!(
            LossFamily::Slic.d2loss_ds2(-1.0, -1.0),
            Err(Error::NonDifferentiable { .. })
        ));
    }

    #[test]
    fn cumulants_at_zero() {
        let uniform = RootLaw::Uniform { lo: -1.0, hi: 1.0 };
        assert_eq!(uniform.cumulant(0.0).unwrap(), 0.0);
        assert_eq!(RootLaw::TwoPoint.cumulant_prime(0.0).unwrap(), 0.0);
    }

    #[test]
    fn uniform_cumulant_prime_is_an_odd_increasing_map_into_the_open_interval() {
        let uniform = RootLaw::Uniform { lo: -1.0, hi: 1.0 };
        let points = [-20.0, -5.0, -1.0, 1.0, 5.0, 20.0];
        let values: Vec<f64> = points.iter().map(|s| uniform.cumulant_prime(*s).unwrap()).collect();
        for v in &values {
            assert!(*v > -1.0 && *v < 1.0);
        }
        for w in values.windows(2) {
            assert!(w[0] < w[1]);
        }
        for s in [1.0, 5.0, 20.0] {
            let sum = uniform.cumulant_prime(s).unwrap() + uniform.cumulant_prime(-s).unwrap();
            assert!(sum.abs() < 1e-10);
        }
    }

    #[test]
    fn series_branch_joins_the_closed_form() {
        for cut in [UNIFORM_SERIES_CUTOFF, 1.0] {
            let below = uniform_unit(cut * (1.0 - 1e-9));
            let above = uniform_unit(cut * (1.0 + 1e-9));
            assert_relative_eq!(below.0, above.0, max_relative = 1e-8);
            assert_relative_eq!(below.1, above.1, max_relative = 1e-8);
            assert_relative_eq!(below.2, above.2, max_relative = 1e-8);
        }
    }

    #[test]
    fn large_scores_stay_finite() {
        let uniform = RootLaw::Uniform { lo: -1.0, hi: 1.0 };
        for s in [-700.0, 700.0] {
            let (phi, d1, d2) = uniform.derivatives(s).unwrap();
            assert!(phi.is_finite() && d1.is_finite() && d2.is_finite());
            let (phi, _, _) = RootLaw::TwoPoint.derivatives(s).unwrap();
            assert_relative_eq!(phi, 700.0 - std::f64::consts::LN_2);
        }
        let grid = linspace(-1.0, 1.0, 101);
        let tab = RootLaw::tabulated(grid, vec![0.5; 101]).unwrap();
        assert!(tab.cumulant(700.0).unwrap().is_finite());
    }

    #[test]
    fn tabulated_uniform_matches_closed_form() {
        let grid = linspace(-1.0, 1.0, 2001);
        let tab = RootLaw::tabulated(grid, vec![0.5; 2001]).unwrap();
        let expected = (2.0f64.sinh() / 2.0).ln();
        assert!((tab.cumulant(2.0).unwrap() - expected).abs() < 1e-4);
    }

    #[test]
    fn domain_validation() {
        assert!(ComparisonDomain::discrete(vec![]).is_err());
        assert!(ComparisonDomain::discrete(vec![-1.0, 2.0]).is_err());
        assert!(ComparisonDomain::discrete(vec![1.0, -1.0]).is_err());
        assert!(ComparisonDomain::discrete(vec![-2.0, 0.0, 2.0]).is_ok());
        assert!(ComparisonDomain::interval(-1.0, 2.0).is_err());
        assert!(ComparisonDomain::interval(1.0, -1.0).is_err());
        assert_eq!(ComparisonDomain::RealLine.max(), None);
        assert!(RootLaw::tabulated(vec![-1.0, 1.0], vec![-0.5, 1.0]).is_err());
        assert!(RootLaw::tabulated(vec![-1.0, 1.0], vec![0.0, 0.0]).is_err());
    }

    #[test]
    fn projection_breaks_ties_in_the_push_direction() {
        let d = ComparisonDomain::binary();
        assert_eq!(d.project(0.0, TieBreak::Up), 1.0);
        assert_eq!(d.project(0.0, TieBreak::Down), -1.0);
        assert_eq!(d.project(0.2, TieBreak::Down), 1.0);
        assert_eq!(ComparisonDomain::unit_interval().project(1.1, TieBreak::Up), 1.0);
    }

    #[test]
    fn assumption_max_verdicts() {
        let grid = linspace(-10.0, 10.0, 201);
        assert!(check_assumption_max(&LossFamily::BradleyTerry, &grid).holds());
        assert!(check_assumption_max(&LossFamily::UniformGbt, &default_s_grid()).holds());
        assert_eq!(
            check_assumption_max(&LossFamily::GaussianGbt, &grid),
            AssumptionVerdict::NoMaximum
        );
        match check_assumption_max(&LossFamily::Ipo, &[0.0, 2.0]) {
            AssumptionVerdict::Violated { violations } => {
                assert_eq!(
                    violations,
                    vec![AssumptionViolation {
                        s: 2.0,
                        derivative: Some(2.0)
                    }]
                );
            }
            other => panic!("expected violation, got {other:?}"),
        }
        match check_assumption_max(&LossFamily::Slic, &[0.0, 1.0, 2.0]) {
            AssumptionVerdict::Violated { violations } => {
                assert_eq!(violations.len(), 2);
                assert_eq!(violations[0].derivative, None);
                assert_eq!(violations[1].derivative, Some(0.0));
            }
            other => panic!("expected violation, got {other:?}"),
        }
    }

    #[test]
    fn assumption_cross_verdicts() {
        let s = linspace(-5.0, 5.0, 11);
        let c = linspace(-1.0, 1.0, 5);
        assert!(check_assumption_cross(&LossFamily::UniformGbt, &s, &c).holds());
        assert!(check_assumption_cross(&LossFamily::GaussianGbt, &s, &c).holds());
        assert_eq!(
            check_assumption_cross(&LossFamily::BradleyTerry, &s, &c),
            AssumptionVerdict::NotInterval
        );
    }

    #[test]
    fn loss_family_serde_shape() {
        let json = serde_json::to_string(&LossFamily::Gbt(RootLaw::TwoPoint)).unwrap();
        assert_eq!(json, r#"{"family":"gbt","root":"two_point"}"#);
        let back: LossFamily = serde_json::from_str(&json).unwrap();
        assert_eq!(back, LossFamily::Gbt(RootLaw::TwoPoint));
    }
}
