//! Structural predicates on symmetric matrices used by the individual-score
//! and fully-pairwise audits.

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Symmetry slack accepted by [`SymmetricMatrix::new`].
pub const SYMMETRY_TOLERANCE: f64 = 1e-10;
/// Margin applied to inequalities evaluated on computed inverses.
pub const INVERSE_MARGIN: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricMatrix(DMatrix<f64>);

impl SymmetricMatrix {
    pub fn new(entries: DMatrix<f64>) -> Result<Self> {
        if !entries.is_square() {
            return Err(Error::InvalidInput("matrix is not square".into()));
        }
        if entries.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("matrix has non-finite entries".into()));
        }
        let n = entries.nrows();
        for i in 0..n {
            for j in (i + 1)..n {
                if (entries[(i, j)] - entries[(j, i)]).abs() > SYMMETRY_TOLERANCE {
                    return Err(Error::InvalidInput(format!("matrix is not symmetric at ({i}, {j})")));
                }
            }
        }
        Ok(SymmetricMatrix(entries))
    }

    pub fn from_rows(n: usize, rows: &[f64]) -> Result<Self> {
        if rows.len() != n * n {
            return Err(Error::InvalidInput(format!("expected {} entries", n * n)));
        }
        Self::new(DMatrix::from_row_slice(n, n, rows))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn inverse(&self) -> Result<DMatrix<f64>> {
        self.0
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::Singular("matrix is not invertible".into()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DominanceVerdict {
    pub holds: bool,
    /// First `(i, j)` with `M_ij > M_ii`.
    pub witness: Option<(usize, usize)>,
}

/// Every diagonal entry is at least every off-diagonal entry of its row.
pub fn is_max_diag_dominant(m: &SymmetricMatrix) -> DominanceVerdict {
    let a = m.entries();
    let n = m.dim();
    for i in 0..n {
        for j in 0..n {
            if i != j && a[(i, j)] > a[(i, i)] {
                return DominanceVerdict {
                    holds: false,
                    witness: Some((i, j)),
                };
            }
        }
    }
    DominanceVerdict {
        holds: true,
        witness: None,
    }
}

/// Strict diagonal dominance with a positive diagonal and nonpositive
/// off-diagonal entries.
pub fn is_strictly_diag_dominant_m(m: &SymmetricMatrix) -> bool {
    let a = m.entries();
    let n = m.dim();
    (0..n).all(|i| {
        let off: f64 = (0..n).filter(|&j| j != i).map(|j| a[(i, j)].abs()).sum();
        a[(i, i)] > 0.0 && a[(i, i)].abs() > off && (0..n).filter(|&j| j != i).all(|j| a[(i, j)] <= 0.0)
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InverseDifferenceVerdict {
    pub holds: bool,
    /// `min over (y, z, w) of (N_yy - N_yz) - (N_wy - N_wz)` with `N = M⁻¹`.
    pub worst_margin: f64,
    pub worst_triple: (usize, usize, usize),
    /// `min over y ≠ z of N_yy - N_yz`.
    pub min_self_gap: f64,
}

/// Checks `N_yy - N_yz ≥ N_wy - N_wz` for every triple, degenerate ones
/// included, where `N` is the inverse of `m`.
pub fn lemma_inverse_difference_check(m: &SymmetricMatrix) -> Result<InverseDifferenceVerdict> {
    let n = m.inverse()?;
    let d = m.dim();
    let mut worst_margin = f64::INFINITY;
    let mut worst_triple = (0, 0, 0);
    let mut min_self_gap = f64::INFINITY;
    for y in 0..d {
        for z in 0..d {
            let head = n[(y, y)] - n[(y, z)];
            if y != z {
                min_self_gap = min_self_gap.min(head);
            }
            for w in 0..d {
                let margin = head - (n[(w, y)] - n[(w, z)]);
                if margin < worst_margin {
                    worst_margin = margin;
                    worst_triple = (y, z, w);
                }
            }
        }
    }
    Ok(InverseDifferenceVerdict {
        holds: worst_margin >= -INVERSE_MARGIN,
        worst_margin,
        worst_triple,
        min_self_gap,
    })
}

/// A random symmetric matrix with off-diagonals in `[-1, 0]` and each
/// diagonal entry equal to its row's absolute off-diagonal sum plus a
/// uniform draw from `[0.1, 1]`.
pub fn random_dominant_m_matrix<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> SymmetricMatrix {
    let mut a = DMatrix::<f64>::zeros(dim, dim);
    for i in 0..dim {
        for j in (i + 1)..dim {
            let v = -rng.random_range(0.0..=1.0);
            a[(i, j)] = v;
            a[(j, i)] = v;
        }
    }
    for i in 0..dim {
        let off: f64 = (0..dim).filter(|&j| j != i).map(|j| a[(i, j)].abs()).sum();
        a[(i, i)] = off + rng.random_range(0.1..=1.0);
    }
    SymmetricMatrix(a)
}
