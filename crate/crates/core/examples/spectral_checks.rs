//! Max-diagonal dominance and the inverse-difference property of strictly
//! diagonally dominant matrices with nonpositive off-diagonals.

use prefmono::report::check_lemma;
use prefmono::spectral::{
    is_max_diag_dominant, is_strictly_diag_dominant_m, lemma_inverse_difference_check, SymmetricMatrix,
};

fn main() -> prefmono::Result<()> {
    let g = SymmetricMatrix::from_rows(2, &[2.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0, 2.0 / 3.0])?;
    println!(
        "G = (1/3)[[2,1],[1,2]] max-diagonally dominant: {}",
        is_max_diag_dominant(&g).holds
    );
    let bad = SymmetricMatrix::from_rows(2, &[1.0, 2.0, 2.0, 1.0])?;
    println!("[[1,2],[2,1]]: {:?}", is_max_diag_dominant(&bad));

    let m = SymmetricMatrix::from_rows(3, &[3.0, -1.0, -1.0, -1.0, 3.0, -1.0, -1.0, -1.0, 3.0])?;
    println!(
        "M strictly dominant with nonpositive off-diagonals: {}",
        is_strictly_diag_dominant_m(&m)
    );
    let verdict = lemma_inverse_difference_check(&m)?;
    println!("inverse difference on M: {verdict:?}");

    let summary = check_lemma(8, 1000, 7)?;
    println!(
        "random 8×8: {}/{} pass, worst margin {:.3e}",
        summary.passed, summary.trials, summary.worst_margin
    );
    Ok(())
}
