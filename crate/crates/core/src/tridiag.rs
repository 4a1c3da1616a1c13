//! Thomas algorithm for tridiagonal systems.

use crate::error::{Error, Result};

/// Solve `A x = rhs` where `A` has sub-diagonal `lower` (`lower[k]` multiplies
/// `x[k]` in row `k + 1`), main diagonal `diag` and super-diagonal `upper`
/// (`upper[k]` multiplies `x[k + 1]` in row `k`).
///
/// No pivoting: the caller guarantees diagonal dominance by rows or columns.
pub fn solve(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
    let n = diag.len();
    assert!(n > 0, "empty system");
    assert_eq!(lower.len(), n - 1);
    assert_eq!(upper.len(), n - 1);
    assert_eq!(rhs.len(), n);

    let mut c = vec![0.0; n];
    let mut x = vec![0.0; n];
    let mut pivot = diag[0];
    check_pivot(pivot, 0)?;
    x[0] = rhs[0] / pivot;
    for k in 1..n {
        c[k - 1] = upper[k - 1] / pivot;
        pivot = diag[k] - lower[k - 1] * c[k - 1];
        check_pivot(pivot, k)?;
        x[k] = (rhs[k] - lower[k - 1] * x[k - 1]) / pivot;
    }
    for k in (0..n - 1).rev() {
        x[k] -= c[k] * x[k + 1];
    }
    Ok(x)
}

fn check_pivot(p: f64, row: usize) -> Result<()> {
    if !p.is_finite() || p.abs() < f64::MIN_POSITIVE {
        return Err(Error::SolverFailure(format!("singular pivot {p:e} in row {row}")));
    }
    Ok(())
}
