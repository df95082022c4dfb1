//! Scores comparing estimates with the ground truth.

use dlra_core::linalg::{dot, norm2, DenseMatrix, Support};
use pathfinding::kuhn_munkres::kuhn_munkres;
use pathfinding::matrix::Matrix;

use crate::error::{Result, ToolError};

/// Percentage of true nonzero positions found in the estimate.
///
/// With `match_columns`, estimated columns are first paired with true ones
/// to maximize the total overlap, which removes the permutation ambiguity
/// of factorization models.
pub fn support_recovery(est: &Support, truth: &Support, match_columns: bool) -> Result<f64> {
    let r = truth.n_columns();
    if est.n_columns() != r {
        return Err(ToolError::Invalid(format!(
            "support_recovery: {} estimated vs {r} true columns",
            est.n_columns()
        )));
    }
    let total = truth.total();
    if total == 0 {
        return Ok(100.0);
    }
    let overlap = |i: usize, j: usize| est.column(j).iter().filter(|a| truth.column(i).contains(a)).count();
    let hits: usize = if match_columns && r > 1 {
        let weights = Matrix::from_fn(r, r, |(i, j)| overlap(i, j) as i64);
        kuhn_munkres(&weights).0 as usize
    } else {
        (0..r).map(|i| overlap(i, i)).sum()
    };
    Ok(100.0 * hits as f64 / total as f64)
}

/// Mean spectral angle, in radians, between matching rows of `y` and
/// `y_hat`. Rows where either vector is zero are skipped and counted.
pub fn sam(y: &DenseMatrix, y_hat: &DenseMatrix) -> Result<(f64, usize)> {
    if y.shape() != y_hat.shape() {
        return Err(ToolError::Invalid(format!("sam: shapes {:?} and {:?}", y.shape(), y_hat.shape())));
    }
    let (mut acc, mut used, mut skipped) = (0.0, 0usize, 0usize);
    for i in 0..y.rows() {
        let (a, b) = (y.row(i), y_hat.row(i));
        let (na, nb) = (norm2(a), norm2(b));
        if na == 0.0 || nb == 0.0 {
            skipped += 1;
            continue;
        }
        acc += (dot(a, b) / (na * nb)).clamp(-1.0, 1.0).acos();
        used += 1;
    }
    let mean = if used == 0 { 0.0 } else { acc / used as f64 };
    Ok((mean, skipped))
}

/// `‖Y − Ŷ‖_F / ‖Y‖_F`.
pub fn rel_error(y: &DenseMatrix, y_hat: &DenseMatrix) -> Result<f64> {
    if y.shape() != y_hat.shape() {
        return Err(ToolError::Invalid(format!(
            "rel_error: shapes {:?} and {:?}",
            y.shape(),
            y_hat.shape()
        )));
    }
    Ok(y.sub(y_hat).frobenius() / y.frobenius())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn supp(cols: &[&[usize]]) -> Support {
        Support::new(cols.iter().map(|c| c.to_vec()).collect())
    }

    #[test]
    fn recovery_examples() {
        let t = supp(&[&[0, 1], &[2, 3]]);
        assert_eq!(support_recovery(&t, &t, false).unwrap(), 100.0);
        assert_eq!(support_recovery(&supp(&[&[4, 5], &[6, 7]]), &t, false).unwrap(), 0.0);
        assert_eq!(support_recovery(&supp(&[&[0, 1], &[6, 7]]), &t, false).unwrap(), 50.0);
        let swapped = supp(&[&[2, 3], &[0, 1]]);
        assert_eq!(support_recovery(&swapped, &t, false).unwrap(), 0.0);
        assert_eq!(support_recovery(&swapped, &t, true).unwrap(), 100.0);
        assert!(support_recovery(&supp(&[&[0]]), &t, true).is_err());
    }

    #[test]
    fn sam_and_error_examples() {
        let y = DenseMatrix::from_rows(&[[1.0, 0.0], [0.0, 2.0]]);
        assert_eq!(sam(&y, &y).unwrap(), (0.0, 0));
        assert_eq!(rel_error(&y, &y).unwrap(), 0.0);
        let perp = DenseMatrix::from_rows(&[[0.0, 1.0], [3.0, 0.0]]);
        assert!((sam(&y, &perp).unwrap().0 - std::f64::consts::FRAC_PI_2).abs() < 1e-12);
        let double = y.scale(2.0);
        assert!(sam(&y, &double).unwrap().0.abs() < 1e-7);
        assert!((rel_error(&y, &double).unwrap() - 1.0).abs() < 1e-12);
        let with_zero = DenseMatrix::from_rows(&[[1.0, 0.0], [0.0, 0.0]]);
        assert_eq!(sam(&with_zero, &y).unwrap(), (0.0, 1));
    }
}
