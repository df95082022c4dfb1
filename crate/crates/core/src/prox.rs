//! Thresholding, projection and proximal operators.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;

/// Per-column regularization weights `λ_i ≥ 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct RegularizationVector(Vec<f64>);

impl RegularizationVector {
    pub fn new(lambdas: Vec<f64>) -> Result<Self> {
        if lambdas.iter().any(|l| !(*l >= 0.0) || !l.is_finite()) {
            return Err(Error::InvalidArgument("regularization must be finite and nonnegative".into()));
        }
        Ok(Self(lambdas))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn sum(&self) -> f64 {
        self.0.iter().sum()
    }
}

/// Indices of the `k` largest magnitudes, ties going to the smaller index.
pub fn top_k_indices(x: &[f64], k: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&a, &b| x[b].abs().total_cmp(&x[a].abs()).then(a.cmp(&b)));
    order.truncate(k.min(x.len()));
    order.sort_unstable();
    order
}

/// Keeps the `k` entries of largest magnitude and zeros the rest.
pub fn hard_threshold_k(x: &[f64], k: usize) -> Vec<f64> {
    if k >= x.len() {
        return x.to_vec();
    }
    let mut out = vec![0.0; x.len()];
    for i in top_k_indices(x, k) {
        out[i] = x[i];
    }
    out
}

/// Column-wise [`hard_threshold_k`].
pub fn hard_threshold_columns(x: &DenseMatrix, k: usize) -> DenseMatrix {
    let mut out = DenseMatrix::zeros(x.rows(), x.cols());
    for j in 0..x.cols() {
        out.set_column(j, &hard_threshold_k(&x.column(j), k));
    }
    out
}

/// Projection on nonnegative k-sparse vectors, column-wise.
pub fn nonneg_hard_threshold_columns(x: &DenseMatrix, k: usize) -> DenseMatrix {
    hard_threshold_columns(&project_nonneg(x), k)
}

/// `sign(x)·max(|x| − λ, 0)` elementwise.
pub fn soft_threshold(x: &[f64], lambda: f64) -> Vec<f64> {
    x.iter().map(|v| shrink(*v, lambda)).collect()
}

#[inline]
fn shrink(v: f64, lambda: f64) -> f64 {
    let a = v.abs() - lambda;
    if a > 0.0 {
        a.copysign(v)
    } else {
        0.0
    }
}

/// Soft thresholding of column `j` by `lambdas[j]`.
pub fn soft_threshold_columns(x: &DenseMatrix, lambdas: &[f64]) -> DenseMatrix {
    assert_eq!(x.cols(), lambdas.len());
    let mut out = x.clone();
    for i in 0..x.rows() {
        for (v, l) in out.row_mut(i).iter_mut().zip(lambdas) {
            *v = shrink(*v, *l);
        }
    }
    out
}

pub fn project_nonneg(x: &DenseMatrix) -> DenseMatrix {
    x.map(|v| v.max(0.0))
}

/// `max(x − λ, 0)` elementwise.
pub fn nonneg_soft_threshold(x: &DenseMatrix, lambda: f64) -> DenseMatrix {
    x.map(|v| (v - lambda).max(0.0))
}

/// `max(x − λ_j, 0)` on column `j`.
pub fn nonneg_soft_threshold_columns(x: &DenseMatrix, lambdas: &[f64]) -> DenseMatrix {
    assert_eq!(x.cols(), lambdas.len());
    let mut out = x.clone();
    for i in 0..x.rows() {
        for (v, l) in out.row_mut(i).iter_mut().zip(lambdas) {
            *v = (*v - l).max(0.0);
        }
    }
    out
}

/// `max_i ‖X_i‖₁`.
pub fn l11_norm(x: &DenseMatrix) -> f64 {
    (0..x.cols())
        .map(|j| (0..x.rows()).map(|i| x[(i, j)].abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Sum over columns of the largest magnitude, accumulated in column order.
pub fn sum_column_max_abs(x: &DenseMatrix) -> f64 {
    let mut maxes = vec![0.0f64; x.cols()];
    for i in 0..x.rows() {
        for (m, v) in maxes.iter_mut().zip(x.row(i)) {
            *m = m.max(v.abs());
        }
    }
    maxes.iter().sum()
}

/// One column sorted by decreasing magnitude, with prefix sums.
struct SortedColumn {
    prefix: Vec<f64>,
    sorted: Vec<f64>,
}

impl SortedColumn {
    fn new(col: Vec<f64>) -> Self {
        let mut sorted: Vec<f64> = col.into_iter().map(f64::abs).collect();
        sorted.sort_by(|a, b| b.total_cmp(a));
        let mut prefix = Vec::with_capacity(sorted.len());
        let mut acc = 0.0;
        for v in &sorted {
            acc += v;
            prefix.push(acc);
        }
        Self { prefix, sorted }
    }

    fn l1(&self) -> f64 {
        self.prefix.last().copied().unwrap_or(0.0)
    }

    /// Shrinkage that projects the column on the ℓ1 ball of radius `t`,
    /// returned with the number of surviving entries (0 if inside the ball).
    fn threshold(&self, t: f64) -> (f64, usize) {
        if self.l1() <= t {
            return (0.0, 0);
        }
        let mut rho = 1;
        for j in 0..self.sorted.len() {
            if self.sorted[j] - (self.prefix[j] - t) / (j + 1) as f64 > 0.0 {
                rho = j + 1;
            }
        }
        (((self.prefix[rho - 1] - t) / rho as f64).max(0.0), rho)
    }
}

/// Proximal operator of `λ·max_i ‖Z_i‖₁`:
/// `argmin_Z ½‖Z − X‖_F² + λ·max_i ‖Z_i‖₁`.
///
/// Every column is the projection of `X_i` onto an ℓ1 ball of a shared
/// radius `t`; the radius is located by bisection on the condition that the
/// column shrinkages sum to `λ`, then refined exactly on the final linear
/// piece. The output is exactly zero iff `λ ≥ Σ_i ‖X_i‖_∞`.
pub fn prox_l11(x: &DenseMatrix, lambda: f64, tol: f64) -> DenseMatrix {
    if lambda <= 0.0 {
        return x.clone();
    }
    if lambda >= sum_column_max_abs(x) {
        return DenseMatrix::zeros(x.rows(), x.cols());
    }
    let cols: Vec<SortedColumn> = (0..x.cols()).map(|j| SortedColumn::new(x.column(j))).collect();
    let total = |t: f64| cols.iter().map(|c| c.threshold(t).0).sum::<f64>();
    let t_max = cols.iter().map(SortedColumn::l1).fold(0.0, f64::max);
    let (mut lo, mut hi) = (0.0, t_max);
    let tol = tol.max(f64::EPSILON);
    while hi - lo > tol * t_max {
        let mid = 0.5 * (lo + hi);
        if total(mid) > lambda {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut t = 0.5 * (lo + hi);
    // On a linear piece: Σ (S_i − t)/ρ_i = λ.
    let (mut a, mut b) = (0.0, 0.0);
    let pieces: Vec<usize> = cols.iter().map(|c| c.threshold(t).1).collect();
    for (c, &rho) in cols.iter().zip(&pieces) {
        if rho > 0 {
            a += c.prefix[rho - 1] / rho as f64;
            b += 1.0 / rho as f64;
        }
    }
    if b > 0.0 {
        let exact = (a - lambda) / b;
        let same_piece = exact >= 0.0
            && cols
                .iter()
                .zip(&pieces)
                .all(|(c, &rho)| c.threshold(exact).1 == rho);
        if same_piece {
            t = exact;
        }
    }
    let thresholds: Vec<f64> = cols.iter().map(|c| c.threshold(t).0).collect();
    soft_threshold_columns(x, &thresholds)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hard_threshold_examples() {
        assert_eq!(hard_threshold_k(&[1.0, -3.0, 2.0], 1), vec![0.0, -3.0, 0.0]);
        assert_eq!(hard_threshold_k(&[2.0, 2.0, 1.0], 1), vec![2.0, 0.0, 0.0]);
        let x = [0.5, -1.5, 3.0];
        assert_eq!(hard_threshold_k(&x, 3), x.to_vec());
        assert_eq!(hard_threshold_k(&x, 0), vec![0.0; 3]);
    }

    #[test]
    fn soft_threshold_examples() {
        assert_eq!(soft_threshold(&[2.0, -0.5], 1.0), vec![1.0, 0.0]);
        assert_eq!(soft_threshold(&[2.0, -0.5], 0.0), vec![2.0, -0.5]);
        let x = [3.0, -2.0, 0.1, -0.7];
        let l1: f64 = soft_threshold(&x, 0.5).iter().map(|v| v.abs()).sum();
        let expected: f64 = x.iter().map(|v: &f64| (v.abs() - 0.5).max(0.0)).sum();
        assert!((l1 - expected).abs() < 1e-15);
    }

    #[test]
    fn nonneg_examples() {
        let x = DenseMatrix::from_rows(&[[-1.0, 2.0]]);
        assert_eq!(project_nonneg(&x), DenseMatrix::from_rows(&[[0.0, 2.0]]));
        let p = DenseMatrix::from_rows(&[[0.0, 2.0]]);
        assert_eq!(project_nonneg(&p), p);
        let y = DenseMatrix::from_rows(&[[3.0, 0.5]]);
        assert_eq!(nonneg_soft_threshold(&y, 1.0), DenseMatrix::from_rows(&[[2.0, 0.0]]));
    }

    #[test]
    fn prox_l11_single_column_is_soft_threshold() {
        let x = DenseMatrix::from_column(&[1.5, -0.2, 0.9, -2.0]);
        let z = prox_l11(&x, 0.6, 1e-12);
        let expected = soft_threshold(&x.column(0), 0.6);
        for (a, b) in z.column(0).iter().zip(&expected) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn prox_l11_zero_iff_above_sum_of_max() {
        let x = DenseMatrix::from_rows(&[[1.0, -0.5], [0.25, 2.0]]);
        assert!(prox_l11(&x, 3.0, 1e-10).is_zero());
        assert!(!prox_l11(&x, 2.999, 1e-10).is_zero());
    }

    #[test]
    fn regularization_vector_validates() {
        assert!(RegularizationVector::new(vec![0.0, 1.0]).is_ok());
        assert!(RegularizationVector::new(vec![-1.0]).is_err());
    }
}
