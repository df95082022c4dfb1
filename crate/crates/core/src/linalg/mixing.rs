use alloc::format;
use alloc::vec;

use super::decomp::{psd_largest_eigenvalue, symmetric_eigen};
use super::matrix::DenseMatrix;
use crate::error::{Error, Result};
use crate::math::sqrt;

/// Below this smallest singular value a mixing matrix is considered rank
/// deficient.
pub const RANK_TOLERANCE: f64 = 1e-12;

/// Column-wise Kronecker product. Column `l` of the result is `B_l ⊗ C_l`,
/// so entry `(j, k)` of the pair lands on row `j·m2 + k`.
pub fn khatri_rao(b: &DenseMatrix, c: &DenseMatrix) -> Result<DenseMatrix> {
    if b.cols() != c.cols() {
        return Err(Error::Shape(format!(
            "khatri_rao: {} vs {} columns",
            b.cols(),
            c.cols()
        )));
    }
    let (m1, r) = b.shape();
    let m2 = c.rows();
    let mut out = DenseMatrix::zeros(m1 * m2, r);
    for j in 0..m1 {
        for k in 0..m2 {
            let row = out.row_mut(j * m2 + k);
            for l in 0..r {
                row[l] = b[(j, l)] * c[(k, l)];
            }
        }
    }
    Ok(out)
}

/// The known factor `B` of the mixed sparse coding model `Y ≈ D·X·Bᵀ`.
#[derive(Debug, Clone, PartialEq)]
pub enum MixingOperator {
    /// Plain `m×r` matrix.
    Dense(DenseMatrix),
    /// Khatri-Rao structured `B ⊙ C` of shape `(m1·m2)×r`, never formed.
    KhatriRao(DenseMatrix, DenseMatrix),
}

impl MixingOperator {
    pub fn khatri_rao(b: DenseMatrix, c: DenseMatrix) -> Result<Self> {
        if b.cols() != c.cols() {
            return Err(Error::Shape(format!(
                "khatri_rao operator: {} vs {} columns",
                b.cols(),
                c.cols()
            )));
        }
        Ok(Self::KhatriRao(b, c))
    }

    /// Number of columns `r`.
    pub fn rank(&self) -> usize {
        match self {
            Self::Dense(b) => b.cols(),
            Self::KhatriRao(b, _) => b.cols(),
        }
    }

    /// Number of rows of the effective matrix.
    pub fn n_rows(&self) -> usize {
        match self {
            Self::Dense(b) => b.rows(),
            Self::KhatriRao(b, c) => b.rows() * c.rows(),
        }
    }

    /// `BᵀB`, via `(BᵀB)∗(CᵀC)` for the Khatri-Rao case.
    pub fn gram(&self) -> DenseMatrix {
        match self {
            Self::Dense(b) => b.gram(),
            Self::KhatriRao(b, c) => b.gram().hadamard(&c.gram()),
        }
    }

    pub fn materialize(&self) -> DenseMatrix {
        match self {
            Self::Dense(b) => b.clone(),
            Self::KhatriRao(b, c) => khatri_rao(b, c).expect("validated at construction"),
        }
    }

    /// `Y·B` for any `Y` with `n_rows()` columns.
    pub fn project(&self, y: &DenseMatrix) -> DenseMatrix {
        assert_eq!(y.cols(), self.n_rows(), "project: column count");
        match self {
            Self::Dense(b) => y.matmul(b),
            Self::KhatriRao(b, c) => {
                let (m1, r) = b.shape();
                let m2 = c.rows();
                let mut out = DenseMatrix::zeros(y.rows(), r);
                let mut t = vec![0.0; r];
                for i in 0..y.rows() {
                    let yrow = y.row(i);
                    let orow = out.row_mut(i);
                    for j in 0..m1 {
                        t.iter_mut().for_each(|v| *v = 0.0);
                        for (k, yv) in yrow[j * m2..(j + 1) * m2].iter().enumerate() {
                            if *yv == 0.0 {
                                continue;
                            }
                            for (tl, cl) in t.iter_mut().zip(c.row(k)) {
                                *tl += yv * cl;
                            }
                        }
                        for l in 0..r {
                            orow[l] += b[(j, l)] * t[l];
                        }
                    }
                }
                out
            }
        }
    }

    /// `A·Bᵀ` for any `A` with `rank()` columns.
    pub fn reconstruct(&self, a: &DenseMatrix) -> DenseMatrix {
        assert_eq!(a.cols(), self.rank(), "reconstruct: column count");
        match self {
            Self::Dense(b) => a.matmul_t(b),
            Self::KhatriRao(b, c) => {
                let (m1, r) = b.shape();
                let m2 = c.rows();
                let mut out = DenseMatrix::zeros(a.rows(), m1 * m2);
                let mut t = vec![0.0; r];
                for i in 0..a.rows() {
                    for j in 0..m1 {
                        for l in 0..r {
                            t[l] = a[(i, l)] * b[(j, l)];
                        }
                        let orow = &mut out.row_mut(i)[j * m2..(j + 1) * m2];
                        for (k, o) in orow.iter_mut().enumerate() {
                            *o = super::matrix::dot(&t, c.row(k));
                        }
                    }
                }
                out
            }
        }
    }

    /// `σ_max(B)²`.
    pub fn spectral_norm_sq(&self) -> f64 {
        psd_largest_eigenvalue(&self.gram(), 1e-6, 500).value
    }

    /// Smallest singular value of the effective matrix.
    pub fn smallest_singular_value(&self) -> f64 {
        let (vals, _) = symmetric_eigen(&self.gram());
        sqrt(vals.first().copied().unwrap_or(0.0).max(0.0))
    }

    /// Errors with the smallest singular value when it is at most
    /// [`RANK_TOLERANCE`].
    pub fn check_full_rank(&self) -> Result<f64> {
        let s = self.smallest_singular_value();
        if s > RANK_TOLERANCE {
            Ok(s)
        } else {
            Err(Error::RankDeficient(s))
        }
    }
}

/// Exact `‖Y − D·X·Bᵀ‖_F²`, computed row by row so a Khatri-Rao operator is
/// never materialized.
pub fn residual_cost(
    y: &DenseMatrix,
    dict: &DenseMatrix,
    x: &DenseMatrix,
    mixing: &MixingOperator,
) -> Result<f64> {
    if dict.cols() != x.rows()
        || x.cols() != mixing.rank()
        || y.rows() != dict.rows()
        || y.cols() != mixing.n_rows()
    {
        return Err(Error::Shape(format!(
            "residual_cost: Y {:?}, D {:?}, X {:?}, B rows {} rank {}",
            y.shape(),
            dict.shape(),
            x.shape(),
            mixing.n_rows(),
            mixing.rank()
        )));
    }
    let a = dict.matmul(x);
    Ok(model_residual(y, &a, mixing))
}

/// `‖Y − A·Bᵀ‖_F²` without materializing `A·Bᵀ` as a whole.
pub fn model_residual(y: &DenseMatrix, a: &DenseMatrix, mixing: &MixingOperator) -> f64 {
    let mut total = 0.0;
    let r = a.cols();
    match mixing {
        MixingOperator::Dense(b) => {
            for i in 0..y.rows() {
                let arow = a.row(i);
                for (j, yv) in y.row(i).iter().enumerate() {
                    let e = yv - super::matrix::dot(arow, b.row(j));
                    total += e * e;
                }
            }
        }
        MixingOperator::KhatriRao(b, c) => {
            let (m1, m2) = (b.rows(), c.rows());
            let mut t = vec![0.0; r];
            for i in 0..y.rows() {
                let yrow = y.row(i);
                for j in 0..m1 {
                    for l in 0..r {
                        t[l] = a[(i, l)] * b[(j, l)];
                    }
                    for k in 0..m2 {
                        let e = yrow[j * m2 + k] - super::matrix::dot(&t, c.row(k));
                        total += e * e;
                    }
                }
            }
        }
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn khatri_rao_examples() {
        let i2 = DenseMatrix::identity(2);
        let kr = khatri_rao(&i2, &i2).unwrap();
        assert_eq!(kr.column(0), vec![1.0, 0.0, 0.0, 0.0]);
        assert_eq!(kr.column(1), vec![0.0, 0.0, 0.0, 1.0]);
        let b = DenseMatrix::from_column(&[1.0, 2.0]);
        let c = DenseMatrix::from_column(&[3.0, 4.0]);
        assert_eq!(khatri_rao(&b, &c).unwrap().column(0), vec![3.0, 4.0, 6.0, 8.0]);
        assert!(khatri_rao(&i2, &DenseMatrix::identity(3)).is_err());
    }

    #[test]
    fn structured_products_match_materialized() {
        let b = DenseMatrix::from_rows(&[[1.0, -2.0], [0.5, 1.0], [2.0, 0.0]]);
        let c = DenseMatrix::from_rows(&[[1.0, 1.0], [-1.0, 3.0]]);
        let op = MixingOperator::khatri_rao(b, c).unwrap();
        let dense = MixingOperator::Dense(op.materialize());
        let y = DenseMatrix::from_fn(2, 6, |i, j| (i * 6 + j) as f64 - 4.0);
        let a = DenseMatrix::from_rows(&[[1.0, 2.0], [-0.5, 0.25]]);
        assert!(op.project(&y).sub(&dense.project(&y)).max_abs() < 1e-12);
        assert!(op.reconstruct(&a).sub(&dense.reconstruct(&a)).max_abs() < 1e-12);
        assert!(op.gram().sub(&dense.gram()).max_abs() < 1e-12);
        assert!((model_residual(&y, &a, &op) - model_residual(&y, &a, &dense)).abs() < 1e-10);
    }

    #[test]
    fn residual_edge_cases() {
        let y = DenseMatrix::from_rows(&[[1.0, 2.0], [3.0, 4.0]]);
        let d = DenseMatrix::identity(2);
        let b = MixingOperator::Dense(DenseMatrix::identity(2));
        assert_eq!(residual_cost(&y, &d, &DenseMatrix::zeros(2, 2), &b).unwrap(), 30.0);
        assert_eq!(residual_cost(&y, &d, &y, &b).unwrap(), 0.0);
        assert!(residual_cost(&y, &d, &DenseMatrix::zeros(3, 2), &b).is_err());
    }

    #[test]
    fn rank_check_reports_smallest_singular_value() {
        let b = DenseMatrix::from_rows(&[[1.0, 2.0], [2.0, 4.0]]);
        assert!(matches!(
            MixingOperator::Dense(b).check_full_rank(),
            Err(Error::RankDeficient(_))
        ));
    }
}
