use alloc::vec::Vec;

use crate::error::Result;
use crate::linalg::{
    DenseMatrix, Dictionary, LsOptions, MixingOperator, MscGram, SparseCodes, Support, SUPPORT_THRESHOLD,
};
use crate::prox::top_k_indices;

/// Ridge of the nonnegative refit, relative to the mean diagonal of its
/// normal matrix.
const NONNEG_RIDGE_SCALE: f64 = 1e-10;

/// Nonzero pattern of each column, truncated to its `k` largest magnitudes.
pub fn truncate_support(values: &DenseMatrix, k: usize) -> Support {
    let mut cols = Vec::with_capacity(values.cols());
    for i in 0..values.cols() {
        let col = values.column(i);
        let nnz = col.iter().filter(|v| v.abs() > SUPPORT_THRESHOLD).count();
        let idx = if nnz <= k {
            (0..col.len()).filter(|&a| col[a].abs() > SUPPORT_THRESHOLD).collect()
        } else {
            top_k_indices(&col, k)
        };
        cols.push(idx);
    }
    Support::new(cols)
}

/// Refits on the truncated support of `values`.
pub fn debias_gram(gram: &MscGram<'_>, values: &DenseMatrix, k: usize, nonneg: bool) -> Result<DenseMatrix> {
    let support = truncate_support(values, k);
    if !nonneg {
        return gram.solve_support(&support, LsOptions::default());
    }
    let mut diag_sum = 0.0;
    for i in 0..support.n_columns() {
        for &a in support.column(i) {
            diag_sum += gram.btb()[(i, i)] * gram.dict_gram().entry(a, a);
        }
    }
    let total = support.total().max(1) as f64;
    gram.solve_support_nonneg(&support, NONNEG_RIDGE_SCALE * diag_sum / total)
}

/// Least-squares refit on the support of `estimate`, keeping at most `k`
/// atoms per column (largest magnitudes first). With `nonneg` the refit is
/// a ridge-regularized nonnegative least squares, which may drop atoms.
pub fn debias(
    y: &DenseMatrix,
    dict: &Dictionary,
    mixing: &MixingOperator,
    estimate: &SparseCodes,
    k: usize,
    nonneg: bool,
) -> Result<SparseCodes> {
    let gram = MscGram::new(y, dict.matrix(), mixing)?;
    debias_gram(&gram, estimate.values(), k, nonneg).map(SparseCodes::from_values)
}
