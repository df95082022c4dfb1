use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::{singular_values, DenseMatrix, MixingOperator};
use crate::math::{binomial, sqrt};

/// Largest number of column subsets [`check_reduction_bound`] will enumerate.
pub const ENUMERATION_LIMIT: u64 = 1_000_000;

/// Smallest nonzero singular value over all submatrices of `d` made of
/// `size` columns. Singular values at most `1e-12·σ_max` count as zero.
pub fn smallest_restricted_singular_value(d: &DenseMatrix, size: usize) -> Result<f64> {
    let n_atoms = d.cols();
    let size = size.min(n_atoms);
    if size == 0 {
        return Err(Error::InvalidArgument("subset size must be positive".into()));
    }
    let count = binomial(n_atoms, size);
    if count > ENUMERATION_LIMIT {
        return Err(Error::EnumerationTooLarge(count));
    }
    let mut idx: Vec<usize> = (0..size).collect();
    let mut best = f64::INFINITY;
    loop {
        let s = singular_values(&d.select_columns(&idx));
        let top = s.first().copied().unwrap_or(0.0);
        if let Some(v) = s.iter().rev().find(|v| **v > 1e-12 * top) {
            best = best.min(*v);
        }
        // next combination in lexicographic order
        let mut i = size;
        while i > 0 && idx[i - 1] == n_atoms - size + i - 1 {
            i -= 1;
        }
        if i == 0 {
            break;
        }
        idx[i - 1] += 1;
        for j in i..size {
            idx[j] = idx[j - 1] + 1;
        }
    }
    Ok(best)
}

/// `(1/σ_min^(2k)(D))·sqrt(δ + ε/σ_min²(B))`: the distance bound between
/// the columnwise reduction and the original problem, where δ and ε are the
/// residuals of the two problems.
pub fn check_reduction_bound(
    d: &DenseMatrix,
    mixing: &MixingOperator,
    k: usize,
    delta: f64,
    epsilon: f64,
) -> Result<f64> {
    if k == 0 {
        return Err(Error::InvalidArgument("sparsity level must be positive".into()));
    }
    if !(delta >= 0.0 && epsilon >= 0.0) {
        return Err(Error::InvalidArgument("residuals must be nonnegative".into()));
    }
    let s_d = smallest_restricted_singular_value(d, 2 * k)?;
    if delta == 0.0 && epsilon == 0.0 {
        return Ok(0.0);
    }
    let s_b = mixing.smallest_singular_value();
    Ok(sqrt(delta + epsilon / (s_b * s_b)) / s_d)
}
