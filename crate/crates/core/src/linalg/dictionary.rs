use alloc::vec::Vec;

use super::decomp::psd_largest_eigenvalue;
use super::matrix::DenseMatrix;
use crate::error::{Error, Result};

/// A known basis `D` (n×d) with unit ℓ2-norm columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Dictionary {
    matrix: DenseMatrix,
    column_norms: Vec<f64>,
}

/// Normalizes the columns of `m`, returning the dictionary and the original
/// column norms.
pub fn normalize_columns(m: &DenseMatrix) -> Result<(Dictionary, Vec<f64>)> {
    let (n, d) = m.shape();
    let mut norms = Vec::with_capacity(d);
    let mut out = m.clone();
    for j in 0..d {
        // Plain sum of squares: a column whose norm underflows is rejected.
        let nrm = m.column_norm(j);
        if !(nrm > 0.0) || !nrm.is_finite() {
            return Err(Error::ZeroColumn(j));
        }
        for i in 0..n {
            out[(i, j)] = m[(i, j)] / nrm;
        }
        norms.push(nrm);
    }
    if !out.is_all_finite() {
        return Err(Error::InvalidArgument("normalized dictionary is not finite".into()));
    }
    let dict = Dictionary {
        matrix: out,
        column_norms: norms.clone(),
    };
    Ok((dict, norms))
}

impl Dictionary {
    /// Normalizes `m` and keeps the recorded norms.
    pub fn new(m: &DenseMatrix) -> Result<Self> {
        normalize_columns(m).map(|(d, _)| d)
    }

    pub fn matrix(&self) -> &DenseMatrix {
        &self.matrix
    }

    /// Norms of the columns before normalization.
    pub fn column_norms(&self) -> &[f64] {
        &self.column_norms
    }

    pub fn n_rows(&self) -> usize {
        self.matrix.rows()
    }

    pub fn n_atoms(&self) -> usize {
        self.matrix.cols()
    }

    /// Restriction to a subset of rows, re-normalized. The returned norms are
    /// those of the restricted columns.
    pub fn restrict_rows(&self, rows: &[usize]) -> Result<(Dictionary, Vec<f64>)> {
        normalize_columns(&self.matrix.select_rows(rows))
    }
}

/// Above this many entries `DᵀD` is not cached.
pub const GRAM_CACHE_LIMIT: usize = 100_000_000;

/// Access to `U = DᵀD`, cached when small enough and recomputed from `D`
/// otherwise.
#[derive(Debug, Clone)]
pub struct DictGram<'a> {
    dict: &'a DenseMatrix,
    cached: Option<DenseMatrix>,
}

impl<'a> DictGram<'a> {
    pub fn new(dict: &'a DenseMatrix) -> Self {
        let (n, d) = dict.shape();
        let cached = (n * d <= GRAM_CACHE_LIMIT && d * d <= GRAM_CACHE_LIMIT).then(|| dict.gram());
        Self { dict, cached }
    }

    /// Never caches; used to exercise the on-demand path.
    pub fn uncached(dict: &'a DenseMatrix) -> Self {
        Self { dict, cached: None }
    }

    pub fn dict(&self) -> &'a DenseMatrix {
        self.dict
    }

    pub fn n_atoms(&self) -> usize {
        self.dict.cols()
    }

    pub fn is_cached(&self) -> bool {
        self.cached.is_some()
    }

    /// `U·Z`.
    pub fn apply(&self, z: &DenseMatrix) -> DenseMatrix {
        match &self.cached {
            Some(u) => u.matmul(z),
            None => self.dict.t_matmul(&self.dict.matmul(z)),
        }
    }

    pub fn entry(&self, a: usize, b: usize) -> f64 {
        match &self.cached {
            Some(u) => u[(a, b)],
            None => (0..self.dict.rows())
                .map(|i| self.dict[(i, a)] * self.dict[(i, b)])
                .sum(),
        }
    }

    /// Column `j` of `U`.
    pub fn column(&self, j: usize) -> Vec<f64> {
        match &self.cached {
            Some(u) => u.column(j),
            None => self.dict.t_mul_vec(&self.dict.column(j)),
        }
    }

    /// `U[rows, cols]`.
    pub fn block(&self, rows: &[usize], cols: &[usize]) -> DenseMatrix {
        DenseMatrix::from_fn(rows.len(), cols.len(), |i, j| self.entry(rows[i], cols[j]))
    }

    /// `σ_max(D)²`, i.e. the largest eigenvalue of `U`.
    pub fn spectral_norm_sq(&self) -> f64 {
        match &self.cached {
            Some(u) => psd_largest_eigenvalue(u, 1e-6, 500).value,
            None => super::decomp::spectral_norm_sq(self.dict, 1e-6, 500)
                .map(|e| e.value)
                .unwrap_or(0.0),
        }
    }

    /// `‖U‖_F`.
    pub fn frobenius(&self) -> f64 {
        match &self.cached {
            Some(u) => u.frobenius(),
            None => self.dict.gram().frobenius(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scaled_identity_normalizes() {
        let m = DenseMatrix::identity(2).scale(2.0);
        let (d, norms) = normalize_columns(&m).unwrap();
        assert_eq!(d.matrix(), &DenseMatrix::identity(2));
        assert_eq!(norms, alloc::vec![2.0, 2.0]);
    }

    #[test]
    fn underflowing_column_is_rejected() {
        let m = DenseMatrix::from_rows(&[[3.0, 0.0], [4.0, 1e-300]]);
        assert_eq!(normalize_columns(&m), Err(Error::ZeroColumn(1)));
    }

    #[test]
    fn cached_and_uncached_gram_agree() {
        let m = DenseMatrix::from_rows(&[[1.0, 2.0, 0.0], [0.0, 1.0, 1.0], [1.0, 0.0, 3.0]]);
        let a = DictGram::new(&m);
        let b = DictGram::uncached(&m);
        let z = DenseMatrix::from_rows(&[[1.0], [-1.0], [2.0]]);
        assert!(a.apply(&z).sub(&b.apply(&z)).max_abs() < 1e-14);
        assert_eq!(a.column(2), b.column(2));
        assert!((a.spectral_norm_sq() - b.spectral_norm_sq()).abs() < 1e-5 * a.spectral_norm_sq());
    }
}
