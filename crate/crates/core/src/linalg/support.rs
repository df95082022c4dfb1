use alloc::vec::Vec;

use super::matrix::DenseMatrix;

/// Entries with magnitude at or below this are treated as zero when a
/// support is extracted from values.
pub const SUPPORT_THRESHOLD: f64 = 1e-14;

/// Per-column sets of active atom indices, each strictly increasing.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Support {
    columns: Vec<Vec<usize>>,
}

impl Support {
    /// Sorts and deduplicates each column's indices.
    pub fn new(mut columns: Vec<Vec<usize>>) -> Self {
        for c in &mut columns {
            c.sort_unstable();
            c.dedup();
        }
        Self { columns }
    }

    pub fn empty(r: usize) -> Self {
        Self {
            columns: alloc::vec![Vec::new(); r],
        }
    }

    /// Nonzero pattern of `x` (|entry| > [`SUPPORT_THRESHOLD`]).
    pub fn from_values(x: &DenseMatrix) -> Self {
        let (d, r) = x.shape();
        let columns = (0..r)
            .map(|j| (0..d).filter(|&i| x[(i, j)].abs() > SUPPORT_THRESHOLD).collect())
            .collect();
        Self { columns }
    }

    pub fn n_columns(&self) -> usize {
        self.columns.len()
    }

    pub fn column(&self, i: usize) -> &[usize] {
        &self.columns[i]
    }

    pub fn columns(&self) -> &[Vec<usize>] {
        &self.columns
    }

    pub fn total(&self) -> usize {
        self.columns.iter().map(Vec::len).sum()
    }

    pub fn max_column_size(&self) -> usize {
        self.columns.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn set_column(&mut self, i: usize, mut idx: Vec<usize>) {
        idx.sort_unstable();
        idx.dedup();
        self.columns[i] = idx;
    }
}

/// A code matrix `X` (d×r) together with its support.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseCodes {
    values: DenseMatrix,
    support: Support,
}

impl SparseCodes {
    /// Derives the support from the nonzero pattern of `values`.
    pub fn from_values(values: DenseMatrix) -> Self {
        let support = Support::from_values(&values);
        Self { values, support }
    }

    pub fn zeros(d: usize, r: usize) -> Self {
        Self {
            values: DenseMatrix::zeros(d, r),
            support: Support::empty(r),
        }
    }

    pub fn values(&self) -> &DenseMatrix {
        &self.values
    }

    pub fn support(&self) -> &Support {
        &self.support
    }

    pub fn into_values(self) -> DenseMatrix {
        self.values
    }
}
