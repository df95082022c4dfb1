use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::check_k;
use crate::error::{Error, Result};
use crate::linalg::{solve_spd, DictGram, Dictionary};

/// Result of orthogonal matching pursuit on one signal.
#[derive(Debug, Clone, PartialEq)]
pub struct OmpResult {
    /// Dense coefficient vector of length `d`.
    pub coefficients: Vec<f64>,
    /// Selected atoms in selection order.
    pub support: Vec<usize>,
}

/// Orthogonal matching pursuit with exactly `k` greedy steps.
///
/// Ties in the correlation argmax go to the smallest atom index.
pub fn omp(y: &[f64], dict: &Dictionary, k: usize) -> Result<OmpResult> {
    let d = dict.matrix();
    if y.len() != d.rows() {
        return Err(Error::Shape(format!(
            "signal has length {}, dictionary has {} rows",
            y.len(),
            d.rows()
        )));
    }
    let gram = DictGram::new(d);
    omp_gram(&d.t_mul_vec(y), &gram, k)
}

/// OMP from the correlations `dty = Dᵀy` and the Gram operator of `D`.
pub fn omp_gram(dty: &[f64], gram: &DictGram<'_>, k: usize) -> Result<OmpResult> {
    let n_atoms = gram.n_atoms();
    check_k(k, n_atoms)?;
    if dty.len() != n_atoms {
        return Err(Error::Shape(format!(
            "correlations have length {}, expected {n_atoms}",
            dty.len()
        )));
    }
    let mut selected: Vec<usize> = Vec::with_capacity(k);
    let mut in_support = vec![false; n_atoms];
    let mut gram_cols: Vec<Vec<f64>> = Vec::with_capacity(k);
    let mut coef: Vec<f64> = Vec::new();
    let mut corr = dty.to_vec();
    for _ in 0..k {
        let mut best = None;
        let mut best_val = -1.0;
        for (j, c) in corr.iter().enumerate() {
            if !in_support[j] && c.abs() > best_val {
                best_val = c.abs();
                best = Some(j);
            }
        }
        let j = best.expect("k <= d leaves a free atom");
        selected.push(j);
        in_support[j] = true;
        gram_cols.push(gram.column(j));
        let block = gram.block(&selected, &selected);
        let h: Vec<f64> = selected.iter().map(|&a| dty[a]).collect();
        coef = solve_spd(&block, &h, 0.0, true)?;
        corr.copy_from_slice(dty);
        for (col, x) in gram_cols.iter().zip(&coef) {
            for (c, g) in corr.iter_mut().zip(col) {
                *c -= g * x;
            }
        }
    }
    let mut coefficients = vec![0.0; n_atoms];
    for (&a, v) in selected.iter().zip(coef) {
        coefficients[a] = v;
    }
    Ok(OmpResult {
        coefficients,
        support: selected,
    })
}
