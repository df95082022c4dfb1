#![allow(dead_code)]

use dlra_core::linalg::{DenseMatrix, Dictionary};
use dlra_core::synth::{gaussian_matrix, rng_from_seed};
use nalgebra::DMatrix;
use rand::Rng;

pub fn to_na(m: &DenseMatrix) -> DMatrix<f64> {
    DMatrix::from_row_slice(m.rows(), m.cols(), m.as_slice())
}

pub fn from_na(m: &DMatrix<f64>) -> DenseMatrix {
    DenseMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

/// Least squares through a dense SVD.
pub fn na_lstsq(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    a.clone().svd(true, true).solve(b, 1e-13).unwrap()
}

pub fn gaussian(rows: usize, cols: usize, seed: u64) -> DenseMatrix {
    gaussian_matrix(rows, cols, &mut rng_from_seed(seed))
}

pub fn gaussian_dict(n: usize, d: usize, seed: u64) -> Dictionary {
    Dictionary::new(&gaussian(n, d, seed)).unwrap()
}

/// Random k-subset of `0..d`, sorted.
pub fn subset(d: usize, k: usize, rng: &mut impl Rng) -> Vec<usize> {
    let mut s = rand::seq::index::sample(rng, d, k).into_vec();
    s.sort_unstable();
    s
}

/// All k-subsets of `0..d` in lexicographic order.
pub fn all_subsets(d: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, d: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..d {
            cur.push(i);
            rec(i + 1, d, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, d, k, &mut Vec::new(), &mut out);
    out
}

pub fn rel_diff(a: &DenseMatrix, b: &DenseMatrix) -> f64 {
    a.sub(b).frobenius() / b.frobenius().max(f64::MIN_POSITIVE)
}
