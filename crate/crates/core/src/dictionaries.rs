//! Structured dictionaries: a full 2D cosine basis for image patches and a
//! multi-resolution cubic B-spline family for smooth 1D signals.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::{DenseMatrix, Dictionary};
use crate::math::{cos, sqrt};

/// Orthonormal 2D DCT-II basis over `h×w` patches. Pixel `(p, q)` is row
/// `p·w + q` and frequency `(u, v)` is atom `u·w + v`.
pub fn build_dct2_dictionary(h: usize, w: usize) -> Result<Dictionary> {
    if h == 0 || w == 0 {
        return Err(Error::InvalidArgument(format!("dct patch {h}x{w} is empty")));
    }
    let c1 = dct1(h);
    let c2 = dct1(w);
    let m = DenseMatrix::from_fn(h * w, h * w, |row, atom| {
        let (p, q) = (row / w, row % w);
        let (u, v) = (atom / w, atom % w);
        c1[(p, u)] * c2[(q, v)]
    });
    Dictionary::new(&m)
}

// Column u is the u-th orthonormal DCT-II vector of length n.
fn dct1(n: usize) -> DenseMatrix {
    let nf = n as f64;
    DenseMatrix::from_fn(n, n, |p, u| {
        let s = if u == 0 { sqrt(1.0 / nf) } else { sqrt(2.0 / nf) };
        s * cos(core::f64::consts::PI * (2 * p + 1) as f64 * u as f64 / (2.0 * nf))
    })
}

/// Cubic B-splines sampled on `n` uniform points of `[0, 1]`.
///
/// Levels use clamped uniform knot grids with 4, 5, 6, ... breakpoints; a
/// grid with `K` breakpoints contributes `K + 2` atoms. Levels are stacked
/// until `d` atoms exist, the last one truncated. Columns are unit norm and
/// nonnegative.
pub fn build_bspline_dictionary(n: usize, d: usize) -> Result<Dictionary> {
    if d < 4 {
        return Err(Error::InvalidArgument(format!("bspline dictionary needs d >= 4, got {d}")));
    }
    if n < 2 {
        return Err(Error::InvalidArgument(format!("bspline dictionary needs n >= 2, got {n}")));
    }
    let ts: Vec<f64> = (0..n).map(|i| i as f64 / (n - 1) as f64).collect();
    let mut columns: Vec<Vec<f64>> = Vec::with_capacity(d);
    let mut breaks = 4;
    while columns.len() < d {
        let knots = clamped_knots(breaks);
        let count = breaks + 2;
        for j in 0..count {
            if columns.len() == d {
                break;
            }
            columns.push(ts.iter().map(|&t| cubic_basis(&knots, j, t)).collect());
        }
        breaks += 1;
    }
    let m = DenseMatrix::from_columns(n, &columns);
    Dictionary::new(&m).map_err(|e| match e {
        Error::ZeroColumn(j) => Error::InvalidArgument(format!(
            "bspline atom {j} vanishes on {n} samples; use more samples or fewer atoms"
        )),
        other => other,
    })
}

fn clamped_knots(breaks: usize) -> Vec<f64> {
    let mut knots = vec![0.0; 3];
    knots.extend((0..breaks).map(|i| i as f64 / (breaks - 1) as f64));
    knots.extend([1.0; 3]);
    knots
}

// Cox-de Boor recursion for degree 3. The right end point belongs to the
// last non-degenerate span so the final basis function equals 1 there.
fn cubic_basis(knots: &[f64], j: usize, t: f64) -> f64 {
    let n_spans = knots.len() - 1;
    let last = (0..n_spans).rev().find(|&s| knots[s] < knots[s + 1]).unwrap_or(0);
    let mut b: Vec<f64> = (0..n_spans)
        .map(|s| {
            let inside = knots[s] <= t && t < knots[s + 1];
            if inside || (s == last && t == knots[s + 1]) {
                1.0
            } else {
                0.0
            }
        })
        .collect();
    for p in 1..=3 {
        for s in 0..n_spans - p {
            let left = ratio(t - knots[s], knots[s + p] - knots[s]) * b[s];
            let right = ratio(knots[s + p + 1] - t, knots[s + p + 1] - knots[s + 1]) * b[s + 1];
            b[s] = left + right;
        }
    }
    b[j].max(0.0)
}

fn ratio(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dct_is_orthonormal() {
        let d = build_dct2_dictionary(4, 4).unwrap();
        let g = d.matrix().gram();
        assert!(g.sub(&DenseMatrix::identity(16)).max_abs() < 1e-10);
        let d = build_dct2_dictionary(3, 5).unwrap();
        assert!(d.matrix().gram().sub(&DenseMatrix::identity(15)).max_abs() < 1e-10);
    }

    #[test]
    fn bspline_partition_of_unity_per_level() {
        let knots = clamped_knots(6);
        for i in 0..=20 {
            let t = i as f64 / 20.0;
            let s: f64 = (0..8).map(|j| cubic_basis(&knots, j, t)).sum();
            assert!((s - 1.0).abs() < 1e-12, "t={t} sum={s}");
        }
    }

    #[test]
    fn bspline_atoms_nonneg_unit_norm() {
        let d = build_bspline_dictionary(61, 81).unwrap();
        assert_eq!(d.n_atoms(), 81);
        let m = d.matrix();
        assert!(m.as_slice().iter().all(|&v| v >= 0.0));
        for j in 0..81 {
            assert!((m.column_norm(j) - 1.0).abs() < 1e-12);
        }
        assert!(build_bspline_dictionary(10, 3).is_err());
    }
}
