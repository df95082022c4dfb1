//! Small dense factorizations: Cholesky, cyclic Jacobi eigensolver,
//! one-sided Jacobi SVD and power iteration.

use alloc::vec;
use alloc::vec::Vec;

use super::matrix::{dot, DenseMatrix};
use crate::error::{Error, Result};
use crate::math::{hypot, sqrt};

/// Condition number above which the SPD solver adds a ridge.
pub const RIDGE_CONDITION_LIMIT: f64 = 1e10;
/// Ridge used on fallback, relative to `trace / size`.
pub const RIDGE_SCALE: f64 = 1e-10;

/// Lower-triangular Cholesky factor of a symmetric positive definite matrix.
#[derive(Debug, Clone)]
pub struct Cholesky {
    n: usize,
    l: Vec<f64>,
}

impl Cholesky {
    /// Factors `a + shift·I`. Returns `None` when a pivot is not positive.
    pub fn factor_shifted(a: &DenseMatrix, shift: f64) -> Option<Self> {
        let n = a.rows();
        debug_assert_eq!(n, a.cols());
        let mut l = vec![0.0; n * n];
        for j in 0..n {
            let mut d = a[(j, j)] + shift - dot(&l[j * n..j * n + j], &l[j * n..j * n + j]);
            if !(d > 0.0) || !d.is_finite() {
                return None;
            }
            d = sqrt(d);
            l[j * n + j] = d;
            for i in j + 1..n {
                let s = a[(i, j)] - dot(&l[i * n..i * n + j], &l[j * n..j * n + j]);
                l[i * n + j] = s / d;
            }
        }
        Some(Self { n, l })
    }

    pub fn factor(a: &DenseMatrix) -> Option<Self> {
        Self::factor_shifted(a, 0.0)
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut y = b.to_vec();
        for i in 0..n {
            let s = dot(&self.l[i * n..i * n + i], &y[..i]);
            y[i] = (y[i] - s) / self.l[i * n + i];
        }
        for i in (0..n).rev() {
            let s = y[i] - (i + 1..n).map(|k| self.l[k * n + i] * y[k]).sum::<f64>();
            y[i] = s / self.l[i * n + i];
        }
        y
    }

    /// Solves `A X = B` column by column.
    pub fn solve_matrix(&self, b: &DenseMatrix) -> DenseMatrix {
        let mut out = DenseMatrix::zeros(b.rows(), b.cols());
        for j in 0..b.cols() {
            out.set_column(j, &self.solve(&b.column(j)));
        }
        out
    }
}

/// Outcome of a power iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralEstimate {
    pub value: f64,
    pub converged: bool,
    pub iterations: usize,
}

fn start_vector(n: usize) -> Vec<f64> {
    // Deterministic, with no special alignment to coordinate axes.
    let v: Vec<f64> = (0..n)
        .map(|j| 1.0 + 0.5 * libm::sin(1.0 + 1.7 * j as f64))
        .collect();
    let nrm = sqrt(dot(&v, &v));
    v.into_iter().map(|x| x / nrm).collect()
}

/// Largest eigenvalue of a symmetric positive semidefinite matrix by power
/// iteration, stopping when the relative change drops below `tol`.
pub fn psd_largest_eigenvalue(g: &DenseMatrix, tol: f64, max_iter: usize) -> SpectralEstimate {
    let n = g.rows();
    if n == 0 {
        return SpectralEstimate {
            value: 0.0,
            converged: true,
            iterations: 0,
        };
    }
    let mut v = start_vector(n);
    let mut lambda = 0.0;
    for it in 1..=max_iter {
        let w = g.mul_vec(&v);
        let nw = sqrt(dot(&w, &w));
        if nw == 0.0 {
            return SpectralEstimate {
                value: 0.0,
                converged: true,
                iterations: it,
            };
        }
        let next = dot(&v, &w);
        v = w.into_iter().map(|x| x / nw).collect();
        if it > 1 && (next - lambda).abs() <= tol * next.abs() {
            return SpectralEstimate {
                value: next,
                converged: true,
                iterations: it,
            };
        }
        lambda = next;
    }
    SpectralEstimate {
        value: lambda,
        converged: false,
        iterations: max_iter,
    }
}

/// `σ_max(m)²` through power iteration on `mᵀm`.
///
/// A non-converged run returns the current estimate with `converged = false`.
pub fn spectral_norm_sq(m: &DenseMatrix, tol: f64, max_iter: usize) -> Result<SpectralEstimate> {
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument("tolerance must be positive".into()));
    }
    if m.is_zero() {
        return Err(Error::InvalidArgument("matrix is zero".into()));
    }
    let n = m.cols();
    let mut v = start_vector(n);
    let mut lambda = 0.0;
    for it in 1..=max_iter {
        let w = m.t_mul_vec(&m.mul_vec(&v));
        let nw = sqrt(dot(&w, &w));
        if nw == 0.0 {
            // Start vector in the null space; restart from a coordinate axis.
            v = vec![0.0; n];
            v[it % n] = 1.0;
            continue;
        }
        let next = dot(&v, &w);
        v = w.into_iter().map(|x| x / nw).collect();
        if it > 1 && (next - lambda).abs() <= tol * next {
            return Ok(SpectralEstimate {
                value: next,
                converged: true,
                iterations: it,
            });
        }
        lambda = next;
    }
    Ok(SpectralEstimate {
        value: lambda,
        converged: false,
        iterations: max_iter,
    })
}

/// Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.
/// Eigenvalues are returned in ascending order with matching eigenvector
/// columns.
pub fn symmetric_eigen(a: &DenseMatrix) -> (Vec<f64>, DenseMatrix) {
    let n = a.rows();
    let mut m = a.clone();
    let mut v = DenseMatrix::identity(n);
    for _sweep in 0..100 {
        let mut off = 0.0;
        for i in 0..n {
            for j in i + 1..n {
                off += m[(i, j)] * m[(i, j)];
            }
        }
        let scale = m.frobenius_sq().max(f64::MIN_POSITIVE);
        if off <= 1e-30 * scale {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (m[(q, q)] - m[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + hypot(theta, 1.0));
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / hypot(t, 1.0);
                let s = t * c;
                for k in 0..n {
                    let mkp = m[(k, p)];
                    let mkq = m[(k, q)];
                    m[(k, p)] = c * mkp - s * mkq;
                    m[(k, q)] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[(p, k)];
                    let mqk = m[(q, k)];
                    m[(p, k)] = c * mpk - s * mqk;
                    m[(q, k)] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(i, i)].total_cmp(&m[(j, j)]));
    let values = order.iter().map(|&i| m[(i, i)]).collect();
    let vectors = v.select_columns(&order);
    (values, vectors)
}

/// Thin singular value decomposition `a = u·diag(s)·vᵀ`, singular values in
/// descending order.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: DenseMatrix,
    pub s: Vec<f64>,
    pub v: DenseMatrix,
}

/// One-sided Jacobi SVD. Accurate to working precision for the small and
/// tall matrices used here.
pub fn svd(a: &DenseMatrix) -> Svd {
    if a.rows() < a.cols() {
        let t = svd(&a.transpose());
        return Svd {
            u: t.v,
            s: t.s,
            v: t.u,
        };
    }
    let (m, n) = a.shape();
    // Work on columns: store transposed so each column is contiguous.
    let mut w = a.transpose();
    let mut v = DenseMatrix::identity(n);
    for _sweep in 0..80 {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let (alpha, beta, gamma) = {
                    let cp = w.row(p);
                    let cq = w.row(q);
                    (dot(cp, cp), dot(cq, cq), dot(cp, cq))
                };
                if gamma.abs() <= 1e-15 * sqrt(alpha * beta) || gamma == 0.0 {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + hypot(zeta, 1.0));
                let t = if zeta == 0.0 { 1.0 } else { t };
                let c = 1.0 / hypot(t, 1.0);
                let s = c * t;
                for k in 0..m {
                    let xp = w[(p, k)];
                    let xq = w[(q, k)];
                    w[(p, k)] = c * xp - s * xq;
                    w[(q, k)] = s * xp + c * xq;
                }
                for k in 0..n {
                    let vp = v[(k, p)];
                    let vq = v[(k, q)];
                    v[(k, p)] = c * vp - s * vq;
                    v[(k, q)] = s * vp + c * vq;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let norms: Vec<f64> = (0..n).map(|j| sqrt(dot(w.row(j), w.row(j)))).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]));
    let s: Vec<f64> = order.iter().map(|&j| norms[j]).collect();
    let mut u = DenseMatrix::zeros(m, n);
    for (out, &j) in order.iter().enumerate() {
        if norms[j] > 0.0 {
            for k in 0..m {
                u[(k, out)] = w[(j, k)] / norms[j];
            }
        }
    }
    Svd {
        u,
        s,
        v: v.select_columns(&order),
    }
}

pub fn singular_values(a: &DenseMatrix) -> Vec<f64> {
    svd(a).s
}

/// Solves the SPD system `g x = rhs` by Cholesky.
///
/// A ridge of `max(ridge, RIDGE_SCALE·trace/size)` is added when the matrix
/// is not numerically positive definite or its condition number exceeds
/// [`RIDGE_CONDITION_LIMIT`], unless `allow_fallback` is false, in which case
/// a failed factorization is reported as [`Error::Singular`].
pub fn solve_spd(g: &DenseMatrix, rhs: &[f64], ridge: f64, allow_fallback: bool) -> Result<Vec<f64>> {
    let n = g.rows();
    if n == 0 {
        return Ok(Vec::new());
    }
    let fallback_ridge = ridge.max(RIDGE_SCALE * g.trace().abs() / n as f64);
    let chol = match Cholesky::factor_shifted(g, ridge) {
        Some(c) if !allow_fallback || !ill_conditioned(g, ridge, &c) => Some(c),
        Some(_) | None if allow_fallback => None,
        _ => return Err(Error::Singular),
    };
    let chol = match chol {
        Some(c) => c,
        None => {
            let mut shift = fallback_ridge.max(f64::MIN_POSITIVE);
            loop {
                if let Some(c) = Cholesky::factor_shifted(g, shift) {
                    break c;
                }
                shift *= 10.0;
                if !shift.is_finite() {
                    return Err(Error::Singular);
                }
            }
        }
    };
    Ok(chol.solve(rhs))
}

fn ill_conditioned(g: &DenseMatrix, shift: f64, chol: &Cholesky) -> bool {
    let n = g.rows();
    if n == 1 {
        return false;
    }
    let lmax = psd_largest_eigenvalue(g, 1e-3, 50).value + shift;
    // Inverse iteration for the smallest eigenvalue (overestimates slightly).
    let mut x = start_vector(n);
    let mut inv_norm = 0.0;
    for _ in 0..8 {
        let y = chol.solve(&x);
        inv_norm = sqrt(dot(&y, &y));
        if !(inv_norm > 0.0) || !inv_norm.is_finite() {
            return true;
        }
        x = y.into_iter().map(|v| v / inv_norm).collect();
    }
    let lmin = 1.0 / inv_norm;
    lmax > RIDGE_CONDITION_LIMIT * lmin
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jacobi_eigen_diagonalizes() {
        let a = DenseMatrix::from_rows(&[[4.0, 1.0, 0.5], [1.0, 3.0, 0.2], [0.5, 0.2, 1.0]]);
        let (vals, vecs) = symmetric_eigen(&a);
        let recon = vecs.matmul(&DenseMatrix::diag(&vals)).matmul_t(&vecs);
        assert!(recon.sub(&a).max_abs() < 1e-12);
        assert!(vals.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn svd_reconstructs_wide_and_tall() {
        let a = DenseMatrix::from_rows(&[[1.0, 2.0, 0.0, -1.0], [0.5, -1.0, 3.0, 2.0]]);
        for m in [a.clone(), a.transpose()] {
            let d = svd(&m);
            let recon = d.u.matmul(&DenseMatrix::diag(&d.s)).matmul_t(&d.v);
            assert!(recon.sub(&m).max_abs() < 1e-12);
            assert!(d.u.gram().sub(&DenseMatrix::identity(2)).max_abs() < 1e-12);
        }
    }

    #[test]
    fn spectral_norm_examples() {
        let i3 = DenseMatrix::identity(3);
        assert!((spectral_norm_sq(&i3, 1e-12, 100).unwrap().value - 1.0).abs() < 1e-12);
        let d = DenseMatrix::diag(&[3.0, 1.0]);
        assert!((spectral_norm_sq(&d, 1e-12, 500).unwrap().value - 9.0).abs() < 1e-9);
        assert!(spectral_norm_sq(&DenseMatrix::zeros(2, 2), 1e-6, 10).is_err());
    }

    #[test]
    fn spd_solver_falls_back_on_singular_systems() {
        let g = DenseMatrix::from_rows(&[[1.0, 1.0], [1.0, 1.0]]);
        let x = solve_spd(&g, &[1.0, 1.0], 0.0, true).unwrap();
        assert!(x.iter().all(|v| v.is_finite()));
        assert_eq!(solve_spd(&g, &[1.0, 1.0], 0.0, false), Err(Error::Singular));
        let ok = DenseMatrix::from_rows(&[[2.0, 0.0], [0.0, 4.0]]);
        let x = solve_spd(&ok, &[2.0, 4.0], 0.0, false).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-15 && (x[1] - 1.0).abs() < 1e-15);
    }
}
