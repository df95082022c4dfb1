//! Normal-equation view of a mixed sparse coding instance and the
//! fixed-support least-squares solver built on it.
//!
//! Only `U = DᵀD`, `V = BᵀB`, `W = DᵀYB` and `‖Y‖²` are needed: the block
//! `(i, j)` of the normal matrix restricted to a support `S` is
//! `V[i,j]·U[S_i, S_j]` and the right-hand side block `i` is `W[S_i, i]`.

use alloc::borrow::Cow;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::decomp::{psd_largest_eigenvalue, solve_spd, Cholesky};
use super::dictionary::{DictGram, Dictionary};
use super::matrix::DenseMatrix;
use super::mixing::MixingOperator;
use super::support::{SparseCodes, Support};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LsOptions {
    /// Ridge added to the normal matrix.
    pub ridge: f64,
    /// Add a ridge automatically on singular or badly conditioned systems.
    pub allow_fallback: bool,
}

impl Default for LsOptions {
    fn default() -> Self {
        Self {
            ridge: 0.0,
            allow_fallback: true,
        }
    }
}

impl LsOptions {
    pub fn with_ridge(ridge: f64) -> Self {
        Self {
            ridge,
            allow_fallback: true,
        }
    }
}

/// Quadratic data of `‖Y − D·X·Bᵀ‖_F²` as a function of `X`.
#[derive(Debug, Clone)]
pub struct MscGram<'a> {
    dict: Cow<'a, DictGram<'a>>,
    btb: DenseMatrix,
    dtyb: DenseMatrix,
    y_norm_sq: f64,
}

impl<'a> MscGram<'a> {
    pub fn new(y: &DenseMatrix, dict: &'a DenseMatrix, mixing: &MixingOperator) -> Result<Self> {
        if y.rows() != dict.rows() || y.cols() != mixing.n_rows() {
            return Err(Error::Shape(format!(
                "Y is {:?}, D has {} rows, B has {} rows",
                y.shape(),
                dict.rows(),
                mixing.n_rows()
            )));
        }
        let dtyb = dict.t_matmul(&mixing.project(y));
        Ok(Self {
            dict: Cow::Owned(DictGram::new(dict)),
            btb: mixing.gram(),
            dtyb,
            y_norm_sq: y.frobenius_sq(),
        })
    }

    /// Assembles from precomputed pieces; `dtyb` is `DᵀY·B` (d×r).
    pub fn from_parts(
        dict: &'a DictGram<'a>,
        btb: DenseMatrix,
        dtyb: DenseMatrix,
        y_norm_sq: f64,
    ) -> Self {
        debug_assert_eq!(dtyb.rows(), dict.n_atoms());
        debug_assert_eq!(dtyb.cols(), btb.rows());
        Self {
            dict: Cow::Borrowed(dict),
            btb,
            dtyb,
            y_norm_sq,
        }
    }

    pub fn dict_gram(&self) -> &DictGram<'a> {
        &self.dict
    }

    pub fn btb(&self) -> &DenseMatrix {
        &self.btb
    }

    /// `DᵀYB`.
    pub fn dtyb(&self) -> &DenseMatrix {
        &self.dtyb
    }

    pub fn y_norm_sq(&self) -> f64 {
        self.y_norm_sq
    }

    pub fn n_atoms(&self) -> usize {
        self.dtyb.rows()
    }

    pub fn rank(&self) -> usize {
        self.dtyb.cols()
    }

    /// `U·X·V`.
    pub fn normal(&self, x: &DenseMatrix) -> DenseMatrix {
        self.dict.apply(x).matmul(&self.btb)
    }

    /// Half the gradient of the residual, `U·X·V − W`.
    pub fn gradient(&self, x: &DenseMatrix) -> DenseMatrix {
        self.normal(x).sub(&self.dtyb)
    }

    /// `‖Y − D·X·Bᵀ‖_F²` from the quadratic form, clamped at zero.
    pub fn residual(&self, x: &DenseMatrix) -> f64 {
        self.residual_with_normal(x, &self.normal(x))
    }

    /// Same as [`Self::residual`] when `U·X·V` is already available.
    pub fn residual_with_normal(&self, x: &DenseMatrix, uxv: &DenseMatrix) -> f64 {
        (self.y_norm_sq - 2.0 * self.dtyb.inner(x) + x.inner(uxv)).max(0.0)
    }

    /// `σ(D)²·σ(B)²`, the Lipschitz constant of the gradient.
    pub fn lipschitz(&self) -> f64 {
        self.dict.spectral_norm_sq() * psd_largest_eigenvalue(&self.btb, 1e-6, 500).value
    }

    fn support_index(&self, support: &Support) -> Result<Vec<(usize, usize)>> {
        if support.n_columns() != self.rank() {
            return Err(Error::Shape(format!(
                "support has {} columns, rank is {}",
                support.n_columns(),
                self.rank()
            )));
        }
        let d = self.n_atoms();
        let mut idx = Vec::with_capacity(support.total());
        for i in 0..support.n_columns() {
            for &a in support.column(i) {
                if a >= d {
                    return Err(Error::InvalidArgument(format!("atom {a} out of range {d}")));
                }
                idx.push((i, a));
            }
        }
        Ok(idx)
    }

    fn normal_system(&self, idx: &[(usize, usize)]) -> (DenseMatrix, Vec<f64>) {
        let s = idx.len();
        let mut g = DenseMatrix::zeros(s, s);
        for p in 0..s {
            let (i, a) = idx[p];
            for q in p..s {
                let (j, b) = idx[q];
                let v = self.btb[(i, j)] * self.dict.entry(a, b);
                g[(p, q)] = v;
                g[(q, p)] = v;
            }
        }
        let h = idx.iter().map(|&(i, a)| self.dtyb[(a, i)]).collect();
        (g, h)
    }

    fn scatter(&self, idx: &[(usize, usize)], z: &[f64]) -> DenseMatrix {
        let mut x = DenseMatrix::zeros(self.n_atoms(), self.rank());
        for (&(i, a), v) in idx.iter().zip(z) {
            x[(a, i)] = *v;
        }
        x
    }

    /// Minimizer of the residual over codes supported on `support`.
    pub fn solve_support(&self, support: &Support, opts: LsOptions) -> Result<DenseMatrix> {
        let idx = self.support_index(support)?;
        if idx.is_empty() {
            return Ok(DenseMatrix::zeros(self.n_atoms(), self.rank()));
        }
        let (g, h) = self.normal_system(&idx);
        let z = solve_spd(&g, &h, opts.ridge, opts.allow_fallback)?;
        Ok(self.scatter(&idx, &z))
    }

    /// Nonnegative least squares on `support` with a ridge, by the
    /// Lawson-Hanson active-set method on the normal equations.
    pub fn solve_support_nonneg(&self, support: &Support, ridge: f64) -> Result<DenseMatrix> {
        let idx = self.support_index(support)?;
        if idx.is_empty() {
            return Ok(DenseMatrix::zeros(self.n_atoms(), self.rank()));
        }
        let (mut g, h) = self.normal_system(&idx);
        for p in 0..idx.len() {
            g[(p, p)] += ridge;
        }
        let z = nnls_gram(&g, &h)?;
        Ok(self.scatter(&idx, &z))
    }

    /// Least-squares update of column `p` alone on the atoms `atoms`, given
    /// the correlations `dtv = Dᵀv` of its deflated target.
    pub fn solve_single_column(&self, dtv: &[f64], atoms: &[usize], opts: LsOptions) -> Result<Vec<f64>> {
        let mut col = vec![0.0; self.n_atoms()];
        if atoms.is_empty() {
            return Ok(col);
        }
        let g = self.dict.block(atoms, atoms);
        let h: Vec<f64> = atoms.iter().map(|&a| dtv[a]).collect();
        let z = solve_spd(&g, &h, opts.ridge, opts.allow_fallback)?;
        for (&a, v) in atoms.iter().zip(z) {
            col[a] = v;
        }
        Ok(col)
    }
}

/// `min ½zᵀGz − hᵀz` subject to `z ≥ 0`, with `G` symmetric positive
/// definite.
pub fn nnls_gram(g: &DenseMatrix, h: &[f64]) -> Result<Vec<f64>> {
    let n = h.len();
    let scale = h.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
    let tol = 1e-12 * scale;
    let mut z = vec![0.0; n];
    let mut passive = vec![false; n];
    let solve_passive = |passive: &[bool]| -> Result<Vec<f64>> {
        let p: Vec<usize> = (0..n).filter(|&i| passive[i]).collect();
        let gp = g.select(&p, &p);
        let hp: Vec<f64> = p.iter().map(|&i| h[i]).collect();
        let sp = match Cholesky::factor(&gp) {
            Some(c) => c.solve(&hp),
            None => solve_spd(&gp, &hp, 0.0, true)?,
        };
        let mut s = vec![0.0; n];
        for (&i, v) in p.iter().zip(sp) {
            s[i] = v;
        }
        Ok(s)
    };
    for _outer in 0..3 * n + 10 {
        let gz = g.mul_vec(&z);
        let w: Vec<f64> = h.iter().zip(&gz).map(|(a, b)| a - b).collect();
        let candidate = (0..n)
            .filter(|&i| !passive[i] && w[i] > tol)
            .max_by(|&a, &b| w[a].total_cmp(&w[b]).then(b.cmp(&a)));
        let Some(j) = candidate else { break };
        passive[j] = true;
        for _inner in 0..3 * n + 10 {
            let s = solve_passive(&passive)?;
            if (0..n).all(|i| !passive[i] || s[i] > 0.0) {
                z = s;
                break;
            }
            let mut alpha = f64::INFINITY;
            for i in 0..n {
                if passive[i] && s[i] <= 0.0 {
                    let denom = z[i] - s[i];
                    if denom > 0.0 {
                        alpha = alpha.min(z[i] / denom);
                    } else {
                        alpha = alpha.min(0.0);
                    }
                }
            }
            let alpha = if alpha.is_finite() { alpha } else { 0.0 };
            for i in 0..n {
                z[i] += alpha * (s[i] - z[i]);
            }
            let zscale = z.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            for i in 0..n {
                if passive[i] && z[i] <= 1e-14 * zscale {
                    passive[i] = false;
                    z[i] = 0.0;
                }
            }
        }
    }
    Ok(z)
}

/// Minimizer of `‖Y − D·X·Bᵀ‖_F²` over `X` with `Supp(X) ⊆ support`.
///
/// The Kronecker system is never formed. An empty support gives zero codes.
pub fn fixed_support_ls(
    y: &DenseMatrix,
    dict: &Dictionary,
    mixing: &MixingOperator,
    support: &Support,
    opts: LsOptions,
) -> Result<SparseCodes> {
    let gram = MscGram::new(y, dict.matrix(), mixing)?;
    gram.solve_support(support, opts).map(SparseCodes::from_values)
}
