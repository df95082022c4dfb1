use alloc::vec::Vec;

use super::{DlraData, DlraFactors, DlraModel};
use crate::error::{Error, Result};
use crate::linalg::{svd, DenseMatrix, Dictionary};
use crate::msc::omp;
use crate::synth::{derive_seed, gaussian_matrix, gen_codes, rng_from_seed, uniform_matrix};
use crate::tensor::{cpd_als, hals_columns};

/// Sweeps of the unconstrained low-rank baselines.
pub const LRA_SWEEPS: usize = 200;

fn check_rank(r: usize) -> Result<()> {
    if r == 0 {
        Err(Error::InvalidArgument("rank must be positive".into()))
    } else {
        Ok(())
    }
}

/// Random feasible factors: `k`-sparse codes (Gaussian, or Uniform[0,1]
/// for nonnegative models) and Gaussian or Uniform[0,1] free factors.
pub fn random_init(data: &DlraData, model: &DlraModel, r: usize, seed: u64) -> Result<DlraFactors> {
    check_rank(r)?;
    let nonneg = model.kind.is_nonneg();
    let draw = |rows: usize, s: u64| {
        let mut rng = rng_from_seed(s);
        if nonneg {
            uniform_matrix(rows, r, &mut rng)
        } else {
            gaussian_matrix(rows, r, &mut rng)
        }
    };
    let m0 = &model.mode0;
    let x = gen_codes(m0.dict.n_atoms(), r, m0.k, derive_seed(seed, 10), m0.nonneg)?.into_values();
    Ok(match data {
        DlraData::Matrix(y) => DlraFactors {
            x,
            b: draw(y.cols(), derive_seed(seed, 11)),
            c: None,
            x2: None,
        },
        DlraData::Tensor(t) => {
            let (_, m1, m2) = t.dims();
            let c = Some(draw(m2, derive_seed(seed, 12)));
            match &model.mode1 {
                Some(m) => {
                    let x2 = gen_codes(m.dict.n_atoms(), r, m.k, derive_seed(seed, 13), m.nonneg)?.into_values();
                    DlraFactors {
                        x,
                        b: m.dict.matrix().matmul(&x2),
                        c,
                        x2: Some(x2),
                    }
                }
                None => DlraFactors {
                    x,
                    b: draw(m1, derive_seed(seed, 11)),
                    c,
                    x2: None,
                },
            }
        }
    })
}

/// Unconstrained rank-`r` approximation used as a starting point: truncated
/// SVD for matrices, HALS for nonnegative matrices, ALS or HALS CPD for
/// tensors. Returns `(A, B, C)`.
pub fn lra_baseline(
    data: &DlraData,
    model: &DlraModel,
    r: usize,
    seed: u64,
) -> Result<(DenseMatrix, DenseMatrix, Option<DenseMatrix>)> {
    check_rank(r)?;
    let nonneg = model.kind.is_nonneg();
    match data {
        DlraData::Matrix(y) if !nonneg => {
            if r > y.rows().min(y.cols()) {
                return Err(Error::InvalidArgument("rank exceeds the data dimensions".into()));
            }
            let f = svd(y);
            let idx: Vec<usize> = (0..r).collect();
            let a = DenseMatrix::from_fn(y.rows(), r, |i, j| f.u[(i, j)] * f.s[j]);
            Ok((a, f.v.select_columns(&idx), None))
        }
        DlraData::Matrix(y) => {
            let mut rng = rng_from_seed(seed);
            let mut a = uniform_matrix(y.rows(), r, &mut rng);
            let mut b = uniform_matrix(y.cols(), r, &mut rng);
            for _ in 0..LRA_SWEEPS {
                hals_columns(&mut a, &y.matmul(&b), &b.gram());
                hals_columns(&mut b, &y.t_matmul(&a), &a.gram());
            }
            Ok((a, b, None))
        }
        DlraData::Tensor(t) => {
            let f = cpd_als(t, r, LRA_SWEEPS, nonneg, seed)?;
            Ok((f.a, f.b, Some(f.c)))
        }
    }
}

/// Columnwise OMP codes of `a` in `dict`, clipped at zero when `nonneg`.
fn sparse_code_columns(a: &DenseMatrix, dict: &Dictionary, k: usize, nonneg: bool) -> Result<DenseMatrix> {
    let mut x = DenseMatrix::zeros(dict.n_atoms(), a.cols());
    for i in 0..a.cols() {
        let mut col = omp(&a.column(i), dict, k)?.coefficients;
        if nonneg {
            col.iter_mut().for_each(|v| *v = v.max(0.0));
        }
        x.set_column(i, &col);
    }
    Ok(x)
}

/// Low-rank approximation followed by columnwise OMP of the constrained
/// factors.
pub fn init_by_lra(data: &DlraData, model: &DlraModel, r: usize, seed: u64) -> Result<DlraFactors> {
    let (a, b, c) = lra_baseline(data, model, r, seed)?;
    let m0 = &model.mode0;
    let x = sparse_code_columns(&a, &m0.dict, m0.k, m0.nonneg)?;
    let (b, x2) = match &model.mode1 {
        Some(m) => {
            let x2 = sparse_code_columns(&b, &m.dict, m.k, m.nonneg)?;
            (m.dict.matrix().matmul(&x2), Some(x2))
        }
        None => (b, None),
    };
    Ok(DlraFactors { x, b, c, x2 })
}
