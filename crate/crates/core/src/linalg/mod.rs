//! Dense matrix primitives and the structured least-squares kernel.
//!
//! Vectorization is row-first throughout: a tensor entry `(i, j, k)` of an
//! `n×m1×m2` array sits at column `j·m2 + k` of its mode-1 unfolding, which
//! is also the row of `B_l ⊗ C_l` in [`khatri_rao`].

mod decomp;
mod dictionary;
mod lsq;
mod matrix;
mod mixing;
mod support;

pub use decomp::{
    psd_largest_eigenvalue, singular_values, solve_spd, spectral_norm_sq, svd, symmetric_eigen,
    Cholesky, SpectralEstimate, Svd, RIDGE_CONDITION_LIMIT, RIDGE_SCALE,
};
pub use dictionary::{normalize_columns, DictGram, Dictionary, GRAM_CACHE_LIMIT};
pub use lsq::{fixed_support_ls, nnls_gram, LsOptions, MscGram};
pub use matrix::{dot, norm2, DenseMatrix};
pub use mixing::{khatri_rao, model_residual, residual_cost, MixingOperator, RANK_TOLERANCE};
pub use support::{SparseCodes, Support, SUPPORT_THRESHOLD};
