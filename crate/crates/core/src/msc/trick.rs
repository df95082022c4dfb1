use alloc::vec;

use super::{check_k, omp_gram, SolverReport, Stopwatch, Termination};
use crate::error::{Error, Result};
use crate::linalg::{Cholesky, DenseMatrix, Dictionary, LsOptions, MixingOperator, MscGram, SparseCodes, Support};

/// Reduces to `r` independent problems through `Z = Y·B·(BᵀB)⁻¹`, runs OMP
/// on each column of `Z`, then refits all columns jointly on the union of
/// the selected supports.
pub fn trick_omp(
    y: &DenseMatrix,
    dict: &Dictionary,
    mixing: &MixingOperator,
    k: usize,
) -> Result<SolverReport> {
    let clock = Stopwatch::start();
    check_k(k, dict.n_atoms())?;
    mixing.check_full_rank()?;
    let gram = MscGram::new(y, dict.matrix(), mixing)?;
    let chol = Cholesky::factor(gram.btb()).ok_or(Error::RankDeficient(0.0))?;
    // Dᵀ·Z = W·V⁻¹, computed as (V⁻¹·Wᵀ)ᵀ.
    let dtz = chol.solve_matrix(&gram.dtyb().transpose()).transpose();
    let r = mixing.rank();
    let mut iterate = DenseMatrix::zeros(dict.n_atoms(), r);
    let mut support = vec![];
    for i in 0..r {
        let res = omp_gram(&dtz.column(i), gram.dict_gram(), k)?;
        iterate.set_column(i, &res.coefficients);
        support.push(res.support);
    }
    let support = Support::new(support);
    let x = gram.solve_support(&support, LsOptions::default())?;
    let final_cost = gram.residual(&x);
    Ok(SolverReport {
        codes: SparseCodes::from_values(x),
        iterate,
        cost_trace: vec![gram.y_norm_sq(), final_cost],
        iterations: k,
        termination: Termination::Tolerance,
        wall_time: clock.seconds(),
    })
}
