use super::fista::{accelerated, step_size};
use super::{check_init, check_k, FistaRun, SolverReport, Stopwatch, StoppingRule};
use crate::error::Result;
use crate::linalg::{DenseMatrix, Dictionary, LsOptions, MixingOperator, MscGram, SparseCodes, Support};
use crate::prox::{hard_threshold_columns, nonneg_hard_threshold_columns};

/// Accelerated iterative hard thresholding in Gram form, tracing the raw
/// residual. With `nonneg` each step keeps the `k` largest positive entries.
pub fn iht_gram(
    gram: &MscGram<'_>,
    k: usize,
    x0: &DenseMatrix,
    stop: StoppingRule,
    nonneg: bool,
    eta: f64,
) -> Result<FistaRun> {
    check_k(k, gram.n_atoms())?;
    check_init(x0, gram.n_atoms(), gram.rank())?;
    Ok(if nonneg {
        accelerated(gram, x0, eta, stop, |v| nonneg_hard_threshold_columns(v, k), |_, res| res)
    } else {
        accelerated(gram, x0, eta, stop, |v| hard_threshold_columns(v, k), |_, res| res)
    })
}

/// Accelerated IHT followed by a least-squares refit on the last support.
pub fn iht(
    y: &DenseMatrix,
    dict: &Dictionary,
    mixing: &MixingOperator,
    k: usize,
    x0: &DenseMatrix,
    stop: StoppingRule,
) -> Result<SolverReport> {
    let clock = Stopwatch::start();
    let gram = MscGram::new(y, dict.matrix(), mixing)?;
    let eta = step_size(&gram)?;
    let run = iht_gram(&gram, k, x0, stop, false, eta)?;
    let support = Support::from_values(&run.x);
    let codes = gram.solve_support(&support, LsOptions::default())?;
    Ok(SolverReport {
        codes: SparseCodes::from_values(codes),
        iterate: run.x,
        cost_trace: run.cost_trace,
        iterations: run.iterations,
        termination: run.termination,
        wall_time: clock.seconds(),
    })
}
