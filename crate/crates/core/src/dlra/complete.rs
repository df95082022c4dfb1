use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::{
    ao_dlra, init_by_lra, random_init, DlraData, DlraModel, DlraReport, ModeConstraint, ModelKind, TunerConfig,
};
use crate::error::{Error, Result};
use crate::linalg::{DenseMatrix, Dictionary};

/// Starting point of a DLRA run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DlraInit {
    /// Low-rank approximation followed by columnwise OMP.
    Lra { seed: u64 },
    Random { seed: u64 },
}

/// Model parameters of [`complete_missing_rows`].
#[derive(Debug, Clone, PartialEq)]
pub struct CompletionParams {
    pub kind: ModelKind,
    pub rank: usize,
    pub k: usize,
    pub tuner: TunerConfig,
    pub l_max: usize,
    pub init: DlraInit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompletionResult {
    /// Reconstructed missing rows, in the order of the requested indices.
    pub missing_rows: DenseMatrix,
    /// `‖Y_Ī − D_Ī·X·Bᵀ‖²` on the observed rows.
    pub observed_residual: f64,
    pub report: DlraReport,
    /// Fewer than `2k` rows were observed.
    pub few_observed_rows: bool,
}

/// Fits a dictionary-based matrix factorization on the observed rows and
/// predicts the rows listed in `missing`.
///
/// `y_obs` holds the observed rows in increasing row order; `dict` is the
/// full dictionary over all rows.
pub fn complete_missing_rows(
    y_obs: &DenseMatrix,
    dict: &Dictionary,
    missing: &[usize],
    params: &CompletionParams,
) -> Result<CompletionResult> {
    if params.kind.is_cpd() {
        return Err(Error::InvalidArgument("completion needs a matrix model".into()));
    }
    let n = dict.n_rows();
    let mut is_missing = vec![false; n];
    for &i in missing {
        if i >= n {
            return Err(Error::InvalidArgument(format!("missing row {i} out of range {n}")));
        }
        if is_missing[i] {
            return Err(Error::InvalidArgument(format!("missing row {i} listed twice")));
        }
        is_missing[i] = true;
    }
    let observed: Vec<usize> = (0..n).filter(|&i| !is_missing[i]).collect();
    if observed.is_empty() {
        return Err(Error::InvalidArgument("no observed rows".into()));
    }
    if y_obs.rows() != observed.len() {
        return Err(Error::Shape(format!(
            "{} observed rows given, {} expected",
            y_obs.rows(),
            observed.len()
        )));
    }
    let (restricted, norms) = dict.restrict_rows(&observed)?;
    let cons = ModeConstraint::new(restricted, params.k, params.kind.is_nonneg())?;
    let model = DlraModel::new(params.kind, cons, None)?;
    let data = DlraData::Matrix(y_obs.clone());
    let init = match params.init {
        DlraInit::Lra { seed } => init_by_lra(&data, &model, params.rank, seed)?,
        DlraInit::Random { seed } => random_init(&data, &model, params.rank, seed)?,
    };
    let report = ao_dlra(&data, &model, &params.tuner, params.l_max, &init)?;
    // Codes of the renormalized restricted dictionary map back through the
    // restricted column norms.
    let x = &report.best.x;
    let scaled = DenseMatrix::from_fn(x.rows(), x.cols(), |a, i| x[(a, i)] / norms[a]);
    let d_missing = dict.matrix().select_rows(missing);
    let missing_rows = d_missing.matmul(&scaled).matmul_t(&report.best.b);
    Ok(CompletionResult {
        missing_rows,
        observed_residual: report.best_cost,
        few_observed_rows: observed.len() < 2 * params.k,
        report,
    })
}
