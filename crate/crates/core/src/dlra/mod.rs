//! Dictionary-based low-rank approximation: `Y ≈ D·X·Bᵀ` for matrices and
//! `T ≈ [[D·X, B, C]]` for order-3 tensors, with columnwise `k`-sparse
//! codes `X`, optionally nonnegative, and optionally a second dictionary
//! constraint `B = D₂·X₂` on the tensor's second mode.
//!
//! Codes always refer to the column-normalized dictionary.

mod ao;
mod complete;
mod init;
mod ipalm;

use alloc::format;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

pub use ao::{ao_dlra, ao_dlra_with, TunerConfig};
pub use complete::{complete_missing_rows, CompletionParams, CompletionResult, DlraInit};
pub use init::{init_by_lra, lra_baseline, random_init, LRA_SWEEPS};
pub use ipalm::{ipalm, IPALM_REL_TOL};

use crate::error::{Error, Result};
use crate::linalg::{model_residual, DenseMatrix, Dictionary, MixingOperator};
use crate::tensor::Tensor3;

/// Which low-rank model the dictionary constraint is applied to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModelKind {
    MatrixFactorization,
    NonnegMatrixFactorization,
    Cpd,
    NonnegCpd,
}

impl ModelKind {
    pub fn is_nonneg(&self) -> bool {
        matches!(self, Self::NonnegMatrixFactorization | Self::NonnegCpd)
    }

    pub fn is_cpd(&self) -> bool {
        matches!(self, Self::Cpd | Self::NonnegCpd)
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::MatrixFactorization => "dmf",
            Self::NonnegMatrixFactorization => "dnmf",
            Self::Cpd => "dcpd",
            Self::NonnegCpd => "nndcpd",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dmf" => Ok(Self::MatrixFactorization),
            "dnmf" => Ok(Self::NonnegMatrixFactorization),
            "dcpd" => Ok(Self::Cpd),
            "nndcpd" => Ok(Self::NonnegCpd),
            _ => Err(Error::InvalidArgument(format!("unknown model '{s}'"))),
        }
    }
}

/// Dictionary constraint on one mode.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeConstraint {
    pub dict: Dictionary,
    pub k: usize,
    pub nonneg: bool,
}

impl ModeConstraint {
    pub fn new(dict: Dictionary, k: usize, nonneg: bool) -> Result<Self> {
        if k == 0 || k > dict.n_atoms() {
            return Err(Error::InvalidArgument(format!(
                "sparsity {k} outside [1, {}]",
                dict.n_atoms()
            )));
        }
        Ok(Self { dict, k, nonneg })
    }
}

/// A DLRA model. Mode 0 is always dictionary-constrained; mode 1 may be
/// for tensor kinds. Nonnegative kinds force nonnegative codes.
#[derive(Debug, Clone, PartialEq)]
pub struct DlraModel {
    pub kind: ModelKind,
    pub mode0: ModeConstraint,
    pub mode1: Option<ModeConstraint>,
}

impl DlraModel {
    pub fn new(kind: ModelKind, mut mode0: ModeConstraint, mut mode1: Option<ModeConstraint>) -> Result<Self> {
        if mode1.is_some() && !kind.is_cpd() {
            return Err(Error::InvalidArgument(
                "a second dictionary needs a tensor model".into(),
            ));
        }
        if kind.is_nonneg() {
            mode0.nonneg = true;
            if let Some(m) = mode1.as_mut() {
                m.nonneg = true;
            }
        }
        Ok(Self { kind, mode0, mode1 })
    }

    pub fn constrained_modes(&self) -> usize {
        1 + usize::from(self.mode1.is_some())
    }
}

/// Input data of a DLRA model.
#[derive(Debug, Clone, PartialEq)]
pub enum DlraData {
    Matrix(DenseMatrix),
    Tensor(Tensor3),
}

impl DlraData {
    pub fn n_rows(&self) -> usize {
        match self {
            Self::Matrix(m) => m.rows(),
            Self::Tensor(t) => t.dims().0,
        }
    }

    pub fn frobenius_sq(&self) -> f64 {
        match self {
            Self::Matrix(m) => m.frobenius_sq(),
            Self::Tensor(t) => t.frobenius_sq(),
        }
    }

    /// Mode-`mode` unfolding (the matrix itself for mode 0 of a matrix).
    pub fn unfold(&self, mode: usize) -> DenseMatrix {
        match self {
            Self::Matrix(m) if mode == 0 => m.clone(),
            Self::Matrix(m) => m.transpose(),
            Self::Tensor(t) => t.unfold(mode),
        }
    }
}

/// Factors of a DLRA model: `A = D·x`, `b`, and `c` for tensors. With a
/// second-mode dictionary, `b = D₂·x2`.
#[derive(Debug, Clone, PartialEq)]
pub struct DlraFactors {
    pub x: DenseMatrix,
    pub b: DenseMatrix,
    pub c: Option<DenseMatrix>,
    pub x2: Option<DenseMatrix>,
}

impl DlraFactors {
    pub fn rank(&self) -> usize {
        self.x.cols()
    }

    /// `A = D·X`.
    pub fn a(&self, model: &DlraModel) -> DenseMatrix {
        model.mode0.dict.matrix().matmul(&self.x)
    }

    /// Mixing operator seen by the mode-0 codes.
    pub fn mixing(&self) -> Result<MixingOperator> {
        match &self.c {
            None => Ok(MixingOperator::Dense(self.b.clone())),
            Some(c) => MixingOperator::khatri_rao(self.b.clone(), c.clone()),
        }
    }
}

/// Checks that `f` is conformable with `data` and `model`.
pub fn check_factors(data: &DlraData, model: &DlraModel, f: &DlraFactors) -> Result<()> {
    let r = f.rank();
    let d = model.mode0.dict.n_atoms();
    let bad = |what: &str| Err(Error::Shape(format!("initial factors: {what}")));
    if f.x.rows() != d || r == 0 {
        return bad("codes do not match the dictionary");
    }
    if model.mode0.dict.n_rows() != data.n_rows() {
        return bad("dictionary rows differ from data rows");
    }
    match (data, model.kind.is_cpd()) {
        (DlraData::Matrix(y), false) => {
            if f.b.shape() != (y.cols(), r) || f.c.is_some() || f.x2.is_some() {
                return bad("B must be m×r with no third factor");
            }
        }
        (DlraData::Tensor(t), true) => {
            let (_, m1, m2) = t.dims();
            let Some(c) = &f.c else { return bad("tensor models need C") };
            if f.b.shape() != (m1, r) || c.shape() != (m2, r) {
                return bad("B and C do not match the tensor");
            }
            match (&model.mode1, &f.x2) {
                (Some(m), Some(x2)) => {
                    if x2.shape() != (m.dict.n_atoms(), r) || m.dict.n_rows() != m1 {
                        return bad("second-mode codes do not match their dictionary");
                    }
                }
                (None, None) => {}
                _ => return bad("second-mode codes must be given iff a second dictionary is"),
            }
        }
        _ => return bad("data type does not match the model kind"),
    }
    Ok(())
}

/// Exact `‖Y − [[D·X, B(, C)]]‖_F²`.
pub fn dlra_residual(data: &DlraData, model: &DlraModel, f: &DlraFactors) -> Result<f64> {
    let a = f.a(model);
    let y = match data {
        DlraData::Matrix(y) => return Ok(model_residual(y, &a, &f.mixing()?)),
        DlraData::Tensor(t) => t.unfold1(),
    };
    Ok(model_residual(&y, &a, &f.mixing()?))
}

/// Output of [`ao_dlra`] and [`ipalm`].
#[derive(Debug, Clone, PartialEq)]
pub struct DlraReport {
    /// Factors with the smallest residual among stored iterates.
    pub best: DlraFactors,
    pub best_cost: f64,
    /// Residual after each outer iteration.
    pub cost_trace: Vec<f64>,
    /// Regularization ratios after each outer iteration, mode-0 columns
    /// followed by mode-1 columns.
    pub alpha_trace: Vec<Vec<f64>>,
    /// Largest per-column nonzero count before debiasing, per iteration.
    pub pre_debias_nnz: Vec<usize>,
    pub iterations: usize,
    /// Tuner loops that hit their round cap and fell back to truncation.
    pub tuner_warnings: usize,
}
