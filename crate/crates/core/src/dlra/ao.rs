use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::{check_factors, dlra_residual, DlraData, DlraFactors, DlraModel, DlraReport, ModeConstraint};
use crate::error::{Error, Result};
use crate::linalg::{
    psd_largest_eigenvalue, Cholesky, DenseMatrix, DictGram, MixingOperator, MscGram, SUPPORT_THRESHOLD,
};
use crate::msc::{block_fista_gram, debias_gram, StoppingRule};
use crate::prox::hard_threshold_columns;
use crate::tensor::{als_update, hals_update, CpdFactors};

/// Automatic adjustment of the per-column regularization ratios until
/// every code column has between `k` and `k + tau` nonzeros.
#[derive(Debug, Clone, PartialEq)]
pub struct TunerConfig {
    pub alpha0: Vec<f64>,
    pub tau: usize,
    pub decrease_factor: f64,
    pub increase_factor: f64,
    pub max_tuner_rounds: usize,
}

impl TunerConfig {
    pub fn new(alpha0: Vec<f64>, tau: usize) -> Result<Self> {
        if alpha0.iter().any(|a| !(0.0..=1.0).contains(a)) {
            return Err(Error::InvalidArgument("initial ratios must lie in [0, 1]".into()));
        }
        Ok(Self {
            alpha0,
            tau,
            decrease_factor: 1.3,
            increase_factor: 1.01,
            max_tuner_rounds: 50,
        })
    }

    /// The same initial ratio for all `r` columns.
    pub fn uniform(alpha: f64, r: usize, tau: usize) -> Result<Self> {
        Self::new(vec![alpha; r], tau)
    }
}

/// Relative ridge of the inner least-squares problems.
pub(crate) const LS_RIDGE: f64 = 1e-12;
/// Projected-gradient iterations of the nonnegative factor update.
pub(crate) const NONNEG_INNER_ITERS: usize = 50;

/// `argmin_B ‖Y − A·Bᵀ‖²` with a small relative ridge.
pub(crate) fn ls_factor(y: &DenseMatrix, a: &DenseMatrix) -> Result<DenseMatrix> {
    let g = a.gram();
    let p = y.t_matmul(a);
    let ridge = LS_RIDGE * g.trace().max(f64::MIN_POSITIVE) / g.rows() as f64;
    let chol = match Cholesky::factor_shifted(&g, ridge) {
        Some(c) => c,
        None => Cholesky::factor_shifted(&g, ridge.max(1e-10 * g.trace())).ok_or(Error::Singular)?,
    };
    Ok(chol.solve_matrix(&p.transpose()).transpose())
}

/// Projected gradient on `min_{B ≥ 0} ‖Y − A·Bᵀ‖²` from `b0`.
pub(crate) fn nonneg_factor(y: &DenseMatrix, a: &DenseMatrix, b0: &DenseMatrix, iters: usize) -> DenseMatrix {
    let g = a.gram();
    let p = y.t_matmul(a);
    let l = psd_largest_eigenvalue(&g, 1e-6, 500).value;
    let mut b = b0.map(|v| v.max(0.0));
    if !(l > 0.0) {
        return b;
    }
    let eta = 1.0 / l;
    for _ in 0..iters {
        let grad = b.matmul(&g).sub(&p);
        for (v, gr) in b.as_mut_slice().iter_mut().zip(grad.as_slice()) {
            *v = (*v - eta * gr).max(0.0);
        }
    }
    b
}

/// Updates the unconstrained factors with the constrained ones fixed.
pub(crate) fn update_free_factors(
    data: &DlraData,
    model: &DlraModel,
    f: &mut DlraFactors,
) -> Result<()> {
    let nonneg = model.kind.is_nonneg();
    match data {
        DlraData::Matrix(y) => {
            let a = f.a(model);
            f.b = if nonneg {
                nonneg_factor(y, &a, &f.b, NONNEG_INNER_ITERS)
            } else {
                ls_factor(y, &a)?
            };
        }
        DlraData::Tensor(t) => {
            let c = f.c.take().expect("tensor models carry C");
            let mut cp = CpdFactors::new(f.a(model), f.b.clone(), c)?;
            let modes: &[usize] = if model.mode1.is_some() { &[2] } else { &[1, 2] };
            for &mode in modes {
                if nonneg {
                    hals_update(t, &mut cp, mode);
                } else {
                    als_update(t, &mut cp, mode)?;
                }
            }
            f.b = cp.b;
            f.c = Some(cp.c);
        }
    }
    Ok(())
}

/// Precomputed data of one dictionary-constrained mode.
pub(crate) struct ModeWork<'a> {
    pub cons: &'a ModeConstraint,
    pub dict_gram: DictGram<'a>,
    pub sigma_d: f64,
    pub y: DenseMatrix,
    pub y_sq: f64,
}

impl<'a> ModeWork<'a> {
    pub fn new(cons: &'a ModeConstraint, y: DenseMatrix) -> Self {
        let dict_gram = DictGram::new(cons.dict.matrix());
        let sigma_d = dict_gram.spectral_norm_sq();
        let y_sq = y.frobenius_sq();
        Self {
            cons,
            dict_gram,
            sigma_d,
            y,
            y_sq,
        }
    }

    pub fn gram(&self, mixing: &MixingOperator) -> MscGram<'_> {
        let dtyb = self.cons.dict.matrix().t_matmul(&mixing.project(&self.y));
        MscGram::from_parts(&self.dict_gram, mixing.gram(), dtyb, self.y_sq)
    }

    /// `1/(σ(DᵀD)·σ(BᵀB))`.
    pub fn step(&self, gram: &MscGram<'_>) -> f64 {
        let sb = psd_largest_eigenvalue(gram.btb(), 1e-6, 500).value;
        let l = self.sigma_d * sb;
        if l > 0.0 {
            1.0 / l
        } else {
            0.0
        }
    }
}

fn column_nnz(x: &DenseMatrix) -> Vec<usize> {
    (0..x.cols())
        .map(|i| (0..x.rows()).filter(|&a| x[(a, i)].abs() > SUPPORT_THRESHOLD).count())
        .collect()
}

/// Result of one tuned code update.
struct CodeUpdate {
    x: DenseMatrix,
    max_nnz: usize,
    failed: bool,
}

/// Block-FISTA from `x_prev` with tuning of `alpha`, then a refit on the
/// support.
fn code_update(
    work: &ModeWork<'_>,
    mixing: &MixingOperator,
    x_prev: &DenseMatrix,
    alpha: &mut [f64],
    tuner: &TunerConfig,
    inner: StoppingRule,
) -> Result<CodeUpdate> {
    let k = work.cons.k;
    let nonneg = work.cons.nonneg;
    let gram = work.gram(mixing);
    let eta = work.step(&gram);
    if eta == 0.0 {
        return Ok(CodeUpdate {
            x: x_prev.clone(),
            max_nnz: column_nnz(x_prev).into_iter().max().unwrap_or(0),
            failed: false,
        });
    }
    let mut x = block_fista_gram(&gram, alpha, x_prev, inner, nonneg, eta)?.x;
    let mut rounds = 0;
    let mut failed = false;
    loop {
        let nnz = column_nnz(&x);
        if nnz.iter().all(|&c| c >= k && c <= k + tuner.tau) {
            break;
        }
        if rounds == tuner.max_tuner_rounds {
            failed = true;
            x = hard_threshold_columns(&x, k);
            break;
        }
        for (a, &c) in alpha.iter_mut().zip(&nnz) {
            if c < k {
                *a /= tuner.decrease_factor;
            } else if c > k + tuner.tau {
                *a = (*a * tuner.increase_factor).min(1.0);
            }
        }
        rounds += 1;
        x = block_fista_gram(&gram, alpha, &x, inner, nonneg, eta)?.x;
    }
    let max_nnz = column_nnz(&x).into_iter().max().unwrap_or(0);
    let x = debias_gram(&gram, &x, k, nonneg)?;
    Ok(CodeUpdate { x, max_nnz, failed })
}

/// [`ao_dlra_with`] with the default inner stopping rule.
pub fn ao_dlra(
    data: &DlraData,
    model: &DlraModel,
    tuner: &TunerConfig,
    l_max: usize,
    init: &DlraFactors,
) -> Result<DlraReport> {
    ao_dlra_with(data, model, tuner, l_max, init, StoppingRule::default())
}

/// Alternating optimization: each outer iteration updates the free factors
/// by (nonnegative) least squares, then the codes of every constrained mode
/// by tuned Block-FISTA and a refit on the support. The factors with the
/// smallest residual are returned.
pub fn ao_dlra_with(
    data: &DlraData,
    model: &DlraModel,
    tuner: &TunerConfig,
    l_max: usize,
    init: &DlraFactors,
    inner: StoppingRule,
) -> Result<DlraReport> {
    check_factors(data, model, init)?;
    let r = init.rank();
    if tuner.alpha0.len() != r {
        return Err(Error::Shape(format!("{} initial ratios for rank {r}", tuner.alpha0.len())));
    }
    if l_max == 0 {
        return Err(Error::InvalidArgument("at least one outer iteration is needed".into()));
    }
    let work0 = ModeWork::new(&model.mode0, data.unfold(0));
    let work1 = model.mode1.as_ref().map(|m| ModeWork::new(m, data.unfold(1)));
    let mut alpha0 = tuner.alpha0.clone();
    let mut alpha1 = tuner.alpha0.clone();
    let mut f = init.clone();
    let mut best = f.clone();
    let mut best_cost = f64::INFINITY;
    let mut cost_trace = Vec::with_capacity(l_max);
    let mut alpha_trace = Vec::with_capacity(l_max);
    let mut nnz_trace = Vec::with_capacity(l_max);
    let mut warnings = 0;
    for _ in 0..l_max {
        update_free_factors(data, model, &mut f)?;
        let mut max_nnz = 0;
        if let (Some(w1), Some(c)) = (&work1, &f.c) {
            let mixing = MixingOperator::khatri_rao(f.a(model), c.clone())?;
            let x2 = f.x2.as_ref().expect("checked with the model");
            let up = code_update(w1, &mixing, x2, &mut alpha1, tuner, inner)?;
            warnings += usize::from(up.failed);
            max_nnz = max_nnz.max(up.max_nnz);
            f.b = w1.cons.dict.matrix().matmul(&up.x);
            f.x2 = Some(up.x);
        }
        let mixing = f.mixing()?;
        let up = code_update(&work0, &mixing, &f.x, &mut alpha0, tuner, inner)?;
        warnings += usize::from(up.failed);
        max_nnz = max_nnz.max(up.max_nnz);
        f.x = up.x;
        let cost = dlra_residual(data, model, &f)?;
        cost_trace.push(cost);
        let mut a = alpha0.clone();
        if work1.is_some() {
            a.extend_from_slice(&alpha1);
        }
        alpha_trace.push(a);
        nnz_trace.push(max_nnz);
        if cost < best_cost {
            best_cost = cost;
            best = f.clone();
        }
    }
    Ok(DlraReport {
        best,
        best_cost,
        cost_trace,
        alpha_trace,
        pre_debias_nnz: nnz_trace,
        iterations: l_max,
        tuner_warnings: warnings,
    })
}
