use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::{check_init, check_k, debias_gram, SolverReport, Stopwatch, StoppingRule, Termination};
use crate::error::{Error, Result};
use crate::linalg::{DenseMatrix, Dictionary, MixingOperator, MscGram, SparseCodes};
use crate::math::sqrt;
use crate::prox::{
    l11_norm, nonneg_soft_threshold_columns, prox_l11, soft_threshold_columns, RegularizationVector,
};

/// Bisection tolerance handed to the ℓ₁,₁ prox.
const PROX_TOL: f64 = 1e-14;

/// Raw output of an accelerated proximal gradient run, before debiasing.
#[derive(Debug, Clone, PartialEq)]
pub struct FistaRun {
    pub x: DenseMatrix,
    pub cost_trace: Vec<f64>,
    pub iterations: usize,
    pub termination: Termination,
}

/// Accelerated proximal gradient on `½‖Y − DXBᵀ‖² + g(X)`, where `prox`
/// applies the prox of `η·g` and `objective(X, residual)` evaluates the
/// traced cost.
///
/// `U·X·V` is linear in `X`, so it is carried along the extrapolation
/// instead of being recomputed at `Z`: one normal product per iteration.
pub(crate) fn accelerated<P, O>(
    gram: &MscGram<'_>,
    x0: &DenseMatrix,
    eta: f64,
    stop: StoppingRule,
    prox: P,
    objective: O,
) -> FistaRun
where
    P: Fn(&DenseMatrix) -> DenseMatrix,
    O: Fn(&DenseMatrix, f64) -> f64,
{
    let w = gram.dtyb();
    let mut x = x0.clone();
    let mut nx = gram.normal(&x);
    let mut cost = objective(&x, gram.residual_with_normal(&x, &nx));
    let mut trace = vec![cost];
    let mut z = x.clone();
    let mut nz = nx.clone();
    let mut beta = 1.0f64;
    for it in 1..=stop.max_iter {
        let mut v = z;
        for ((vi, ni), wi) in v.as_mut_slice().iter_mut().zip(nz.as_slice()).zip(w.as_slice()) {
            *vi -= eta * (ni - wi);
        }
        let x_new = prox(&v);
        let nx_new = gram.normal(&x_new);
        let beta_new = 0.5 * (1.0 + sqrt(1.0 + 4.0 * beta * beta));
        let c = (beta - 1.0) / beta_new;
        beta = beta_new;
        z = extrapolate(&x_new, &x, c);
        nz = extrapolate(&nx_new, &nx, c);
        x = x_new;
        nx = nx_new;
        let new_cost = objective(&x, gram.residual_with_normal(&x, &nx));
        trace.push(new_cost);
        let done = stop.converged(cost, new_cost);
        cost = new_cost;
        if done {
            return FistaRun {
                x,
                cost_trace: trace,
                iterations: it,
                termination: Termination::Tolerance,
            };
        }
    }
    FistaRun {
        x,
        cost_trace: trace,
        iterations: stop.max_iter,
        termination: Termination::MaxIter,
    }
}

fn extrapolate(new: &DenseMatrix, old: &DenseMatrix, c: f64) -> DenseMatrix {
    if c == 0.0 {
        return new.clone();
    }
    let mut out = new.clone();
    for (o, p) in out.as_mut_slice().iter_mut().zip(old.as_slice()) {
        *o += c * (*o - p);
    }
    out
}

/// `1/L` for the data term; errors when `L` vanishes.
pub(crate) fn step_size(gram: &MscGram<'_>) -> Result<f64> {
    let l = gram.lipschitz();
    if l > 0.0 && l.is_finite() {
        Ok(1.0 / l)
    } else {
        Err(Error::RankDeficient(0.0))
    }
}

/// `‖W_i‖_∞` for each column of `W = DᵀYB`.
fn column_max_abs(w: &DenseMatrix) -> Vec<f64> {
    let mut m = vec![0.0f64; w.cols()];
    for i in 0..w.rows() {
        for (mi, v) in m.iter_mut().zip(w.row(i)) {
            *mi = mi.max(v.abs());
        }
    }
    m
}

/// `λ_{i,max} = ‖DᵀYB_i‖_∞`: the smallest per-column penalties with an
/// all-zero Block LASSO solution.
pub fn lambda_max_block(y: &DenseMatrix, dict: &Dictionary, mixing: &MixingOperator) -> Result<RegularizationVector> {
    let gram = MscGram::new(y, dict.matrix(), mixing)?;
    RegularizationVector::new(column_max_abs(gram.dtyb()))
}

/// `Σ_i ‖DᵀYB_i‖_∞`: the smallest Mixed LASSO penalty with an all-zero
/// solution.
pub fn lambda_max_mixed(y: &DenseMatrix, dict: &Dictionary, mixing: &MixingOperator) -> Result<f64> {
    Ok(lambda_max_block(y, dict, mixing)?.sum())
}

fn check_alpha(a: f64) -> Result<()> {
    if (0.0..=1.0).contains(&a) {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("regularization ratio {a} outside [0, 1]")))
    }
}

/// Block LASSO `min ½‖Y − DXBᵀ‖² + Σ_i λ_i‖X_i‖₁` with
/// `λ_i = α_i·λ_{i,max}`; with `nonneg` the codes are also constrained to
/// be nonnegative.
pub fn block_fista_gram(
    gram: &MscGram<'_>,
    alpha: &[f64],
    x0: &DenseMatrix,
    stop: StoppingRule,
    nonneg: bool,
    eta: f64,
) -> Result<FistaRun> {
    let r = gram.rank();
    if alpha.len() != r {
        return Err(Error::Shape(format!("{} regularization ratios for rank {r}", alpha.len())));
    }
    alpha.iter().try_for_each(|a| check_alpha(*a))?;
    check_init(x0, gram.n_atoms(), r)?;
    let lambdas: Vec<f64> = column_max_abs(gram.dtyb())
        .iter()
        .zip(alpha)
        .map(|(m, a)| a * m)
        .collect();
    let thresholds: Vec<f64> = lambdas.iter().map(|l| eta * l).collect();
    let penalty = |x: &DenseMatrix| -> f64 {
        let mut p = 0.0;
        for (i, l) in lambdas.iter().enumerate() {
            if *l == 0.0 {
                continue;
            }
            let s: f64 = (0..x.rows())
                .map(|a| if nonneg { x[(a, i)] } else { x[(a, i)].abs() })
                .sum();
            p += l * s;
        }
        p
    };
    Ok(if nonneg {
        accelerated(
            gram,
            x0,
            eta,
            stop,
            |v| nonneg_soft_threshold_columns(v, &thresholds),
            |x, res| 0.5 * res + penalty(x),
        )
    } else {
        accelerated(
            gram,
            x0,
            eta,
            stop,
            |v| soft_threshold_columns(v, &thresholds),
            |x, res| 0.5 * res + penalty(x),
        )
    })
}

/// Mixed LASSO `min ½‖Y − DXBᵀ‖² + λ·max_i ‖X_i‖₁` with
/// `λ = α·Σ_i λ_{i,max}`.
pub fn mixed_fista_gram(
    gram: &MscGram<'_>,
    alpha: f64,
    x0: &DenseMatrix,
    stop: StoppingRule,
    eta: f64,
) -> Result<FistaRun> {
    check_alpha(alpha)?;
    check_init(x0, gram.n_atoms(), gram.rank())?;
    let maxes = column_max_abs(gram.dtyb());
    let lambda = alpha * maxes.iter().sum::<f64>();
    // Summed in the same order as the zero test inside the prox, so that
    // α = 1 yields exact zeros from a zero start.
    let prox_lambda = maxes.iter().map(|m| (eta * alpha) * m).sum::<f64>();
    Ok(accelerated(
        gram,
        x0,
        eta,
        stop,
        |v| prox_l11(v, prox_lambda, PROX_TOL),
        |x, res| 0.5 * res + if lambda == 0.0 { 0.0 } else { lambda * l11_norm(x) },
    ))
}

fn finish(
    gram: &MscGram<'_>,
    run: FistaRun,
    k: usize,
    nonneg: bool,
    clock: Stopwatch,
) -> Result<SolverReport> {
    let codes = debias_gram(gram, &run.x, k, nonneg)?;
    Ok(SolverReport {
        codes: SparseCodes::from_values(codes),
        iterate: run.x,
        cost_trace: run.cost_trace,
        iterations: run.iterations,
        termination: run.termination,
        wall_time: clock.seconds(),
    })
}

/// Block-FISTA followed by columnwise truncation to `k` atoms and a
/// fixed-support refit.
#[allow(clippy::too_many_arguments)]
pub fn block_fista(
    y: &DenseMatrix,
    dict: &Dictionary,
    mixing: &MixingOperator,
    alpha: &[f64],
    k: usize,
    x0: &DenseMatrix,
    stop: StoppingRule,
    nonneg: bool,
) -> Result<SolverReport> {
    let clock = Stopwatch::start();
    check_k(k, dict.n_atoms())?;
    let gram = MscGram::new(y, dict.matrix(), mixing)?;
    let eta = step_size(&gram)?;
    let run = block_fista_gram(&gram, alpha, x0, stop, nonneg, eta)?;
    finish(&gram, run, k, nonneg, clock)
}

/// Mixed-FISTA followed by columnwise truncation to `k` atoms and a
/// fixed-support refit.
pub fn mixed_fista(
    y: &DenseMatrix,
    dict: &Dictionary,
    mixing: &MixingOperator,
    alpha: f64,
    k: usize,
    x0: &DenseMatrix,
    stop: StoppingRule,
) -> Result<SolverReport> {
    let clock = Stopwatch::start();
    check_k(k, dict.n_atoms())?;
    let gram = MscGram::new(y, dict.matrix(), mixing)?;
    let eta = step_size(&gram)?;
    let run = mixed_fista_gram(&gram, alpha, x0, stop, eta)?;
    finish(&gram, run, k, false, clock)
}
