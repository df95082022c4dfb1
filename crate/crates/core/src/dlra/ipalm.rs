use alloc::vec::Vec;

use super::ao::ModeWork;
use super::{check_factors, dlra_residual, DlraData, DlraFactors, DlraModel, DlraReport};
use crate::error::{Error, Result};
use crate::linalg::{DenseMatrix, MixingOperator, SUPPORT_THRESHOLD};
use crate::prox::{hard_threshold_columns, nonneg_hard_threshold_columns};
use crate::tensor::{mttkrp_mode, CpdFactors};

/// Relative cost change below which [`ipalm`] stops.
pub const IPALM_REL_TOL: f64 = 1e-8;

/// `F − η(F·G − P)` with `η = μ/‖G‖_F`, projected on `F ≥ 0` if asked.
fn gradient_step(f: &DenseMatrix, g: &DenseMatrix, p: &DenseMatrix, mu: f64, nonneg: bool) -> DenseMatrix {
    let norm = g.frobenius();
    if !(norm > 0.0) {
        return f.clone();
    }
    let eta = mu / norm;
    let grad = f.matmul(g).sub(p);
    let mut out = f.clone();
    for (v, gr) in out.as_mut_slice().iter_mut().zip(grad.as_slice()) {
        *v -= eta * gr;
        if nonneg {
            *v = v.max(0.0);
        }
    }
    out
}

/// Inertial hard-thresholding step on the codes of one mode. Returns the
/// new codes and the new extrapolation point.
fn code_step(
    work: &ModeWork<'_>,
    mixing: &MixingOperator,
    x: &DenseMatrix,
    z: &DenseMatrix,
    beta: f64,
    mu: f64,
) -> (DenseMatrix, DenseMatrix) {
    let gram = work.gram(mixing);
    let denom = work.dict_gram.frobenius() * gram.btb().frobenius();
    if !(denom > 0.0) {
        return (x.clone(), x.clone());
    }
    let eta = mu / denom;
    let grad = gram.gradient(z);
    let mut v = z.clone();
    for (vi, gi) in v.as_mut_slice().iter_mut().zip(grad.as_slice()) {
        *vi -= eta * gi;
    }
    let k = work.cons.k;
    let x_new = if work.cons.nonneg {
        nonneg_hard_threshold_columns(&v, k)
    } else {
        hard_threshold_columns(&v, k)
    };
    let mut z_new = x_new.clone();
    for ((zi, xn), xo) in z_new.as_mut_slice().iter_mut().zip(x_new.as_slice()).zip(x.as_slice()) {
        *zi = xn + beta * (xn - xo);
    }
    (x_new, z_new)
}

fn max_nnz(x: &DenseMatrix) -> usize {
    (0..x.cols())
        .map(|i| (0..x.rows()).filter(|&a| x[(a, i)].abs() > SUPPORT_THRESHOLD).count())
        .max()
        .unwrap_or(0)
}

/// Inertial proximal alternating linearized minimization: gradient steps
/// on the free factors and inertial hard-thresholding steps on the codes,
/// with stepsize safeguard `mu ∈ (0, 1]`. Stops after `l_max` iterations
/// or when the relative cost change drops below [`IPALM_REL_TOL`]. The
/// final iterate is returned.
pub fn ipalm(
    data: &DlraData,
    model: &DlraModel,
    l_max: usize,
    mu: f64,
    init: &DlraFactors,
) -> Result<DlraReport> {
    if !(mu > 0.0 && mu <= 1.0) {
        return Err(Error::InvalidArgument("stepsize safeguard must lie in (0, 1]".into()));
    }
    check_factors(data, model, init)?;
    let nonneg = model.kind.is_nonneg();
    let work0 = ModeWork::new(&model.mode0, data.unfold(0));
    let work1 = model.mode1.as_ref().map(|m| ModeWork::new(m, data.unfold(1)));
    let mut f = init.clone();
    let mut z0 = f.x.clone();
    let mut z1 = f.x2.clone();
    let mut cost = dlra_residual(data, model, &f)?;
    let mut cost_trace = Vec::new();
    let mut nnz_trace = Vec::new();
    let mut iterations = 0;
    for l in 1..=l_max {
        iterations = l;
        let beta = (l as f64 - 1.0) / (l as f64 + 2.0);
        match data {
            DlraData::Matrix(y) => {
                let a = f.a(model);
                f.b = gradient_step(&f.b, &a.gram(), &y.t_matmul(&a), mu, nonneg);
            }
            DlraData::Tensor(t) => {
                let c = f.c.take().expect("tensor models carry C");
                let mut cp = CpdFactors::new(f.a(model), f.b.clone(), c)?;
                let modes: &[usize] = if work1.is_some() { &[2] } else { &[1, 2] };
                for &mode in modes {
                    let g = cp.gram_except(mode);
                    let p = mttkrp_mode(t, &cp, mode);
                    let updated = gradient_step(cp.factor(mode), &g, &p, mu, nonneg);
                    if mode == 1 {
                        cp.b = updated;
                    } else {
                        cp.c = updated;
                    }
                }
                f.b = cp.b;
                f.c = Some(cp.c);
            }
        }
        let mut nnz = 0;
        if let (Some(w1), Some(c), Some(z)) = (&work1, &f.c, &z1) {
            let mixing = MixingOperator::khatri_rao(f.a(model), c.clone())?;
            let x2 = f.x2.as_ref().expect("checked with the model");
            let (x_new, z_new) = code_step(w1, &mixing, x2, z, beta, mu);
            nnz = max_nnz(&x_new);
            f.b = w1.cons.dict.matrix().matmul(&x_new);
            f.x2 = Some(x_new);
            z1 = Some(z_new);
        }
        let mixing = f.mixing()?;
        let (x_new, z_new) = code_step(&work0, &mixing, &f.x, &z0, beta, mu);
        nnz = nnz.max(max_nnz(&x_new));
        f.x = x_new;
        z0 = z_new;
        let new_cost = dlra_residual(data, model, &f)?;
        cost_trace.push(new_cost);
        nnz_trace.push(nnz);
        let done = cost == 0.0 || ((new_cost - cost) / cost).abs() < IPALM_REL_TOL;
        cost = new_cost;
        if done {
            break;
        }
    }
    Ok(DlraReport {
        best: f,
        best_cost: cost,
        cost_trace,
        alpha_trace: Vec::new(),
        pre_debias_nnz: nnz_trace,
        iterations,
        tuner_warnings: 0,
    })
}
