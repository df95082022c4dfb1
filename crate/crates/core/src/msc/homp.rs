use alloc::vec;
use alloc::vec::Vec;

use super::{check_init, check_k, omp_gram, SolverReport, Stopwatch, StoppingRule, Termination};
use crate::error::Result;
use crate::linalg::{
    DenseMatrix, Dictionary, LsOptions, MixingOperator, MscGram, SparseCodes, Support, SUPPORT_THRESHOLD,
};

/// `‖Y − DXBᵀ‖²` given `UX = DᵀD·X`.
fn cost_with(gram: &MscGram<'_>, x: &DenseMatrix, ux: &DenseMatrix) -> f64 {
    gram.residual_with_normal(x, &ux.matmul(gram.btb()))
}

fn column_support(x: &DenseMatrix, p: usize) -> Vec<usize> {
    (0..x.rows()).filter(|&a| x[(a, p)].abs() > SUPPORT_THRESHOLD).collect()
}

/// HOMP in Gram form. Returns the iterate, the per-sweep cost trace, the
/// number of sweeps and the termination reason.
pub fn homp_gram(
    gram: &MscGram<'_>,
    k: usize,
    x0: &DenseMatrix,
    stop: StoppingRule,
) -> Result<(DenseMatrix, Vec<f64>, usize, Termination)> {
    let d = gram.n_atoms();
    let r = gram.rank();
    check_k(k, d)?;
    check_init(x0, d, r)?;
    let u = gram.dict_gram();
    let v = gram.btb();
    let w = gram.dtyb();
    let mut x = x0.clone();
    let mut ux = u.apply(&x);
    let mut cost = cost_with(gram, &x, &ux);
    let mut trace = vec![cost];
    for sweep in 1..=stop.max_iter {
        let sweep_start = cost;
        let mut rejected = 0;
        for p in 0..r {
            let vpp = v[(p, p)];
            if vpp <= 0.0 {
                rejected += 1;
                continue;
            }
            // Dᵀ of the deflated target (Y − D·X₋ₚ·B₋ₚᵀ)·Bₚ / ‖Bₚ‖².
            let mut dtv = vec![0.0; d];
            for (a, t) in dtv.iter_mut().enumerate() {
                let row = ux.row(a);
                let mut s = w[(a, p)];
                for q in 0..r {
                    s -= row[q] * v[(q, p)];
                }
                *t = s / vpp + row[p];
            }
            let trial = omp_gram(&dtv, u, k)?.coefficients;
            let (new_cost, new_ux) = evaluate(gram, &x, &ux, p, &trial);
            if new_cost <= cost {
                x.set_column(p, &trial);
                ux = new_ux;
                cost = new_cost;
                continue;
            }
            rejected += 1;
            let previous = column_support(&x, p);
            let refit = gram.solve_single_column(&dtv, &previous, LsOptions::default())?;
            let (refit_cost, refit_ux) = evaluate(gram, &x, &ux, p, &refit);
            if refit_cost <= cost {
                x.set_column(p, &refit);
                ux = refit_ux;
                cost = refit_cost;
            }
        }
        trace.push(cost);
        if rejected == r {
            return Ok((x, trace, sweep, Termination::RestartAllColumns));
        }
        if stop.converged(sweep_start, cost) {
            return Ok((x, trace, sweep, Termination::Tolerance));
        }
    }
    Ok((x, trace, stop.max_iter, Termination::MaxIter))
}

/// Cost and `UX` after replacing column `p` of `x` by `col`.
fn evaluate(
    gram: &MscGram<'_>,
    x: &DenseMatrix,
    ux: &DenseMatrix,
    p: usize,
    col: &[f64],
) -> (f64, DenseMatrix) {
    let mut x_new = x.clone();
    x_new.set_column(p, col);
    let mut ux_new = ux.clone();
    let u_col = gram.dict_gram().apply(&DenseMatrix::from_column(col));
    ux_new.set_column(p, u_col.as_slice());
    (cost_with(gram, &x_new, &ux_new), ux_new)
}

/// Hierarchical OMP: block-coordinate descent over code columns, each
/// solved by OMP on its deflated target, with rejection of updates that
/// increase the cost. Finishes with a joint refit on the final supports.
pub fn homp(
    y: &DenseMatrix,
    dict: &Dictionary,
    mixing: &MixingOperator,
    k: usize,
    x0: &DenseMatrix,
    stop: StoppingRule,
) -> Result<SolverReport> {
    let clock = Stopwatch::start();
    let gram = MscGram::new(y, dict.matrix(), mixing)?;
    let (x, cost_trace, iterations, termination) = homp_gram(&gram, k, x0, stop)?;
    let codes = gram.solve_support(&Support::from_values(&x), LsOptions::default())?;
    Ok(SolverReport {
        codes: SparseCodes::from_values(codes),
        iterate: x,
        cost_trace,
        iterations,
        termination,
        wall_time: clock.seconds(),
    })
}
