//! Choice of the regularization ratio of the convex solvers on simulated
//! instances.

use dlra_core::linalg::{DenseMatrix, MixingOperator};
use dlra_core::msc::{Solver, StoppingRule};
use dlra_core::synth::{derive_seed, MscInstance, MscParams};

use crate::error::{Result, ToolError};
use crate::metrics::support_recovery;

/// Ratios tried by [`auto_alpha`].
pub const AUTO_ALPHA_GRID: [f64; 5] = [1e-5, 1e-4, 1e-3, 1e-2, 1e-1];
/// Simulated instances per tuning.
pub const AUTO_ALPHA_INSTANCES: u64 = 3;

/// Mean over three fresh instances of the grid ratio with the best support
/// recovery. Ties go to the smaller ratio.
pub fn auto_alpha(params: &MscParams, solver: Solver, seed: u64, stop: StoppingRule) -> Result<f64> {
    auto_alpha_on(params, solver, seed, stop, &AUTO_ALPHA_GRID)
}

/// [`auto_alpha`] on a custom grid.
pub fn auto_alpha_on(params: &MscParams, solver: Solver, seed: u64, stop: StoppingRule, grid: &[f64]) -> Result<f64> {
    if !solver.is_convex() {
        return Err(ToolError::Invalid(format!("{solver} takes no regularization ratio")));
    }
    if grid.is_empty() {
        return Err(ToolError::Invalid("empty alpha grid".into()));
    }
    let mut sorted = grid.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut total = 0.0;
    for i in 0..AUTO_ALPHA_INSTANCES {
        let inst = MscInstance::generate(params, derive_seed(seed, i))?;
        let best = best_alpha(&inst, solver, params.k, stop, &sorted)?.0;
        total += best;
    }
    Ok(total / AUTO_ALPHA_INSTANCES as f64)
}

/// Best ratio on one instance with its recovery; `grid` must be sorted
/// ascending so that ties resolve to the smaller ratio.
pub fn best_alpha(
    inst: &MscInstance,
    solver: Solver,
    k: usize,
    stop: StoppingRule,
    grid: &[f64],
) -> Result<(f64, f64)> {
    let mixing = MixingOperator::Dense(inst.mixing.clone());
    let x0 = DenseMatrix::zeros(inst.dict.n_atoms(), inst.mixing.cols());
    let mut best = (grid[0], f64::NEG_INFINITY);
    for &alpha in grid {
        let rep = solver.solve(&inst.y, &inst.dict, &mixing, k, alpha, &x0, stop)?;
        let rec = support_recovery(rep.codes.support(), inst.codes.support(), false)?;
        if rec > best.1 {
            best = (alpha, rec);
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> MscParams {
        MscParams { n: 10, m: 8, d: 15, k: 2, r: 2, cond: 5.0, snr_db: 30.0, nonneg: false }
    }

    #[test]
    fn auto_alpha_is_a_grid_mean_and_deterministic() {
        let stop = StoppingRule::default();
        let a = auto_alpha(&tiny(), Solver::BlockFista, 3, stop).unwrap();
        assert_eq!(a, auto_alpha(&tiny(), Solver::BlockFista, 3, stop).unwrap());
        assert!((1e-5..=1e-1).contains(&a));
        assert!(auto_alpha(&tiny(), Solver::Homp, 3, stop).is_err());
    }

    #[test]
    fn ties_go_to_the_smallest_ratio() {
        // Noiseless and trivially easy: every small ratio recovers fully.
        let p = MscParams { n: 12, m: 10, d: 12, k: 1, r: 1, cond: 1.0, snr_db: f64::INFINITY, nonneg: false };
        let a = auto_alpha_on(&p, Solver::BlockFista, 1, StoppingRule::default(), &[1e-3, 1e-5, 1e-4]).unwrap();
        assert_eq!(a, 1e-5);
    }
}
