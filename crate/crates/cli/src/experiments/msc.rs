//! Mixed sparse coding experiments on synthetic instances.

use std::time::Instant;

use dlra_core::linalg::{DenseMatrix, MixingOperator};
use dlra_core::msc::{Solver, StoppingRule};
use dlra_core::synth::{gaussian_matrix, rng_from_seed, MscInstance, MscParams};
use rayon::prelude::*;

use super::{instance_seed, init_seed, run_cells, tuning_seed};
use crate::config::{ExperimentConfig, TestName};
use crate::error::{Result, ToolError};
use crate::metrics::{rel_error, support_recovery};
use crate::table::ResultRow;
use crate::tuning::{auto_alpha_on, best_alpha};

const DEFAULT_SOLVERS: [Solver; 5] =
    [Solver::TrickOmp, Solver::Homp, Solver::Iht, Solver::BlockFista, Solver::MixedFista];

struct Point {
    label: String,
    params: MscParams,
}

fn base_params(cfg: &ExperimentConfig) -> MscParams {
    MscParams {
        n: cfg.n,
        m: cfg.m,
        d: cfg.d,
        k: cfg.k,
        r: cfg.r,
        cond: cfg.cond[0],
        snr_db: cfg.snr_db[0],
        nonneg: cfg.test == TestName::NnCompare,
    }
}

fn points(cfg: &ExperimentConfig) -> Result<Vec<Point>> {
    let base = base_params(cfg);
    let mut out = Vec::new();
    match cfg.test {
        TestName::NoiseSweep | TestName::NnCompare => {
            for &snr_db in &cfg.snr_db {
                out.push(Point { label: format!("snr_db={snr_db}"), params: MscParams { snr_db, ..base } });
            }
        }
        TestName::CondSweep => {
            for &cond in &cfg.cond {
                out.push(Point { label: format!("cond={cond}"), params: MscParams { cond, ..base } });
            }
        }
        TestName::KdSweep => {
            for &k in &cfg.k_grid {
                for &d in &cfg.d_grid {
                    out.push(Point { label: format!("k={k};d={d}"), params: MscParams { k, d, ..base } });
                }
            }
        }
        TestName::RuntimeSweep => {
            for &n in &cfg.n_grid {
                for &m in &cfg.m_grid {
                    out.push(Point { label: format!("n={n};m={m};k={};d={}", base.k, base.d), params: MscParams { n, m, ..base } });
                }
            }
            for &k in &cfg.k_grid {
                for &d in &cfg.d_grid {
                    out.push(Point { label: format!("n={};m={};k={k};d={d}", base.n, base.m), params: MscParams { k, d, ..base } });
                }
            }
        }
        TestName::InitStudy | TestName::AlphaSensitivity => out.push(Point { label: "default".into(), params: base }),
        _ => unreachable!("not a sparse coding test"),
    }
    for p in &out {
        if p.params.k > p.params.d || p.params.r > p.params.m {
            return Err(ToolError::Config(format!("infeasible point {}: needs k <= d and r <= m", p.label)));
        }
    }
    Ok(out)
}

fn solvers(cfg: &ExperimentConfig) -> Result<Vec<Solver>> {
    let default: &[Solver] = match cfg.test {
        TestName::NnCompare => &[Solver::BlockFista, Solver::NnBlockFista],
        TestName::AlphaSensitivity => &[Solver::BlockFista, Solver::MixedFista],
        _ => &DEFAULT_SOLVERS,
    };
    if cfg.solvers.is_empty() {
        return Ok(default.to_vec());
    }
    let chosen = cfg.solvers.iter().map(|s| s.parse::<Solver>()).collect::<std::result::Result<Vec<_>, _>>()?;
    if cfg.test == TestName::AlphaSensitivity && chosen.iter().any(|s| !s.is_convex()) {
        return Err(ToolError::Config("alpha_sensitivity needs convex solvers".into()));
    }
    Ok(chosen)
}

/// Runs one of the sparse coding tests.
pub(super) fn run(cfg: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    let points = points(cfg)?;
    let solvers = solvers(cfg)?;
    let stop = StoppingRule::new(cfg.rel_tol, cfg.max_iter)?;
    if cfg.test == TestName::AlphaSensitivity {
        return alpha_sensitivity(cfg, &points[0], &solvers, stop);
    }
    // Regularization per (point, solver), tuned up front.
    let alphas: Vec<Vec<Option<f64>>> = points
        .par_iter()
        .enumerate()
        .map(|(pi, p)| {
            solvers
                .iter()
                .map(|s| resolve_alpha(cfg, *s, &p.params, pi, stop))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    let cells: Vec<(usize, usize)> =
        (0..points.len()).flat_map(|p| (0..cfg.n_instances).map(move |i| (p, i))).collect();
    run_cells(cells, |(pi, inst)| {
        let point = &points[pi];
        let seed = instance_seed(cfg.seed, inst);
        let data = MscInstance::generate(&point.params, seed)?;
        let clean = data.dict.matrix().matmul(data.codes.values()).matmul_t(&data.mixing);
        let mixing = MixingOperator::Dense(data.mixing.clone());
        let (d, r) = (point.params.d, point.params.r);
        let n_inits = if cfg.test == TestName::InitStudy { cfg.n_inits + 1 } else { cfg.n_inits };
        let mut rows = Vec::new();
        for init in 0..n_inits {
            // Init 0 is the zero matrix, the others are standard Gaussian.
            let iseed = init_seed(seed, init);
            let x0 = if init == 0 { DenseMatrix::zeros(d, r) } else { gaussian_matrix(d, r, &mut rng_from_seed(iseed)) };
            for (si, solver) in solvers.iter().enumerate() {
                let alpha = alphas[pi][si];
                let start = Instant::now();
                let rep = solver.solve(&data.y, &data.dict, &mixing, point.params.k, alpha.unwrap_or(0.0), &x0, stop)?;
                let wall_time = start.elapsed().as_secs_f64();
                let fit = data.dict.matrix().matmul(rep.codes.values()).matmul_t(&data.mixing);
                rows.push(ResultRow {
                    test: cfg.test,
                    point_index: pi,
                    point: point.label.clone(),
                    method: solver.name().into(),
                    instance: inst,
                    instance_seed: seed,
                    init,
                    init_seed: if init == 0 { 0 } else { iseed },
                    alpha,
                    recovery: Some(support_recovery(rep.codes.support(), data.codes.support(), false)?),
                    rel_error: Some(rel_error(&clean, &fit)?),
                    sam: None,
                    iterations: rep.iterations,
                    wall_time,
                });
            }
        }
        Ok(rows)
    })
}

fn resolve_alpha(cfg: &ExperimentConfig, solver: Solver, params: &MscParams, pi: usize, stop: StoppingRule) -> Result<Option<f64>> {
    if !solver.is_convex() {
        return Ok(None);
    }
    if let Some(a) = cfg.alpha.fixed_for(solver.name()) {
        return Ok(Some(a));
    }
    // The nonnegative variant shares the ratio tuned for Block-FISTA.
    let tuned = if solver == Solver::NnBlockFista { Solver::BlockFista } else { solver };
    if let (Solver::NnBlockFista, Some(a)) = (solver, cfg.alpha.fixed_for(Solver::BlockFista.name())) {
        return Ok(Some(a));
    }
    auto_alpha_on(params, tuned, tuning_seed(cfg.seed, pi), stop, &cfg.alpha_grid).map(Some)
}

fn alpha_sensitivity(cfg: &ExperimentConfig, point: &Point, solvers: &[Solver], stop: StoppingRule) -> Result<Vec<ResultRow>> {
    let mut grid = cfg.alpha_grid.clone();
    grid.sort_by(f64::total_cmp);
    let cells: Vec<usize> = (0..cfg.n_instances).collect();
    run_cells(cells, |inst| {
        let seed = instance_seed(cfg.seed, inst);
        let data = MscInstance::generate(&point.params, seed)?;
        let mixing = MixingOperator::Dense(data.mixing.clone());
        let x0 = DenseMatrix::zeros(point.params.d, point.params.r);
        let mut rows = Vec::new();
        let mut push = |pi: usize, label: String, solver: Solver, alpha: f64| -> Result<()> {
            let start = Instant::now();
            let rep = solver.solve(&data.y, &data.dict, &mixing, point.params.k, alpha, &x0, stop)?;
            rows.push(ResultRow {
                test: cfg.test,
                point_index: pi,
                point: label,
                method: solver.name().into(),
                instance: inst,
                instance_seed: seed,
                init: 0,
                init_seed: 0,
                alpha: Some(alpha),
                recovery: Some(support_recovery(rep.codes.support(), data.codes.support(), false)?),
                rel_error: None,
                sam: None,
                iterations: rep.iterations,
                wall_time: start.elapsed().as_secs_f64(),
            });
            Ok(())
        };
        for &solver in solvers {
            for (gi, &alpha) in grid.iter().enumerate() {
                push(gi, format!("alpha={alpha}"), solver, alpha)?;
            }
            let (best, _) = best_alpha(&data, solver, point.params.k, stop, &grid)?;
            for (di, &dev) in cfg.deviations.iter().enumerate() {
                let alpha = (best * (1.0 + dev)).clamp(0.0, 1.0);
                push(grid.len() + di, format!("deviation={}%", dev * 100.0), solver, alpha)?;
            }
        }
        Ok(rows)
    })
}
