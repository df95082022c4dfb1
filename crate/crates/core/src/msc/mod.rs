//! Heuristics for mixed sparse coding: TrickOMP, HOMP, accelerated IHT,
//! Block-FISTA, Mixed-FISTA and their nonnegative variants.
//!
//! All iterative solvers share [`StoppingRule`]: they stop when the
//! absolute relative change of the traced cost drops below `rel_tol` or after
//! `max_iter` iterations. FISTA methods trace the penalized objective
//! `½‖Y − DXBᵀ‖² + penalty`; IHT and HOMP trace the raw residual
//! `‖Y − DXBᵀ‖²`.

mod bound;
mod debias;
mod fista;
mod homp;
mod iht;
mod omp;
mod trick;

use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

pub use bound::{check_reduction_bound, smallest_restricted_singular_value, ENUMERATION_LIMIT};
pub use debias::{debias, debias_gram, truncate_support};
pub use fista::{
    block_fista, block_fista_gram, lambda_max_block, lambda_max_mixed, mixed_fista,
    mixed_fista_gram, FistaRun,
};
pub use homp::{homp, homp_gram};
pub use iht::{iht, iht_gram};
pub use omp::{omp, omp_gram, OmpResult};
pub use trick::trick_omp;

pub use crate::linalg::{SparseCodes, Support};

use crate::error::{Error, Result};
use crate::linalg::{DenseMatrix, Dictionary, MixingOperator};

/// Relative-decrease stopping rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StoppingRule {
    pub rel_tol: f64,
    pub max_iter: usize,
}

impl Default for StoppingRule {
    fn default() -> Self {
        Self {
            rel_tol: 1e-6,
            max_iter: 1000,
        }
    }
}

impl StoppingRule {
    pub fn new(rel_tol: f64, max_iter: usize) -> Result<Self> {
        if !(rel_tol > 0.0) {
            return Err(Error::InvalidArgument("rel_tol must be positive".into()));
        }
        Ok(Self { rel_tol, max_iter })
    }

    /// `|cur − prev| / prev < rel_tol`; a zero previous cost counts as
    /// converged.
    pub fn converged(&self, prev: f64, cur: f64) -> bool {
        if prev == 0.0 {
            return true;
        }
        (cur - prev).abs() / prev.abs() < self.rel_tol
    }
}

/// Why a solver returned.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    /// Relative cost change fell below tolerance, or a fixed number of
    /// greedy steps completed.
    Tolerance,
    MaxIter,
    /// HOMP rejected the update of every column in one sweep.
    RestartAllColumns,
}

impl fmt::Display for Termination {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Tolerance => "tolerance",
            Self::MaxIter => "max_iter",
            Self::RestartAllColumns => "restart_all_columns",
        })
    }
}

/// Output of an MSC solver.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverReport {
    /// Debiased codes.
    pub codes: SparseCodes,
    /// Last iterate before the final fixed-support least squares.
    pub iterate: DenseMatrix,
    /// Traced cost, starting with the cost at initialization.
    pub cost_trace: Vec<f64>,
    pub iterations: usize,
    pub termination: Termination,
    /// Seconds; zero when built without the `std` feature.
    pub wall_time: f64,
}

/// The MSC solver families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Solver {
    TrickOmp,
    Homp,
    Iht,
    BlockFista,
    MixedFista,
    NnBlockFista,
}

impl Solver {
    pub const ALL: [Solver; 6] = [
        Solver::TrickOmp,
        Solver::Homp,
        Solver::Iht,
        Solver::BlockFista,
        Solver::MixedFista,
        Solver::NnBlockFista,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Self::TrickOmp => "trick_omp",
            Self::Homp => "homp",
            Self::Iht => "iht",
            Self::BlockFista => "block_fista",
            Self::MixedFista => "mixed_fista",
            Self::NnBlockFista => "nn_block_fista",
        }
    }

    /// Whether the solver takes a regularization ratio.
    pub fn is_convex(&self) -> bool {
        matches!(self, Self::BlockFista | Self::MixedFista | Self::NnBlockFista)
    }

    /// Runs the solver with a shared regularization ratio `alpha` (ignored by
    /// the non-convex methods).
    #[allow(clippy::too_many_arguments)]
    pub fn solve(
        &self,
        y: &DenseMatrix,
        dict: &Dictionary,
        mixing: &MixingOperator,
        k: usize,
        alpha: f64,
        x0: &DenseMatrix,
        stop: StoppingRule,
    ) -> Result<SolverReport> {
        let r = mixing.rank();
        match self {
            Self::TrickOmp => trick_omp(y, dict, mixing, k),
            Self::Homp => homp(y, dict, mixing, k, x0, stop),
            Self::Iht => iht(y, dict, mixing, k, x0, stop),
            Self::BlockFista => block_fista(y, dict, mixing, &alloc::vec![alpha; r], k, x0, stop, false),
            Self::NnBlockFista => block_fista(y, dict, mixing, &alloc::vec![alpha; r], k, x0, stop, true),
            Self::MixedFista => mixed_fista(y, dict, mixing, alpha, k, x0, stop),
        }
    }
}

impl fmt::Display for Solver {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Solver {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .iter()
            .copied()
            .find(|v| v.name() == s)
            .ok_or_else(|| Error::InvalidArgument(alloc::format!("unknown solver '{s}'")))
    }
}

/// Wall-clock stopwatch; a no-op without `std`.
pub(crate) struct Stopwatch {
    #[cfg(feature = "std")]
    start: std::time::Instant,
}

impl Stopwatch {
    pub(crate) fn start() -> Self {
        Self {
            #[cfg(feature = "std")]
            start: std::time::Instant::now(),
        }
    }

    pub(crate) fn seconds(&self) -> f64 {
        #[cfg(feature = "std")]
        {
            self.start.elapsed().as_secs_f64()
        }
        #[cfg(not(feature = "std"))]
        {
            0.0
        }
    }
}

pub(crate) fn check_init(x0: &DenseMatrix, d: usize, r: usize) -> Result<()> {
    if x0.shape() != (d, r) {
        return Err(Error::Shape(alloc::format!(
            "initial codes are {:?}, expected ({d}, {r})",
            x0.shape()
        )));
    }
    Ok(())
}

pub(crate) fn check_k(k: usize, d: usize) -> Result<()> {
    if k == 0 || k > d {
        return Err(Error::InvalidArgument(alloc::format!(
            "sparsity level {k} outside [1, {d}]"
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stopping_rule_uses_absolute_relative_change() {
        let s = StoppingRule::default();
        assert!(s.converged(1.0, 1.0 + 1e-7));
        assert!(s.converged(1.0, 1.0 - 1e-7));
        assert!(!s.converged(1.0, 1.1));
        assert!(s.converged(0.0, 0.0));
        assert!(StoppingRule::new(0.0, 10).is_err());
    }

    #[test]
    fn solver_names_round_trip() {
        for s in Solver::ALL {
            assert_eq!(s.name().parse::<Solver>().unwrap(), s);
        }
        assert!("lars".parse::<Solver>().is_err());
    }
}
