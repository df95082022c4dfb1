//! Solvers for mixed sparse coding, `min ‖Y − D·X·Bᵀ‖_F²` with column-wise
//! k-sparse `X`, and for dictionary-constrained low-rank approximations
//! (matrix factorization and order-3 canonical polyadic decomposition whose
//! first factor is `D·X`).
//!
//! The crate is `no_std` and only needs an allocator. The `std` feature adds
//! wall-clock timing to solver reports.

#![cfg_attr(not(any(feature = "std", test)), no_std)]
// `!(x > 0.0)` is the NaN-rejecting form used for argument checks.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod dictionaries;
pub mod dlra;
pub mod error;
pub mod linalg;
pub mod math;
pub mod msc;
pub mod prox;
pub mod synth;
pub mod tensor;

pub use error::{Error, Result};
