//! Experiment runners, file formats and scoring for dictionary-based sparse
//! coding and low-rank models.

pub mod config;
pub mod error;
pub mod experiments;
pub mod io;
pub mod metrics;
pub mod table;
pub mod tuning;

pub use dlra_core;
pub use error::{Result, ToolError};
