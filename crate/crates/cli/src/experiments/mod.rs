//! Experiment runners. Every test expands into independent cells (one
//! instance at one parameter point) that run in parallel; rows are sorted
//! afterwards so the output does not depend on the thread count.

mod apps;
mod lowrank;
mod msc;

use std::fmt::Write as _;
use std::path::Path;

use dlra_core::synth::derive_seed;
use rayon::prelude::*;

use crate::config::{ExperimentConfig, TestName};
use crate::error::{Result, ToolError};
use crate::io::write_text;
use crate::table::{ResultRow, ResultTable};

/// Seed of instance `i`; shared by all points of a sweep so that points are
/// compared on paired instances.
pub fn instance_seed(master: u64, i: usize) -> u64 {
    derive_seed(master, i as u64)
}

/// Seed of initialization `j` on an instance.
pub fn init_seed(instance_seed: u64, j: usize) -> u64 {
    derive_seed(instance_seed, 100 + j as u64)
}

// Stream of the regularization tuning at a grid point, disjoint from the
// instance streams.
fn tuning_seed(master: u64, point: usize) -> u64 {
    derive_seed(derive_seed(master, u64::MAX), point as u64)
}

fn run_cells<C, F>(cells: Vec<C>, f: F) -> Result<Vec<ResultRow>>
where
    C: Send,
    F: Fn(C) -> Result<Vec<ResultRow>> + Sync + Send,
{
    let parts: Vec<Vec<ResultRow>> = cells.into_par_iter().map(f).collect::<Result<_>>()?;
    Ok(parts.into_iter().flatten().collect())
}

/// Runs the configured test on `jobs` worker threads.
pub fn run_experiment(cfg: &ExperimentConfig, jobs: usize) -> Result<ResultTable> {
    cfg.validate()?;
    if jobs == 0 {
        return Err(ToolError::Invalid("jobs must be at least 1".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| ToolError::Invalid(format!("thread pool: {e}")))?;
    let rows = pool.install(|| match cfg.test {
        TestName::DmfSynth | TestName::DcpdSynth => lowrank::run(cfg),
        TestName::Completion => apps::completion(cfg),
        TestName::Denoise => apps::denoise(cfg),
        _ => msc::run(cfg),
    })?;
    Ok(ResultTable::new(rows))
}

/// Writes `results.csv`, `timings.csv` and `run_meta.txt` into `dir`.
pub fn write_outputs(dir: &Path, cfg: &ExperimentConfig, table: &ResultTable) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(crate::error::io_err(dir))?;
    table.write(dir)?;
    let mut meta = String::new();
    let _ = writeln!(meta, "# dlra-tools {}", env!("CARGO_PKG_VERSION"));
    let _ = writeln!(meta, "# rows = {}", table.rows.len());
    meta.push_str(&cfg.to_text());
    write_text(&dir.join("run_meta.txt"), &meta)
}
