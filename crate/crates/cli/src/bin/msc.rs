use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use dlra_core::linalg::{normalize_columns, DenseMatrix, MixingOperator};
use dlra_core::msc::{Solver, StoppingRule};
use dlra_tools::config::{ExperimentConfig, TestName};
use dlra_tools::experiments::{run_experiment, write_outputs};
use dlra_tools::io::{read_matrix_csv, write_matrix_csv};

/// Mixed sparse coding solvers and benchmarks.
#[derive(Parser)]
#[command(version)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Runs a benchmark and writes results.csv, timings.csv and run_meta.txt.
    Bench {
        test_name: TestName,
        /// key = value file; missing keys take the test defaults.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        /// Extra overrides, e.g. --set n_instances=5.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Solves one instance Y ≈ D·X·Bᵀ with columnwise k-sparse X.
    Solve {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        dict: PathBuf,
        #[arg(long)]
        mixing: PathBuf,
        #[arg(long)]
        solver: Solver,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = 1e-3)]
        alpha: f64,
        #[arg(long, default_value_t = 1e-6)]
        rel_tol: f64,
        #[arg(long, default_value_t = 1000)]
        max_iter: usize,
        /// Where to write X; printed to stdout otherwise.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> Result<()> {
    match Cli::parse().cmd {
        Cmd::Bench { test_name, config, out, seed, jobs, overrides } => {
            let mut cfg = match &config {
                Some(path) => ExperimentConfig::load(path, Some(test_name))?,
                None => ExperimentConfig::defaults(test_name),
            };
            if cfg.test != test_name {
                bail!("config is for {} but {test_name} was requested", cfg.test);
            }
            for kv in &overrides {
                let (k, v) = kv.split_once('=').with_context(|| format!("--set {kv}: expected KEY=VALUE"))?;
                cfg.set(k.trim(), v.trim())?;
            }
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if out.is_some() {
                cfg.out = out;
            }
            cfg.validate()?;
            let dir = cfg.out.clone().unwrap_or_else(|| PathBuf::from(format!("out/{test_name}")));
            let table = run_experiment(&cfg, jobs)?;
            write_outputs(&dir, &cfg, &table)?;
            eprintln!("{} rows written to {}", table.rows.len(), dir.display());
        }
        Cmd::Solve { data, dict, mixing, solver, k, alpha, rel_tol, max_iter, out } => {
            let y = read_matrix_csv(&data)?;
            let (dict, norms) = normalize_columns(&read_matrix_csv(&dict)?)?;
            let b = MixingOperator::Dense(read_matrix_csv(&mixing)?);
            let x0 = DenseMatrix::zeros(dict.n_atoms(), b.rank());
            let rep = solver.solve(&y, &dict, &b, k, alpha, &x0, StoppingRule::new(rel_tol, max_iter)?)?;
            // Codes of the dictionary as given, not of its normalized copy.
            let x = DenseMatrix::from_fn(x0.rows(), x0.cols(), |i, j| rep.codes.values()[(i, j)] / norms[i]);
            eprintln!(
                "{solver}: {} iterations, {:?}, cost {:.6e}",
                rep.iterations,
                rep.termination,
                rep.cost_trace.last().copied().unwrap_or(f64::NAN)
            );
            match out {
                Some(path) => write_matrix_csv(&path, &x)?,
                None => {
                    for i in 0..x.rows() {
                        let row: Vec<String> = x.row(i).iter().map(|v| format!("{v:e}")).collect();
                        println!("{}", row.join(","));
                    }
                }
            }
        }
    }
    Ok(())
}
