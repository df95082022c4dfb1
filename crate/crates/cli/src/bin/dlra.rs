use std::fmt::Write as _;
use std::path::PathBuf;

use anyhow::{bail, Result};
use clap::{Parser, Subcommand, ValueEnum};
use dlra_core::dlra::{
    ao_dlra, complete_missing_rows, init_by_lra, random_init, CompletionParams, DlraData, DlraInit, DlraModel,
    DlraReport, ModeConstraint, ModelKind, TunerConfig,
};
use dlra_core::linalg::{normalize_columns, DenseMatrix};
use dlra_tools::io::{read_mask, read_matrix_csv, read_tensor, write_matrix_csv, write_text};

/// Dictionary-constrained low-rank models.
#[derive(Parser)]
#[command(version)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum Init {
    Lra,
    Random,
}

#[derive(clap::Args)]
struct Fit {
    /// Dictionary of the first mode, one atom per column.
    #[arg(long)]
    dict: PathBuf,
    #[arg(long)]
    rank: usize,
    #[arg(long)]
    k: usize,
    #[arg(long, default_value_t = 1e-3)]
    alpha: f64,
    #[arg(long, default_value_t = 20)]
    tau: usize,
    #[arg(long, default_value_t = 100)]
    iters: usize,
    #[arg(long, value_enum, default_value_t = Init::Lra)]
    init: Init,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Cmd {
    /// Fits a model and writes its factors.
    Run {
        #[arg(long)]
        model: ModelKind,
        /// CSV matrix, or a tensor file for the CPD models.
        #[arg(long)]
        data: PathBuf,
        /// Dictionary of the second mode (CPD models only).
        #[arg(long)]
        dict2: Option<PathBuf>,
        #[arg(long)]
        k2: Option<usize>,
        #[command(flatten)]
        fit: Fit,
    },
    /// Predicts missing rows of a matrix from the observed ones.
    Complete {
        /// Full-size CSV matrix; the values of missing rows are ignored.
        #[arg(long)]
        data: PathBuf,
        /// Missing row indices, one per line.
        #[arg(long)]
        mask: PathBuf,
        #[command(flatten)]
        fit: Fit,
    },
}

fn report_text(rep: &DlraReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "iterations = {}", rep.iterations);
    let _ = writeln!(s, "best_cost = {:e}", rep.best_cost);
    let _ = writeln!(s, "tuner_warnings = {}", rep.tuner_warnings);
    let trace: Vec<String> = rep.cost_trace.iter().map(|c| format!("{c:e}")).collect();
    let _ = writeln!(s, "cost_trace = {}", trace.join(","));
    s
}

fn unscale(x: &DenseMatrix, norms: &[f64]) -> DenseMatrix {
    DenseMatrix::from_fn(x.rows(), x.cols(), |i, j| x[(i, j)] / norms[i])
}

fn main() -> Result<()> {
    match Cli::parse().cmd {
        Cmd::Run { model, data, dict2, k2, fit } => {
            let (dict, norms) = normalize_columns(&read_matrix_csv(&fit.dict)?)?;
            let data = if model.is_cpd() {
                DlraData::Tensor(read_tensor(&data)?)
            } else {
                DlraData::Matrix(read_matrix_csv(&data)?)
            };
            let mode1 = match (&dict2, model.is_cpd()) {
                (Some(_), false) => bail!("--dict2 needs a CPD model"),
                (Some(p), true) => {
                    let (d2, n2) = normalize_columns(&read_matrix_csv(p)?)?;
                    Some((ModeConstraint::new(d2, k2.unwrap_or(fit.k), false)?, n2))
                }
                (None, _) => None,
            };
            let norms2 = mode1.as_ref().map(|(_, n)| n.clone());
            let model = DlraModel::new(model, ModeConstraint::new(dict, fit.k, false)?, mode1.map(|(m, _)| m))?;
            let init = match fit.init {
                Init::Lra => init_by_lra(&data, &model, fit.rank, fit.seed)?,
                Init::Random => random_init(&data, &model, fit.rank, fit.seed)?,
            };
            let rep = ao_dlra(&data, &model, &TunerConfig::uniform(fit.alpha, fit.rank, fit.tau)?, fit.iters, &init)?;
            std::fs::create_dir_all(&fit.out)?;
            let out = |name: &str| fit.out.join(name);
            let f = &rep.best;
            write_matrix_csv(&out("x.csv"), &unscale(&f.x, &norms))?;
            write_matrix_csv(&out("a.csv"), &f.a(&model))?;
            write_matrix_csv(&out("b.csv"), &f.b)?;
            if let Some(c) = &f.c {
                write_matrix_csv(&out("c.csv"), c)?;
            }
            if let (Some(x2), Some(n2)) = (&f.x2, &norms2) {
                write_matrix_csv(&out("x2.csv"), &unscale(x2, n2))?;
            }
            write_text(&out("report.txt"), &report_text(&rep))?;
            eprintln!("best cost {:.6e} after {} iterations", rep.best_cost, rep.iterations);
        }
        Cmd::Complete { data, mask, fit } => {
            let y = read_matrix_csv(&data)?;
            let (dict, _) = normalize_columns(&read_matrix_csv(&fit.dict)?)?;
            let missing = read_mask(&mask)?;
            if y.rows() != dict.n_rows() {
                bail!("data has {} rows, dictionary {}", y.rows(), dict.n_rows());
            }
            let observed: Vec<usize> = (0..y.rows()).filter(|i| missing.binary_search(i).is_err()).collect();
            let params = CompletionParams {
                kind: ModelKind::MatrixFactorization,
                rank: fit.rank,
                k: fit.k,
                tuner: TunerConfig::uniform(fit.alpha, fit.rank, fit.tau)?,
                l_max: fit.iters,
                init: match fit.init {
                    Init::Lra => DlraInit::Lra { seed: fit.seed },
                    Init::Random => DlraInit::Random { seed: fit.seed },
                },
            };
            let res = complete_missing_rows(&y.select_rows(&observed), &dict, &missing, &params)?;
            if res.few_observed_rows {
                eprintln!("warning: fewer than 2k observed rows");
            }
            let mut full = y.clone();
            for (t, &i) in missing.iter().enumerate() {
                full.row_mut(i).copy_from_slice(res.missing_rows.row(t));
            }
            std::fs::create_dir_all(&fit.out)?;
            write_matrix_csv(&fit.out.join("completed.csv"), &full)?;
            write_text(&fit.out.join("report.txt"), &report_text(&res.report))?;
            eprintln!("observed residual {:.6e}; output in {}", res.observed_residual, fit.out.display());
        }
    }
    Ok(())
}
