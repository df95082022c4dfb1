//! Missing-row completion of hyperspectral-like images and denoising of
//! smooth nonnegative tensors.

use std::time::Instant;

use dlra_core::dictionaries::{build_bspline_dictionary, build_dct2_dictionary};
use dlra_core::dlra::{
    ao_dlra, complete_missing_rows, CompletionParams, DlraData, DlraFactors, DlraInit, DlraModel, ModeConstraint,
    ModelKind, TunerConfig, LRA_SWEEPS,
};
use dlra_core::linalg::{DenseMatrix, Dictionary, Support};
use dlra_core::msc::omp;
use dlra_core::synth::{add_noise_snr, derive_seed, gen_codes, rng_from_seed, uniform_matrix};
use dlra_core::tensor::{cpd_als, cpd_reconstruct, CpdFactors, Tensor3};
use rand::seq::index::sample;
use rand::Rng;

use super::{init_seed, instance_seed, run_cells};
use crate::config::ExperimentConfig;
use crate::error::{Result, ToolError};
use crate::io::{read_mask, read_matrix_csv, read_tensor};
use crate::metrics::{rel_error, sam, support_recovery};
use crate::table::ResultRow;

fn fixed_alpha(cfg: &ExperimentConfig, method: &str) -> Result<f64> {
    cfg.alpha
        .fixed_for(method)
        .ok_or_else(|| ToolError::Config(format!("{} needs a fixed alpha", cfg.test)))
}

/// Smooth abundance maps times smooth spectra: `r` Gaussian blobs over the
/// `h×w` patch and `r` spectra made of three bumps each, all nonnegative.
fn smooth_image(h: usize, w: usize, bands: usize, r: usize, seed: u64) -> DenseMatrix {
    let mut rng = rng_from_seed(seed);
    let side = h.max(w) as f64;
    let blobs: Vec<(f64, f64, f64)> = (0..r)
        .map(|_| (rng.random::<f64>() * h as f64, rng.random::<f64>() * w as f64, side * (0.15 + 0.35 * rng.random::<f64>())))
        .collect();
    let abundances = DenseMatrix::from_fn(h * w, r, |pix, l| {
        let (p, q) = ((pix / w) as f64, (pix % w) as f64);
        let (cp, cq, s) = blobs[l];
        (-((p - cp).powi(2) + (q - cq).powi(2)) / (2.0 * s * s)).exp()
    });
    let bumps: Vec<Vec<(f64, f64, f64)>> = (0..r)
        .map(|_| {
            (0..3)
                .map(|_| (rng.random::<f64>(), 0.05 + 0.15 * rng.random::<f64>(), 0.2 + 0.8 * rng.random::<f64>()))
                .collect()
        })
        .collect();
    let spectra = DenseMatrix::from_fn(bands, r, |b, l| {
        let t = if bands > 1 { b as f64 / (bands - 1) as f64 } else { 0.0 };
        bumps[l].iter().map(|(c, s, a)| a * (-(t - c).powi(2) / (2.0 * s * s)).exp()).sum()
    });
    abundances.matmul_t(&spectra)
}

struct Image {
    /// Noisy image, pixels by bands.
    y: DenseMatrix,
    /// Reference for the scores: the noiseless image when synthetic.
    reference: DenseMatrix,
    missing: Vec<usize>,
}

fn completion_image(cfg: &ExperimentConfig, dict: &Dictionary, seed: u64) -> Result<Image> {
    let n_pix = cfg.n * cfg.m;
    let clean = match &cfg.data {
        Some(path) => read_matrix_csv(path)?,
        None if cfg.generator == "sparse" => {
            let codes = gen_codes(dict.n_atoms(), cfg.r, cfg.k, derive_seed(seed, 2), false)?;
            let spectra = uniform_matrix(cfg.m2, cfg.r, &mut rng_from_seed(derive_seed(seed, 1)));
            dict.matrix().matmul(codes.values()).matmul_t(&spectra)
        }
        None => smooth_image(cfg.n, cfg.m, cfg.m2, cfg.r, derive_seed(seed, 1)),
    };
    if clean.rows() != n_pix {
        return Err(ToolError::Config(format!("image has {} pixels, patch {}x{} needs {n_pix}", clean.rows(), cfg.n, cfg.m)));
    }
    let y = if cfg.data.is_some() { clean.clone() } else { add_noise_snr(&clean, cfg.snr_db[0], derive_seed(seed, 3))? };
    let missing = match &cfg.mask {
        Some(path) => read_mask(path)?,
        None => {
            let count = (cfg.missing_fraction * n_pix as f64).round() as usize;
            let mut idx = sample(&mut rng_from_seed(derive_seed(seed, 6)), n_pix, count).into_vec();
            idx.sort_unstable();
            idx
        }
    };
    if let Some(&i) = missing.iter().find(|&&i| i >= n_pix) {
        return Err(ToolError::Config(format!("missing pixel {i} outside the {n_pix}-pixel patch")));
    }
    Ok(Image { y, reference: clean, missing })
}

/// Columnwise OMP on the observed rows of `dict`, predicted on the missing
/// rows.
pub fn omp_fill(y_obs: &DenseMatrix, dict: &Dictionary, observed: &[usize], missing: &[usize], k: usize) -> Result<DenseMatrix> {
    let (restricted, norms) = dict.restrict_rows(observed)?;
    let dm = dict.matrix().select_rows(missing);
    let mut out = DenseMatrix::zeros(missing.len(), y_obs.cols());
    for j in 0..y_obs.cols() {
        let fit = omp(&y_obs.column(j), &restricted, k)?;
        let coef: Vec<f64> = fit.coefficients.iter().zip(&norms).map(|(c, s)| c / s).collect();
        out.set_column(j, &dm.mul_vec(&coef));
    }
    Ok(out)
}

/// Runs the `completion` test.
pub(super) fn completion(cfg: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    if cfg.d != cfg.n * cfg.m {
        return Err(ToolError::Config(format!("the cosine dictionary of a {}x{} patch has {} atoms, d is {}", cfg.n, cfg.m, cfg.n * cfg.m, cfg.d)));
    }
    let dict = build_dct2_dictionary(cfg.n, cfg.m)?;
    let alpha = fixed_alpha(cfg, "dmf")?;
    let want_dmf = cfg.solvers.is_empty() || cfg.solvers.iter().any(|s| s == "dmf");
    let want_omp = cfg.solvers.is_empty() || cfg.solvers.iter().any(|s| s == "omp");
    let n_instances = if cfg.data.is_some() { 1 } else { cfg.n_instances };
    let cells: Vec<(usize, usize, usize)> = (0..n_instances)
        .flat_map(|i| (0..cfg.k_grid.len()).flat_map(move |p| (0..cfg.n_inits).map(move |j| (i, p, j))))
        .collect();
    run_cells(cells, |(inst, pi, init)| {
        let k = cfg.k_grid[pi];
        let seed = instance_seed(cfg.seed, inst);
        let img = completion_image(cfg, &dict, seed)?;
        let observed: Vec<usize> = (0..img.y.rows()).filter(|i| img.missing.binary_search(i).is_err()).collect();
        let y_obs = img.y.select_rows(&observed);
        let truth = img.reference.select_rows(&img.missing);
        let mut rows = Vec::new();
        let mut push = |method: &str, init_seed: u64, alpha: Option<f64>, fill: &DenseMatrix, iterations: usize, wall_time: f64| -> Result<()> {
            rows.push(ResultRow {
                test: cfg.test,
                point_index: pi,
                point: format!("k={k}"),
                method: method.into(),
                instance: inst,
                instance_seed: seed,
                init,
                init_seed,
                alpha,
                recovery: None,
                rel_error: Some(rel_error(&truth, fill)?),
                sam: Some(sam(&truth, fill)?.0),
                iterations,
                wall_time,
            });
            Ok(())
        };
        if want_dmf {
            let iseed = init_seed(seed, init);
            let params = CompletionParams {
                kind: ModelKind::MatrixFactorization,
                rank: cfg.r,
                k,
                tuner: TunerConfig::uniform(alpha, cfg.r, cfg.tau)?,
                l_max: cfg.l_max,
                init: DlraInit::Random { seed: iseed },
            };
            let start = Instant::now();
            let res = complete_missing_rows(&y_obs, &dict, &img.missing, &params)?;
            push("dmf", iseed, Some(alpha), &res.missing_rows, res.report.iterations, start.elapsed().as_secs_f64())?;
        }
        if want_omp && init == 0 {
            let start = Instant::now();
            let fill = omp_fill(&y_obs, &dict, &observed, &img.missing, k)?;
            push("omp", 0, None, &fill, 0, start.elapsed().as_secs_f64())?;
        }
        Ok(rows)
    })
}

const DENOISE_METHODS: [&str; 6] = ["hals", "hals_sc1", "hals_sc2", "ao_dcpd1", "ao_dcpd2", "ao_nndcpd2"];

/// Columnwise OMP codes of `a`, clipped at zero when `nonneg`.
fn code_columns(a: &DenseMatrix, dict: &Dictionary, k: usize, nonneg: bool) -> Result<DenseMatrix> {
    let mut x = DenseMatrix::zeros(dict.n_atoms(), a.cols());
    for i in 0..a.cols() {
        let mut col = omp(&a.column(i), dict, k)?.coefficients;
        if nonneg {
            col.iter_mut().for_each(|v| *v = v.max(0.0));
        }
        x.set_column(i, &col);
    }
    Ok(x)
}

/// Runs the `denoise` test.
pub(super) fn denoise(cfg: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    let methods: Vec<&str> = if cfg.solvers.is_empty() {
        DENOISE_METHODS.to_vec()
    } else {
        cfg.solvers
            .iter()
            .map(|s| {
                DENOISE_METHODS
                    .iter()
                    .copied()
                    .find(|m| m == s)
                    .ok_or_else(|| ToolError::Config(format!("unknown method '{s}' for denoise")))
            })
            .collect::<Result<_>>()?
    };
    let alpha = fixed_alpha(cfg, "ao")?;
    let real = match &cfg.data {
        Some(path) => Some(read_tensor(path)?),
        None => None,
    };
    let dims = real.as_ref().map_or((cfg.n, cfg.m, cfg.m2), Tensor3::dims);
    let d1 = build_bspline_dictionary(dims.0, cfg.d)?;
    let d2 = build_bspline_dictionary(dims.1, cfg.d2)?;
    let (k1, k2) = (cfg.k, if cfg.k2 == 0 { cfg.k } else { cfg.k2 });
    let n_instances = if real.is_some() { 1 } else { cfg.n_instances };
    let cells: Vec<(usize, usize)> = (0..n_instances).flat_map(|i| (0..cfg.n_inits).map(move |j| (i, j))).collect();
    run_cells(cells, |(inst, init)| {
        let seed = instance_seed(cfg.seed, inst);
        let iseed = init_seed(seed, init);
        let (t, clean, truth) = match &real {
            Some(t) => (t.clone(), t.unfold1(), None),
            None => {
                let x1 = gen_codes(cfg.d, cfg.r, k1, derive_seed(seed, 2), true)?;
                let x2 = gen_codes(cfg.d2, cfg.r, k2, derive_seed(seed, 4), true)?;
                let c = uniform_matrix(dims.2, cfg.r, &mut rng_from_seed(derive_seed(seed, 5)));
                let f = CpdFactors::new(d1.matrix().matmul(x1.values()), d2.matrix().matmul(x2.values()), c)?;
                let clean = cpd_reconstruct(&f).unfold1();
                let noisy = add_noise_snr(&clean, cfg.snr_db[0], derive_seed(seed, 3))?;
                (Tensor3::refold(&noisy, 0, dims)?, clean, Some(x1.support().clone()))
            }
        };
        let data = DlraData::Tensor(t);
        let m0 = ModeConstraint::new(d1.clone(), k1, false)?;
        let m1 = ModeConstraint::new(d2.clone(), k2, false)?;
        let one = DlraModel::new(ModelKind::Cpd, m0.clone(), None)?;
        let two = DlraModel::new(ModelKind::Cpd, m0.clone(), Some(m1.clone()))?;
        let two_nn = DlraModel::new(ModelKind::NonnegCpd, m0, Some(m1))?;

        let start = Instant::now();
        let hals = match &data {
            DlraData::Tensor(t) => cpd_als(t, cfg.r, LRA_SWEEPS, true, iseed)?,
            DlraData::Matrix(_) => unreachable!(),
        };
        let hals_time = start.elapsed().as_secs_f64();
        let seeded = |nonneg: bool, both: bool| -> Result<DlraFactors> {
            let x = code_columns(&hals.a, &d1, k1, nonneg)?;
            let (b, x2) = if both {
                let x2 = code_columns(&hals.b, &d2, k2, nonneg)?;
                (d2.matrix().matmul(&x2), Some(x2))
            } else {
                (hals.b.clone(), None)
            };
            Ok(DlraFactors { x, b, c: Some(hals.c.clone()), x2 })
        };

        let mut rows = Vec::new();
        let mut push = |method: &str, a: &DenseMatrix, f_b: &DenseMatrix, f_c: &DenseMatrix, x: Option<&DenseMatrix>, alpha: Option<f64>, iterations: usize, wall_time: f64| -> Result<()> {
            let fit = cpd_reconstruct(&CpdFactors::new(a.clone(), f_b.clone(), f_c.clone())?).unfold1();
            let recovery = match (x, &truth) {
                (Some(x), Some(t)) => Some(support_recovery(&Support::from_values(x), t, true)?),
                _ => None,
            };
            rows.push(ResultRow {
                test: cfg.test,
                point_index: 0,
                point: format!("snr_db={}", cfg.snr_db[0]),
                method: method.into(),
                instance: inst,
                instance_seed: seed,
                init,
                init_seed: iseed,
                alpha,
                recovery,
                rel_error: Some(rel_error(&clean, &fit)?),
                sam: None,
                iterations,
                wall_time,
            });
            Ok(())
        };
        let c = hals.c.clone();
        for &method in &methods {
            let start = Instant::now();
            match method {
                "hals" => push(method, &hals.a, &hals.b, &c, None, None, 0, hals_time)?,
                "hals_sc1" | "hals_sc2" => {
                    let f = seeded(false, method == "hals_sc2")?;
                    let t = hals_time + start.elapsed().as_secs_f64();
                    push(method, &d1.matrix().matmul(&f.x), &f.b, &c, Some(&f.x), None, 0, t)?;
                }
                _ => {
                    let (model, nonneg, both) = match method {
                        "ao_dcpd1" => (&one, false, false),
                        "ao_dcpd2" => (&two, false, true),
                        _ => (&two_nn, true, true),
                    };
                    let rep = ao_dlra(&data, model, &TunerConfig::uniform(alpha, cfg.r, cfg.tau)?, cfg.l_max, &seeded(nonneg, both)?)?;
                    let t = hals_time + start.elapsed().as_secs_f64();
                    let f = &rep.best;
                    push(method, &f.a(model), &f.b, f.c.as_ref().expect("tensor factors"), Some(&f.x), Some(alpha), rep.iterations, t)?;
                }
            }
        }
        Ok(rows)
    })
}
