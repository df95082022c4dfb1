//! Dictionary-constrained matrix and tensor factorization on synthetic data
//! with known sparse codes.

use std::time::Instant;

use dlra_core::dlra::{
    ao_dlra, init_by_lra, ipalm, random_init, DlraData, DlraFactors, DlraModel, DlraReport, ModeConstraint,
    ModelKind, TunerConfig,
};
use dlra_core::linalg::{DenseMatrix, Support};
use dlra_core::synth::{add_noise_snr, derive_seed, gen_codes, gen_dictionary, gen_mixing};
use dlra_core::tensor::{CpdFactors, Tensor3};

use super::{init_seed, instance_seed, run_cells};
use crate::config::{ExperimentConfig, TestName};
use crate::error::{Result, ToolError};
use crate::metrics::{rel_error, support_recovery};
use crate::table::ResultRow;

const DMF_METHODS: [&str; 3] = ["ao_random", "ipalm_random", "ao_ipalm_init"];
const DCPD_METHODS: [&str; 6] = ["ao_random", "ipalm_random", "ao_ipalm_init", "ao_lra_init", "ipalm_lra_init", "als_sc"];

struct Problem {
    data: DlraData,
    model: DlraModel,
    /// Noiseless data, unfolded along the constrained mode.
    clean: DenseMatrix,
    truth: Support,
}

fn generate(cfg: &ExperimentConfig, seed: u64) -> Result<Problem> {
    let dict = gen_dictionary(cfg.n, cfg.d, derive_seed(seed, 0))?;
    let b = gen_mixing(cfg.m, cfg.r, cfg.cond[0], derive_seed(seed, 1))?;
    let codes = gen_codes(cfg.d, cfg.r, cfg.k, derive_seed(seed, 2), false)?;
    let a = dict.matrix().matmul(codes.values());
    let (kind, clean, data) = if cfg.test == TestName::DcpdSynth {
        let c = gen_mixing(cfg.m2, cfg.r, cfg.cond[0], derive_seed(seed, 5))?;
        let f = CpdFactors::new(a, b, c)?;
        let clean = dlra_core::tensor::cpd_reconstruct(&f);
        let noisy = add_noise_snr(&clean.unfold1(), cfg.snr_db[0], derive_seed(seed, 3))?;
        let t = Tensor3::refold(&noisy, 0, clean.dims())?;
        (ModelKind::Cpd, clean.unfold1(), DlraData::Tensor(t))
    } else {
        let clean = a.matmul_t(&b);
        let noisy = add_noise_snr(&clean, cfg.snr_db[0], derive_seed(seed, 3))?;
        (ModelKind::MatrixFactorization, clean, DlraData::Matrix(noisy))
    };
    let model = DlraModel::new(kind, ModeConstraint::new(dict, cfg.k, false)?, None)?;
    Ok(Problem { data, model, clean, truth: codes.support().clone() })
}

fn methods(cfg: &ExperimentConfig) -> Result<Vec<&'static str>> {
    let all: &[&'static str] = if cfg.test == TestName::DcpdSynth { &DCPD_METHODS } else { &DMF_METHODS };
    if cfg.solvers.is_empty() {
        return Ok(all.to_vec());
    }
    cfg.solvers
        .iter()
        .map(|s| {
            all.iter()
                .copied()
                .find(|m| m == s)
                .ok_or_else(|| ToolError::Config(format!("unknown method '{s}' for {}", cfg.test)))
        })
        .collect()
}

/// Runs `dmf_synth` or `dcpd_synth`.
pub(super) fn run(cfg: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    let methods = methods(cfg)?;
    let alpha = cfg
        .alpha
        .fixed_for("ao")
        .ok_or_else(|| ToolError::Config(format!("{} needs a fixed alpha", cfg.test)))?;
    let tuner = TunerConfig::uniform(alpha, cfg.r, cfg.tau)?;
    let point = format!("snr_db={};cond={}", cfg.snr_db[0], cfg.cond[0]);
    let cells: Vec<(usize, usize)> =
        (0..cfg.n_instances).flat_map(|i| (0..cfg.n_inits).map(move |j| (i, j))).collect();
    run_cells(cells, |(inst, init)| {
        let seed = instance_seed(cfg.seed, inst);
        let iseed = init_seed(seed, init);
        let p = generate(cfg, seed)?;
        let mut rows = Vec::new();
        let mut push = |method: &str, f: &DlraFactors, iterations: usize, wall_time: f64| -> Result<()> {
            let fit = f.mixing()?.reconstruct(&f.a(&p.model));
            rows.push(ResultRow {
                test: cfg.test,
                point_index: 0,
                point: point.clone(),
                method: method.into(),
                instance: inst,
                instance_seed: seed,
                init,
                init_seed: iseed,
                alpha: method.starts_with("ao").then_some(alpha),
                recovery: Some(support_recovery(&Support::from_values(&f.x), &p.truth, true)?),
                rel_error: Some(rel_error(&p.clean, &fit)?),
                sam: None,
                iterations,
                wall_time,
            });
            Ok(())
        };
        let wants = |m: &str| methods.contains(&m);
        let timed = |f: &dyn Fn() -> Result<DlraReport>| -> Result<(DlraReport, f64)> {
            let start = Instant::now();
            let rep = f()?;
            Ok((rep, start.elapsed().as_secs_f64()))
        };

        let rand0 = random_init(&p.data, &p.model, cfg.r, iseed)?;
        if wants("ao_random") {
            let (rep, t) = timed(&|| Ok(ao_dlra(&p.data, &p.model, &tuner, cfg.l_max, &rand0)?))?;
            push("ao_random", &rep.best, rep.iterations, t)?;
        }
        if wants("ipalm_random") || wants("ao_ipalm_init") {
            let (ip, t) = timed(&|| Ok(ipalm(&p.data, &p.model, cfg.ipalm_iters, cfg.mu, &rand0)?))?;
            if wants("ipalm_random") {
                push("ipalm_random", &ip.best, ip.iterations, t)?;
            }
            if wants("ao_ipalm_init") {
                let (rep, t2) = timed(&|| Ok(ao_dlra(&p.data, &p.model, &tuner, cfg.l_max, &ip.best)?))?;
                push("ao_ipalm_init", &rep.best, rep.iterations, t + t2)?;
            }
        }
        if ["ao_lra_init", "ipalm_lra_init", "als_sc"].iter().any(|m| wants(m)) {
            let start = Instant::now();
            let lra = init_by_lra(&p.data, &p.model, cfg.r, iseed)?;
            let t = start.elapsed().as_secs_f64();
            if wants("als_sc") {
                push("als_sc", &lra, 0, t)?;
            }
            if wants("ao_lra_init") {
                let (rep, t2) = timed(&|| Ok(ao_dlra(&p.data, &p.model, &tuner, cfg.l_max, &lra)?))?;
                push("ao_lra_init", &rep.best, rep.iterations, t + t2)?;
            }
            if wants("ipalm_lra_init") {
                let (rep, t2) = timed(&|| Ok(ipalm(&p.data, &p.model, cfg.ipalm_iters, cfg.mu, &lra)?))?;
                push("ipalm_lra_init", &rep.best, rep.iterations, t + t2)?;
            }
        }
        Ok(rows)
    })
}
