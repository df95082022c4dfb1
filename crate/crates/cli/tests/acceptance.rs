//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
//! fails. Pass criterion numbers as arguments to run a subset.

use std::process::ExitCode;
use std::time::Instant;

use dlra_core::dictionaries::build_dct2_dictionary;
use dlra_core::linalg::{fixed_support_ls, residual_cost, DenseMatrix, Dictionary, LsOptions, MixingOperator, Support};
use dlra_core::msc::{block_fista, homp, iht, mixed_fista, omp, Solver, StoppingRule};
use dlra_core::prox::{hard_threshold_k, l11_norm, prox_l11, sum_column_max_abs};
use dlra_core::synth::{add_noise_snr, derive_seed, gaussian_matrix, rng_from_seed, MscInstance, MscParams};
use dlra_tools::config::{AlphaSpec, ExperimentConfig, TestName};
use dlra_tools::experiments::run_experiment;
use dlra_tools::table::ResultTable;
use nalgebra::DMatrix;
use rand::Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn gaussian(rows: usize, cols: usize, seed: u64) -> DenseMatrix {
    gaussian_matrix(rows, cols, &mut rng_from_seed(seed))
}

fn random_subset(d: usize, k: usize, rng: &mut impl Rng) -> Vec<usize> {
    let mut s = rand::seq::index::sample(rng, d, k).into_vec();
    s.sort_unstable();
    s
}

fn mean_of(t: &ResultTable, method: &str, point: &str, metric: fn(&dlra_tools::table::ResultRow) -> Option<f64>) -> f64 {
    t.mean(method, point, metric).unwrap_or(f64::NAN)
}

fn recovery(t: &ResultTable, method: &str, point: &str) -> f64 {
    mean_of(t, method, point, |r| r.recovery)
}

fn c1_fixed_support() -> Outcome {
    let start = Instant::now();
    let mut rng = rng_from_seed(101);
    let mut worst = 0.0f64;
    for inst in 0..50u64 {
        let n = rng.random_range(2..=8);
        let m = rng.random_range(2..=8);
        let d = rng.random_range(2..=10);
        let r = rng.random_range(1..=3.min(m));
        let k = rng.random_range(1..=3.min(n).min(d));
        let dict = Dictionary::new(&gaussian(n, d, derive_seed(inst, 0))).map_err(|e| e.to_string())?;
        let b = gaussian(m, r, derive_seed(inst, 1));
        let y = gaussian(n, m, derive_seed(inst, 2));
        let support = Support::new((0..r).map(|_| random_subset(d, k, &mut rng)).collect());
        let x = fixed_support_ls(&y, &dict, &MixingOperator::Dense(b.clone()), &support, LsOptions::default())
            .map_err(|e| e.to_string())?;
        // Dense (D ⊗ B) restricted to the support, rows ordered i·m + j.
        let pairs: Vec<(usize, usize)> =
            (0..r).flat_map(|l| support.column(l).iter().map(move |&a| (a, l))).collect();
        let op = DMatrix::from_fn(n * m, pairs.len(), |row, c| {
            let (a, l) = pairs[c];
            dict.matrix()[(row / m, a)] * b[(row % m, l)]
        });
        let sol = op.svd(true, true).solve(&DMatrix::from_column_slice(n * m, 1, y.as_slice()), 1e-13)?;
        let mut oracle = DenseMatrix::zeros(d, r);
        for (c, &(a, l)) in pairs.iter().enumerate() {
            oracle[(a, l)] = sol[(c, 0)];
        }
        let rel = x.values().sub(&oracle).frobenius() / oracle.frobenius().max(f64::MIN_POSITIVE);
        worst = worst.max(rel);
    }
    let secs = start.elapsed().as_secs_f64();
    check(worst <= 1e-8 && secs < 5.0, format!("max rel error {worst:.2e}, {secs:.2} s"))
}

fn c2_prox() -> Outcome {
    fn objective(z: &DenseMatrix, x: &DenseMatrix, lambda: f64) -> f64 {
        0.5 * z.sub(x).frobenius_sq() + lambda * l11_norm(z)
    }
    // Subgradient descent with step 1/t on the strongly convex objective.
    fn oracle(x: &DenseMatrix, lambda: f64) -> f64 {
        let mut z = x.clone();
        let mut best = objective(&z, x, lambda);
        for t in 1..=20_000 {
            let norms: Vec<f64> = (0..z.cols()).map(|j| z.column(j).iter().map(|v| v.abs()).sum()).collect();
            let top = (0..z.cols()).max_by(|&a, &b| norms[a].total_cmp(&norms[b])).unwrap();
            let mut g = z.sub(x);
            for i in 0..z.rows() {
                if z[(i, top)] != 0.0 {
                    g[(i, top)] += lambda * z[(i, top)].signum();
                }
            }
            z.axpy(-1.0 / t as f64, &g);
            best = best.min(objective(&z, x, lambda));
        }
        best
    }
    let mut rng = rng_from_seed(202);
    let (mut worst, mut zero_errors) = (f64::NEG_INFINITY, 0);
    for inst in 0..100u64 {
        let d = rng.random_range(1..=6);
        let r = rng.random_range(1..=4);
        let x = gaussian(d, r, inst);
        let thr = sum_column_max_abs(&x);
        let lambda = rng.random_range(0.0..1.3) * thr;
        let z = prox_l11(&x, lambda, 1e-12);
        worst = worst.max(objective(&z, &x, lambda) - oracle(&x, lambda));
        if z.is_zero() != (lambda >= thr) {
            zero_errors += 1;
        }
        if !prox_l11(&x, thr, 1e-12).is_zero() || prox_l11(&x, thr * (1.0 - 1e-9), 1e-12).is_zero() {
            zero_errors += 1;
        }
    }
    check(worst <= 1e-6 && zero_errors == 0, format!("max excess over oracle {worst:.2e}, zero-condition errors {zero_errors}"))
}

fn c3_closed_forms() -> Outcome {
    let p = MscParams { n: 12, m: 10, d: 20, k: 3, r: 3, cond: 5.0, snr_db: 20.0, nonneg: false };
    let stop = StoppingRule::default();
    let mut nonzero = 0;
    for seed in 0..20u64 {
        let inst = MscInstance::generate(&p, derive_seed(303, seed)).map_err(|e| e.to_string())?;
        let b = MixingOperator::Dense(inst.mixing.clone());
        let x0 = DenseMatrix::zeros(p.d, p.r);
        let blk = block_fista(&inst.y, &inst.dict, &b, &[1.0; 3], p.k, &x0, stop, false).map_err(|e| e.to_string())?;
        let mix = mixed_fista(&inst.y, &inst.dict, &b, 1.0, p.k, &x0, stop).map_err(|e| e.to_string())?;
        nonzero += usize::from(!blk.iterate.is_zero()) + usize::from(!mix.iterate.is_zero());
    }
    let dict = build_dct2_dictionary(4, 4).map_err(|e| e.to_string())?;
    let mut worst = 0.0f64;
    for seed in 0..20u64 {
        let b = gaussian(7, 1, derive_seed(304, seed));
        let y = gaussian(16, 7, derive_seed(305, seed));
        let target = dict.matrix().t_matmul(&y).matmul(&b).scale(1.0 / b.frobenius_sq());
        let expect = hard_threshold_k(&target.column(0), 3);
        let rep = iht(&y, &dict, &MixingOperator::Dense(b), 3, &DenseMatrix::zeros(16, 1), StoppingRule::new(1e-14, 1000).unwrap())
            .map_err(|e| e.to_string())?;
        for (a, e) in rep.codes.values().column(0).iter().zip(&expect) {
            worst = worst.max((a - e).abs());
        }
    }
    check(nonzero == 0 && worst <= 1e-8, format!("nonzero α=1 outputs {nonzero}/40, IHT max deviation {worst:.2e}"))
}

fn c4_brute_force() -> Outcome {
    let p = MscParams { n: 6, m: 5, d: 8, k: 2, r: 1, cond: 1.0, snr_db: f64::INFINITY, nonneg: false };
    let stop = StoppingRule::default();
    let subsets: Vec<Vec<usize>> = (0..8).flat_map(|a| ((a + 1)..8).map(move |b| vec![a, b])).collect();
    let (mut homp_ok, mut fista_ok, mut omp_ok) = (0, 0, 0);
    for seed in 0..50u64 {
        // Gaussian atoms; the uniform ones are far more coherent.
        let mut inst = MscInstance::generate(&p, derive_seed(404, seed)).map_err(|e| e.to_string())?;
        inst.dict = Dictionary::new(&gaussian(6, 8, derive_seed(seed, 9))).map_err(|e| e.to_string())?;
        inst.y = add_noise_snr(&inst.dict.matrix().matmul(inst.codes.values()).matmul_t(&inst.mixing), p.snr_db, 0)
            .map_err(|e| e.to_string())?;
        let b = MixingOperator::Dense(inst.mixing.clone());
        let cost = |x: &DenseMatrix| residual_cost(&inst.y, inst.dict.matrix(), x, &b).unwrap();
        let fit = |s: Vec<usize>| fixed_support_ls(&inst.y, &inst.dict, &b, &Support::new(vec![s]), LsOptions::default()).unwrap();
        let best = subsets.iter().map(|s| cost(fit(s.clone()).values())).fold(f64::INFINITY, f64::min);
        let tol = 1e-8 * inst.y.frobenius_sq();
        let x0 = DenseMatrix::zeros(8, 1);
        let h = homp(&inst.y, &inst.dict, &b, 2, &x0, stop).map_err(|e| e.to_string())?;
        homp_ok += usize::from(cost(h.codes.values()) <= best + tol);
        let f = block_fista(&inst.y, &inst.dict, &b, &[1e-3], 2, &x0, stop, false).map_err(|e| e.to_string())?;
        fista_ok += usize::from(cost(f.codes.values()) <= best + tol);
        let yb = inst.y.matmul(&inst.mixing).scale(1.0 / inst.mixing.frobenius_sq());
        let o = omp(&yb.column(0), &inst.dict, 2).map_err(|e| e.to_string())?;
        omp_ok += usize::from(cost(fit(o.support).values()) <= best + tol);
    }
    check(
        homp_ok >= 45 && fista_ok >= 45 && omp_ok >= 45,
        format!("optimal residual reached: HOMP {homp_ok}/50, Block-FISTA {fista_ok}/50, OMP {omp_ok}/50 (need 45)"),
    )
}

fn c5_noise_regimes() -> Outcome {
    let mut cfg = ExperimentConfig::defaults(TestName::NoiseSweep);
    cfg.snr_db = vec![60.0, 20.0, 0.0];
    cfg.n_instances = 20;
    cfg.solvers = ["trick_omp", "homp", "iht", "block_fista"].map(String::from).to_vec();
    cfg.seed = 5;
    let start = Instant::now();
    let t = run_experiment(&cfg, 1).map_err(|e| e.to_string())?;
    let secs = start.elapsed().as_secs_f64();
    let rec = |m: &str, snr: &str| recovery(&t, m, &format!("snr_db={snr}"));
    let (tr60, ho60, bf60) = (rec("trick_omp", "60"), rec("homp", "60"), rec("block_fista", "60"));
    let (bf20, iht20, tr0) = (rec("block_fista", "20"), rec("iht", "20"), rec("trick_omp", "0"));
    let a = tr60 >= 90.0 && ho60 >= 90.0 && bf60 >= 90.0;
    let b = bf20 >= iht20 + 10.0;
    let c = tr60 - tr0 >= 20.0;
    check(
        a && b && c && secs < 600.0,
        format!(
            "(a) 60dB TrickOMP {tr60:.1} HOMP {ho60:.1} Block-FISTA {bf60:.1} [{}]; (b) 20dB Block-FISTA {bf20:.1} vs IHT {iht20:.1} [{}]; (c) TrickOMP 60->0dB {tr60:.1}->{tr0:.1} [{}]; {secs:.0} s",
            ok(a),
            ok(b),
            ok(c)
        ),
    )
}

fn ok(b: bool) -> &'static str {
    if b {
        "ok"
    } else {
        "fail"
    }
}

fn c6_conditioning() -> Outcome {
    let mut cfg = ExperimentConfig::defaults(TestName::CondSweep);
    cfg.cond = vec![1.0, 1e5];
    cfg.n_instances = 20;
    cfg.solvers = ["trick_omp", "block_fista"].map(String::from).to_vec();
    cfg.seed = 6;
    let t = run_experiment(&cfg, 1).map_err(|e| e.to_string())?;
    let (tr1, tr5) = (recovery(&t, "trick_omp", "cond=1"), recovery(&t, "trick_omp", "cond=100000"));
    let (bf1, bf5) = (recovery(&t, "block_fista", "cond=1"), recovery(&t, "block_fista", "cond=100000"));
    check(
        tr1 - tr5 >= 20.0 && (bf1 - bf5).abs() <= 10.0,
        format!("TrickOMP {tr1:.1} -> {tr5:.1}, Block-FISTA {bf1:.1} -> {bf5:.1}"),
    )
}

fn c7_runtime_order() -> Outcome {
    let p = MscParams { snr_db: 20.0, ..MscParams::default() };
    let stop = StoppingRule::default();
    let alpha = dlra_tools::tuning::auto_alpha(&p, Solver::BlockFista, 707, stop).map_err(|e| e.to_string())?;
    let mut total = [0.0f64; 3];
    let solvers = [Solver::TrickOmp, Solver::BlockFista, Solver::Homp];
    for seed in 0..10u64 {
        let inst = MscInstance::generate(&p, derive_seed(708, seed)).map_err(|e| e.to_string())?;
        let b = MixingOperator::Dense(inst.mixing.clone());
        let x0 = DenseMatrix::zeros(p.d, p.r);
        for (s, acc) in solvers.iter().zip(total.iter_mut()) {
            let start = Instant::now();
            s.solve(&inst.y, &inst.dict, &b, p.k, alpha, &x0, stop).map_err(|e| e.to_string())?;
            *acc += start.elapsed().as_secs_f64();
        }
    }
    let [tr, bf, ho] = total.map(|t| t / 10.0);
    check(tr < bf && bf < ho, format!("mean seconds TrickOMP {tr:.4}, Block-FISTA {bf:.4} (alpha {alpha:.1e}), HOMP {ho:.4}"))
}

fn c8_homp_monotone() -> Outcome {
    let p = MscParams { n: 12, m: 10, d: 20, k: 3, r: 3, cond: 50.0, snr_db: 10.0, nonneg: false };
    let mut violations = 0;
    for seed in 0..100u64 {
        let inst = MscInstance::generate(&p, derive_seed(808, seed)).map_err(|e| e.to_string())?;
        let b = MixingOperator::Dense(inst.mixing.clone());
        let rep = homp(&inst.y, &inst.dict, &b, p.k, &DenseMatrix::zeros(p.d, p.r), StoppingRule::default())
            .map_err(|e| e.to_string())?;
        violations += rep.cost_trace.windows(2).filter(|w| w[1] > w[0]).count();
    }
    check(violations == 0, format!("{violations} increases over 100 instances"))
}

fn c9_dlra_synthetic() -> Outcome {
    let mut dmf = ExperimentConfig::defaults(TestName::DmfSynth);
    dmf.n_instances = 20;
    dmf.solvers = ["ao_random", "ipalm_random"].map(String::from).to_vec();
    dmf.seed = 9;
    let t = run_experiment(&dmf, 1).map_err(|e| e.to_string())?;
    let point = t.points()[0].clone();
    let ao_rec = recovery(&t, "ao_random", &point);
    let ao_err = mean_of(&t, "ao_random", &point, |r| r.rel_error);
    let ip_err = mean_of(&t, "ipalm_random", &point, |r| r.rel_error);
    let mut dcpd = ExperimentConfig::defaults(TestName::DcpdSynth);
    dcpd.n_instances = 20;
    dcpd.solvers = ["ao_lra_init", "als_sc"].map(String::from).to_vec();
    dcpd.seed = 9;
    let t = run_experiment(&dcpd, 1).map_err(|e| e.to_string())?;
    let point = t.points()[0].clone();
    let (ao_cp, base) = (recovery(&t, "ao_lra_init", &point), recovery(&t, "als_sc", &point));
    check(
        ao_rec >= 40.0 && ao_err <= ip_err && ao_cp >= base,
        format!("DMF recovery {ao_rec:.1}, rel error AO {ao_err:.2e} vs iPALM {ip_err:.2e}; DCPD recovery AO {ao_cp:.1} vs ALS+coding {base:.1}"),
    )
}

fn c10_completion() -> Outcome {
    let mut cfg = ExperimentConfig::defaults(TestName::Completion);
    cfg.generator = "sparse".into();
    cfg.n = 10;
    cfg.m = 10;
    cfg.d = 100;
    cfg.m2 = 40;
    cfg.r = 4;
    cfg.k = 8;
    cfg.k_grid = vec![8];
    cfg.missing_fraction = 0.12;
    cfg.n_instances = 10;
    cfg.n_inits = 1;
    cfg.alpha = AlphaSpec::Fixed(5e-3);
    cfg.seed = 10;
    let t = run_experiment(&cfg, 1).map_err(|e| e.to_string())?;
    let dmf = mean_of(&t, "dmf", "k=8", |r| r.rel_error);
    let omp = mean_of(&t, "omp", "k=8", |r| r.rel_error);
    check(dmf <= 0.5 * omp, format!("missing-row rel error DMF {dmf:.3e} vs OMP {omp:.3e} (ratio {:.2})", dmf / omp))
}

// Small configurations of every runner.
fn tiny(test: TestName) -> ExperimentConfig {
    let mut c = ExperimentConfig::defaults(test);
    c.n_instances = 3;
    c.seed = 11;
    c.max_iter = 200;
    match test {
        TestName::NoiseSweep | TestName::NnCompare => c.snr_db = vec![30.0, 10.0],
        TestName::KdSweep => {
            c.k_grid = vec![2, 3];
            c.d_grid = vec![20, 30];
        }
        TestName::RuntimeSweep => {
            c.n_grid = vec![10, 20];
            c.m_grid = vec![10];
            c.k_grid = vec![2];
            c.d_grid = vec![20];
        }
        TestName::CondSweep => c.cond = vec![1.0, 1e3],
        TestName::InitStudy => c.n_inits = 2,
        TestName::AlphaSensitivity => c.n_instances = 2,
        TestName::DmfSynth | TestName::DcpdSynth => {
            c.n_instances = 2;
            c.l_max = 10;
            c.ipalm_iters = 50;
        }
        TestName::Completion => {
            c.n = 5;
            c.m = 5;
            c.d = 25;
            c.m2 = 12;
            c.r = 2;
            c.k_grid = vec![2, 4];
            c.n_instances = 2;
            c.n_inits = 2;
            c.l_max = 10;
        }
        TestName::Denoise => {
            c.n = 30;
            c.m = 20;
            c.m2 = 4;
            c.d = 12;
            c.d2 = 10;
            c.k = 3;
            c.k2 = 3;
            c.r = 2;
            c.l_max = 5;
        }
    }
    if !matches!(test, TestName::DmfSynth | TestName::DcpdSynth | TestName::Completion | TestName::Denoise) {
        c.n = 15;
        c.m = 12;
        c.d = 25;
        c.k = 3;
        c.r = 3;
    }
    c
}

fn c11_determinism() -> Outcome {
    let mut bad = Vec::new();
    for &test in TestName::ALL {
        let cfg = tiny(test);
        let one = run_experiment(&cfg, 1).map_err(|e| format!("{test}: {e}"))?.results_csv();
        let four = run_experiment(&cfg, 4).map_err(|e| format!("{test}: {e}"))?.results_csv();
        if one != four || one.lines().count() < 2 {
            bad.push(test.name());
        }
    }
    check(bad.is_empty(), format!("{} runners, mismatches: {bad:?}", TestName::ALL.len()))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 11] = [
        ("fixed-support least squares vs Kronecker oracle", c1_fixed_support),
        ("l1,1 prox vs subgradient oracle", c2_prox),
        ("maximum regularization and orthogonal IHT", c3_closed_forms),
        ("brute-force support oracle", c4_brute_force),
        ("noise regimes", c5_noise_regimes),
        ("conditioning", c6_conditioning),
        ("runtime ordering", c7_runtime_order),
        ("HOMP monotonicity", c8_homp_monotone),
        ("DLRA synthetic", c9_dlra_synthetic),
        ("completion vs bandwise OMP", c10_completion),
        ("runner determinism across thread counts", c11_determinism),
    ];
    let wanted: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let id = i + 1;
        if !wanted.is_empty() && !wanted.contains(&id) {
            continue;
        }
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(f).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {id:2} PASS  {name}: {detail} [{secs:.1}s]"),
            Err(detail) => {
                failed += 1;
                println!("criterion {id:2} FAIL  {name}: {detail} [{secs:.1}s]");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
