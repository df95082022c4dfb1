use dlra_tools::config::{AlphaSpec, ExperimentConfig, TestName};
use dlra_tools::experiments::{run_experiment, write_outputs};
use dlra_tools::table::{ResultTable, RESULTS_HEADER};

fn small(test: TestName, snr: Vec<f64>, instances: usize) -> ExperimentConfig {
    let mut c = ExperimentConfig::defaults(test);
    c.n = 20;
    c.m = 20;
    c.d = 40;
    c.k = 3;
    c.r = 4;
    c.cond = vec![10.0];
    c.snr_db = snr;
    c.n_instances = instances;
    c.max_iter = 300;
    c.alpha = AlphaSpec::Fixed(1e-3);
    c.seed = 3;
    c
}

fn recovery(t: &ResultTable, method: &str, point: &str) -> f64 {
    t.mean(method, point, |r| r.recovery).unwrap()
}

#[test]
fn output_is_stable_and_seeded() {
    let cfg = small(TestName::NoiseSweep, vec![20.0], 3);
    let a = run_experiment(&cfg, 1).unwrap().results_csv();
    let b = run_experiment(&cfg, 2).unwrap().results_csv();
    assert_eq!(a, b);
    assert_eq!(a.lines().next().unwrap(), RESULTS_HEADER);
    // Default solver set: five methods, one row per instance each.
    assert_eq!(a.lines().count(), 1 + 3 * 5);

    let mut other = cfg.clone();
    other.seed = 4;
    assert_ne!(run_experiment(&other, 1).unwrap().results_csv(), a);
}

#[test]
fn outputs_land_in_directory() {
    let cfg = small(TestName::NoiseSweep, vec![20.0], 2);
    let table = run_experiment(&cfg, 1).unwrap();
    let dir = tempfile::tempdir().unwrap();
    write_outputs(dir.path(), &cfg, &table).unwrap();
    for f in ["results.csv", "timings.csv", "run_meta.txt"] {
        assert!(dir.path().join(f).is_file(), "{f} missing");
    }
    let written = std::fs::read_to_string(dir.path().join("results.csv")).unwrap();
    assert_eq!(written, table.results_csv());
}

#[test]
fn recovery_degrades_with_noise() {
    let cfg = small(TestName::NoiseSweep, vec![60.0, 0.0], 20);
    let t = run_experiment(&cfg, 1).unwrap();
    let points = t.points();
    assert_eq!(points.len(), 2);
    for s in ["trick_omp", "homp", "iht", "block_fista", "mixed_fista"] {
        let (clean, noisy) = (recovery(&t, s, &points[0]), recovery(&t, s, &points[1]));
        assert!(clean >= noisy, "{s}: {clean} at 60 dB vs {noisy} at 0 dB");
    }
}

#[test]
fn nonnegativity_helps_on_nonnegative_codes() {
    let cfg = small(TestName::NnCompare, vec![20.0, 0.0], 20);
    let t = run_experiment(&cfg, 1).unwrap();
    for p in t.points() {
        let (plain, nn) = (recovery(&t, "block_fista", &p), recovery(&t, "nn_block_fista", &p));
        assert!(nn >= plain - 2.0, "{p}: nn {nn} vs plain {plain}");
    }
}

#[test]
fn invalid_configs_are_rejected() {
    let mut cfg = small(TestName::NoiseSweep, vec![20.0], 1);
    cfg.k = cfg.d + 1;
    assert!(run_experiment(&cfg, 1).is_err());
    assert!(cfg.set("no_such_key", "1").is_err());
}
