mod common;

use common::*;
use dlra_core::linalg::{khatri_rao, DenseMatrix, MixingOperator};
use dlra_core::synth::{rng_from_seed, uniform_matrix};
use dlra_core::tensor::*;
use proptest::prelude::*;

fn random_tensor(dims: (usize, usize, usize), seed: u64) -> Tensor3 {
    let g = gaussian(dims.0, dims.1 * dims.2, seed);
    Tensor3::new(dims, g.into_vec()).unwrap()
}

fn naive_mttkrp(t: &Tensor3, mode: usize, f: &CpdFactors) -> DenseMatrix {
    let (n, m1, m2) = t.dims();
    let r = f.rank();
    let rows = [n, m1, m2][mode];
    let mut out = DenseMatrix::zeros(rows, r);
    for i in 0..n {
        for j in 0..m1 {
            for k in 0..m2 {
                let v = t.get(i, j, k);
                for l in 0..r {
                    let (a, b, c) = (f.a[(i, l)], f.b[(j, l)], f.c[(k, l)]);
                    let (row, w) = match mode {
                        0 => (i, b * c),
                        1 => (j, a * c),
                        _ => (k, a * b),
                    };
                    out[(row, l)] += v * w;
                }
            }
        }
    }
    out
}

#[test]
fn mttkrp_matches_naive_triple_loop() {
    for seed in 0..5u64 {
        let dims = (4, 5, 3);
        let t = random_tensor(dims, seed);
        let f = CpdFactors::new(gaussian(4, 3, seed + 10), gaussian(5, 3, seed + 20), gaussian(3, 3, seed + 30))
            .unwrap();
        for mode in 0..3 {
            let fast = mttkrp_mode(&t, &f, mode);
            assert!(rel_diff(&fast, &naive_mttkrp(&t, mode, &f)) < 1e-12, "mode {mode}");
        }
        assert!(rel_diff(&mttkrp(&t, &f.b, &f.c).unwrap(), &naive_mttkrp(&t, 0, &f)) < 1e-12);
    }
}

#[test]
fn reconstruction_matches_unfolding_identities() {
    let f = CpdFactors::new(gaussian(3, 2, 1), gaussian(4, 2, 2), gaussian(5, 2, 3)).unwrap();
    let t = cpd_reconstruct(&f);
    let u0 = f.a.matmul_t(&khatri_rao(&f.b, &f.c).unwrap());
    let u1 = f.b.matmul_t(&khatri_rao(&f.a, &f.c).unwrap());
    let u2 = f.c.matmul_t(&khatri_rao(&f.a, &f.b).unwrap());
    assert!(rel_diff(&t.unfold(0), &u0) < 1e-12);
    assert!(rel_diff(&t.unfold(1), &u1) < 1e-12);
    assert!(rel_diff(&t.unfold(2), &u2) < 1e-12);
    let op = MixingOperator::khatri_rao(f.b.clone(), f.c.clone()).unwrap();
    assert!(rel_diff(&op.reconstruct(&f.a), &u0) < 1e-12);
    assert_eq!(cpd_residual(&t, &f).unwrap(), 0.0);
}

#[test]
fn als_recovers_exact_low_rank_tensor() {
    let mut rng = rng_from_seed(5);
    let truth = CpdFactors::new(
        uniform_matrix(6, 3, &mut rng),
        uniform_matrix(7, 3, &mut rng),
        uniform_matrix(8, 3, &mut rng),
    )
    .unwrap();
    let t = cpd_reconstruct(&truth);
    let best = (0..5u64)
        .map(|s| relative_error(&t, &cpd_reconstruct(&cpd_als(&t, 3, 500, false, s).unwrap())))
        .fold(f64::INFINITY, f64::min);
    assert!(best < 1e-6, "{best}");
    let nn = cpd_als(&t, 3, 500, true, 1).unwrap();
    assert!(relative_error(&t, &cpd_reconstruct(&nn)) < 0.05);
}

#[test]
fn als_cost_is_monotone() {
    let t = random_tensor((5, 6, 4), 9);
    let opts = CpdOptions { max_sweeps: 50, rel_tol: 0.0, nonneg: false };
    let run = cpd_als_with(&t, random_factors((5, 6, 4), 3, 1), opts).unwrap();
    for w in run.cost_trace.windows(2) {
        assert!(w[1] <= w[0] * (1.0 + 1e-9));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn unfold_refold_round_trip(n in 1usize..5, m1 in 1usize..5, m2 in 1usize..5, seed in 0u64..100, mode in 0usize..3) {
        let t = random_tensor((n, m1, m2), seed);
        let back = Tensor3::refold(&t.unfold(mode), mode, (n, m1, m2)).unwrap();
        prop_assert_eq!(back, t);
    }

    #[test]
    fn hals_keeps_factors_nonnegative(seed in 0u64..500) {
        let t = random_tensor((4, 5, 3), seed);
        let opts = CpdOptions { max_sweeps: 10, rel_tol: 0.0, nonneg: true };
        let mut init = random_factors((4, 5, 3), 2, seed);
        init.a = init.a.map(|v| v - 0.5);
        let run = cpd_als_with(&t, init, opts).unwrap();
        for m in [&run.factors.a, &run.factors.b, &run.factors.c] {
            prop_assert!(m.as_slice().iter().all(|v| *v >= 0.0));
        }
    }

    #[test]
    fn khatri_rao_gram_identity(seed in 0u64..500) {
        let b = gaussian(4, 3, seed);
        let c = gaussian(5, 3, seed + 1);
        let kr = khatri_rao(&b, &c).unwrap();
        let op = MixingOperator::khatri_rao(b, c).unwrap();
        prop_assert!(rel_diff(&op.gram(), &kr.gram()) < 1e-12);
    }
}
