use dlra_core::dictionaries::{build_bspline_dictionary, build_dct2_dictionary};
use dlra_core::linalg::{norm2, DenseMatrix};
use dlra_core::msc::omp;
use std::f64::consts::PI;

#[test]
fn bspline_fits_smooth_signals_with_few_atoms() {
    let (n, d) = (61, 81);
    let dict = build_bspline_dictionary(n, d).unwrap();
    for s in 0..10 {
        let (c, f, phase, w) = (1.0 + s as f64 * 0.3, 0.5 + 0.15 * s as f64, 0.7 * s as f64, 0.1 + 0.02 * s as f64);
        let y: Vec<f64> = (0..n)
            .map(|i| {
                let t = i as f64 / (n - 1) as f64;
                c + (2.0 * PI * f * t + phase).sin() + (-(t - 0.5).powi(2) / (2.0 * w * w)).exp()
            })
            .collect();
        let fit = omp(&y, &dict, 6).unwrap();
        let approx = dict.matrix().mul_vec(&fit.coefficients);
        let res: Vec<f64> = y.iter().zip(&approx).map(|(a, b)| a - b).collect();
        assert!(norm2(&res) <= 0.1 * norm2(&y), "signal {s}: {}", norm2(&res) / norm2(&y));
    }
}

#[test]
fn dct_atoms_are_separable_cosines() {
    let dict = build_dct2_dictionary(4, 6).unwrap();
    let m = dict.matrix();
    // The constant atom is first.
    let first = m.column(0);
    assert!(first.iter().all(|v| (v - first[0]).abs() < 1e-12));
    // Atom (u, v) at pixel (p, q) is the product of two 1D cosines.
    let c = |n: usize, p: usize, u: usize| {
        let s = if u == 0 { (1.0 / n as f64).sqrt() } else { (2.0 / n as f64).sqrt() };
        s * (PI * (2 * p + 1) as f64 * u as f64 / (2.0 * n as f64)).cos()
    };
    let expect = DenseMatrix::from_fn(24, 24, |row, atom| c(4, row / 6, atom / 6) * c(6, row % 6, atom % 6));
    assert!(m.sub(&expect).max_abs() < 1e-12);
    assert!(build_dct2_dictionary(0, 3).is_err());
}

#[test]
fn bspline_sizes() {
    // Levels contribute 6, 7, 8, ... atoms.
    for d in [4, 6, 13, 180] {
        assert_eq!(build_bspline_dictionary(201, d).unwrap().n_atoms(), d);
    }
    assert!(build_bspline_dictionary(201, 2).is_err());
}
