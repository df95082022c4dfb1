//! Seeded generators for synthetic mixed sparse coding and low-rank
//! problems.

use alloc::vec::Vec;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::{normalize_columns, svd, DenseMatrix, Dictionary, SparseCodes};
use crate::math::{pow10, sqrt};

/// Generator used by every seeded routine in the crate.
pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Mixes a master seed with a stream index (splitmix64 finalizer), giving
/// independent seeds for instances, inits and sub-generators.
pub fn derive_seed(master: u64, stream: u64) -> u64 {
    let mut z = master ^ stream.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn uniform_matrix(rows: usize, cols: usize, rng: &mut impl Rng) -> DenseMatrix {
    DenseMatrix::from_fn(rows, cols, |_, _| rng.random::<f64>())
}

pub fn gaussian_matrix(rows: usize, cols: usize, rng: &mut impl Rng) -> DenseMatrix {
    DenseMatrix::from_fn(rows, cols, |_, _| rng.sample::<f64, _>(StandardNormal))
}

/// `n×d` dictionary with Uniform[0,1] entries and unit-norm columns.
pub fn gen_dictionary(n: usize, d: usize, seed: u64) -> Result<Dictionary> {
    let mut rng = rng_from_seed(seed);
    loop {
        let m = uniform_matrix(n, d, &mut rng);
        match normalize_columns(&m) {
            Ok((dict, _)) => return Ok(dict),
            Err(Error::ZeroColumn(_)) => continue,
            Err(e) => return Err(e),
        }
    }
}

/// `r` values evenly spaced from 1 down to `1/cond`.
pub fn condition_profile(r: usize, cond: f64) -> Vec<f64> {
    if r == 1 {
        return alloc::vec![1.0];
    }
    let last = 1.0 / cond;
    (0..r)
        .map(|i| 1.0 + (last - 1.0) * i as f64 / (r - 1) as f64)
        .collect()
}

/// `m×r` mixing matrix drawn Uniform[0,1], whose singular values are then
/// replaced by [`condition_profile`].
pub fn gen_mixing(m: usize, r: usize, cond: f64, seed: u64) -> Result<DenseMatrix> {
    if !(cond >= 1.0) {
        return Err(Error::InvalidArgument(alloc::format!("condition number {cond} below 1")));
    }
    if r > m {
        return Err(Error::Shape(alloc::format!("rank {r} exceeds {m} rows")));
    }
    let mut rng = rng_from_seed(seed);
    let f = svd(&uniform_matrix(m, r, &mut rng));
    let s = condition_profile(r, cond);
    let us = DenseMatrix::from_fn(m, r, |i, j| f.u[(i, j)] * s[j]);
    Ok(us.matmul_t(&f.v))
}

/// `d×r` codes with `k` nonzeros per column at uniformly drawn positions;
/// values are standard Gaussian, or Uniform[0,1] with `nonneg`.
pub fn gen_codes(d: usize, r: usize, k: usize, seed: u64, nonneg: bool) -> Result<SparseCodes> {
    if k > d {
        return Err(Error::InvalidArgument(alloc::format!("sparsity {k} exceeds {d} atoms")));
    }
    let mut rng = rng_from_seed(seed);
    let mut x = DenseMatrix::zeros(d, r);
    for j in 0..r {
        let mut idx = sample(&mut rng, d, k).into_vec();
        idx.sort_unstable();
        for a in idx {
            x[(a, j)] = loop {
                let v = if nonneg {
                    rng.random::<f64>()
                } else {
                    rng.sample::<f64, _>(StandardNormal)
                };
                if v != 0.0 {
                    break v;
                }
            };
        }
    }
    Ok(SparseCodes::from_values(x))
}

/// Adds Gaussian noise scaled so that `10·log10(‖Y‖²/‖E‖²)` equals
/// `snr_db` exactly. An infinite SNR returns `Y` unchanged.
pub fn add_noise_snr(y: &DenseMatrix, snr_db: f64, seed: u64) -> Result<DenseMatrix> {
    if snr_db == f64::INFINITY {
        return Ok(y.clone());
    }
    if snr_db.is_nan() || snr_db == f64::NEG_INFINITY {
        return Err(Error::InvalidArgument(alloc::format!("invalid SNR {snr_db}")));
    }
    let signal = y.frobenius_sq();
    if signal == 0.0 {
        return Err(Error::InvalidArgument("cannot set the SNR of a zero signal".into()));
    }
    let mut rng = rng_from_seed(seed);
    let e = gaussian_matrix(y.rows(), y.cols(), &mut rng);
    let target = signal / pow10(snr_db / 10.0);
    let scale = sqrt(target / e.frobenius_sq());
    Ok(y.add(&e.scale(scale)))
}

/// A synthetic mixed sparse coding instance `Y = D·X·Bᵀ + E`.
#[derive(Debug, Clone)]
pub struct MscInstance {
    pub y: DenseMatrix,
    pub dict: Dictionary,
    pub mixing: DenseMatrix,
    pub codes: SparseCodes,
}

/// Parameters of [`MscInstance::generate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MscParams {
    pub n: usize,
    pub m: usize,
    pub d: usize,
    pub k: usize,
    pub r: usize,
    pub cond: f64,
    pub snr_db: f64,
    pub nonneg: bool,
}

impl Default for MscParams {
    fn default() -> Self {
        Self {
            n: 50,
            m: 50,
            d: 100,
            k: 5,
            r: 6,
            cond: 200.0,
            snr_db: f64::INFINITY,
            nonneg: false,
        }
    }
}

impl MscInstance {
    /// Draws dictionary, mixing, codes and noise from independent streams
    /// of `seed`.
    pub fn generate(p: &MscParams, seed: u64) -> Result<Self> {
        let dict = gen_dictionary(p.n, p.d, derive_seed(seed, 0))?;
        let mixing = gen_mixing(p.m, p.r, p.cond, derive_seed(seed, 1))?;
        let codes = gen_codes(p.d, p.r, p.k, derive_seed(seed, 2), p.nonneg)?;
        let clean = dict.matrix().matmul(codes.values()).matmul_t(&mixing);
        let y = add_noise_snr(&clean, p.snr_db, derive_seed(seed, 3))?;
        Ok(Self { y, dict, mixing, codes })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::singular_values;
    use crate::math::log10;

    #[test]
    fn mixing_has_prescribed_singular_values() {
        let b = gen_mixing(30, 5, 200.0, 7).unwrap();
        let s = singular_values(&b);
        for (a, e) in s.iter().zip(condition_profile(5, 200.0)) {
            assert!((a - e).abs() < 1e-10);
        }
    }

    #[test]
    fn dictionary_is_unit_norm_and_deterministic() {
        let a = gen_dictionary(10, 20, 3).unwrap();
        let b = gen_dictionary(10, 20, 3).unwrap();
        assert_eq!(a.matrix(), b.matrix());
        for j in 0..20 {
            assert!((a.matrix().column_norm(j) - 1.0).abs() < 1e-12);
        }
        assert!(a.matrix().as_slice().iter().all(|v| *v >= 0.0));
    }

    #[test]
    fn codes_have_k_nonzeros() {
        let c = gen_codes(40, 4, 6, 11, false).unwrap();
        assert!(c.support().columns().iter().all(|s| s.len() == 6));
        let nn = gen_codes(40, 4, 6, 11, true).unwrap();
        assert!(nn.values().as_slice().iter().all(|v| *v >= 0.0));
    }

    #[test]
    fn noise_hits_exact_snr() {
        let y = uniform_matrix(8, 9, &mut rng_from_seed(1));
        for snr in [60.0, 20.0, 0.0, -8.7] {
            let z = add_noise_snr(&y, snr, 5).unwrap();
            let e = z.sub(&y).frobenius_sq();
            assert!((10.0 * log10(y.frobenius_sq() / e) - snr).abs() < 1e-9);
        }
        assert_eq!(add_noise_snr(&y, f64::INFINITY, 5).unwrap(), y);
    }
}
