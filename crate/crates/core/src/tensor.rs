//! Order-3 tensors, their unfoldings and alternating CPD solvers.
//!
//! Entry `(i, j, k)` of an `n×m1×m2` tensor is stored at
//! `(i·m1 + j)·m2 + k`. The mode-`q` unfolding puts index `q` on rows and
//! the remaining two indices, in their original order, on columns, so that
//! `T₍₁₎ = A·(B ⊙ C)ᵀ`, `T₍₂₎ = B·(A ⊙ C)ᵀ` and `T₍₃₎ = C·(A ⊙ B)ᵀ`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::{solve_spd, DenseMatrix};
use crate::math::sqrt;
use crate::synth::{rng_from_seed, uniform_matrix};

/// Dense order-3 tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor3 {
    dims: (usize, usize, usize),
    values: Vec<f64>,
}

impl Tensor3 {
    pub fn new(dims: (usize, usize, usize), values: Vec<f64>) -> Result<Self> {
        if values.len() != dims.0 * dims.1 * dims.2 {
            return Err(Error::Shape(format!(
                "{} values for dims {:?}",
                values.len(),
                dims
            )));
        }
        if let Some(p) = values.iter().position(|v| !v.is_finite()) {
            let row = p / (dims.1 * dims.2).max(1);
            return Err(Error::NonFinite {
                row,
                col: p - row * dims.1 * dims.2,
            });
        }
        Ok(Self { dims, values })
    }

    pub fn zeros(dims: (usize, usize, usize)) -> Self {
        Self {
            dims,
            values: vec![0.0; dims.0 * dims.1 * dims.2],
        }
    }

    pub fn from_fn(dims: (usize, usize, usize), mut f: impl FnMut(usize, usize, usize) -> f64) -> Self {
        let mut values = Vec::with_capacity(dims.0 * dims.1 * dims.2);
        for i in 0..dims.0 {
            for j in 0..dims.1 {
                for k in 0..dims.2 {
                    values.push(f(i, j, k));
                }
            }
        }
        Self { dims, values }
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        self.dims
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.values[(i * self.dims.1 + j) * self.dims.2 + k]
    }

    pub fn frobenius_sq(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum()
    }

    pub fn sub(&self, other: &Tensor3) -> Tensor3 {
        assert_eq!(self.dims, other.dims, "tensor shapes differ");
        Tensor3 {
            dims: self.dims,
            values: self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect(),
        }
    }

    /// Mode-1 unfolding `n × (m1·m2)`.
    pub fn unfold1(&self) -> DenseMatrix {
        unfold1(self)
    }

    /// Mode-`mode` unfolding, `mode ∈ {0, 1, 2}`.
    pub fn unfold(&self, mode: usize) -> DenseMatrix {
        let (n, m1, m2) = self.dims;
        match mode {
            0 => self.unfold1(),
            1 => DenseMatrix::from_fn(m1, n * m2, |j, c| self.get(c / m2, j, c % m2)),
            2 => DenseMatrix::from_fn(m2, n * m1, |k, c| self.get(c / m1, c % m1, k)),
            _ => panic!("mode {mode} out of range"),
        }
    }

    /// Inverse of [`Tensor3::unfold`].
    pub fn refold(m: &DenseMatrix, mode: usize, dims: (usize, usize, usize)) -> Result<Tensor3> {
        let (n, m1, m2) = dims;
        let expected = match mode {
            0 => (n, m1 * m2),
            1 => (m1, n * m2),
            2 => (m2, n * m1),
            _ => return Err(Error::InvalidArgument(format!("mode {mode} out of range"))),
        };
        if m.shape() != expected {
            return Err(Error::Shape(format!(
                "unfolding is {:?}, expected {:?}",
                m.shape(),
                expected
            )));
        }
        Ok(match mode {
            0 => Tensor3 {
                dims,
                values: m.as_slice().to_vec(),
            },
            1 => Tensor3::from_fn(dims, |i, j, k| m[(j, i * m2 + k)]),
            _ => Tensor3::from_fn(dims, |i, j, k| m[(k, i * m1 + j)]),
        })
    }
}

pub fn unfold1(t: &Tensor3) -> DenseMatrix {
    let (n, m1, m2) = t.dims;
    DenseMatrix::new(n, m1 * m2, t.values.clone()).expect("tensor values are finite")
}

/// Inverse of [`unfold1`].
pub fn refold1(m: &DenseMatrix, m1: usize, m2: usize) -> Result<Tensor3> {
    Tensor3::refold(m, 0, (m.rows(), m1, m2))
}

/// Factors of a rank-`r` CPD `Σ_l A_l ∘ B_l ∘ C_l`.
#[derive(Debug, Clone, PartialEq)]
pub struct CpdFactors {
    pub a: DenseMatrix,
    pub b: DenseMatrix,
    pub c: DenseMatrix,
}

impl CpdFactors {
    pub fn new(a: DenseMatrix, b: DenseMatrix, c: DenseMatrix) -> Result<Self> {
        if a.cols() != b.cols() || a.cols() != c.cols() {
            return Err(Error::Shape(format!(
                "factor ranks differ: {}, {}, {}",
                a.cols(),
                b.cols(),
                c.cols()
            )));
        }
        Ok(Self { a, b, c })
    }

    pub fn rank(&self) -> usize {
        self.a.cols()
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        (self.a.rows(), self.b.rows(), self.c.rows())
    }

    pub fn factor(&self, mode: usize) -> &DenseMatrix {
        match mode {
            0 => &self.a,
            1 => &self.b,
            2 => &self.c,
            _ => panic!("mode {mode} out of range"),
        }
    }

    fn factor_mut(&mut self, mode: usize) -> &mut DenseMatrix {
        match mode {
            0 => &mut self.a,
            1 => &mut self.b,
            2 => &mut self.c,
            _ => panic!("mode {mode} out of range"),
        }
    }

    /// The two factors other than `mode`, in mode order.
    pub fn others(&self, mode: usize) -> (&DenseMatrix, &DenseMatrix) {
        match mode {
            0 => (&self.b, &self.c),
            1 => (&self.a, &self.c),
            2 => (&self.a, &self.b),
            _ => panic!("mode {mode} out of range"),
        }
    }

    /// `(XᵀX) ∗ (ZᵀZ)` for the two factors other than `mode`.
    pub fn gram_except(&self, mode: usize) -> DenseMatrix {
        let (x, z) = self.others(mode);
        x.gram().hadamard(&z.gram())
    }
}

fn check_conformable(t: &Tensor3, f: &CpdFactors) -> Result<()> {
    if t.dims() != f.dims() {
        return Err(Error::Shape(format!(
            "tensor dims {:?}, factor dims {:?}",
            t.dims(),
            f.dims()
        )));
    }
    Ok(())
}

/// Tensor with entries `Σ_l A[i,l]·B[j,l]·C[k,l]`.
pub fn cpd_reconstruct(f: &CpdFactors) -> Tensor3 {
    let (n, m1, m2) = f.dims();
    let r = f.rank();
    let mut values = Vec::with_capacity(n * m1 * m2);
    let mut ab = vec![0.0; r];
    for i in 0..n {
        let ai = f.a.row(i);
        for j in 0..m1 {
            for ((p, x), y) in ab.iter_mut().zip(ai).zip(f.b.row(j)) {
                *p = x * y;
            }
            for k in 0..m2 {
                values.push(ab.iter().zip(f.c.row(k)).map(|(p, z)| p * z).sum());
            }
        }
    }
    Tensor3 {
        dims: (n, m1, m2),
        values,
    }
}

/// `T₍₁₎·(B ⊙ C)` without forming the Khatri-Rao product.
pub fn mttkrp(t: &Tensor3, b: &DenseMatrix, c: &DenseMatrix) -> Result<DenseMatrix> {
    let (n, m1, m2) = t.dims();
    if b.rows() != m1 || c.rows() != m2 || b.cols() != c.cols() {
        return Err(Error::Shape(format!(
            "tensor dims {:?}, B is {:?}, C is {:?}",
            t.dims(),
            b.shape(),
            c.shape()
        )));
    }
    let a = DenseMatrix::zeros(n, b.cols());
    let f = CpdFactors { a, b: b.clone(), c: c.clone() };
    Ok(mttkrp_mode(t, &f, 0))
}

/// Mode-`mode` MTTKRP `T₍mode₎·(X ⊙ Z)` where `X`, `Z` are the other two
/// factors of `f` in mode order.
pub fn mttkrp_mode(t: &Tensor3, f: &CpdFactors, mode: usize) -> DenseMatrix {
    let (n, m1, m2) = t.dims();
    let r = f.rank();
    let rows = [n, m1, m2][mode];
    let mut out = DenseMatrix::zeros(rows, r);
    let mut tmp = vec![0.0; r];
    for i in 0..n {
        for j in 0..m1 {
            let fiber = &t.values[(i * m1 + j) * m2..(i * m1 + j + 1) * m2];
            match mode {
                0 | 1 => {
                    // Σ_k T[i,j,k]·C[k,l]
                    tmp.iter_mut().for_each(|v| *v = 0.0);
                    for (k, x) in fiber.iter().enumerate() {
                        if *x != 0.0 {
                            for (v, c) in tmp.iter_mut().zip(f.c.row(k)) {
                                *v += x * c;
                            }
                        }
                    }
                    let (target, weight) = if mode == 0 { (i, f.b.row(j)) } else { (j, f.a.row(i)) };
                    for ((o, v), w) in out.row_mut(target).iter_mut().zip(&tmp).zip(weight) {
                        *o += v * w;
                    }
                }
                _ => {
                    for ((v, a), b) in tmp.iter_mut().zip(f.a.row(i)).zip(f.b.row(j)) {
                        *v = a * b;
                    }
                    for (k, x) in fiber.iter().enumerate() {
                        if *x != 0.0 {
                            for (o, v) in out.row_mut(k).iter_mut().zip(&tmp) {
                                *o += x * v;
                            }
                        }
                    }
                }
            }
        }
    }
    out
}

/// `‖T − [[A, B, C]]‖_F²` by explicit reconstruction.
pub fn cpd_residual(t: &Tensor3, f: &CpdFactors) -> Result<f64> {
    check_conformable(t, f)?;
    Ok(t.sub(&cpd_reconstruct(f)).frobenius_sq())
}

/// Options of [`cpd_als_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CpdOptions {
    pub max_sweeps: usize,
    /// Stop when the relative cost decrease falls below this.
    pub rel_tol: f64,
    /// HALS with nonnegative factors instead of plain ALS.
    pub nonneg: bool,
}

/// Output of [`cpd_als_with`].
#[derive(Debug, Clone)]
pub struct CpdRun {
    pub factors: CpdFactors,
    /// Cost after initialization and after every sweep.
    pub cost_trace: Vec<f64>,
    pub sweeps: usize,
}

/// Replacement for HALS columns that collapse to zero.
pub const HALS_ZERO_GUARD: f64 = 1e-16;
const LS_RIDGE_SCALE: f64 = 1e-12;

/// Least-squares update of factor `mode` with the other two fixed.
pub fn als_update(t: &Tensor3, f: &mut CpdFactors, mode: usize) -> Result<()> {
    let m = mttkrp_mode(t, f, mode);
    let g = f.gram_except(mode);
    let ridge = LS_RIDGE_SCALE * g.trace() / g.rows().max(1) as f64;
    let mut out = DenseMatrix::zeros(m.rows(), m.cols());
    for i in 0..m.rows() {
        let x = solve_spd(&g, m.row(i), ridge, true)?;
        out.row_mut(i).copy_from_slice(&x);
    }
    *f.factor_mut(mode) = out;
    Ok(())
}

/// One HALS pass over the columns of factor `mode`.
pub fn hals_update(t: &Tensor3, f: &mut CpdFactors, mode: usize) {
    let m = mttkrp_mode(t, f, mode);
    let g = f.gram_except(mode);
    hals_columns(f.factor_mut(mode), &m, &g);
}

/// HALS sweep on `X` for `min ‖Y − X·Mᵀ‖²` given `YM = Y·M` and `G = MᵀM`.
pub fn hals_columns(x: &mut DenseMatrix, ym: &DenseMatrix, g: &DenseMatrix) {
    let (rows, r) = x.shape();
    for l in 0..r {
        let gll = g[(l, l)];
        if gll <= 0.0 {
            continue;
        }
        let mut any = false;
        for i in 0..rows {
            let xg: f64 = x.row(i).iter().zip(g.column(l)).map(|(a, b)| a * b).sum();
            let v = (x[(i, l)] + (ym[(i, l)] - xg) / gll).max(0.0);
            x[(i, l)] = v;
            any |= v > 0.0;
        }
        if !any {
            for i in 0..rows {
                x[(i, l)] = HALS_ZERO_GUARD;
            }
        }
    }
}

/// Rescales the columns of `b` and `c` to unit norm, absorbing the scales
/// into `a`.
pub fn normalize_cpd(f: &mut CpdFactors) {
    for l in 0..f.rank() {
        for mode in [1, 2] {
            let norm = f.factor(mode).column_norm(l);
            if norm > 0.0 && norm.is_finite() {
                let m = f.factor_mut(mode);
                for i in 0..m.rows() {
                    m[(i, l)] /= norm;
                }
                for i in 0..f.a.rows() {
                    f.a[(i, l)] *= norm;
                }
            }
        }
    }
}

/// Random factors with Uniform[0,1] entries.
pub fn random_factors(dims: (usize, usize, usize), r: usize, seed: u64) -> CpdFactors {
    let mut rng = rng_from_seed(seed);
    let a = uniform_matrix(dims.0, r, &mut rng);
    let b = uniform_matrix(dims.1, r, &mut rng);
    let c = uniform_matrix(dims.2, r, &mut rng);
    CpdFactors { a, b, c }
}

/// ALS (or HALS with `nonneg`) from the given initial factors.
pub fn cpd_als_with(t: &Tensor3, init: CpdFactors, opts: CpdOptions) -> Result<CpdRun> {
    check_conformable(t, &init)?;
    let mut f = init;
    if opts.nonneg {
        for m in [&mut f.a, &mut f.b, &mut f.c] {
            *m = m.map(|v| v.max(0.0));
        }
    }
    let mut cost = cpd_residual(t, &f)?;
    let mut trace = vec![cost];
    let mut sweeps = 0;
    for _ in 0..opts.max_sweeps {
        for mode in 0..3 {
            if opts.nonneg {
                hals_update(t, &mut f, mode);
            } else {
                als_update(t, &mut f, mode)?;
            }
        }
        normalize_cpd(&mut f);
        sweeps += 1;
        let new_cost = cpd_residual(t, &f)?;
        trace.push(new_cost);
        let done = cost == 0.0 || ((cost - new_cost) / cost).abs() < opts.rel_tol;
        cost = new_cost;
        if done {
            break;
        }
    }
    Ok(CpdRun {
        factors: f,
        cost_trace: trace,
        sweeps,
    })
}

/// Rank-`r` CPD by ALS, or by HALS with nonnegative factors, from a seeded
/// random start. Stops after `iters` sweeps or when the relative cost
/// decrease falls below `1e-8`.
pub fn cpd_als(t: &Tensor3, r: usize, iters: usize, nonneg: bool, seed: u64) -> Result<CpdFactors> {
    if r == 0 {
        return Err(Error::InvalidArgument("rank must be positive".into()));
    }
    let init = random_factors(t.dims(), r, seed);
    let opts = CpdOptions {
        max_sweeps: iters,
        rel_tol: 1e-8,
        nonneg,
    };
    Ok(cpd_als_with(t, init, opts)?.factors)
}

/// `sqrt` of the relative squared error `‖T − T̂‖²/‖T‖²`.
pub fn relative_error(t: &Tensor3, approx: &Tensor3) -> f64 {
    sqrt(t.sub(approx).frobenius_sq() / t.frobenius_sq())
}
