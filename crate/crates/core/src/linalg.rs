//! Dense complex linear algebra used throughout the crate.
//!
//! Vectors and matrices are plain `nalgebra` dynamic types over `Complex<f64>`.
//! On top of them this module provides the handful of operations the rest of
//! the crate is built on: inner products, Kronecker products, a Hermitian
//! eigendecomposition with a deterministic eigenvector convention, principal
//! PSD square roots, and the real-linear solution space of a family of
//! constraints `<bra| H |ket> = 0` over Hermitian `H`.

use nalgebra::{Complex, DMatrix, DVector, SymmetricEigen, SVD};

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;
pub type CVector = DVector<C64>;
pub type CMatrix = DMatrix<C64>;

/// Singular values below this fraction of the largest one count as zero.
pub const RANK_THRESHOLD: f64 = 1e-8;
/// Maximum entry of `A - A^dagger` tolerated for a Hermitian matrix.
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Eigenvalues in `[-PSD_CLAMP, 0)` are treated as zero.
pub const PSD_CLAMP: f64 = 1e-10;

const PHASE_EPS: f64 = 1e-12;

pub fn c(re: f64, im: f64) -> C64 {
    Complex::new(re, im)
}

pub fn cvec(entries: &[C64]) -> CVector {
    DVector::from_column_slice(entries)
}

pub fn real_vec(entries: &[f64]) -> CVector {
    DVector::from_iterator(entries.len(), entries.iter().map(|&x| c(x, 0.0)))
}

/// Computational basis vector `|index>` in dimension `dim`.
pub fn basis_vec(dim: usize, index: usize) -> CVector {
    let mut v = CVector::zeros(dim);
    v[index] = c(1.0, 0.0);
    v
}

/// Conjugate-linear in `u`: returns `<u|v>`.
pub fn overlap_vec(u: &CVector, v: &CVector) -> Result<C64> {
    if u.len() != v.len() {
        return Err(Error::DimensionMismatch {
            expected: u.len(),
            found: v.len(),
        });
    }
    Ok(u.dotc(v))
}

/// `<bra| a |ket>`.
pub fn sandwich(bra: &CVector, a: &CMatrix, ket: &CVector) -> C64 {
    bra.dotc(&(a * ket))
}

pub fn kron_vec(a: &CVector, b: &CVector) -> CVector {
    let mut out = CVector::zeros(a.len() * b.len());
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i * b.len() + j] = x * y;
        }
    }
    out
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    CMatrix::from_fn(ar * br, ac * bc, |r, col| a[(r / br, col / bc)] * b[(r % br, col % bc)])
}

pub fn max_abs(a: &CMatrix) -> f64 {
    a.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Largest entry magnitude of `a - a^dagger`.
pub fn hermitian_defect(a: &CMatrix) -> f64 {
    max_abs(&(a - a.adjoint()))
}

pub fn is_hermitian(a: &CMatrix) -> bool {
    a.is_square() && hermitian_defect(a) <= HERMITIAN_TOL * max_abs(a).max(1.0)
}

pub fn trace(a: &CMatrix) -> C64 {
    a.diagonal().iter().sum()
}

/// Rescales `v` so that its first non-negligible entry is real and positive.
pub fn fix_phase(v: &mut CVector) {
    let scale = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if let Some(z) = v.iter().find(|z| z.norm() > PHASE_EPS * scale.max(1.0)) {
        let phase = z.conj() / z.norm();
        v.iter_mut().for_each(|x| *x *= phase);
    }
}

/// Eigendecomposition of a Hermitian matrix.
#[derive(Clone, Debug)]
pub struct HermitianEigen {
    /// Sorted in descending order.
    pub values: Vec<f64>,
    /// Column `k` is the eigenvector for `values[k]`.
    pub vectors: CMatrix,
}

impl HermitianEigen {
    pub fn reconstruct_with(&self, f: impl Fn(f64) -> f64) -> CMatrix {
        let n = self.values.len();
        let mut scaled = self.vectors.clone();
        for k in 0..n {
            let s = f(self.values[k]);
            scaled.column_mut(k).iter_mut().for_each(|x| *x *= s);
        }
        &scaled * self.vectors.adjoint()
    }
}

/// Eigenvalues descending; each eigenvector has its first nonzero entry real
/// and positive.
pub fn hermitian_eigh(a: &CMatrix) -> Result<HermitianEigen> {
    let (rows, cols) = a.shape();
    if rows != cols {
        return Err(Error::NotSquare { rows, cols });
    }
    if !is_hermitian(a) {
        return Err(Error::NotHermitian(hermitian_defect(a)));
    }
    let sym = (a + a.adjoint()).map(|z| z * 0.5);
    let eig = SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..rows).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = CMatrix::zeros(rows, rows);
    for (k, &i) in order.iter().enumerate() {
        let mut v: CVector = eig.eigenvectors.column(i).into_owned();
        fix_phase(&mut v);
        vectors.set_column(k, &v);
    }
    Ok(HermitianEigen { values, vectors })
}

fn checked_psd_eigen(e: &CMatrix) -> Result<HermitianEigen> {
    let eig = hermitian_eigh(e)?;
    let min = eig.values.last().copied().unwrap_or(0.0);
    if min < -PSD_CLAMP {
        return Err(Error::NotPsd(min));
    }
    Ok(eig)
}

/// Principal square root of a positive semidefinite matrix.
pub fn psd_sqrt(e: &CMatrix) -> Result<CMatrix> {
    let eig = checked_psd_eigen(e)?;
    Ok(eig.reconstruct_with(|x| x.max(0.0).sqrt()))
}

/// `e^{-1/2}` for a positive definite `e`; `None` when the smallest eigenvalue
/// falls below `RANK_THRESHOLD` times the largest.
pub fn psd_inv_sqrt(e: &CMatrix) -> Result<Option<CMatrix>> {
    let eig = checked_psd_eigen(e)?;
    let max = eig.values.first().copied().unwrap_or(0.0);
    let min = eig.values.last().copied().unwrap_or(0.0);
    if max <= 0.0 || min <= RANK_THRESHOLD * max {
        return Ok(None);
    }
    Ok(Some(eig.reconstruct_with(|x| 1.0 / x.sqrt())))
}

/// Largest absolute eigenvalue of a Hermitian matrix.
pub fn spectral_norm_hermitian(a: &CMatrix) -> Result<f64> {
    let eig = hermitian_eigh(a)?;
    Ok(eig.values.iter().map(|x| x.abs()).fold(0.0, f64::max))
}

/// Numerical rank of the span of `vectors`, with the relative singular-value
/// threshold `RANK_THRESHOLD`.
pub fn span_rank(vectors: &[CVector]) -> usize {
    if vectors.is_empty() {
        return 0;
    }
    let m = CMatrix::from_columns(vectors);
    let sv = SVD::new(m, false, false).singular_values;
    let max = sv.iter().copied().fold(0.0, f64::max);
    if max == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > RANK_THRESHOLD * max).count()
}

/// The equation `<bra| H |ket> = 0` on a Hermitian unknown `H`. Over the reals
/// it is two equations (real and imaginary part).
#[derive(Clone, Debug, PartialEq)]
pub struct LinearConstraint {
    pub bra: CVector,
    pub ket: CVector,
}

impl LinearConstraint {
    pub fn new(bra: CVector, ket: CVector) -> Result<Self> {
        if bra.len() != ket.len() {
            return Err(Error::DimensionMismatch {
                expected: bra.len(),
                found: ket.len(),
            });
        }
        Ok(Self { bra, ket })
    }

    pub fn dim(&self) -> usize {
        self.bra.len()
    }

    pub fn residual(&self, h: &CMatrix) -> f64 {
        sandwich(&self.bra, h, &self.ket).norm()
    }
}

/// Orthonormal real coordinates for the Hermitian `d x d` matrices.
///
/// Generator order: the `d` diagonal units, then for each `j < k` the pair
/// `(E_jk + E_kj)/sqrt2` and `i(E_jk - E_kj)/sqrt2`. These are orthonormal
/// under `tr(A B)`, so Euclidean geometry on the coordinates matches the trace
/// inner product on matrices.
#[derive(Clone, Debug)]
struct HermitianCoords {
    d: usize,
    pairs: Vec<(usize, usize)>,
}

impl HermitianCoords {
    fn new(d: usize) -> Self {
        let mut pairs = Vec::with_capacity(d * (d - 1) / 2);
        for j in 0..d {
            for k in j + 1..d {
                pairs.push((j, k));
            }
        }
        Self { d, pairs }
    }

    fn len(&self) -> usize {
        self.d * self.d
    }

    /// `<bra| G_g |ket>` for every generator `g`.
    fn constraint_row(&self, bra: &CVector, ket: &CVector) -> Vec<C64> {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let i = c(0.0, 1.0);
        let mut row = Vec::with_capacity(self.len());
        for k in 0..self.d {
            row.push(bra[k].conj() * ket[k]);
        }
        for &(j, k) in &self.pairs {
            let jk = bra[j].conj() * ket[k];
            let kj = bra[k].conj() * ket[j];
            row.push((jk + kj) * s);
            row.push((jk - kj) * i * s);
        }
        row
    }

    fn to_matrix(&self, x: &[f64]) -> CMatrix {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let mut h = CMatrix::zeros(self.d, self.d);
        for k in 0..self.d {
            h[(k, k)] = c(x[k], 0.0);
        }
        for (p, &(j, k)) in self.pairs.iter().enumerate() {
            let re = x[self.d + 2 * p] * s;
            let im = x[self.d + 2 * p + 1] * s;
            h[(j, k)] = c(re, im);
            h[(k, j)] = c(re, -im);
        }
        h
    }

    fn identity(&self) -> DVector<f64> {
        let mut v = DVector::zeros(self.len());
        let w = 1.0 / (self.d as f64).sqrt();
        for k in 0..self.d {
            v[k] = w;
        }
        v
    }
}

/// Real-linear basis of a space of Hermitian matrices, orthonormal under the
/// trace inner product.
#[derive(Clone, Debug)]
pub struct HermitianBasis {
    pub dim: usize,
    pub elements: Vec<CMatrix>,
    /// Whether `I / sqrt(d)` is the first element.
    pub contains_identity: bool,
}

impl HermitianBasis {
    pub fn dimension(&self) -> usize {
        self.elements.len()
    }
}

/// All Hermitian `d x d` matrices `H` with `<bra| H |ket> = 0` for every
/// constraint.
///
/// When the identity is feasible it is returned first (as `I / sqrt(d)`); the
/// remaining elements are then traceless. Each element is sign-fixed so its
/// first nonzero real coordinate is positive.
pub fn hermitian_solution_space(constraints: &[LinearConstraint], d: usize) -> Result<HermitianBasis> {
    if d == 0 {
        return Err(Error::InvalidDimension(d));
    }
    if let Some(bad) = constraints.iter().find(|k| k.dim() != d) {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: bad.dim(),
        });
    }
    let coords = HermitianCoords::new(d);
    let n = coords.len();
    // Padding to at least n rows makes the SVD return a full n x n V.
    let rows = (2 * constraints.len()).max(n);
    let mut a = DMatrix::<f64>::zeros(rows, n);
    for (r, k) in constraints.iter().enumerate() {
        for (g, z) in coords.constraint_row(&k.bra, &k.ket).into_iter().enumerate() {
            a[(2 * r, g)] = z.re;
            a[(2 * r + 1, g)] = z.im;
        }
    }
    let null = real_null_space(a);

    let identity = coords.identity();
    let projected = null
        .iter()
        .fold(DVector::<f64>::zeros(n), |acc, v| acc + v * v.dot(&identity));
    let contains_identity = (&projected - &identity).norm() < 1e-9;

    let mut accepted: Vec<DVector<f64>> = Vec::with_capacity(null.len());
    if contains_identity {
        accepted.push(identity);
    }
    for v in &null {
        let mut w = v.clone();
        for a in &accepted {
            w -= a * a.dot(&w);
        }
        // second pass keeps the basis orthonormal to working precision
        for a in &accepted {
            w -= a * a.dot(&w);
        }
        let norm = w.norm();
        if norm > 1e-6 && accepted.len() < null.len() {
            accepted.push(w / norm);
        }
    }
    for v in accepted.iter_mut() {
        if let Some(first) = v.iter().find(|x| x.abs() > PHASE_EPS).copied() {
            if first < 0.0 {
                *v = -v.clone();
            }
        }
    }
    let elements = accepted.iter().map(|v| coords.to_matrix(v.as_slice())).collect();
    Ok(HermitianBasis {
        dim: d,
        elements,
        contains_identity,
    })
}

/// Orthonormal basis of the right null space of `a` (which must have at least
/// as many rows as columns).
fn real_null_space(a: DMatrix<f64>) -> Vec<DVector<f64>> {
    let n = a.ncols();
    let svd = SVD::new(a, false, true);
    let v_t = svd.v_t.expect("V requested");
    let sv = &svd.singular_values;
    let max = sv.iter().copied().fold(0.0, f64::max);
    (0..n)
        .filter(|&k| max == 0.0 || sv[k] <= RANK_THRESHOLD * max)
        .map(|k| v_t.row(k).transpose())
        .collect()
}
