//! Finite-dimensional linear algebra shared by every process type.
//!
//! Matrices are dense `nalgebra` matrices over `Complex<f64>`. Tensor factors
//! are ordered left to right and multi-indices are flattened row-major, so
//! factor 0 carries the largest stride.
//!
//! Entropies use the natural logarithm. Eigenvalues in `[-1e-10, 0)` are
//! treated as rounding noise and clipped to zero before taking logarithms;
//! anything more negative is reported as an error.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;

/// Absolute tolerance for `A = A*` checks.
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Eigenvalues this far below zero are clipped; below it they are an error.
pub const EIGEN_CLIP: f64 = 1e-10;
/// Trace tolerance for density matrices.
pub const TRACE_TOL: f64 = 1e-10;
/// Normalisation tolerance for probability vectors.
pub const PROB_TOL: f64 = 1e-12;

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn identity(d: usize) -> CMatrix {
    CMatrix::identity(d, d)
}

/// Largest `|m_ij - conj(m_ji)|`.
pub fn hermiticity_defect(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// `(m + m*) / 2`.
pub fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()) * c(0.5, 0.0)
}

pub fn frobenius(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

pub fn real_to_complex(m: &DMatrix<f64>) -> CMatrix {
    m.map(|x| c(x, 0.0))
}

pub fn trace(m: &CMatrix) -> C64 {
    m.trace()
}

/// Eigenvalues of a Hermitian matrix in ascending order.
///
/// Only the lower triangle is read by the tridiagonalisation, so callers
/// should symmetrise first if the input is only approximately Hermitian.
pub fn hermitian_eigenvalues(m: &CMatrix) -> Vec<f64> {
    if m.nrows() == 0 {
        return Vec::new();
    }
    let mut vals: Vec<f64> = m.clone().symmetric_eigenvalues().iter().copied().collect();
    vals.sort_by(|a, b| a.total_cmp(b));
    vals
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues ascending, with the
/// matching eigenvectors as columns.
pub fn hermitian_eigen(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let eig = m.clone().symmetric_eigen();
    let n = m.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let vals = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vecs = CMatrix::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
    (vals, vecs)
}

/// `f(m)` for Hermitian `m` by spectral calculus.
pub fn hermitian_function(m: &CMatrix, f: impl Fn(f64) -> f64) -> CMatrix {
    let (vals, vecs) = hermitian_eigen(m);
    let diag = DVector::from_iterator(vals.len(), vals.iter().map(|&x| c(f(x), 0.0)));
    &vecs * CMatrix::from_diagonal(&diag) * vecs.adjoint()
}

/// A complex square matrix equal to its adjoint within [`HERMITIAN_TOL`].
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix(CMatrix);

impl HermitianMatrix {
    /// Validates and stores the exact Hermitian part of `m`.
    pub fn new(m: CMatrix) -> Result<Self> {
        Self::with_tolerance(m, HERMITIAN_TOL)
    }

    pub fn with_tolerance(m: CMatrix, tol: f64) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::Shape(format!(
                "matrix is {}x{}, expected square",
                m.nrows(),
                m.ncols()
            )));
        }
        let defect = hermiticity_defect(&m);
        if defect > tol {
            return Err(Error::Shape(format!(
                "matrix is not Hermitian (defect {defect:e})"
            )));
        }
        Ok(Self(hermitian_part(&m)))
    }

    pub fn from_real(m: &DMatrix<f64>) -> Result<Self> {
        Self::new(real_to_complex(m))
    }

    pub fn identity(d: usize) -> Self {
        Self(identity(d))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> CMatrix {
        self.0
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        hermitian_eigenvalues(&self.0)
    }
}

/// A density matrix: Hermitian, positive semi-definite, unit trace.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix(CMatrix);

impl DensityMatrix {
    pub fn new(m: CMatrix) -> Result<Self> {
        let h = HermitianMatrix::new(m)?;
        let tr = h.0.trace();
        if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
            return Err(Error::InvalidState(format!("trace is {tr}, expected 1")));
        }
        let lmin = h.eigenvalues().first().copied().unwrap_or(0.0);
        if lmin < -EIGEN_CLIP {
            return Err(Error::InvalidState(format!(
                "negative eigenvalue {lmin:e}"
            )));
        }
        Ok(Self(h.0))
    }

    /// `identity / d`.
    pub fn maximally_mixed(d: usize) -> Self {
        Self(identity(d) * c(1.0 / d as f64, 0.0))
    }

    /// `|psi><psi|` for a normalised copy of `psi`.
    pub fn pure(psi: &[C64]) -> Result<Self> {
        let norm = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::InvalidState("zero state vector".into()));
        }
        let v = DVector::from_iterator(psi.len(), psi.iter().map(|z| z / norm));
        Ok(Self(&v * v.adjoint()))
    }

    pub fn from_diagonal(p: &ProbVector) -> Self {
        let diag = DVector::from_iterator(p.dim(), p.as_slice().iter().map(|&x| c(x, 0.0)));
        Self(CMatrix::from_diagonal(&diag))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> CMatrix {
        self.0
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        hermitian_eigenvalues(&self.0)
    }

    pub fn tensor(&self, other: &DensityMatrix) -> DensityMatrix {
        DensityMatrix(kron(&self.0, &other.0))
    }

    pub fn expectation(&self, observable: &CMatrix) -> C64 {
        (&self.0 * observable).trace()
    }
}

/// A probability vector: nonnegative entries summing to one within [`PROB_TOL`].
#[derive(Debug, Clone, PartialEq)]
pub struct ProbVector(Vec<f64>);

impl ProbVector {
    /// Entries in `[-PROB_TOL, 0)` are clipped to zero.
    pub fn new(mut p: Vec<f64>) -> Result<Self> {
        if p.is_empty() {
            return Err(Error::InvalidDistribution("empty probability vector".into()));
        }
        for x in p.iter_mut() {
            if !x.is_finite() || *x < -PROB_TOL {
                return Err(Error::InvalidDistribution(format!("entry {x} is negative")));
            }
            if *x < 0.0 {
                *x = 0.0;
            }
        }
        let total: f64 = p.iter().sum();
        if (total - 1.0).abs() > PROB_TOL {
            return Err(Error::InvalidDistribution(format!(
                "entries sum to {total}, expected 1"
            )));
        }
        Ok(Self(p))
    }

    pub fn uniform(d: usize) -> Self {
        Self(vec![1.0 / d as f64; d])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

/// `-x log x` with `0 log 0 = 0`.
#[inline]
pub fn xlogx_term(x: f64) -> f64 {
    if x > 0.0 {
        -x * x.ln()
    } else {
        0.0
    }
}

/// Entropy of an arbitrary list of weights, without a normalisation check.
pub fn entropy_of_weights<'a>(w: impl IntoIterator<Item = &'a f64>) -> f64 {
    w.into_iter().map(|&x| xlogx_term(x)).sum()
}

/// `-sum p_i log p_i` in nats.
pub fn shannon_entropy(p: &ProbVector) -> f64 {
    entropy_of_weights(p.as_slice())
}

/// Shannon entropy of the raw slice after validating it as a distribution.
pub fn shannon_entropy_checked(p: &[f64]) -> Result<f64> {
    Ok(shannon_entropy(&ProbVector::new(p.to_vec())?))
}

/// Entropy of an eigenvalue list; values are clipped to `[0, 1]` after the
/// negativity check.
pub fn spectral_entropy(eigs: &[f64]) -> Result<f64> {
    let mut h = 0.0;
    for &l in eigs {
        if l < -EIGEN_CLIP {
            return Err(Error::InvalidState(format!(
                "eigenvalue {l:e} below the clipping window"
            )));
        }
        h += xlogx_term(l.clamp(0.0, 1.0));
    }
    Ok(h)
}

/// `-tr rho log rho` in nats.
pub fn von_neumann_entropy(rho: &DensityMatrix) -> f64 {
    // DensityMatrix already guarantees the clipping window.
    spectral_entropy(&rho.eigenvalues()).expect("density matrix eigenvalues are validated")
}

fn check_dims(total: usize, dims: &[usize]) -> Result<()> {
    let prod: usize = dims.iter().product();
    if dims.is_empty() || prod != total || dims.contains(&0) {
        return Err(Error::Shape(format!(
            "subsystem dims {dims:?} do not multiply to {total}"
        )));
    }
    Ok(())
}

/// Partial trace of an arbitrary square matrix. The kept factors stay in
/// their original left-to-right order.
pub fn partial_trace_matrix(m: &CMatrix, dims: &[usize], keep: &[usize]) -> Result<CMatrix> {
    if m.nrows() != m.ncols() {
        return Err(Error::Shape("partial trace of a non-square matrix".into()));
    }
    check_dims(m.nrows(), dims)?;
    let mut kept = keep.to_vec();
    kept.sort_unstable();
    kept.dedup();
    if kept.len() != keep.len() || kept.iter().any(|&k| k >= dims.len()) {
        return Err(Error::Shape(format!(
            "keep set {keep:?} is invalid for {} factors",
            dims.len()
        )));
    }

    let n = dims.len();
    let mut strides = vec![1usize; n];
    for k in (0..n.saturating_sub(1)).rev() {
        strides[k] = strides[k + 1] * dims[k + 1];
    }
    let offsets = |factors: &[usize]| -> Vec<usize> {
        let mut offs = vec![0usize];
        for &f in factors {
            let mut next = Vec::with_capacity(offs.len() * dims[f]);
            for &o in &offs {
                for v in 0..dims[f] {
                    next.push(o + v * strides[f]);
                }
            }
            offs = next;
        }
        offs
    };
    let traced: Vec<usize> = (0..n).filter(|k| !kept.contains(k)).collect();
    let kept_off = offsets(&kept);
    let traced_off = offsets(&traced);

    let dk = kept_off.len();
    let mut out = CMatrix::zeros(dk, dk);
    for (a, &oa) in kept_off.iter().enumerate() {
        for (b, &ob) in kept_off.iter().enumerate() {
            let mut acc = C64::new(0.0, 0.0);
            for &t in &traced_off {
                acc += m[(oa + t, ob + t)];
            }
            out[(a, b)] = acc;
        }
    }
    Ok(out)
}

/// Reduced density matrix on the factors listed in `keep`.
pub fn partial_trace(rho: &DensityMatrix, dims: &[usize], keep: &[usize]) -> Result<DensityMatrix> {
    let reduced = partial_trace_matrix(rho.matrix(), dims, keep)?;
    Ok(DensityMatrix(hermitian_part(&reduced)))
}

/// Partial transpose of the factors listed in `transpose`.
pub fn partial_transpose(m: &CMatrix, dims: &[usize], transpose: &[usize]) -> Result<CMatrix> {
    check_dims(m.nrows(), dims)?;
    let n = dims.len();
    let total = m.nrows();
    let digits = |mut idx: usize| -> Vec<usize> {
        let mut out = vec![0; n];
        for k in (0..n).rev() {
            out[k] = idx % dims[k];
            idx /= dims[k];
        }
        out
    };
    let flatten = |d: &[usize]| d.iter().zip(dims).fold(0, |acc, (&x, &dk)| acc * dk + x);
    let mut out = CMatrix::zeros(total, total);
    for r in 0..total {
        let rd = digits(r);
        for col in 0..total {
            let mut a = rd.clone();
            let mut b = digits(col);
            for &t in transpose {
                std::mem::swap(&mut a[t], &mut b[t]);
            }
            out[(flatten(&a), flatten(&b))] = m[(r, col)];
        }
    }
    Ok(out)
}

/// Outcome of a positive semi-definiteness test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PsdReport {
    pub psd: bool,
    pub min_eigenvalue: f64,
}

/// `psd` is true iff the smallest eigenvalue is at least `-tol`.
pub fn psd_check(h: &HermitianMatrix, tol: f64) -> PsdReport {
    psd_check_matrix(h.matrix(), tol)
}

/// As [`psd_check`] for a raw matrix; only the Hermitian part is examined.
pub fn psd_check_matrix(m: &CMatrix, tol: f64) -> PsdReport {
    let min_eigenvalue = hermitian_eigenvalues(&hermitian_part(m))
        .first()
        .copied()
        .unwrap_or(f64::INFINITY);
    PsdReport {
        psd: min_eigenvalue >= -tol,
        min_eigenvalue,
    }
}

/// `||rho_12 - rho_1 (x) rho_2||_F` for a bipartite state.
pub fn factorization_residual(rho: &DensityMatrix, d1: usize, d2: usize) -> Result<f64> {
    let dims = [d1, d2];
    let r1 = partial_trace_matrix(rho.matrix(), &dims, &[0])?;
    let r2 = partial_trace_matrix(rho.matrix(), &dims, &[1])?;
    Ok(frobenius(&(rho.matrix() - kron(&r1, &r2))))
}

/// The Pauli matrices `[1, x, y, z]`.
pub fn paulis() -> [CMatrix; 4] {
    let z = c(0.0, 0.0);
    let o = c(1.0, 0.0);
    let i = c(0.0, 1.0);
    [
        CMatrix::from_row_slice(2, 2, &[o, z, z, o]),
        CMatrix::from_row_slice(2, 2, &[z, o, o, z]),
        CMatrix::from_row_slice(2, 2, &[z, -i, i, z]),
        CMatrix::from_row_slice(2, 2, &[o, z, z, -o]),
    ]
}

/// Matrix unit `|i><j|` of size `d`.
pub fn matrix_unit(d: usize, i: usize, j: usize) -> CMatrix {
    let mut m = CMatrix::zeros(d, d);
    m[(i, j)] = c(1.0, 0.0);
    m
}

/// Projector on the singlet `(|10> - |01>)/sqrt 2`.
pub fn singlet_projector() -> CMatrix {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let v = DVector::from_vec(vec![c(0.0, 0.0), c(-s, 0.0), c(s, 0.0), c(0.0, 0.0)]);
    &v * v.adjoint()
}

/// Two-qubit swap operator.
pub fn swap_operator(d: usize) -> CMatrix {
    let mut m = CMatrix::zeros(d * d, d * d);
    for i in 0..d {
        for j in 0..d {
            m[(i * d + j, j * d + i)] = c(1.0, 0.0);
        }
    }
    m
}
