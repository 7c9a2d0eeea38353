//! Free-fermionic processes.
//!
//! A symbol is an operator `0 <= Q <= 1` on the mode space. A free CP map
//! `(A, B)` acts on symbols by `Q -> A* Q A + B`. A stationary process is
//! fixed by a map, an extension label `X` and the invariant symbol, and its
//! correlation operator on the half-chain is block Toeplitz with blocks
//! `(A*)^k (Q - B + X)` above the diagonal.

pub mod toeplitz;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{c, hermitian_eigenvalues, hermitian_part, hermiticity_defect, identity, max_abs, CMatrix, EIGEN_CLIP, HERMITIAN_TOL};

/// Residual bound for the invariant symbol.
pub const INVARIANT_TOL: f64 = 1e-12;
/// Largest block Toeplitz dimension `n d`.
pub const MAX_TRUNCATION_DIM: usize = 4000;

/// `-x log x - (1 - x) log(1 - x)` with the eigenvalue clipping window.
pub fn binary_entropy(x: f64) -> f64 {
    let x = x.clamp(0.0, 1.0);
    crate::linalg::xlogx_term(x) + crate::linalg::xlogx_term(1.0 - x)
}

fn check_unit_interval(eigs: &[f64], what: &str) -> Result<()> {
    if let (Some(&lo), Some(&hi)) = (eigs.first(), eigs.last()) {
        if lo < -EIGEN_CLIP || hi > 1.0 + EIGEN_CLIP {
            return Err(Error::Contract(format!(
                "{what} has spectrum [{lo:e}, {hi}] outside [0, 1]"
            )));
        }
    }
    Ok(())
}

/// Entropy `-tr[Q log Q + (1 - Q) log(1 - Q)]` from an ascending spectrum.
pub fn symbol_spectrum_entropy(eigs: &[f64]) -> Result<f64> {
    check_unit_interval(eigs, "symbol")?;
    Ok(eigs.iter().map(|&x| binary_entropy(x)).sum())
}

/// Hermitian `Q` with `0 <= Q <= 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Symbol(CMatrix);

impl Symbol {
    pub fn new(q: CMatrix) -> Result<Self> {
        if q.nrows() != q.ncols() || q.nrows() == 0 {
            return Err(Error::Shape(format!("symbol must be square, got {}x{}", q.nrows(), q.ncols())));
        }
        let defect = hermiticity_defect(&q);
        if defect > HERMITIAN_TOL {
            return Err(Error::Contract(format!("symbol is not Hermitian (defect {defect:e})")));
        }
        let q = hermitian_part(&q);
        check_unit_interval(&hermitian_eigenvalues(&q), "symbol")?;
        Ok(Self(q))
    }

    pub fn half(m: usize) -> Self {
        Self(identity(m) * c(0.5, 0.0))
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

    pub fn entropy(&self) -> f64 {
        symbol_spectrum_entropy(&self.eigenvalues()).expect("validated symbol")
    }
}

/// Entropy of a Hermitian matrix read as a symbol.
pub fn symbol_entropy(q: &CMatrix) -> Result<f64> {
    symbol_spectrum_entropy(&hermitian_eigenvalues(&hermitian_part(q)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FreeCpReport {
    /// Smallest eigenvalue of `B`.
    pub b_min_eigenvalue: f64,
    /// Smallest eigenvalue of `1 - A*A - B`.
    pub slack_min_eigenvalue: f64,
    pub b_hermitian: bool,
    pub valid: bool,
}

/// A map `Q -> A* Q A + B` on symbols.
#[derive(Debug, Clone, PartialEq)]
pub struct FreeCpMap {
    a: CMatrix,
    b: CMatrix,
}

pub fn free_cp_validate(a: &CMatrix, b: &CMatrix) -> Result<FreeCpReport> {
    let d = a.nrows();
    if a.ncols() != d || b.nrows() != d || b.ncols() != d {
        return Err(Error::Shape(format!(
            "A is {}x{}, B is {}x{}; both must be square of the same size",
            a.nrows(),
            a.ncols(),
            b.nrows(),
            b.ncols()
        )));
    }
    let b_hermitian = hermiticity_defect(b) <= HERMITIAN_TOL;
    let bh = hermitian_part(b);
    let b_min = hermitian_eigenvalues(&bh)[0];
    let slack = identity(d) - a.adjoint() * a - &bh;
    let slack_min = hermitian_eigenvalues(&hermitian_part(&slack))[0];
    Ok(FreeCpReport {
        b_min_eigenvalue: b_min,
        slack_min_eigenvalue: slack_min,
        b_hermitian,
        valid: b_hermitian && b_min >= -EIGEN_CLIP && slack_min >= -EIGEN_CLIP,
    })
}

impl FreeCpMap {
    pub fn new(a: CMatrix, b: CMatrix) -> Result<Self> {
        let r = free_cp_validate(&a, &b)?;
        if !r.b_hermitian {
            return Err(Error::Contract("B is not Hermitian".into()));
        }
        if !r.valid {
            return Err(Error::Contract(format!(
                "need 0 <= B <= 1 - A*A; min eig B = {:e}, min eig (1 - A*A - B) = {:e}",
                r.b_min_eigenvalue, r.slack_min_eigenvalue
            )));
        }
        Ok(Self { b: hermitian_part(&b), a })
    }

    pub fn identity(d: usize) -> Self {
        Self {
            a: identity(d),
            b: CMatrix::zeros(d, d),
        }
    }

    /// `Q -> q0`.
    pub fn constant(q0: &Symbol) -> Self {
        let d = q0.dim();
        Self {
            a: CMatrix::zeros(d, d),
            b: q0.matrix().clone(),
        }
    }

    pub fn dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn a(&self) -> &CMatrix {
        &self.a
    }

    pub fn b(&self) -> &CMatrix {
        &self.b
    }

    pub fn apply_matrix(&self, q: &CMatrix) -> CMatrix {
        self.a.adjoint() * q * &self.a + &self.b
    }

    pub fn apply(&self, q: &Symbol) -> Result<Symbol> {
        if q.dim() != self.dim() {
            return Err(Error::Shape(format!("symbol of dim {} for a map on C^{}", q.dim(), self.dim())));
        }
        Symbol::new(hermitian_part(&self.apply_matrix(q.matrix())))
    }

    /// `(A, B) o (A', B') = (A A', B' + A'* B A')`: apply `self`, then `next`.
    pub fn compose(&self, next: &FreeCpMap) -> Result<FreeCpMap> {
        if next.dim() != self.dim() {
            return Err(Error::Shape(format!("cannot compose maps on C^{} and C^{}", self.dim(), next.dim())));
        }
        let b = &next.b + next.a.adjoint() * &self.b * &next.a;
        Ok(FreeCpMap {
            a: &self.a * &next.a,
            b: hermitian_part(&b),
        })
    }
}

/// Spectral radius from the Schur form.
pub fn spectral_radius(a: &CMatrix) -> Result<f64> {
    let eig = a
        .clone()
        .schur()
        .eigenvalues()
        .ok_or_else(|| Error::Contract("Schur decomposition did not converge".into()))?;
    Ok(eig.iter().map(|z| z.norm()).fold(0.0, f64::max))
}

fn invariant_residual(a: &CMatrix, b: &CMatrix, q: &CMatrix) -> f64 {
    max_abs(&(q - a.adjoint() * q * a - b))
}

/// Solution of `Q = A* Q A + B`.
pub fn invariant_symbol(a: &CMatrix, b: &CMatrix) -> Result<Symbol> {
    let rho = spectral_radius(a)?;
    if rho >= 1.0 {
        return Err(Error::NonContractive(rho));
    }
    let d = a.nrows();
    // column-major vec: vec(A* Q A) = (A^T (x) A*) vec Q
    let lhs = identity(d * d) - a.transpose().kronecker(&a.adjoint());
    let rhs = DVector::from_column_slice(b.as_slice());
    let direct = lhs
        .lu()
        .solve(&rhs)
        .map(|v| hermitian_part(&CMatrix::from_column_slice(d, d, v.as_slice())));
    let q = match direct {
        Some(q) if invariant_residual(a, b, &q) < INVARIANT_TOL => q,
        _ => {
            let mut q = b.clone();
            for _ in 0..1_000_000 {
                let next = a.adjoint() * &q * a + b;
                let step = max_abs(&(&next - &q));
                q = next;
                if step < 1e-15 {
                    break;
                }
            }
            hermitian_part(&q)
        }
    };
    let res = invariant_residual(a, b, &q);
    if res >= INVARIANT_TOL {
        return Err(Error::Contract(format!("invariant symbol residual {res:e}")));
    }
    Symbol::new(q)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExtensionReport {
    /// `A*A <= 1/2` and `A*A <= 1 - B`.
    pub exists: bool,
    pub half_slack: f64,
    pub b_slack: f64,
    /// `0 <= D <= 1 - C*C` with `C = (A A)`, `D = [[B, X], [X*, B]]`.
    pub cd_valid: bool,
    pub d_min_eigenvalue: f64,
    pub cd_slack: f64,
}

/// The pair `(C, D)` of the two-site extension.
pub fn extension_pair(a: &CMatrix, b: &CMatrix, x: &CMatrix) -> (CMatrix, CMatrix) {
    let d = a.nrows();
    let mut cm = CMatrix::zeros(d, 2 * d);
    cm.view_mut((0, 0), (d, d)).copy_from(a);
    cm.view_mut((0, d), (d, d)).copy_from(a);
    let mut dm = CMatrix::zeros(2 * d, 2 * d);
    dm.view_mut((0, 0), (d, d)).copy_from(b);
    dm.view_mut((d, d), (d, d)).copy_from(b);
    dm.view_mut((0, d), (d, d)).copy_from(x);
    dm.view_mut((d, 0), (d, d)).copy_from(&x.adjoint());
    (cm, dm)
}

pub fn extension_check(a: &CMatrix, b: &CMatrix, x: &CMatrix) -> Result<ExtensionReport> {
    let d = a.nrows();
    for (name, m) in [("A", a), ("B", b), ("X", x)] {
        if m.nrows() != d || m.ncols() != d {
            return Err(Error::Shape(format!("{name} must be {d}x{d}")));
        }
    }
    let min_eig = |m: &CMatrix| hermitian_eigenvalues(&hermitian_part(m))[0];
    let ata = a.adjoint() * a;
    let half_slack = min_eig(&(identity(d) * c(0.5, 0.0) - &ata));
    let b_slack = min_eig(&(identity(d) - b - &ata));
    let (cm, dm) = extension_pair(a, b, x);
    let d_min = min_eig(&dm);
    let cd_slack = min_eig(&(identity(2 * d) - cm.adjoint() * &cm - &dm));
    Ok(ExtensionReport {
        exists: half_slack >= -EIGEN_CLIP && b_slack >= -EIGEN_CLIP,
        half_slack,
        b_slack,
        cd_valid: d_min >= -EIGEN_CLIP && cd_slack >= -EIGEN_CLIP,
        d_min_eigenvalue: d_min,
        cd_slack,
    })
}

/// Stationary free-fermionic process.
#[derive(Debug, Clone, PartialEq)]
pub struct FermionProcessSpec {
    map: FreeCpMap,
    x: CMatrix,
    q: Symbol,
}

impl FermionProcessSpec {
    pub fn new(a: CMatrix, b: CMatrix, x: CMatrix) -> Result<Self> {
        let map = FreeCpMap::new(a, b)?;
        let ext = extension_check(&map.a, &map.b, &x)?;
        if !ext.exists {
            return Err(Error::Contract(format!(
                "no compatible extension: min eig (1/2 - A*A) = {:e}, min eig (1 - B - A*A) = {:e}",
                ext.half_slack, ext.b_slack
            )));
        }
        if !ext.cd_valid {
            return Err(Error::Contract(format!(
                "X does not label an extension: min eig D = {:e}, min eig (1 - C*C - D) = {:e}",
                ext.d_min_eigenvalue, ext.cd_slack
            )));
        }
        let q = invariant_symbol(&map.a, &map.b)?;
        Ok(Self { map, x, q })
    }

    /// `A = 0`, `X = 0`: the i.i.d. process with symbol `q`.
    pub fn iid(q: &Symbol) -> Self {
        let d = q.dim();
        Self {
            map: FreeCpMap::constant(q),
            x: CMatrix::zeros(d, d),
            q: q.clone(),
        }
    }

    pub fn dim(&self) -> usize {
        self.map.dim()
    }

    pub fn map(&self) -> &FreeCpMap {
        &self.map
    }

    pub fn a(&self) -> &CMatrix {
        &self.map.a
    }

    pub fn b(&self) -> &CMatrix {
        &self.map.b
    }

    pub fn x(&self) -> &CMatrix {
        &self.x
    }

    pub fn q(&self) -> &Symbol {
        &self.q
    }

    /// `Q - B + X`.
    pub fn r(&self) -> CMatrix {
        self.q.matrix() - &self.map.b + &self.x
    }

    /// Block `k` above the diagonal, `(A*)^k (Q - B + X)`, and `Q` for `k = 0`.
    pub fn block(&self, k: usize) -> CMatrix {
        if k == 0 {
            return self.q.matrix().clone();
        }
        let astar = self.map.a.adjoint();
        let mut out = self.r();
        for _ in 0..k {
            out = &astar * out;
        }
        out
    }

    /// Leading `n x n` block corner of the correlation operator.
    pub fn qinf_truncation(&self, n: usize) -> Result<CMatrix> {
        let d = self.dim();
        if n == 0 || n * d > MAX_TRUNCATION_DIM {
            return Err(Error::TooLarge(format!("{n} blocks of size {d} exceed {MAX_TRUNCATION_DIM}")));
        }
        let blocks: Vec<CMatrix> = {
            let astar = self.map.a.adjoint();
            let mut v = vec![self.q.matrix().clone()];
            let mut cur = self.r();
            for _ in 1..n {
                cur = &astar * cur;
                v.push(cur.clone());
            }
            v
        };
        let mut m = CMatrix::zeros(n * d, n * d);
        for i in 0..n {
            for j in i..n {
                let blk = &blocks[j - i];
                m.view_mut((i * d, j * d), (d, d)).copy_from(blk);
                if j > i {
                    m.view_mut((j * d, i * d), (d, d)).copy_from(&blk.adjoint());
                }
            }
        }
        Ok(m)
    }

    /// `Q + (A* e^{i theta})(1 - A* e^{i theta})^{-1} (Q - B + X) + h.c.`
    pub fn symbol_function(&self, theta: f64) -> Result<CMatrix> {
        let d = self.dim();
        let z = self.map.a.adjoint() * crate::linalg::C64::from_polar(1.0, theta);
        let inv = (identity(d) - &z).try_inverse().ok_or(Error::Spectral(theta))?;
        let half = z * inv * self.r();
        Ok(hermitian_part(&(self.q.matrix() + &half + half.adjoint())))
    }

    /// `H(Q_n)` of the leading `n` blocks.
    pub fn block_entropy(&self, n: usize) -> Result<f64> {
        symbol_entropy(&self.qinf_truncation(n)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruncationPoint {
    pub n: usize,
    pub h_n: f64,
    pub average: f64,
    /// `H_n - H_{n-1}`, with `H_0 = 0`.
    pub increment: f64,
}

pub fn entropy_rate_truncation(spec: &FermionProcessSpec, n: usize) -> Result<TruncationPoint> {
    let h_n = spec.block_entropy(n)?;
    let prev = if n > 1 { spec.block_entropy(n - 1)? } else { 0.0 };
    Ok(TruncationPoint {
        n,
        h_n,
        average: h_n / n as f64,
        increment: h_n - prev,
    })
}

/// `H_n`, averages and increments for `n = 1..=n_max`.
pub fn entropy_curve(spec: &FermionProcessSpec, n_max: usize) -> Result<Vec<TruncationPoint>> {
    use rayon::prelude::*;
    let h: Vec<f64> = (1..=n_max)
        .into_par_iter()
        .map(|n| spec.block_entropy(n))
        .collect::<Result<_>>()?;
    Ok(h
        .iter()
        .enumerate()
        .map(|(i, &h_n)| TruncationPoint {
            n: i + 1,
            h_n,
            average: h_n / (i + 1) as f64,
            increment: h_n - if i == 0 { 0.0 } else { h[i - 1] },
        })
        .collect())
}

pub use toeplitz::{entropy_rate_integral, QuadratureEstimate};

/// Sample processes: a scalar one, a normal and a non-normal 2x2 one.
pub fn sample_specs() -> Vec<(&'static str, FermionProcessSpec)> {
    let m = |rows: &[[f64; 2]]| CMatrix::from_fn(2, 2, |i, j| c(rows[i][j], 0.0));
    let scalar = FermionProcessSpec::new(
        CMatrix::from_element(1, 1, c(0.5, 0.0)),
        CMatrix::from_element(1, 1, c(0.3, 0.0)),
        CMatrix::from_element(1, 1, c(0.1, 0.0)),
    )
    .expect("scalar sample");
    let normal = FermionProcessSpec::new(
        m(&[[0.5, 0.0], [0.0, -0.3]]),
        m(&[[0.3, 0.1], [0.1, 0.4]]),
        m(&[[0.1, 0.0], [0.05, -0.05]]),
    )
    .expect("normal sample");
    let non_normal = FermionProcessSpec::new(
        CMatrix::from_fn(2, 2, |i, j| [[c(0.4, 0.0), c(0.3, 0.1)], [c(0.0, 0.0), c(0.2, 0.0)]][i][j]),
        m(&[[0.35, -0.05], [-0.05, 0.3]]),
        m(&[[0.05, 0.02], [0.0, 0.08]]),
    )
    .expect("non-normal sample");
    vec![("scalar", scalar), ("normal", normal), ("non_normal", non_normal)]
}

/// JSON form `{"A": .., "B": .., "X": ..}`; entries are reals or `[re, im]`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FermionSpecJson {
    #[serde(rename = "A", with = "crate::json::complex_matrix")]
    pub a: CMatrix,
    #[serde(rename = "B", with = "crate::json::complex_matrix")]
    pub b: CMatrix,
    #[serde(rename = "X", with = "crate::json::complex_matrix")]
    pub x: CMatrix,
}

impl FermionSpecJson {
    pub fn build(&self) -> Result<FermionProcessSpec> {
        FermionProcessSpec::new(self.a.clone(), self.b.clone(), self.x.clone())
    }

    pub fn from_spec(spec: &FermionProcessSpec) -> Self {
        Self {
            a: spec.a().clone(),
            b: spec.b().clone(),
            x: spec.x().clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{ginibre, random_density, substream};
    use proptest::prelude::*;

    fn scalar(v: f64) -> CMatrix {
        CMatrix::from_element(1, 1, c(v, 0.0))
    }

    fn random_map(d: usize, rng: &mut crate::random::ProcRng) -> FreeCpMap {
        // scale A so that A*A <= 1/2, then take B = s (1 - A*A) compressed by a random density
        let g = ginibre(d, d, rng);
        let norm = hermitian_eigenvalues(&(g.adjoint() * &g)).last().copied().unwrap().sqrt();
        let a = g * c(0.6 / norm, 0.0);
        let slack = identity(d) - a.adjoint() * &a;
        let w = random_density(d, rng).into_matrix();
        let sq = crate::linalg::hermitian_function(&slack, f64::sqrt);
        let b = &sq * w * c(0.9, 0.0) * &sq;
        FreeCpMap::new(a, hermitian_part(&b)).unwrap()
    }

    fn random_symbol(d: usize, rng: &mut crate::random::ProcRng) -> Symbol {
        Symbol::new(random_density(d, rng).into_matrix()).unwrap()
    }

    #[test]
    fn scalar_map_examples() {
        let m = FreeCpMap::new(scalar(0.6), scalar(0.5)).unwrap();
        let out = m.apply(&Symbol::new(scalar(0.3)).unwrap()).unwrap();
        assert!((out.matrix()[(0, 0)].re - (0.36 * 0.3 + 0.5)).abs() < 1e-15);
        assert!(FreeCpMap::new(scalar(0.6), scalar(0.7)).is_err());
        let q = Symbol::new(scalar(0.25)).unwrap();
        assert_eq!(FreeCpMap::identity(1).apply(&q).unwrap(), q);
        let q0 = Symbol::new(scalar(0.8)).unwrap();
        assert_eq!(FreeCpMap::constant(&q0).apply(&q).unwrap(), q0);
    }

    #[test]
    fn composition_matches_sequential_application() {
        let mut rng = substream(1, "compose");
        for _ in 0..20 {
            let (m1, m2, m3) = (random_map(3, &mut rng), random_map(3, &mut rng), random_map(3, &mut rng));
            let q = random_symbol(3, &mut rng);
            let both = m1.compose(&m2).unwrap();
            assert!(free_cp_validate(both.a(), both.b()).unwrap().valid);
            let seq = m2.apply(&m1.apply(&q).unwrap()).unwrap();
            assert!(max_abs(&(both.apply(&q).unwrap().into_matrix() - seq.into_matrix())) < 1e-12);
            let l = m1.compose(&m2).unwrap().compose(&m3).unwrap();
            let r = m1.compose(&m2.compose(&m3).unwrap()).unwrap();
            assert!(max_abs(&(l.a() - r.a())) < 1e-12 && max_abs(&(l.b() - r.b())) < 1e-12);
            let id = m1.compose(&FreeCpMap::identity(3)).unwrap();
            assert!(max_abs(&(id.a() - m1.a())) < 1e-15 && max_abs(&(id.b() - m1.b())) < 1e-15);
        }
        let m1 = random_map(2, &mut rng);
        let zero = FreeCpMap::new(CMatrix::zeros(2, 2), identity(2) * c(0.3, 0.0)).unwrap();
        let comp = m1.compose(&zero).unwrap();
        assert!(max_abs(comp.a()) == 0.0 && max_abs(&(comp.b() - zero.b())) < 1e-15);
    }

    #[test]
    fn invariant_symbol_cases() {
        let q = invariant_symbol(&scalar(0.5), &scalar(0.3)).unwrap();
        assert!((q.matrix()[(0, 0)].re - 0.4).abs() < 1e-15);
        let b = identity(2) * c(0.2, 0.0);
        let q = invariant_symbol(&CMatrix::zeros(2, 2), &b).unwrap();
        assert!(max_abs(&(q.matrix() - &b)) < 1e-15);
        assert!(matches!(invariant_symbol(&scalar(1.0), &scalar(0.0)), Err(Error::NonContractive(_))));
        let mut rng = substream(2, "invariant");
        for _ in 0..20 {
            let m = random_map(3, &mut rng);
            let q = invariant_symbol(m.a(), m.b()).unwrap();
            assert!(invariant_residual(m.a(), m.b(), q.matrix()) < 1e-12);
            // fixed-point oracle
            let mut it = CMatrix::zeros(3, 3);
            for _ in 0..2000 {
                it = m.apply_matrix(&it);
            }
            assert!(max_abs(&(it - q.matrix())) < 1e-12);
        }
    }

    #[test]
    fn extension_examples() {
        let a = scalar(0.4f64.sqrt());
        let r = extension_check(&a, &scalar(0.0), &scalar(0.0)).unwrap();
        assert!(r.exists && r.cd_valid);
        let r = extension_check(&scalar(1.0), &scalar(0.0), &scalar(0.0)).unwrap();
        assert!(!r.exists);
        let r = extension_check(&a, &scalar(0.0), &scalar(50.0)).unwrap();
        assert!(r.exists && !r.cd_valid);
        // scalar: D <= 1 - C*C reads 1 - a^2 - b >= |a^2 + x|
        let r = extension_check(&scalar(0.5), &scalar(0.3), &scalar(0.45)).unwrap();
        assert!(r.exists && !r.cd_valid);
        let r = extension_check(&scalar(0.5), &scalar(0.3), &scalar(-0.25)).unwrap();
        assert!(r.exists && r.cd_valid);
    }

    #[test]
    fn samples_are_valid() {
        for (name, s) in sample_specs() {
            let r = extension_check(s.a(), s.b(), s.x()).unwrap();
            assert!(r.exists && r.cd_valid, "{name}: {r:?}");
            assert!(spectral_radius(s.a()).unwrap() < 1.0);
            let two = s.qinf_truncation(2).unwrap();
            assert!(Symbol::new(two).is_ok(), "{name}");
        }
        let (_, s) = &sample_specs()[0];
        assert!((s.q().matrix()[(0, 0)].re - 0.4).abs() < 1e-14);
        assert!((s.r()[(0, 0)].re - 0.2).abs() < 1e-14);
    }

    #[test]
    fn truncation_structure() {
        for (name, s) in sample_specs() {
            let d = s.dim();
            assert!(max_abs(&(s.qinf_truncation(1).unwrap() - s.q().matrix())) == 0.0);
            let two = s.qinf_truncation(2).unwrap();
            let off = two.view((0, d), (d, d)).into_owned();
            assert!(max_abs(&(off - s.a().adjoint() * s.r())) < 1e-15);
            let big = s.qinf_truncation(12).unwrap();
            let small = s.qinf_truncation(11).unwrap();
            assert_eq!(big.view((0, 0), (11 * d, 11 * d)).into_owned(), small, "{name}");
            let eig = hermitian_eigenvalues(&big);
            assert!(eig[0] > -1e-9 && *eig.last().unwrap() < 1.0 + 1e-9, "{name}: {eig:?}");
        }
        let q = Symbol::new(CMatrix::from_fn(2, 2, |i, j| [[c(0.3, 0.0), c(0.1, 0.1)], [c(0.1, -0.1), c(0.6, 0.0)]][i][j])).unwrap();
        let iid = FermionProcessSpec::iid(&q);
        let m = iid.qinf_truncation(3).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let blk = m.view((2 * i, 2 * j), (2, 2)).into_owned();
                let want = if i == j { q.matrix().clone() } else { CMatrix::zeros(2, 2) };
                assert!(max_abs(&(blk - want)) < 1e-15);
            }
        }
        assert!((iid.block_entropy(4).unwrap() - 4.0 * q.entropy()).abs() < 1e-12);
    }

    #[test]
    fn symbol_function_scalar() {
        let (_, s) = &sample_specs()[0];
        let t0 = s.symbol_function(0.0).unwrap()[(0, 0)].re;
        assert!((t0 - (0.4 + 2.0 * 0.2)).abs() < 1e-14);
        let q = Symbol::new(identity(2) * c(0.3, 0.0)).unwrap();
        let iid = FermionProcessSpec::iid(&q);
        assert!(max_abs(&(iid.symbol_function(1.1).unwrap() - q.matrix())) < 1e-15);
    }

    #[test]
    fn symbol_entropy_values() {
        assert!((Symbol::half(1).entropy() - std::f64::consts::LN_2).abs() < 1e-15);
        assert!((Symbol::new(scalar(0.2)).unwrap().entropy() - 0.5004024235381879).abs() < 1e-14);
        let v = [c(0.6, 0.0), c(0.0, 0.8)];
        let proj = CMatrix::from_fn(2, 2, |i, j| v[i] * v[j].conj());
        assert!(Symbol::new(proj).unwrap().entropy().abs() < 1e-9);
        assert!(Symbol::new(scalar(1.2)).is_err());
        assert!(symbol_entropy(&scalar(-0.1)).is_err());
    }

    #[test]
    fn json_round_trip() {
        let spec: FermionSpecJson =
            serde_json::from_str(r#"{"A": [[0.5]], "B": [[0.3]], "X": [[[0.1, 0.0]]]}"#).unwrap();
        let built = spec.build().unwrap();
        assert!((built.q().matrix()[(0, 0)].re - 0.4).abs() < 1e-14);
        let text = serde_json::to_string(&FermionSpecJson::from_spec(&built)).unwrap();
        let again: FermionSpecJson = serde_json::from_str(&text).unwrap();
        assert_eq!(again.a, built.a().clone());
        assert!(serde_json::from_str::<FermionSpecJson>(r#"{"A": [[0.5]], "B": [[0.3]], "X": [[0]], "Y": 1}"#).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn maps_send_symbols_to_symbols(seed in any::<u64>(), d in 1usize..4) {
            let mut rng = substream(seed, "prop-map");
            let m = random_map(d, &mut rng);
            let q = random_symbol(d, &mut rng);
            let out = m.apply(&q).unwrap();
            let e = out.eigenvalues();
            prop_assert!(e[0] >= -1e-10 && e[d - 1] <= 1.0 + 1e-10);
        }

        #[test]
        fn symbol_entropy_bounds(seed in any::<u64>(), d in 1usize..5) {
            let mut rng = substream(seed, "prop-entropy");
            let q = random_symbol(d, &mut rng);
            let h = q.entropy();
            prop_assert!(h >= 0.0 && h <= d as f64 * std::f64::consts::LN_2 + 1e-12);
        }
    }
}
