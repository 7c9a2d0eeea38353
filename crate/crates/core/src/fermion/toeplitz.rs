//! Block Toeplitz compressions of matrix-valued symbols, Szegő limits and
//! the entropy rate integral.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{symbol_entropy, FermionProcessSpec};
use crate::error::{Error, Result};
use crate::linalg::{c, hermitian_eigenvalues, hermitian_part, CMatrix, C64};

/// Stopping tolerance of the doubling trapezoid rule.
pub const QUADRATURE_TOL: f64 = 1e-8;
/// Largest doubling exponent, `2^16` nodes.
pub const MAX_QUADRATURE_LEVEL: u32 = 16;
const FIRST_LEVEL: u32 = 4;

type ClosedForm = Arc<dyn Fn(f64) -> CMatrix + Send + Sync>;

#[derive(Clone)]
enum Source {
    Closed(ClosedForm),
    /// `T^(k)` for `k >= 0`; negative indices by adjoint.
    Fourier(Vec<CMatrix>),
    Process(FermionProcessSpec),
}

/// A Hermitian-matrix-valued function on `[-pi, pi)` with its Fourier
/// coefficients `T^(k) = (1/2pi) int T(theta) e^{-ik theta} dtheta`.
/// The Toeplitz compression has block `T^(j - i)` at `(i, j)`.
#[derive(Clone)]
pub struct ToeplitzSymbolFn {
    d: usize,
    source: Source,
}

impl fmt::Debug for ToeplitzSymbolFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match &self.source {
            Source::Closed(_) => "closed",
            Source::Fourier(_) => "fourier",
            Source::Process(_) => "process",
        };
        f.debug_struct("ToeplitzSymbolFn").field("d", &self.d).field("source", &kind).finish()
    }
}

/// `theta_j = -pi + 2 pi j / n`.
pub fn theta_grid(n: usize) -> Vec<f64> {
    (0..n).map(|j| -PI + 2.0 * PI * j as f64 / n as f64).collect()
}

impl ToeplitzSymbolFn {
    pub fn closed(d: usize, f: impl Fn(f64) -> CMatrix + Send + Sync + 'static) -> Self {
        Self {
            d,
            source: Source::Closed(Arc::new(f)),
        }
    }

    pub fn scalar(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self::closed(1, move |t| CMatrix::from_element(1, 1, c(f(t), 0.0)))
    }

    /// From `T^(0), T^(1), ..., T^(K)`; coefficients beyond `K` vanish.
    pub fn fourier(coeffs: Vec<CMatrix>) -> Result<Self> {
        let d = coeffs.first().map(|m| m.nrows()).ok_or_else(|| Error::Shape("no coefficients".into()))?;
        if coeffs.iter().any(|m| m.nrows() != d || m.ncols() != d) {
            return Err(Error::Shape("Fourier coefficients must share one square shape".into()));
        }
        if crate::linalg::hermiticity_defect(&coeffs[0]) > crate::linalg::HERMITIAN_TOL {
            return Err(Error::Contract("T^(0) must be Hermitian".into()));
        }
        Ok(Self {
            d,
            source: Source::Fourier(coeffs),
        })
    }

    pub fn process(spec: &FermionProcessSpec) -> Self {
        Self {
            d: spec.dim(),
            source: Source::Process(spec.clone()),
        }
    }

    /// `T(theta) = 1/2 + cos(theta)/5 + sin(2 theta)/3`.
    pub fn figure1() -> Self {
        Self::scalar(figure1_value)
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn value(&self, theta: f64) -> Result<CMatrix> {
        match &self.source {
            Source::Closed(f) => Ok(hermitian_part(&f(theta))),
            Source::Fourier(coeffs) => {
                let mut out = coeffs[0].clone();
                for (k, t) in coeffs.iter().enumerate().skip(1) {
                    let half = t * C64::from_polar(1.0, k as f64 * theta);
                    out += &half + half.adjoint();
                }
                Ok(hermitian_part(&out))
            }
            Source::Process(spec) => spec.symbol_function(theta),
        }
    }

    /// Fourier coefficient by trapezoid quadrature for closed forms, exact
    /// otherwise.
    pub fn coefficient(&self, k: i64) -> Result<CMatrix> {
        let m = k.unsigned_abs() as usize;
        let pos = match &self.source {
            Source::Closed(f) => {
                let n = (8 * m).next_power_of_two().max(4096);
                let mut acc = CMatrix::zeros(self.d, self.d);
                for theta in theta_grid(n) {
                    acc += f(theta) * C64::from_polar(1.0, -(m as f64) * theta);
                }
                acc * c(1.0 / n as f64, 0.0)
            }
            Source::Fourier(coeffs) => coeffs.get(m).cloned().unwrap_or_else(|| CMatrix::zeros(self.d, self.d)),
            Source::Process(spec) => spec.block(m),
        };
        Ok(if k < 0 { pos.adjoint() } else { pos })
    }

    /// `P_n T^ P_n` as an `n d x n d` matrix.
    pub fn toeplitz(&self, n: usize) -> Result<CMatrix> {
        let d = self.d;
        if n == 0 || n * d > super::MAX_TRUNCATION_DIM {
            return Err(Error::TooLarge(format!("{n} blocks of size {d}")));
        }
        if let Source::Process(spec) = &self.source {
            return spec.qinf_truncation(n);
        }
        let coeffs: Vec<CMatrix> = (0..n as i64)
            .into_par_iter()
            .map(|k| self.coefficient(k))
            .collect::<Result<_>>()?;
        let mut m = CMatrix::zeros(n * d, n * d);
        for i in 0..n {
            for j in i..n {
                m.view_mut((i * d, j * d), (d, d)).copy_from(&coeffs[j - i]);
                if j > i {
                    m.view_mut((j * d, i * d), (d, d)).copy_from(&coeffs[j - i].adjoint());
                }
            }
        }
        Ok(hermitian_part(&m))
    }
}

pub fn figure1_value(theta: f64) -> f64 {
    0.5 + 0.2 * theta.cos() + (2.0 * theta).sin() / 3.0
}

/// Ascending eigenvalues of `P_n T^ P_n`.
pub fn toeplitz_eigs(tfn: &ToeplitzSymbolFn, n: usize) -> Result<Vec<f64>> {
    Ok(hermitian_eigenvalues(&tfn.toeplitz(n)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureEstimate {
    pub value: f64,
    pub points: usize,
    /// Difference to the previous level; `NaN` for a fixed rule.
    pub error: f64,
    pub converged: bool,
}

/// `(1/2pi) int f` over a period by the trapezoid rule on `points` nodes.
pub fn periodic_mean_fixed(f: impl Fn(f64) -> f64 + Sync, points: usize) -> f64 {
    let v: f64 = theta_grid(points.max(1)).into_par_iter().map(&f).collect::<Vec<_>>().iter().sum();
    v / points.max(1) as f64
}

/// `(1/2pi) int f` with node doubling from 16 until successive values agree
/// within `tol` or `2^16` nodes are used. Earlier nodes are reused.
pub fn periodic_mean(f: impl Fn(f64) -> f64 + Sync, tol: f64) -> QuadratureEstimate {
    let mut n = 1usize << FIRST_LEVEL;
    let mut sum: f64 = theta_grid(n).into_par_iter().map(&f).collect::<Vec<_>>().iter().sum();
    let mut value = sum / n as f64;
    let mut error = f64::INFINITY;
    for _ in FIRST_LEVEL..MAX_QUADRATURE_LEVEL {
        let h = 2.0 * PI / n as f64;
        let mids: f64 = (0..n)
            .into_par_iter()
            .map(|j| f(-PI + h * (j as f64 + 0.5)))
            .collect::<Vec<_>>()
            .iter()
            .sum();
        sum += mids;
        n *= 2;
        let next = sum / n as f64;
        error = (next - value).abs();
        value = next;
        if error < tol {
            break;
        }
    }
    QuadratureEstimate {
        value,
        points: n,
        error,
        converged: error < tol,
    }
}

/// `(1/2pi) int H(Q(theta)) dtheta`, by doubling unless `points` is given.
pub fn entropy_rate_integral(spec: &FermionProcessSpec, points: Option<usize>) -> Result<QuadratureEstimate> {
    let integrand = |theta: f64| {
        spec.symbol_function(theta)
            .and_then(|q| symbol_entropy(&q))
            .unwrap_or(f64::NAN)
    };
    let est = match points {
        Some(p) => QuadratureEstimate {
            value: periodic_mean_fixed(integrand, p),
            points: p,
            error: f64::NAN,
            converged: true,
        },
        None => periodic_mean(integrand, QUADRATURE_TOL),
    };
    if !est.value.is_finite() {
        return Err(Error::Contract("symbol function left the unit interval".into()));
    }
    Ok(est)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SzegoRow {
    pub n: usize,
    /// `(1/n) tr f(P_n T^ P_n)`.
    pub average: f64,
    /// `tr f(P_{n+1} T^ P_{n+1}) - tr f(P_n T^ P_n)`.
    pub increment: f64,
    /// `(1/2pi) int tr f(T(theta)) dtheta`.
    pub target: f64,
}

/// Szegő averages and increments of `tr f` against the limiting integral.
pub fn szego_check(tfn: &ToeplitzSymbolFn, f: impl Fn(f64) -> f64 + Sync, n_list: &[usize]) -> Result<Vec<SzegoRow>> {
    let trace_f = |n: usize| -> Result<f64> { Ok(toeplitz_eigs(tfn, n)?.into_iter().map(&f).sum()) };
    let target = periodic_mean(
        |theta| match tfn.value(theta) {
            Ok(t) => hermitian_eigenvalues(&t).into_iter().map(&f).sum(),
            Err(_) => f64::NAN,
        },
        QUADRATURE_TOL,
    )
    .value;
    n_list
        .par_iter()
        .map(|&n| {
            let a = trace_f(n)?;
            let b = trace_f(n + 1)?;
            Ok(SzegoRow {
                n,
                average: a / n as f64,
                increment: b - a,
                target,
            })
        })
        .collect()
}

/// `(theta_j, T(theta_j))` on the uniform grid.
pub fn figure1_rows(points: usize) -> Vec<(f64, f64)> {
    theta_grid(points).into_iter().map(|t| (t, figure1_value(t))).collect()
}

/// Sizes listed in the eigenvalue dataset: `1..=50` and `100`.
pub fn figure2_sizes() -> Vec<usize> {
    (1..=50).chain(std::iter::once(100)).collect()
}

/// `(n, index, eigenvalue)` for every listed size.
pub fn figure2_rows(tfn: &ToeplitzSymbolFn) -> Result<Vec<(usize, usize, f64)>> {
    let per_n: Vec<Vec<f64>> = figure2_sizes()
        .into_par_iter()
        .map(|n| toeplitz_eigs(tfn, n))
        .collect::<Result<_>>()?;
    Ok(figure2_sizes()
        .into_iter()
        .zip(per_n)
        .flat_map(|(n, eigs)| eigs.into_iter().enumerate().map(move |(i, v)| (n, i, v)))
        .collect())
}

/// Kolmogorov distance between the eigenvalue distribution of `P_n T^ P_n`
/// and `x -> |{theta : T(theta) <= x}| / 2pi`, the latter from `samples`
/// uniform angles. Scalar symbols only.
pub fn eigenvalue_cdf_distance(tfn: &ToeplitzSymbolFn, n: usize, samples: usize) -> Result<f64> {
    if tfn.dim() != 1 {
        return Err(Error::Shape("eigenvalue distribution check needs a scalar symbol".into()));
    }
    let eigs = toeplitz_eigs(tfn, n)?;
    let mut values: Vec<f64> = theta_grid(samples)
        .into_par_iter()
        .map(|t| tfn.value(t).map(|m| m[(0, 0)].re))
        .collect::<Result<_>>()?;
    values.sort_by(|a, b| a.total_cmp(b));
    let cdf = |x: f64| values.partition_point(|&v| v <= x) as f64 / values.len() as f64;
    let below = |x: f64| values.partition_point(|&v| v < x) as f64 / values.len() as f64;
    let nf = eigs.len() as f64;
    Ok(eigs
        .iter()
        .enumerate()
        .map(|(i, &e)| ((i + 1) as f64 / nf - cdf(e)).abs().max((i as f64 / nf - below(e)).abs()))
        .fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fermion::sample_specs;
    use crate::linalg::max_abs;

    #[test]
    fn figure1_coefficients() {
        let t = ToeplitzSymbolFn::figure1();
        let want = [(0, c(0.5, 0.0)), (1, c(0.1, 0.0)), (-1, c(0.1, 0.0)), (2, c(0.0, -1.0 / 6.0)), (-2, c(0.0, 1.0 / 6.0)), (3, c(0.0, 0.0))];
        for (k, v) in want {
            assert!((t.coefficient(k).unwrap()[(0, 0)] - v).norm() < 1e-14, "k = {k}");
        }
        let e = toeplitz_eigs(&t, 1).unwrap();
        assert!((e[0] - 0.5).abs() < 1e-14);
        let rows = figure1_rows(1024);
        assert_eq!(rows.len(), 1024);
        assert!(rows[512].0.abs() < 1e-15 && (rows[512].1 - 0.7).abs() < 1e-15);
    }

    #[test]
    fn eigenvalues_in_range_and_interlace() {
        let t = ToeplitzSymbolFn::figure1();
        let grid: Vec<f64> = figure1_rows(1 << 16).into_iter().map(|r| r.1).collect();
        let (lo, hi) = grid.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
        let mut prev = toeplitz_eigs(&t, 1).unwrap();
        for n in 2..=40 {
            let cur = toeplitz_eigs(&t, n).unwrap();
            assert!(cur[0] >= lo - 1e-6 && cur[n - 1] <= hi + 1e-6);
            for j in 0..n - 1 {
                assert!(cur[j] <= prev[j] + 1e-10 && prev[j] <= cur[j + 1] + 1e-10, "n = {n}, j = {j}");
            }
            prev = cur;
        }
    }

    #[test]
    fn eigenvalue_distribution_matches_symbol() {
        let t = ToeplitzSymbolFn::figure1();
        let dist = eigenvalue_cdf_distance(&t, 100, 1 << 16).unwrap();
        assert!(dist <= 0.05, "{dist}");
        assert_eq!(figure2_rows(&t).unwrap().len(), 1275 + 100);
    }

    #[test]
    fn szego_identity_and_square() {
        let t = ToeplitzSymbolFn::figure1();
        for row in szego_check(&t, |x| x, &[1, 5, 20]).unwrap() {
            assert!((row.average - 0.5).abs() < 1e-13 && (row.target - 0.5).abs() < 1e-13);
        }
        // mean of T^2 from the coefficients
        let oracle = 0.25 + 2.0 * (0.01 + 1.0 / 36.0);
        let quad = periodic_mean(|x| figure1_value(x).powi(2), 1e-12).value;
        assert!((quad - oracle).abs() < 1e-14);
        let rows = szego_check(&t, |x| x * x, &[10, 100, 200]).unwrap();
        assert!((rows[0].target - oracle).abs() < 1e-12);
        assert!((rows[2].average - oracle).abs() < (rows[0].average - oracle).abs());
        assert!((rows[2].average - oracle).abs() < 1e-3);
        assert!((rows[2].increment - oracle).abs() < 1e-10);
    }

    #[test]
    fn process_fourier_coefficients_match_blocks() {
        for (name, spec) in sample_specs() {
            let f = spec.clone();
            let closed = ToeplitzSymbolFn::closed(spec.dim(), move |t| f.symbol_function(t).unwrap());
            for k in 0..=5 {
                let diff = max_abs(&(closed.coefficient(k).unwrap() - spec.block(k as usize)));
                assert!(diff < 1e-10, "{name}, k = {k}: {diff:e}");
            }
            assert!(max_abs(&(closed.toeplitz(6).unwrap() - spec.qinf_truncation(6).unwrap())) < 1e-10);
        }
    }

    #[test]
    fn truncation_converges_to_integral() {
        for (name, spec) in sample_specs() {
            let target = entropy_rate_integral(&spec, None).unwrap().value;
            let p = crate::fermion::entropy_rate_truncation(&spec, 300).unwrap();
            assert!((p.increment - target).abs() < 1e-3, "{name}: {p:?} vs {target}");
            assert!((p.average - target).abs() < 1e-2, "{name}: {p:?} vs {target}");
            let curve = crate::fermion::entropy_curve(&spec, 40).unwrap();
            for w in curve.windows(2) {
                assert!(w[1].h_n >= w[0].h_n - 1e-10, "{name}");
                assert!(w[1].increment <= w[0].increment + 1e-10, "{name}: {w:?}");
            }
            assert!((curve[39].increment - target).abs() < (curve[39].average - target).abs(), "{name}");
        }
    }

    #[test]
    fn fourier_source() {
        let t = ToeplitzSymbolFn::fourier(vec![
            CMatrix::from_element(1, 1, c(0.5, 0.0)),
            CMatrix::from_element(1, 1, c(0.1, 0.0)),
            CMatrix::from_element(1, 1, c(0.0, -1.0 / 6.0)),
        ])
        .unwrap();
        for theta in [-2.0, 0.3, 1.7] {
            assert!((t.value(theta).unwrap()[(0, 0)].re - figure1_value(theta)).abs() < 1e-14);
        }
        let a = toeplitz_eigs(&t, 30).unwrap();
        let b = toeplitz_eigs(&ToeplitzSymbolFn::figure1(), 30).unwrap();
        assert!(a.iter().zip(&b).all(|(x, y)| (x - y).abs() < 1e-12));
    }

    #[test]
    fn entropy_rate_integral_cases() {
        let q = crate::fermion::Symbol::new(CMatrix::from_element(1, 1, c(0.2, 0.0))).unwrap();
        let iid = FermionProcessSpec::iid(&q);
        let est = entropy_rate_integral(&iid, None).unwrap();
        assert!(est.converged && (est.value - 0.5004024235381879).abs() < 1e-14);
        for (name, spec) in sample_specs() {
            let est = entropy_rate_integral(&spec, None).unwrap();
            assert!(est.converged, "{name}: {est:?}");
            let fixed = entropy_rate_integral(&spec, Some(est.points)).unwrap();
            assert!((fixed.value - est.value).abs() < 1e-12);
        }
    }
}
