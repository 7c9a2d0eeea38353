//! Davies maps: a detailed-balanced stochastic matrix `T` on the diagonal and
//! a real symmetric damping matrix `D` on the off-diagonal entries.
//!
//! The map is built in the observable picture,
//! `Gamma(e_jj) = sum_i T_ij e_ii` and `Gamma(e_ij) = D_ij e_ij` for `i != j`,
//! so its dual acts on diagonal states by `mu -> mu T`.

use nalgebra::DMatrix;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{CpMap, CP_TOL};
use crate::classical::{invariant_measure, StochasticMatrix};
use crate::error::{Error, Result};
use crate::linalg::{
    c, hermitian_eigenvalues, psd_check_matrix, real_to_complex, spectral_entropy, xlogx_term, CMatrix, ProbVector,
    C64,
};
use crate::optimize::NelderMead;
use crate::random::{indexed_substream, random_pure, substream};

fn check_damping(t: &StochasticMatrix, d: &DMatrix<f64>) -> Result<()> {
    let n = t.dim();
    if d.nrows() != n || d.ncols() != n {
        return Err(Error::Shape(format!("damping matrix is {}x{}, expected {n}x{n}", d.nrows(), d.ncols())));
    }
    for i in 0..n {
        for j in 0..i {
            if (d[(i, j)] - d[(j, i)]).abs() > 1e-12 || !d[(i, j)].is_finite() {
                return Err(Error::Shape(format!("damping matrix is not symmetric at ({i}, {j})")));
            }
        }
    }
    Ok(())
}

/// The observable-picture Davies map. Diagonal entries of `d` are ignored.
pub fn davies_build(t: &StochasticMatrix, d: &DMatrix<f64>) -> Result<CpMap> {
    check_damping(t, d)?;
    let n = t.dim();
    CpMap::from_fn(n, n, |x| {
        CMatrix::from_fn(n, n, |i, j| {
            if i == j {
                (0..n).map(|k| x[(k, k)] * t.get(i, k)).sum::<C64>()
            } else {
                x[(i, j)] * d[(i, j)]
            }
        })
    })
}

/// `T` on the diagonal and `D` off it.
pub fn mixed_matrix(t: &StochasticMatrix, d: &DMatrix<f64>) -> DMatrix<f64> {
    let n = t.dim();
    DMatrix::from_fn(n, n, |i, j| if i == j { t.get(i, i) } else { d[(i, j)] })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DaviesReport {
    /// `max |mu_i T_ij - mu_j T_ji|`.
    pub detailed_balance_residual: f64,
    /// `max |T_ij T_jk T_ki - T_ik T_kj T_ji|`.
    pub triangle_residual: f64,
    pub mixed_min_eigenvalue: f64,
    pub mixed_psd: bool,
    pub choi_min_eigenvalue: f64,
    pub choi_psd: bool,
    /// The two complete-positivity tests return the same verdict.
    pub cp_tests_agree: bool,
    pub unital_residual: f64,
    pub trace_preserving_residual: f64,
}

impl DaviesReport {
    pub fn passes(&self, tol: f64) -> bool {
        self.detailed_balance_residual <= tol && self.triangle_residual <= tol && self.mixed_psd && self.choi_psd
    }
}

pub fn davies_validate(t: &StochasticMatrix, d: &DMatrix<f64>, mu: Option<&ProbVector>) -> Result<DaviesReport> {
    check_damping(t, d)?;
    let n = t.dim();
    let solved;
    let mu = match mu {
        Some(m) => m,
        None => {
            solved = invariant_measure(t, true)?;
            &solved
        }
    };
    if mu.dim() != n {
        return Err(Error::Shape(format!("measure of length {} for {n} levels", mu.dim())));
    }
    let m = mu.as_slice();
    let mut detailed_balance_residual: f64 = 0.0;
    let mut triangle_residual: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            detailed_balance_residual = detailed_balance_residual.max((m[i] * t.get(i, j) - m[j] * t.get(j, i)).abs());
            for k in 0..n {
                let fwd = t.get(i, j) * t.get(j, k) * t.get(k, i);
                let bwd = t.get(i, k) * t.get(k, j) * t.get(j, i);
                triangle_residual = triangle_residual.max((fwd - bwd).abs());
            }
        }
    }
    let mixed = psd_check_matrix(&real_to_complex(&mixed_matrix(t, d)), CP_TOL);
    let map = davies_build(t, d)?;
    let cp = map.cp_properties();
    Ok(DaviesReport {
        detailed_balance_residual,
        triangle_residual,
        mixed_min_eigenvalue: mixed.min_eigenvalue,
        mixed_psd: mixed.psd,
        choi_min_eigenvalue: cp.min_choi_eigenvalue,
        choi_psd: cp.cp,
        cp_tests_agree: mixed.psd == cp.cp,
        unital_residual: cp.unital_residual,
        trace_preserving_residual: cp.trace_preserving_residual,
    })
}

/// Qubit data `T = [[1-a, a], [b, 1-b]]` with damping `d`.
pub fn qubit_davies(a: f64, b: f64, d: f64) -> Result<(StochasticMatrix, DMatrix<f64>)> {
    if !(0.0..=1.0).contains(&a) || !(0.0..=1.0).contains(&b) {
        return Err(Error::Parameter(format!("rates a={a}, b={b} outside [0, 1]")));
    }
    let t = StochasticMatrix::from_rows(&[&[1.0 - a, a], &[b, 1.0 - b]])?;
    let dm = DMatrix::from_row_slice(2, 2, &[1.0, d, d, 1.0]);
    Ok((t, dm))
}

/// Whether the qubit Davies map generates a process: `d^2 <= (1-a)(1-b)/2`.
pub fn davies_process_condition(a: f64, b: f64, d: f64) -> Result<bool> {
    if !(0.0 <= b && b <= a && a <= 1.0) || !d.is_finite() {
        return Err(Error::Parameter(format!("need 0 <= b <= a <= 1, got a={a}, b={b}")));
    }
    Ok(d * d <= 0.5 * (1.0 - a) * (1.0 - b))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinOutput {
    pub value: f64,
    /// Minimising input vector as `[re, im]` pairs.
    pub state: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MinOutputOptions {
    pub restarts: usize,
    pub seed: u64,
}

impl Default for MinOutputOptions {
    fn default() -> Self {
        Self { restarts: 50, seed: 0 }
    }
}

fn unpack(x: &[f64]) -> Vec<C64> {
    let d = x.len() / 2;
    let v: Vec<C64> = (0..d).map(|k| c(x[2 * k], x[2 * k + 1])).collect();
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    v.into_iter().map(|z| z / norm).collect()
}

fn output_entropy(channel: &CpMap, psi: &[C64]) -> f64 {
    let v = nalgebra::DVector::from_column_slice(psi);
    let rho = &v * v.adjoint();
    let out = channel.apply(&rho).expect("dimension fixed");
    let eigs = hermitian_eigenvalues(&crate::linalg::hermitian_part(&out));
    spectral_entropy(&eigs).unwrap_or(f64::INFINITY)
}

/// Minimal output entropy of a trace-preserving state channel over pure
/// inputs: basis states plus Nelder-Mead from random starts on the sphere.
pub fn min_output_entropy_search(channel: &CpMap, opts: &MinOutputOptions) -> Result<MinOutput> {
    let report = channel.cp_properties();
    if !report.cp || report.trace_preserving_residual > 1e-10 {
        return Err(Error::Contract(format!(
            "channel must be CP and trace preserving (TP residual {:e}, min Choi eigenvalue {:e})",
            report.trace_preserving_residual, report.min_choi_eigenvalue
        )));
    }
    let d = channel.d_in();
    let mut starts: Vec<Vec<f64>> = (0..d)
        .map(|k| {
            let mut x = vec![0.0; 2 * d];
            x[2 * k] = 1.0;
            x
        })
        .collect();
    for r in 0..opts.restarts {
        let mut rng = indexed_substream(opts.seed, "min-output", r);
        starts.push(random_pure(d, &mut rng).iter().flat_map(|z| [z.re, z.im]).collect());
    }
    let nm = NelderMead {
        initial_step: 0.2,
        ..Default::default()
    };
    let f = |x: &[f64]| {
        if x.iter().all(|v| v.abs() < 1e-12) {
            return f64::INFINITY;
        }
        output_entropy(channel, &unpack(x))
    };
    let candidates: Vec<(f64, Vec<f64>)> = starts
        .par_iter()
        .enumerate()
        .map(|(k, x0)| {
            // basis states are evaluated as given, random starts are refined
            if k < d {
                (f(x0), x0.clone())
            } else {
                let m = nm.minimize(f, x0);
                (m.value, m.x)
            }
        })
        .collect();
    let (value, x) = candidates
        .into_iter()
        .min_by(|a, b| a.0.total_cmp(&b.0))
        .expect("at least one start");
    Ok(MinOutput {
        value,
        state: unpack(&x).iter().map(|z| [z.re, z.im]).collect(),
    })
}

/// Smallest row entropy of `T`, the value attained by basis-state inputs.
pub fn min_row_entropy(t: &StochasticMatrix) -> f64 {
    (0..t.dim())
        .map(|i| t.row(i).iter().map(|&x| xlogx_term(x)).sum::<f64>())
        .fold(f64::INFINITY, f64::min)
}

/// Exact minimal output entropy of the qubit Davies map over pure inputs.
/// The output Bloch vector has `z' = (b - a) + (1 - a - b) z` and transverse
/// length `|d| sqrt(1 - z^2)`, so only the polar angle matters.
pub fn qubit_min_output_entropy(a: f64, b: f64, d: f64) -> f64 {
    let s = 1.0 - a - b;
    let r2 = |z: f64| ((b - a) + s * z).powi(2) + d * d * (1.0 - z * z);
    let mut best = r2(1.0).max(r2(-1.0));
    let curvature = s * s - d * d;
    if curvature < 0.0 {
        let z = -(b - a) * s / curvature;
        if z.abs() < 1.0 {
            best = best.max(r2(z));
        }
    }
    let r = best.sqrt().min(1.0);
    xlogx_term(0.5 * (1.0 + r)) + xlogx_term(0.5 * (1.0 - r))
}

/// Reversible chain `T_ij = W_ij / sum_k W_ik` from a random symmetric weight
/// matrix; its invariant measure is proportional to the row sums of `W`.
pub fn random_reversible(n: usize, rng: &mut impl Rng) -> StochasticMatrix {
    let mut w = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let x: f64 = rng.random::<f64>() + 1e-3;
            w[(i, j)] = x;
            w[(j, i)] = x;
        }
    }
    for mut row in w.row_iter_mut() {
        let s: f64 = row.sum();
        row /= s;
    }
    StochasticMatrix::new(w).expect("rows normalised")
}

/// Random symmetric damping with off-diagonal entries uniform in `[-1, 1]`.
pub fn random_damping(n: usize, rng: &mut impl Rng) -> DMatrix<f64> {
    let mut d = DMatrix::identity(n, n);
    for i in 0..n {
        for j in 0..i {
            let x = 2.0 * rng.random::<f64>() - 1.0;
            d[(i, j)] = x;
            d[(j, i)] = x;
        }
    }
    d
}

/// Observed relaxation rates of one Davies map.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayRates {
    /// `1 - max_{i != j} |D_ij|`, the slowest off-diagonal decay.
    pub off_diagonal: f64,
    /// `1 - max |lambda|` over the non-unit eigenvalues of `T`.
    pub diagonal: f64,
}

pub fn decay_rates(t: &StochasticMatrix, d: &DMatrix<f64>, mu: &ProbVector) -> DecayRates {
    let n = t.dim();
    let mut max_d: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                max_d = max_d.max(d[(i, j)].abs());
            }
        }
    }
    // sqrt(mu) T / sqrt(mu) is symmetric for a reversible chain
    let m = mu.as_slice();
    let sym = DMatrix::from_fn(n, n, |i, j| {
        if m[i] > 0.0 && m[j] > 0.0 {
            (m[i] / m[j]).sqrt() * t.get(i, j)
        } else {
            0.0
        }
    });
    let sym = (&sym + sym.transpose()) * 0.5;
    let mut eigs: Vec<f64> = sym.symmetric_eigenvalues().iter().map(|x| x.abs()).collect();
    eigs.sort_by(|a, b| b.total_cmp(a));
    DecayRates {
        off_diagonal: 1.0 - max_d,
        diagonal: 1.0 - eigs.get(1).copied().unwrap_or(0.0),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayScan {
    pub levels: usize,
    pub draws: usize,
    /// Smallest observed `off_diagonal / diagonal` over CP draws.
    pub min_ratio: f64,
    /// Draws with ratio below one half.
    pub below_half: usize,
}

/// Samples CP Davies maps on `n` levels and records the ratio of
/// off-diagonal decay to diagonal relaxation.
pub fn decay_rate_scan(n: usize, draws: usize, seed: u64) -> Result<DecayScan> {
    let mut rng = substream(seed, "decay-scan");
    let mut min_ratio = f64::INFINITY;
    let mut below_half = 0;
    let mut accepted = 0;
    while accepted < draws {
        let t = random_reversible(n, &mut rng);
        let dir = random_damping(n, &mut rng);
        // scale the off-diagonal direction to a random point inside the CP region
        let psd_at = |s: f64| {
            let scaled = DMatrix::from_fn(n, n, |i, j| if i == j { 1.0 } else { s * dir[(i, j)] });
            psd_check_matrix(&real_to_complex(&mixed_matrix(&t, &scaled)), 0.0).psd
        };
        let (mut lo, mut hi) = (0.0, 1.0);
        while psd_at(hi) && hi < 1e6 {
            hi *= 2.0;
        }
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if psd_at(mid) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let s = lo * rng.random::<f64>().sqrt();
        let d = DMatrix::from_fn(n, n, |i, j| if i == j { 1.0 } else { s * dir[(i, j)] });
        let mu = invariant_measure(&t, true)?;
        let rates = decay_rates(&t, &d, &mu);
        if rates.diagonal <= 1e-12 {
            continue;
        }
        accepted += 1;
        let ratio = rates.off_diagonal / rates.diagonal;
        if ratio < 0.5 - 1e-12 {
            below_half += 1;
        }
        min_ratio = min_ratio.min(ratio);
    }
    Ok(DecayScan {
        levels: n,
        draws,
        min_ratio,
        below_half,
    })
}

/// JSON form `{"T": [[...]], "D": [[...]], "mu": [...]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DaviesSpecJson {
    #[serde(rename = "T", with = "crate::json::real_matrix")]
    pub t: DMatrix<f64>,
    #[serde(rename = "D", with = "crate::json::real_matrix")]
    pub d: DMatrix<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<Vec<f64>>,
}

impl DaviesSpecJson {
    pub fn validate(&self) -> Result<DaviesReport> {
        let t = StochasticMatrix::new(self.t.clone())?;
        let mu = self.mu.clone().map(ProbVector::new).transpose()?;
        davies_validate(&t, &self.d, mu.as_ref())
    }
}
