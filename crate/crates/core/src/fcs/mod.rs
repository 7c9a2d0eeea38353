//! Finitely correlated states generated by a compatible pair of unital CP
//! maps `Lambda: M_d (x) M_d -> M_d` and `Gamma: M_d -> M_d` with a
//! `Gamma`-invariant memory state `rho`.
//!
//! Local expectations are `omega(A_0 (x) ... (x) A_n) = tr rho X_n` with
//! `X_0 = Lambda(1 (x) A_0)` and `X_k = Lambda(X_{k-1} (x) A_k)`. The first
//! tensor slot of `Lambda` is the memory, the second the site.

pub mod optimize;
pub mod su2;

use serde::{Deserialize, Serialize};

use crate::channels::CpMap;
use crate::error::{Error, Result};
use crate::linalg::{
    c, frobenius, identity, kron, matrix_unit, partial_trace_matrix, von_neumann_entropy, CMatrix, DensityMatrix,
};

/// Largest site Hilbert-space dimension of an explicit marginal.
pub const MAX_MARGINAL_DIM: usize = 1 << 12;
/// Tolerance for unitality, compatibility and invariance of a spec.
pub const SPEC_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct FcsSpec {
    d: usize,
    lambda: CpMap,
    gamma: CpMap,
    rho: DensityMatrix,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FcsReport {
    pub lambda_cp: bool,
    pub unital_residual: f64,
    pub compatibility_residual: f64,
    pub invariance_residual: f64,
}

impl FcsReport {
    pub fn passes(&self) -> bool {
        self.lambda_cp
            && self.unital_residual < SPEC_TOL
            && self.compatibility_residual < SPEC_TOL
            && self.invariance_residual < SPEC_TOL
    }
}

impl FcsSpec {
    /// Validated spec; fails with [`Error::Contract`] naming the violated
    /// invariant.
    pub fn new(lambda: CpMap, gamma: CpMap, rho: DensityMatrix) -> Result<Self> {
        let spec = Self::new_unchecked(lambda, gamma, rho)?;
        let r = spec.report();
        if !r.lambda_cp {
            return Err(Error::Contract("Lambda is not completely positive".into()));
        }
        if r.unital_residual >= SPEC_TOL {
            return Err(Error::Contract(format!("Lambda(1 (x) 1) != 1 (residual {:e})", r.unital_residual)));
        }
        if r.compatibility_residual >= SPEC_TOL {
            return Err(Error::Contract(format!(
                "Lambda is not compatible with Gamma (residual {:e})",
                r.compatibility_residual
            )));
        }
        if r.invariance_residual >= SPEC_TOL {
            return Err(Error::Contract(format!(
                "rho is not invariant under Gamma (residual {:e})",
                r.invariance_residual
            )));
        }
        Ok(spec)
    }

    /// Only dimensions are checked.
    pub fn new_unchecked(lambda: CpMap, gamma: CpMap, rho: DensityMatrix) -> Result<Self> {
        let d = rho.dim();
        if lambda.d_in() != d * d || lambda.d_out() != d || gamma.d_in() != d || gamma.d_out() != d {
            return Err(Error::Shape(format!(
                "need Lambda: {0}x{0} -> {1}, Gamma: {1} -> {1}",
                d * d,
                d
            )));
        }
        Ok(Self { d, lambda, gamma, rho })
    }

    /// `Lambda(A (x) B) = tr(sigma A) tr(sigma B) 1`, generating `sigma^(x)n`.
    pub fn iid(sigma: &DensityMatrix) -> Self {
        let d = sigma.dim();
        let s = sigma.matrix().clone();
        let lambda = CpMap::from_fn(d * d, d, |x| {
            let w = kron(&s, &s);
            identity(d) * (&w * x).trace()
        })
        .expect("shapes");
        let gamma = CpMap::from_fn(d, d, |x| identity(d) * (&s * x).trace()).expect("shapes");
        Self {
            d,
            lambda,
            gamma,
            rho: sigma.clone(),
        }
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn lambda(&self) -> &CpMap {
        &self.lambda
    }

    pub fn gamma(&self) -> &CpMap {
        &self.gamma
    }

    pub fn rho(&self) -> &DensityMatrix {
        &self.rho
    }

    pub fn report(&self) -> FcsReport {
        let d = self.d;
        let unital_residual = frobenius(&(self.lambda.apply(&identity(d * d)).expect("shape") - identity(d)));
        let rho_out = self.gamma.adjoint().apply(self.rho.matrix()).expect("shape");
        FcsReport {
            lambda_cp: self.lambda.cp_properties().cp,
            unital_residual,
            compatibility_residual: compatibility_residual(&self.lambda, &self.gamma),
            invariance_residual: frobenius(&(rho_out - self.rho.matrix())),
        }
    }
}

/// `max_A ||Lambda(A (x) 1) - Gamma(A)||` and `||Lambda(1 (x) A) - Gamma(A)||`
/// over matrix units `A`.
pub fn compatibility_residual(lambda: &CpMap, gamma: &CpMap) -> f64 {
    let d = gamma.d_in();
    let one = identity(d);
    let mut worst: f64 = 0.0;
    for i in 0..d {
        for j in 0..d {
            let a = matrix_unit(d, i, j);
            let g = gamma.apply(&a).expect("shape");
            let left = lambda.apply(&kron(&a, &one)).expect("shape");
            let right = lambda.apply(&kron(&one, &a)).expect("shape");
            worst = worst.max(frobenius(&(left - &g))).max(frobenius(&(right - &g)));
        }
    }
    worst
}

/// `Lambda'(A (x) B) = Lambda(B (x) A)`.
pub fn swap_slots(lambda: &CpMap) -> CpMap {
    let d = lambda.d_out();
    CpMap::from_fn(d * d, d, |x| {
        let swapped = CMatrix::from_fn(d * d, d * d, |r, s| x[((r % d) * d + r / d, (s % d) * d + s / d)]);
        lambda.apply(&swapped).expect("shape")
    })
    .expect("shapes")
}

/// `(Phi (x) id_R)(state)` for a state map `Phi: M_m -> M_{m d}` acting on
/// the leading `m`-dimensional factor of `state`.
fn push_memory(phi: &CpMap, state: &CMatrix) -> CMatrix {
    let m = phi.d_in();
    let out_dim = phi.d_out();
    let r = state.nrows() / m;
    let mut out = CMatrix::zeros(out_dim * r, out_dim * r);
    for i in 0..m {
        for j in 0..m {
            let block = state.view((i * r, j * r), (r, r));
            if block.iter().all(|z| *z == c(0.0, 0.0)) {
                continue;
            }
            let img = phi.choi().view((i * out_dim, j * out_dim), (out_dim, out_dim));
            for a in 0..out_dim {
                for b in 0..out_dim {
                    let w = img[(a, b)];
                    if w == c(0.0, 0.0) {
                        continue;
                    }
                    let mut target = out.view_mut((a * r, b * r), (r, r));
                    target += block * w;
                }
            }
        }
    }
    out
}

fn check_size(d: usize, n: usize) -> Result<()> {
    let total = (d as f64).powi(n as i32);
    if n == 0 || total > MAX_MARGINAL_DIM as f64 {
        return Err(Error::TooLarge(format!("{d}^{n} exceeds the marginal size limit")));
    }
    Ok(())
}

/// Density matrix of sites `0..n` when site `k` is contracted by `maps[k]`.
/// Maps are observable-picture `M_d (x) M_d -> M_d` with memory first.
pub fn fcs_marginal_with(maps: &[&CpMap], rho: &DensityMatrix) -> Result<DensityMatrix> {
    let n = maps.len();
    let d = rho.dim();
    check_size(d, n)?;
    // the outermost map carries the last site, so it is applied first
    let mut state = rho.matrix().clone();
    for map in maps.iter().rev() {
        state = push_memory(&map.adjoint(), &state);
    }
    let sites = d.pow(n as u32);
    let reduced = partial_trace_matrix(&state, &[d, sites], &[1])?;
    DensityMatrix::new(crate::linalg::hermitian_part(&reduced))
}

/// Reduced density matrix of the first `n` sites.
pub fn fcs_marginal(spec: &FcsSpec, n: usize) -> Result<DensityMatrix> {
    let maps = vec![&spec.lambda; n];
    fcs_marginal_with(&maps, &spec.rho)
}

/// `omega(A_0 (x) ... (x) A_{n-1})` by direct contraction in the observable
/// picture.
pub fn fcs_expectation(spec: &FcsSpec, observables: &[CMatrix]) -> Result<crate::linalg::C64> {
    let d = spec.d;
    let mut x = identity(d);
    for a in observables {
        if a.nrows() != d || a.ncols() != d {
            return Err(Error::Shape("local observable has the wrong size".into()));
        }
        x = spec.lambda.apply(&kron(&x, a))?;
    }
    Ok((spec.rho.matrix() * x).trace())
}

/// The `n`-site marginal rebuilt from expectations of all products of matrix
/// units, `rho_n[b][a] = omega(e_ab)`.
pub fn fcs_marginal_heisenberg(spec: &FcsSpec, n: usize) -> Result<CMatrix> {
    let d = spec.d;
    check_size(d, n)?;
    let dim = d.pow(n as u32);
    let mut out = CMatrix::zeros(dim, dim);
    for a in 0..dim {
        for b in 0..dim {
            let units: Vec<CMatrix> = (0..n)
                .map(|k| {
                    let shift = d.pow((n - 1 - k) as u32);
                    matrix_unit(d, (a / shift) % d, (b / shift) % d)
                })
                .collect();
            out[(b, a)] = fcs_expectation(spec, &units)?;
        }
    }
    Ok(out)
}

/// Block entropies of the first `1..=n_max` sites.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropySequence {
    /// `h[k]` is the entropy of `k + 1` sites.
    pub h: Vec<f64>,
    /// `h[0], h[1] - h[0], ...`.
    pub increments: Vec<f64>,
    pub non_decreasing: bool,
    pub increments_non_increasing: bool,
}

pub fn fcs_entropy_sequence(spec: &FcsSpec, n_max: usize) -> Result<EntropySequence> {
    check_size(spec.d, n_max)?;
    let h: Vec<f64> = (1..=n_max)
        .map(|n| Ok(von_neumann_entropy(&fcs_marginal(spec, n)?)))
        .collect::<Result<_>>()?;
    let increments: Vec<f64> = (0..h.len()).map(|k| if k == 0 { h[0] } else { h[k] - h[k - 1] }).collect();
    let tol = 1e-9;
    Ok(EntropySequence {
        non_decreasing: increments.iter().skip(1).all(|&x| x >= -tol),
        increments_non_increasing: increments.windows(2).all(|w| w[1] <= w[0] + tol),
        h,
        increments,
    })
}
