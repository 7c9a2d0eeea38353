//! SU(2)-covariant qubit maps, the Werner family and the three-qubit
//! invariant states.
//!
//! On the basis `{1 (x) 1, s_a (x) 1, 1 (x) s_b, s_a (x) s_b}` the map is
//! `Lambda(1 (x) 1) = 1`, `Lambda(s_a (x) 1) = mu s_a`, `Lambda(1 (x) s_a) = nu s_a`
//! and `Lambda(s_a (x) s_b) = (alpha/3) delta_ab 1 + (eta/2) eps_abc s_c`,
//! which gives `Lambda(s.s) = alpha 1` and `Lambda(s x s) = eta s`.

use serde::{Deserialize, Serialize};

use super::FcsSpec;
use crate::channels::CpMap;
use crate::error::{Error, Result};
use crate::linalg::{
    c, hermitian_eigenvalues, identity, kron, partial_transpose, paulis, psd_check_matrix, singlet_projector, CMatrix,
    DensityMatrix,
};

/// Tolerance on the smallest Choi eigenvalue in region tests.
pub const REGION_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    /// `mu = nu`; compatible with `Gamma(s) = mu s`.
    Three,
    Four,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Su2Params {
    pub alpha: f64,
    pub mu: f64,
    pub nu: f64,
    pub eta: f64,
    pub family: Family,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegionCheck {
    /// `3 - |3 mu + 3 nu - alpha|`.
    pub linear_slack: f64,
    /// `3 - 2 alpha - alpha^2 + 6 (1 - alpha)(mu + nu) - 9 (mu - nu)^2 - 9 eta^2`.
    pub quadratic_slack: f64,
    pub inside: bool,
    pub choi_min_eigenvalue: f64,
    pub choi_psd: bool,
}

fn levi_civita(a: usize, b: usize, c: usize) -> f64 {
    match (a, b, c) {
        (0, 1, 2) | (1, 2, 0) | (2, 0, 1) => 1.0,
        (0, 2, 1) | (2, 1, 0) | (1, 0, 2) => -1.0,
        _ => 0.0,
    }
}

impl Su2Params {
    pub fn three(alpha: f64, mu: f64, eta: f64) -> Self {
        Self {
            alpha,
            mu,
            nu: mu,
            eta,
            family: Family::Three,
        }
    }

    pub fn four(alpha: f64, mu: f64, nu: f64, eta: f64) -> Self {
        Self {
            alpha,
            mu,
            nu,
            eta,
            family: Family::Four,
        }
    }

    pub fn slacks(&self) -> (f64, f64) {
        let (a, m, n, e) = (self.alpha, self.mu, self.nu, self.eta);
        let linear = 3.0 - (3.0 * m + 3.0 * n - a).abs();
        let quadratic = 3.0 - 2.0 * a - a * a + 6.0 * (1.0 - a) * (m + n) - 9.0 * (m - n).powi(2) - 9.0 * e * e;
        (linear, quadratic)
    }

    pub fn inside_closed_form(&self) -> bool {
        let (l, q) = self.slacks();
        l >= 0.0 && q >= 0.0
    }

    pub fn region_check(&self) -> RegionCheck {
        let (linear_slack, quadratic_slack) = self.slacks();
        let psd = psd_check_matrix(self.lambda_map().choi(), REGION_TOL);
        RegionCheck {
            linear_slack,
            quadratic_slack,
            inside: linear_slack >= 0.0 && quadratic_slack >= 0.0,
            choi_min_eigenvalue: psd.min_eigenvalue,
            choi_psd: psd.psd,
        }
    }

    fn lambda_map(&self) -> CpMap {
        let s = paulis();
        let (mu, nu, al, eta) = (self.mu, self.nu, self.alpha, self.eta);
        CpMap::from_fn(4, 2, |x| {
            let coeff = |p: usize, q: usize| (kron(&s[p], &s[q]) * x).trace() * c(0.25, 0.0);
            let mut out = identity(2) * coeff(0, 0);
            for a in 1..4 {
                out += &s[a] * (coeff(a, 0) * c(mu, 0.0) + coeff(0, a) * c(nu, 0.0));
                for b in 1..4 {
                    let k = coeff(a, b);
                    if a == b {
                        out += identity(2) * (k * c(al / 3.0, 0.0));
                    }
                    for cc in 1..4 {
                        let e = levi_civita(a - 1, b - 1, cc - 1);
                        if e != 0.0 {
                            out += &s[cc] * (k * c(0.5 * eta * e, 0.0));
                        }
                    }
                }
            }
            out
        })
        .expect("shapes")
    }

    /// `Lambda` after checking the complete-positivity region.
    pub fn lambda(&self) -> Result<CpMap> {
        let (linear, quadratic) = self.slacks();
        if linear < -REGION_TOL {
            return Err(Error::Region(format!(
                "|3 mu + 3 nu - alpha| <= 3 fails (slack {linear:e})"
            )));
        }
        if quadratic < -REGION_TOL {
            return Err(Error::Region(format!(
                "3 - 2 alpha - alpha^2 + 6 (1 - alpha)(mu + nu) - 9 (mu - nu)^2 - 9 eta^2 >= 0 fails (slack {quadratic:e})"
            )));
        }
        Ok(self.lambda_map())
    }

    /// The stationary process spec; requires the three-parameter family.
    pub fn build(&self) -> Result<FcsSpec> {
        if self.mu != self.nu {
            return Err(Error::Contract(
                "a compatible pair needs mu = nu (three-parameter family)".into(),
            ));
        }
        let lambda = self.lambda()?;
        FcsSpec::new(lambda, depolarizing(self.mu)?, DensityMatrix::maximally_mixed(2))
    }

    /// `<p>` of two neighbouring sites, `(1 - alpha nu)/4`.
    pub fn singlet_closed_form(&self) -> f64 {
        0.25 * (1.0 - self.alpha * self.nu)
    }
}

/// `Gamma(1) = 1`, `Gamma(s) = mu s`; CP for `-1/3 <= mu <= 1`.
pub fn depolarizing(mu: f64) -> Result<CpMap> {
    if !(-1.0 / 3.0 - 1e-12..=1.0 + 1e-12).contains(&mu) {
        return Err(Error::Region(format!("Gamma(s) = mu s needs -1/3 <= mu <= 1, got {mu}")));
    }
    CpMap::from_fn(2, 2, |x| {
        x * c(mu, 0.0) + identity(2) * (x.trace() * c(0.5 * (1.0 - mu), 0.0))
    })
}

/// `<p>` in a two-site state.
pub fn singlet_weight(rho2: &CMatrix) -> f64 {
    (rho2 * singlet_projector()).trace().re
}

/// `<p>` of the nearest-neighbour marginal of a spec.
pub fn singlet_expectation(spec: &FcsSpec) -> Result<f64> {
    if spec.dim() != 2 {
        return Err(Error::Shape("singlet weight needs qubit sites".into()));
    }
    Ok(singlet_weight(super::fcs_marginal(spec, 2)?.matrix()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WernerReport {
    pub lambda: f64,
    pub singlet_weight: f64,
    pub ppt_min_eigenvalue: f64,
}

/// `(1 - lambda)(1 - p)/3 + lambda p`.
pub fn werner_state(lambda: f64) -> Result<DensityMatrix> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::Parameter(format!("lambda = {lambda} outside [0, 1]")));
    }
    let p = singlet_projector();
    let m = (identity(4) - &p) * c((1.0 - lambda) / 3.0, 0.0) + p * c(lambda, 0.0);
    DensityMatrix::new(m)
}

pub fn werner_analysis(lambda: f64) -> Result<WernerReport> {
    let rho = werner_state(lambda)?;
    let pt = partial_transpose(rho.matrix(), &[2, 2], &[1])?;
    Ok(WernerReport {
        lambda,
        singlet_weight: singlet_weight(rho.matrix()),
        ppt_min_eigenvalue: hermitian_eigenvalues(&pt)[0],
    })
}

/// Bisection for the zero of the smallest partial-transpose eigenvalue.
pub fn werner_ppt_threshold(tol: f64) -> Result<f64> {
    let (mut lo, mut hi) = (0.0, 1.0);
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if werner_analysis(mid)?.ppt_min_eigenvalue >= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// The SU(2)-invariant three-qubit operators `p1 = p (x) 1`, `p2 = 1 (x) p`
/// and `q = 4/3 (p1 + p2 - p1 p2 - p2 p1)`.
pub fn three_qubit_operators() -> (CMatrix, CMatrix, CMatrix) {
    let p = singlet_projector();
    let p1 = kron(&p, &identity(2));
    let p2 = kron(&identity(2), &p);
    let q = (&p1 + &p2 - &p1 * &p2 - &p2 * &p1) * c(4.0 / 3.0, 0.0);
    (p1, p2, q)
}

/// `(1 - lambda)(1 - q)/4 + lambda (a p1 + b p2 + c p1 p2 + conj(c) p2 p1)`,
/// unnormalised and unchecked.
pub fn three_qubit_matrix(lambda: f64, a: f64, b: f64, cc: crate::linalg::C64) -> CMatrix {
    let (p1, p2, q) = three_qubit_operators();
    let p12 = &p1 * &p2;
    let p21 = &p2 * &p1;
    (identity(8) - q) * c((1.0 - lambda) / 4.0, 0.0)
        + (p1 * c(a, 0.0) + p2 * c(b, 0.0) + p12 * cc + p21 * cc.conj()) * c(lambda, 0.0)
}
