//! Linear maps between matrix algebras stored by their Choi matrix.
//!
//! For `Gamma: M_{d_in} -> M_{d_out}` the Choi matrix is
//! `C = sum_ij e_ij (x) Gamma(e_ij)`, so `C[(i, a), (j, b)] = Gamma(e_ij)[a][b]`
//! with the input factor leftmost. The same encoding is used for Heisenberg
//! (observable) maps and for state maps; [`CpMap::adjoint`] converts between
//! the two pictures through the trace pairing `tr(Gamma*(rho) X) = tr(rho Gamma(X))`.

pub mod davies;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    c, frobenius, hermiticity_defect, identity, kron, matrix_unit, partial_trace_matrix, psd_check_matrix, CMatrix,
    HermitianMatrix,
};

/// Tolerance on the smallest Choi eigenvalue for complete positivity.
pub const CP_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct CpMap {
    d_in: usize,
    d_out: usize,
    choi: CMatrix,
}

impl CpMap {
    /// Wraps a Choi matrix of size `d_in * d_out`.
    pub fn from_choi(d_in: usize, d_out: usize, choi: CMatrix) -> Result<Self> {
        let n = d_in * d_out;
        if choi.nrows() != n || choi.ncols() != n {
            return Err(Error::Shape(format!(
                "Choi matrix {}x{} for a map {d_in} -> {d_out}",
                choi.nrows(),
                choi.ncols()
            )));
        }
        Ok(Self { d_in, d_out, choi })
    }

    /// Choi encoding of a linear map given by its action.
    pub fn from_fn(d_in: usize, d_out: usize, f: impl Fn(&CMatrix) -> CMatrix) -> Result<Self> {
        let mut choi = CMatrix::zeros(d_in * d_out, d_in * d_out);
        for i in 0..d_in {
            for j in 0..d_in {
                let out = f(&matrix_unit(d_in, i, j));
                if out.nrows() != d_out || out.ncols() != d_out {
                    return Err(Error::Shape(format!(
                        "map returned {}x{}, expected {d_out}x{d_out}",
                        out.nrows(),
                        out.ncols()
                    )));
                }
                choi.view_mut((i * d_out, j * d_out), (d_out, d_out)).copy_from(&out);
            }
        }
        Self::from_choi(d_in, d_out, choi)
    }

    /// `X -> sum_k K_k X K_k*` with each `K_k` of shape `d_out x d_in`.
    pub fn from_kraus(kraus: &[CMatrix]) -> Result<Self> {
        let Some(k0) = kraus.first() else {
            return Err(Error::Shape("empty Kraus list".into()));
        };
        let (d_out, d_in) = k0.shape();
        if kraus.iter().any(|k| k.shape() != (d_out, d_in)) {
            return Err(Error::Shape("Kraus operators differ in shape".into()));
        }
        Self::from_fn(d_in, d_out, |x| {
            kraus.iter().fold(CMatrix::zeros(d_out, d_out), |acc, k| acc + k * x * k.adjoint())
        })
    }

    pub fn identity(d: usize) -> Self {
        Self::from_fn(d, d, |x| x.clone()).expect("square")
    }

    /// `X -> U X U*`.
    pub fn unitary(u: &CMatrix) -> Self {
        Self::from_kraus(std::slice::from_ref(u)).expect("single Kraus operator")
    }

    pub fn transpose(d: usize) -> Self {
        Self::from_fn(d, d, |x| x.transpose()).expect("square")
    }

    /// `X -> tr(X) 1 / d`.
    pub fn completely_depolarizing(d: usize) -> Self {
        Self::from_fn(d, d, |x| identity(d) * (x.trace() / c(d as f64, 0.0))).expect("square")
    }

    pub fn d_in(&self) -> usize {
        self.d_in
    }

    pub fn d_out(&self) -> usize {
        self.d_out
    }

    pub fn choi(&self) -> &CMatrix {
        &self.choi
    }

    /// `Gamma(X)[a][b] = sum_ij X_ij C[(i, a), (j, b)]`.
    pub fn apply(&self, x: &CMatrix) -> Result<CMatrix> {
        if x.nrows() != self.d_in || x.ncols() != self.d_in {
            return Err(Error::Shape(format!(
                "input {}x{} for a map on {}x{}",
                x.nrows(),
                x.ncols(),
                self.d_in,
                self.d_in
            )));
        }
        let d = self.d_out;
        let mut out = CMatrix::zeros(d, d);
        for i in 0..self.d_in {
            for j in 0..self.d_in {
                let xij = x[(i, j)];
                if xij == c(0.0, 0.0) {
                    continue;
                }
                out += self.choi.view((i * d, j * d), (d, d)) * xij;
            }
        }
        Ok(out)
    }

    /// Hermitian-input convenience wrapper around [`CpMap::apply`].
    pub fn apply_hermitian(&self, x: &HermitianMatrix) -> Result<HermitianMatrix> {
        HermitianMatrix::with_tolerance(self.apply(x.matrix())?, 1e-10)
    }

    /// Dual map with respect to the trace pairing.
    pub fn adjoint(&self) -> CpMap {
        let (di, dout) = (self.d_in, self.d_out);
        let mut choi = CMatrix::zeros(di * dout, di * dout);
        // C'[(y, x), (y', x')] = C[(x', y'), (x, y)]
        for y in 0..dout {
            for x in 0..di {
                for yp in 0..dout {
                    for xp in 0..di {
                        choi[(y * di + x, yp * di + xp)] = self.choi[(xp * dout + yp, x * dout + y)];
                    }
                }
            }
        }
        CpMap {
            d_in: dout,
            d_out: di,
            choi,
        }
    }

    /// `self` after `first`: `X -> self(first(X))`.
    pub fn after(&self, first: &CpMap) -> Result<CpMap> {
        if first.d_out != self.d_in {
            return Err(Error::Shape(format!(
                "cannot compose {} -> {} after {} -> {}",
                self.d_in, self.d_out, first.d_in, first.d_out
            )));
        }
        CpMap::from_fn(first.d_in, self.d_out, |x| {
            self.apply(&first.apply(x).expect("shape checked")).expect("shape checked")
        })
    }

    /// `Gamma (x) id_k`, acting on `M_{d_in} (x) M_k`.
    pub fn tensor_identity(&self, k: usize) -> CpMap {
        CpMap::from_fn(self.d_in * k, self.d_out * k, |x| {
            let mut out = CMatrix::zeros(self.d_out * k, self.d_out * k);
            for i in 0..self.d_in {
                for j in 0..self.d_in {
                    let block = CMatrix::from_fn(k, k, |a, b| x[(i * k + a, j * k + b)]);
                    let img = self.choi.view((i * self.d_out, j * self.d_out), (self.d_out, self.d_out));
                    out += kron(&img.into_owned(), &block);
                }
            }
            out
        })
        .expect("consistent shapes")
    }

    pub fn cp_properties(&self) -> CpReport {
        let psd = psd_check_matrix(&self.choi, CP_TOL);
        let unital_residual = self
            .apply(&identity(self.d_in))
            .map(|m| frobenius(&(m - identity(self.d_out))))
            .unwrap_or(f64::INFINITY);
        let reduced = partial_trace_matrix(&self.choi, &[self.d_in, self.d_out], &[0]).expect("dims match");
        let trace_preserving_residual = frobenius(&(reduced - identity(self.d_in)));
        CpReport {
            cp: psd.psd && hermiticity_defect(&self.choi) < 1e-10,
            min_choi_eigenvalue: psd.min_eigenvalue,
            unital_residual,
            trace_preserving_residual,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CpReport {
    pub cp: bool,
    pub min_choi_eigenvalue: f64,
    /// `||Gamma(1) - 1||_F`.
    pub unital_residual: f64,
    /// `||tr_out C - 1||_F`.
    pub trace_preserving_residual: f64,
}

/// `max_k ||[conj(U1_k) (x) U2_k, C]||_F` over the supplied pairs; zero for
/// maps with `Gamma(U1 X U1*) = U2 Gamma(X) U2*`.
pub fn covariance_residual(map: &CpMap, pairs: &[(CMatrix, CMatrix)]) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for (u1, u2) in pairs {
        if u1.nrows() != map.d_in || u2.nrows() != map.d_out {
            return Err(Error::Shape("group element dimensions do not match the map".into()));
        }
        let g = kron(&u1.map(|z| z.conj()), u2);
        let comm = &g * map.choi() - map.choi() * &g;
        worst = worst.max(frobenius(&comm));
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{paulis, swap_operator};
    use crate::random::{ginibre, haar_su2, random_density, random_unitary, substream};

    #[test]
    fn identity_channel() {
        let id = CpMap::identity(3);
        let omega = CMatrix::from_fn(9, 9, |r, s| {
            let (i, a) = (r / 3, r % 3);
            let (j, b) = (s / 3, s % 3);
            if i == a && j == b {
                c(1.0, 0.0)
            } else {
                c(0.0, 0.0)
            }
        });
        assert_eq!(id.choi(), &omega);
        let r = id.cp_properties();
        assert!(r.cp && r.unital_residual == 0.0 && r.trace_preserving_residual == 0.0);
    }

    #[test]
    fn transpose_is_not_cp() {
        let t = CpMap::transpose(2);
        assert_eq!(t.choi(), &swap_operator(2));
        let r = t.cp_properties();
        assert!(!r.cp);
        assert!((r.min_choi_eigenvalue + 1.0).abs() < 1e-12);
    }

    #[test]
    fn depolarizing_choi() {
        let m = CpMap::completely_depolarizing(3);
        assert!(crate::linalg::max_abs(&(m.choi() - identity(9) * c(1.0 / 3.0, 0.0))) < 1e-15);
        assert!(m.cp_properties().cp);
    }

    #[test]
    fn kraus_maps_are_cp_and_tp() {
        let mut rng = substream(2, "kraus");
        for _ in 0..10 {
            // random isometry V: C^3 -> C^3 (x) C^2 split into two Kraus operators
            let v = random_unitary(6, &mut rng).columns(0, 3).into_owned();
            let kraus = [v.rows(0, 3).into_owned(), v.rows(3, 3).into_owned()];
            let m = CpMap::from_kraus(&kraus).unwrap();
            let r = m.cp_properties();
            assert!(r.cp);
            assert!(r.trace_preserving_residual < 1e-12);
        }
    }

    #[test]
    fn encode_apply_round_trip() {
        let mut rng = substream(4, "roundtrip");
        let k = [ginibre(2, 3, &mut rng), ginibre(2, 3, &mut rng)];
        let direct = |x: &CMatrix| &k[0] * x * k[0].adjoint() + &k[1] * x * k[1].adjoint();
        let m = CpMap::from_fn(3, 2, direct).unwrap();
        for _ in 0..5 {
            let x = ginibre(3, 3, &mut rng);
            assert!(crate::linalg::max_abs(&(m.apply(&x).unwrap() - direct(&x))) < 1e-12);
        }
    }

    #[test]
    fn adjoint_respects_trace_pairing() {
        let mut rng = substream(6, "adjoint");
        let k = [ginibre(2, 3, &mut rng), ginibre(2, 3, &mut rng)];
        let m = CpMap::from_kraus(&k).unwrap();
        let dual = m.adjoint();
        assert_eq!((dual.d_in(), dual.d_out()), (2, 3));
        for _ in 0..5 {
            let rho = ginibre(2, 2, &mut rng);
            let x = ginibre(3, 3, &mut rng);
            let lhs = (dual.apply(&rho).unwrap() * &x).trace();
            let rhs = (rho * m.apply(&x).unwrap()).trace();
            assert!((lhs - rhs).norm() < 1e-10);
        }
        assert_eq!(dual.adjoint(), m);
    }

    #[test]
    fn tensor_identity_acts_on_first_factor() {
        let mut rng = substream(7, "tensor");
        let u = random_unitary(2, &mut rng);
        let m = CpMap::unitary(&u).tensor_identity(3);
        let a = random_density(2, &mut rng).into_matrix();
        let b = random_density(3, &mut rng).into_matrix();
        let out = m.apply(&kron(&a, &b)).unwrap();
        let expected = kron(&(&u * &a * u.adjoint()), &b);
        assert!(crate::linalg::max_abs(&(out - expected)) < 1e-12);
    }

    #[test]
    fn covariance() {
        let mut rng = substream(8, "cov");
        let mu = 0.4;
        let depol = CpMap::from_fn(2, 2, |x| x * c(mu, 0.0) + identity(2) * (x.trace() * c((1.0 - mu) / 2.0, 0.0))).unwrap();
        let pairs: Vec<_> = (0..20)
            .map(|_| {
                let u = haar_su2(&mut rng);
                (u.clone(), u)
            })
            .collect();
        assert!(covariance_residual(&depol, &pairs).unwrap() < 1e-10);
        assert!(covariance_residual(&CpMap::identity(2), &pairs).unwrap() < 1e-12);

        let v = paulis()[1].clone();
        let conj = CpMap::unitary(&v);
        assert!(covariance_residual(&conj, &pairs).unwrap() > 0.1);
    }
}
