//! Seeded random objects.
//!
//! Every random draw in the crate flows from a single `u64` seed split into
//! named sub-streams, so independent tasks never share a generator and results
//! do not depend on evaluation order.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::linalg::{c, CMatrix, DensityMatrix, C64};

pub type ProcRng = ChaCha8Rng;

/// Generator for the sub-stream `name` of `seed`.
pub fn substream(seed: u64, name: &str) -> ProcRng {
    // FNV-1a keeps stream ids stable across platforms and releases.
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in name.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    let mut rng = ProcRng::seed_from_u64(seed);
    rng.set_stream(h);
    rng
}

/// Sub-stream `index` of a named stream, for parallel chains and restarts.
pub fn indexed_substream(seed: u64, name: &str, index: usize) -> ProcRng {
    substream(seed, &format!("{name}#{index}"))
}

pub fn gaussian(rng: &mut impl Rng) -> f64 {
    rng.sample(StandardNormal)
}

pub fn ginibre(rows: usize, cols: usize, rng: &mut impl Rng) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| c(gaussian(rng), gaussian(rng)))
}

/// Haar-distributed unitary via QR of a Ginibre matrix with phase fixing.
pub fn random_unitary(d: usize, rng: &mut impl Rng) -> CMatrix {
    let qr = ginibre(d, d, rng).qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..d {
        let rjj = r[(j, j)];
        let phase = if rjj.norm() > 0.0 { rjj / rjj.norm() } else { c(1.0, 0.0) };
        for i in 0..d {
            q[(i, j)] *= phase;
        }
    }
    q
}

/// Haar-random element of SU(2) from a uniform point on the 3-sphere.
pub fn haar_su2(rng: &mut impl Rng) -> CMatrix {
    let mut v = [0.0; 4];
    for x in v.iter_mut() {
        *x = gaussian(rng);
    }
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let [a, b, cc, d] = v.map(|x| x / n);
    CMatrix::from_row_slice(2, 2, &[c(a, b), c(cc, d), c(-cc, d), c(a, -b)])
}

/// Full-rank random state `G G* / tr(G G*)`.
pub fn random_density(d: usize, rng: &mut impl Rng) -> DensityMatrix {
    let g = ginibre(d, d, rng);
    let m = &g * g.adjoint();
    let tr = m.trace().re;
    DensityMatrix::new(m / C64::new(tr, 0.0)).expect("Wishart matrices are states")
}

/// Random pure state vector, normalised.
pub fn random_pure(d: usize, rng: &mut impl Rng) -> Vec<C64> {
    let v: Vec<C64> = (0..d).map(|_| c(gaussian(rng), gaussian(rng))).collect();
    let n = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    v.into_iter().map(|z| z / n).collect()
}

/// Random probability vector with strictly positive entries.
pub fn random_probability(d: usize, rng: &mut impl Rng) -> Vec<f64> {
    let raw: Vec<f64> = (0..d).map(|_| rng.random::<f64>() + 1e-3).collect();
    let s: f64 = raw.iter().sum();
    raw.into_iter().map(|x| x / s).collect()
}

/// Random stochastic matrix with strictly positive entries.
pub fn random_stochastic(d: usize, rng: &mut impl Rng) -> DMatrix<f64> {
    let mut t = DMatrix::zeros(d, d);
    for i in 0..d {
        let row = random_probability(d, rng);
        for j in 0..d {
            t[(i, j)] = row[j];
        }
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{identity, max_abs};

    #[test]
    fn substreams_are_reproducible_and_distinct() {
        let a: f64 = substream(7, "a").random();
        let a2: f64 = substream(7, "a").random();
        let b: f64 = substream(7, "b").random();
        assert_eq!(a, a2);
        assert_ne!(a, b);
    }

    #[test]
    fn sampled_unitaries_are_unitary() {
        let mut rng = substream(0, "u");
        let u = random_unitary(4, &mut rng);
        assert!(max_abs(&(&u * u.adjoint() - identity(4))) < 1e-12);
        let s = haar_su2(&mut rng);
        assert!(max_abs(&(&s * s.adjoint() - identity(2))) < 1e-12);
        assert!((s.determinant() - c(1.0, 0.0)).norm() < 1e-12);
    }
}
