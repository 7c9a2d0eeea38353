//! Classical Markov chains: invariant measures, Markov extensions of
//! overlapping two-site laws, joint laws of stationary chains, entropy rates
//! and the strong sub-additivity residual.
//!
//! Probability vectors are row vectors acting on the left of transition
//! matrices, `mu T = mu`. Joint laws over `d` symbols are stored densely with
//! site 0 as the most significant digit of the flat index.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{entropy_of_weights, xlogx_term, ProbVector, PROB_TOL};

/// Largest number of sites in an enumerated joint law.
pub const MAX_ARITY: usize = 12;
/// Largest number of entries in an enumerated joint law.
pub const MAX_JOINT_LEN: usize = 1 << 24;
/// Tolerance for `mu T = mu` when a caller supplies `mu`.
pub const STATIONARITY_TOL: f64 = 1e-10;

/// Row-stochastic matrix, `T[i][j]` the probability of jumping from `i` to `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct StochasticMatrix(DMatrix<f64>);

impl StochasticMatrix {
    pub fn new(t: DMatrix<f64>) -> Result<Self> {
        if t.nrows() != t.ncols() || t.nrows() == 0 {
            return Err(Error::Shape(format!(
                "transition matrix is {}x{}",
                t.nrows(),
                t.ncols()
            )));
        }
        if let Some(x) = t.iter().find(|x| !x.is_finite() || **x < 0.0) {
            return Err(Error::InvalidDistribution(format!("negative transition probability {x}")));
        }
        for (i, row) in t.row_iter().enumerate() {
            let s: f64 = row.sum();
            if (s - 1.0).abs() > PROB_TOL {
                return Err(Error::InvalidDistribution(format!("row {i} sums to {s}")));
            }
        }
        Ok(Self(t))
    }

    pub fn from_rows(rows: &[&[f64]]) -> Result<Self> {
        let d = rows.len();
        let flat: Vec<f64> = rows.iter().flat_map(|r| r.iter().copied()).collect();
        if flat.len() != d * d {
            return Err(Error::Shape("transition matrix rows have unequal length".into()));
        }
        Self::new(DMatrix::from_row_slice(d, d, &flat))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[(i, j)]
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.0.row(i).iter().copied().collect()
    }

    /// `mu T` for a row vector `mu`.
    pub fn push_forward(&self, mu: &[f64]) -> Vec<f64> {
        let d = self.dim();
        (0..d).map(|j| (0..d).map(|i| mu[i] * self.0[(i, j)]).sum()).collect()
    }

    /// True when some power `T^k`, `k >= d^2`, has only positive entries.
    pub fn is_primitive(&self) -> bool {
        let d = self.dim();
        let mut pattern = self.0.map(|x| if x > 0.0 { 1.0 } else { 0.0 });
        let mut power = 1usize;
        while power < d * d {
            pattern = (&pattern * &pattern).map(|x| if x > 0.0 { 1.0 } else { 0.0 });
            power *= 2;
        }
        pattern.iter().all(|&x| x > 0.0)
    }
}

/// `||mu T - mu||_1`.
pub fn stationarity_residual(t: &StochasticMatrix, mu: &[f64]) -> f64 {
    t.push_forward(mu).iter().zip(mu).map(|(a, b)| (a - b).abs()).sum()
}

/// The invariant probability vector of `t`.
///
/// Without `allow_degenerate`, `t` must be primitive (some power strictly
/// positive) so that the invariant measure is unique and attracting. With the
/// flag, periodic and reducible chains are accepted; for reducible chains one
/// of the invariant measures is returned.
pub fn invariant_measure(t: &StochasticMatrix, allow_degenerate: bool) -> Result<ProbVector> {
    if !allow_degenerate && !t.is_primitive() {
        return Err(Error::Ambiguous(
            "transition matrix is not irreducible and aperiodic".into(),
        ));
    }
    let d = t.dim();
    // Solve mu (T - 1) = 0 with one equation replaced by normalisation.
    let mut m = t.matrix().transpose() - DMatrix::identity(d, d);
    for j in 0..d {
        m[(d - 1, j)] = 1.0;
    }
    let mut rhs = DVector::zeros(d);
    rhs[d - 1] = 1.0;

    let direct = m.lu().solve(&rhs).map(|v| v.iter().copied().collect::<Vec<f64>>());
    let candidate = match direct {
        Some(v) if v.iter().all(|x| x.is_finite() && *x > -1e-12) && stationarity_residual(t, &v) < 1e-12 => v,
        _ => lazy_power_iteration(t),
    };
    let clipped: Vec<f64> = candidate.iter().map(|x| x.max(0.0)).collect();
    let s: f64 = clipped.iter().sum();
    let mu: Vec<f64> = clipped.into_iter().map(|x| x / s).collect();
    let residual = stationarity_residual(t, &mu);
    if residual >= 1e-12 {
        return Err(Error::Contract(format!(
            "invariant measure solver did not converge (residual {residual:e})"
        )));
    }
    ProbVector::new(mu)
}

/// Power iteration on `(T + 1)/2`, which has the same invariant measures as
/// `T` and no periodicity.
fn lazy_power_iteration(t: &StochasticMatrix) -> Vec<f64> {
    let d = t.dim();
    let mut mu = vec![1.0 / d as f64; d];
    for _ in 0..1_000_000 {
        let pushed = t.push_forward(&mu);
        let next: Vec<f64> = mu.iter().zip(&pushed).map(|(a, b)| 0.5 * (a + b)).collect();
        let delta: f64 = next.iter().zip(&mu).map(|(a, b)| (a - b).abs()).sum();
        mu = next;
        if delta < 1e-15 {
            break;
        }
    }
    mu
}

/// Joint law of `arity` consecutive sites over an alphabet of size `d`.
#[derive(Debug, Clone, PartialEq)]
pub struct JointPmf {
    d: usize,
    arity: usize,
    values: Vec<f64>,
}

fn joint_len(d: usize, arity: usize) -> Result<usize> {
    if arity == 0 || arity > MAX_ARITY {
        return Err(Error::TooLarge(format!("arity {arity} outside 1..={MAX_ARITY}")));
    }
    let mut len = 1usize;
    for _ in 0..arity {
        len = len
            .checked_mul(d)
            .filter(|&l| l <= MAX_JOINT_LEN)
            .ok_or_else(|| Error::TooLarge(format!("{d}^{arity} entries")))?;
    }
    Ok(len)
}

impl JointPmf {
    pub fn new(d: usize, arity: usize, values: Vec<f64>) -> Result<Self> {
        let len = joint_len(d, arity)?;
        if values.len() != len {
            return Err(Error::Shape(format!(
                "{} values for {d}^{arity} words",
                values.len()
            )));
        }
        if let Some(x) = values.iter().find(|x| !x.is_finite() || **x < 0.0) {
            return Err(Error::InvalidDistribution(format!("negative probability {x}")));
        }
        let total: f64 = values.iter().sum();
        if (total - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidDistribution(format!("total mass {total}")));
        }
        Ok(Self { d, arity, values })
    }

    /// A two-site law from a `d x d` table.
    pub fn from_table(table: &DMatrix<f64>) -> Result<Self> {
        if table.nrows() != table.ncols() {
            return Err(Error::Shape("two-site table must be square".into()));
        }
        let d = table.nrows();
        let values = (0..d * d).map(|k| table[(k / d, k % d)]).collect();
        Self::new(d, 2, values)
    }

    pub fn alphabet(&self) -> usize {
        self.d
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn index(&self, word: &[usize]) -> usize {
        word.iter().fold(0, |acc, &s| acc * self.d + s)
    }

    pub fn prob(&self, word: &[usize]) -> f64 {
        assert_eq!(word.len(), self.arity, "word length must equal the arity");
        self.values[self.index(word)]
    }

    /// Marginal on the listed sites, kept in increasing order.
    pub fn marginal(&self, keep: &[usize]) -> Result<JointPmf> {
        let mut kept = keep.to_vec();
        kept.sort_unstable();
        kept.dedup();
        if kept.is_empty() || kept.iter().any(|&k| k >= self.arity) {
            return Err(Error::Shape(format!("invalid marginal sites {keep:?}")));
        }
        let mut out = vec![0.0; self.d.pow(kept.len() as u32)];
        let mut word = vec![0usize; self.arity];
        for (flat, &p) in self.values.iter().enumerate() {
            let mut f = flat;
            for k in (0..self.arity).rev() {
                word[k] = f % self.d;
                f /= self.d;
            }
            let idx = kept.iter().fold(0, |acc, &k| acc * self.d + word[k]);
            out[idx] += p;
        }
        Ok(JointPmf {
            d: self.d,
            arity: kept.len(),
            values: out,
        })
    }

    pub fn entropy(&self) -> f64 {
        entropy_of_weights(&self.values)
    }
}

/// Maximal-entropy joint extension of two two-site laws agreeing on the
/// shared middle site: `xi(a,b,c) = mu12(a,b) nu23(b,c) / mu2(b)`, with terms
/// for `mu2(b) = 0` set to zero.
pub fn markov_extension(mu12: &JointPmf, nu23: &JointPmf) -> Result<JointPmf> {
    if mu12.arity != 2 || nu23.arity != 2 || mu12.d != nu23.d {
        return Err(Error::Shape("markov_extension needs two two-site laws on one alphabet".into()));
    }
    let d = mu12.d;
    let mid_left = mu12.marginal(&[1])?;
    let mid_right = nu23.marginal(&[0])?;
    let max_deviation = mid_left
        .values
        .iter()
        .zip(&mid_right.values)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    if max_deviation > 1e-12 {
        return Err(Error::Incompatible { max_deviation });
    }
    let mut values = vec![0.0; d * d * d];
    for a in 0..d {
        for b in 0..d {
            let m2 = mid_left.values[b];
            if m2 == 0.0 {
                continue;
            }
            for c in 0..d {
                values[(a * d + b) * d + c] = mu12.values[a * d + b] * nu23.values[b * d + c] / m2;
            }
        }
    }
    JointPmf::new(d, 3, values)
}

/// `H(xi12) + H(xi23) - H(xi123) - H(xi2)`, nonnegative by strong
/// sub-additivity.
pub fn ssa_residual(xi: &JointPmf) -> Result<f64> {
    if xi.arity != 3 {
        return Err(Error::Shape(format!("expected a three-site law, got {} sites", xi.arity)));
    }
    let h12 = xi.marginal(&[0, 1])?.entropy();
    let h23 = xi.marginal(&[1, 2])?.entropy();
    let h2 = xi.marginal(&[1])?.entropy();
    Ok(h12 + h23 - xi.entropy() - h2)
}

fn require_stationary(t: &StochasticMatrix, mu: &ProbVector) -> Result<()> {
    if mu.dim() != t.dim() {
        return Err(Error::Shape(format!(
            "measure of length {} for a {}-state chain",
            mu.dim(),
            t.dim()
        )));
    }
    let residual = stationarity_residual(t, mu.as_slice());
    if residual > STATIONARITY_TOL {
        return Err(Error::NotStationary { residual });
    }
    Ok(())
}

/// Joint law of sites `0..=n` of the stationary chain,
/// `omega(e0..en) = mu(e0) T(e0,e1) ... T(e_{n-1},e_n)`.
pub fn markov_joint(t: &StochasticMatrix, mu: &ProbVector, n: usize) -> Result<JointPmf> {
    require_stationary(t, mu)?;
    let d = t.dim();
    joint_len(d, n + 1)?;
    let mut values = mu.as_slice().to_vec();
    for _ in 0..n {
        let mut next = Vec::with_capacity(values.len() * d);
        for (prefix, &p) in values.iter().enumerate() {
            let last = prefix % d;
            for j in 0..d {
                next.push(p * t.get(last, j));
            }
        }
        values = next;
    }
    JointPmf::new(d, n + 1, values)
}

/// Transition matrix and single-site law of a shift-invariant two-site law,
/// `T(a,b) = mu(a,b)/mu(a)`. Rows with `mu(a) = 0` are set to uniform.
pub fn transition_from_pair(mu12: &JointPmf) -> Result<(StochasticMatrix, ProbVector)> {
    if mu12.arity != 2 {
        return Err(Error::Shape("expected a two-site law".into()));
    }
    let d = mu12.d;
    let left = mu12.marginal(&[0])?;
    let right = mu12.marginal(&[1])?;
    let max_deviation = left
        .values
        .iter()
        .zip(&right.values)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    if max_deviation > 1e-12 {
        return Err(Error::Incompatible { max_deviation });
    }
    let t = DMatrix::from_fn(d, d, |a, b| {
        let m = left.values[a];
        if m > 0.0 {
            mu12.values[a * d + b] / m
        } else {
            1.0 / d as f64
        }
    });
    let t = normalise_rows(t);
    Ok((StochasticMatrix::new(t)?, ProbVector::new(left.values)?))
}

fn normalise_rows(mut t: DMatrix<f64>) -> DMatrix<f64> {
    for mut row in t.row_iter_mut() {
        let s: f64 = row.sum();
        row /= s;
    }
    t
}

/// Stationary process obtained by repeatedly Markov-extending a shift-invariant
/// two-site law onto `n + 1` sites.
pub fn iterated_extension(mu12: &JointPmf, n: usize) -> Result<JointPmf> {
    let d = mu12.d;
    if n == 0 {
        return mu12.marginal(&[0]);
    }
    transition_from_pair(mu12)?;
    joint_len(d, n + 1)?;
    let single = mu12.marginal(&[0])?;
    let mut values = mu12.values.clone();
    for _ in 1..n {
        let mut next = Vec::with_capacity(values.len() * d);
        for (prefix, &p) in values.iter().enumerate() {
            let last = prefix % d;
            let m = single.values[last];
            for j in 0..d {
                next.push(if m > 0.0 { p * mu12.values[last * d + j] / m } else { 0.0 });
            }
        }
        values = next;
    }
    JointPmf::new(d, n + 1, values)
}

/// Entropy rate data of a stationary chain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EntropyRate {
    /// `mu`-average of the row entropies.
    pub h: f64,
    /// Smallest row entropy, the minimal output entropy of `T`.
    pub h_min: f64,
    /// `H_2 - H_1` from the enumerated joint law, when small enough to build.
    pub increment: Option<f64>,
}

pub fn entropy_rate_classical(t: &StochasticMatrix, mu: &ProbVector) -> Result<EntropyRate> {
    require_stationary(t, mu)?;
    let d = t.dim();
    let row_entropies: Vec<f64> = (0..d)
        .map(|i| t.matrix().row(i).iter().map(|&x| xlogx_term(x)).sum())
        .collect();
    let h = row_entropies.iter().zip(mu.as_slice()).map(|(hr, m)| hr * m).sum();
    let h_min = row_entropies.iter().copied().fold(f64::INFINITY, f64::min);
    let increment = if joint_len(d, 3).is_ok() {
        let h2 = markov_joint(t, mu, 2)?.entropy();
        let h1 = markov_joint(t, mu, 1)?.entropy();
        Some(h2 - h1)
    } else {
        None
    };
    Ok(EntropyRate { h, h_min, increment })
}

/// `[H_0, H_1, ..., H_nmax]` with `H_n` the entropy of `n + 1` sites.
pub fn block_entropies(t: &StochasticMatrix, mu: &ProbVector, n_max: usize) -> Result<Vec<f64>> {
    (0..=n_max).map(|n| Ok(markov_joint(t, mu, n)?.entropy())).collect()
}

/// JSON form `{"T": [[...]], "mu": [...]}`; `mu` may be omitted.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MarkovSpecJson {
    #[serde(rename = "T", with = "crate::json::real_matrix")]
    pub t: DMatrix<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<Vec<f64>>,
}

impl MarkovSpecJson {
    /// Validated chain and measure; a missing `mu` is solved for.
    pub fn build(&self, allow_degenerate: bool) -> Result<(StochasticMatrix, ProbVector)> {
        let t = StochasticMatrix::new(self.t.clone())?;
        let mu = match &self.mu {
            Some(mu) => {
                let mu = ProbVector::new(mu.clone())?;
                require_stationary(&t, &mu)?;
                mu
            }
            None => invariant_measure(&t, allow_degenerate)?,
        };
        Ok((t, mu))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{random_probability, random_stochastic, substream};

    fn sample_chain() -> StochasticMatrix {
        StochasticMatrix::from_rows(&[&[0.7, 0.3], &[0.1, 0.9]]).unwrap()
    }

    #[test]
    fn invariant_measure_examples() {
        let ds = StochasticMatrix::from_rows(&[&[0.2, 0.5, 0.3], &[0.5, 0.1, 0.4], &[0.3, 0.4, 0.3]]).unwrap();
        let mu = invariant_measure(&ds, false).unwrap();
        for &m in mu.as_slice() {
            assert!((m - 1.0 / 3.0).abs() < 1e-14);
        }

        let cyc = StochasticMatrix::from_rows(&[&[0.0, 1.0, 0.0], &[0.0, 0.0, 1.0], &[1.0, 0.0, 0.0]]).unwrap();
        assert!(matches!(invariant_measure(&cyc, false), Err(Error::Ambiguous(_))));
        let mu = invariant_measure(&cyc, true).unwrap();
        for &m in mu.as_slice() {
            assert!((m - 1.0 / 3.0).abs() < 1e-14);
        }

        let mu = invariant_measure(&sample_chain(), false).unwrap();
        assert!((mu.as_slice()[0] - 0.25).abs() < 1e-14);
        assert!((mu.as_slice()[1] - 0.75).abs() < 1e-14);
        assert!(stationarity_residual(&sample_chain(), mu.as_slice()) < 1e-12);
    }

    #[test]
    fn reducible_chain_with_flag_returns_some_invariant_measure() {
        let t = StochasticMatrix::from_rows(&[&[1.0, 0.0, 0.0], &[0.0, 0.5, 0.5], &[0.0, 0.5, 0.5]]).unwrap();
        assert!(invariant_measure(&t, false).is_err());
        let mu = invariant_measure(&t, true).unwrap();
        assert!(stationarity_residual(&t, mu.as_slice()) < 1e-12);
    }

    #[test]
    fn extension_examples() {
        let uniform = JointPmf::new(2, 2, vec![0.25; 4]).unwrap();
        let xi = markov_extension(&uniform, &uniform).unwrap();
        assert!(xi.values().iter().all(|&v| (v - 0.125).abs() < 1e-15));

        let left = JointPmf::new(2, 2, vec![0.0, 1.0, 0.0, 0.0]).unwrap(); // delta(0,1)
        let right = JointPmf::new(2, 2, vec![0.0, 0.0, 1.0, 0.0]).unwrap(); // delta(1,0)
        let xi = markov_extension(&left, &right).unwrap();
        assert_eq!(xi.prob(&[0, 1, 0]), 1.0);
        assert!((xi.values().iter().sum::<f64>() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn mismatched_middle_is_incompatible() {
        let a = JointPmf::new(2, 2, vec![0.5, 0.0, 0.0, 0.5]).unwrap();
        let b = JointPmf::new(2, 2, vec![0.0, 0.0, 0.5, 0.5]).unwrap();
        match markov_extension(&a, &b) {
            Err(Error::Incompatible { max_deviation }) => assert!((max_deviation - 0.5).abs() < 1e-15),
            other => panic!("{other:?}"),
        }
    }

    fn random_matched_pair(d: usize, seed: u64) -> (JointPmf, JointPmf) {
        let mut rng = substream(seed, "pair");
        let a = random_probability(d * d, &mut rng);
        let left = JointPmf::new(d, 2, a).unwrap();
        let mid = left.marginal(&[1]).unwrap();
        // right law: mid(b) * K(b, c) for a random kernel K
        let k = random_stochastic(d, &mut rng);
        let vals = (0..d * d).map(|i| mid.values()[i / d] * k[(i / d, i % d)]).collect();
        (left, JointPmf::new(d, 2, vals).unwrap())
    }

    #[test]
    fn extension_saturates_ssa_and_has_gibbs_form() {
        for seed in 0..20 {
            let (l, r) = random_matched_pair(3, seed);
            let xi = markov_extension(&l, &r).unwrap();
            assert!(ssa_residual(&xi).unwrap().abs() < 1e-12);
            assert!(xi.marginal(&[0, 1]).unwrap().values().iter().zip(l.values()).all(|(a, b)| (a - b).abs() < 1e-15));

            // Gibbs representation with h = -log of each marginal.
            let mid = l.marginal(&[1]).unwrap();
            let d = 3;
            for a in 0..d {
                for b in 0..d {
                    for cc in 0..d {
                        let h12 = -l.values()[a * d + b].ln();
                        let h23 = -r.values()[b * d + cc].ln();
                        let h2 = -mid.values()[b].ln();
                        let gibbs = (-(h12 + h23 - h2)).exp();
                        assert!((gibbs - xi.prob(&[a, b, cc])).abs() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn ssa_residual_is_zero_for_products_and_nonnegative_in_general() {
        let p = [0.2, 0.3, 0.5];
        let vals = (0..27).map(|k| p[k / 9] * p[(k / 3) % 3] * p[k % 3]).collect();
        let prod = JointPmf::new(3, 3, vals).unwrap();
        assert!(ssa_residual(&prod).unwrap().abs() < 1e-12);

        let mut rng = substream(11, "ssa");
        for _ in 0..50 {
            let xi = JointPmf::new(3, 3, random_probability(27, &mut rng)).unwrap();
            assert!(ssa_residual(&xi).unwrap() >= -1e-12);
        }
    }

    #[test]
    fn markov_joint_examples() {
        let t = sample_chain();
        let mu = ProbVector::new(vec![0.25, 0.75]).unwrap();
        let w0 = markov_joint(&t, &mu, 0).unwrap();
        assert_eq!(w0.values(), mu.as_slice());
        let w = markov_joint(&t, &mu, 1).unwrap();
        assert!((w.prob(&[0, 1]) - 0.075).abs() < 1e-15);

        let iid = StochasticMatrix::from_rows(&[&[0.2, 0.8], &[0.2, 0.8]]).unwrap();
        let nu = ProbVector::new(vec![0.2, 0.8]).unwrap();
        let w = markov_joint(&iid, &nu, 3).unwrap();
        assert!((w.prob(&[1, 0, 1, 1]) - 0.8 * 0.2 * 0.8 * 0.8).abs() < 1e-15);
    }

    #[test]
    fn non_invariant_measure_is_rejected() {
        let mu = ProbVector::new(vec![0.5, 0.5]).unwrap();
        assert!(matches!(markov_joint(&sample_chain(), &mu, 2), Err(Error::NotStationary { .. })));
    }

    #[test]
    fn iterated_extension_matches_chain() {
        let t = sample_chain();
        let mu = invariant_measure(&t, false).unwrap();
        let pair = markov_joint(&t, &mu, 1).unwrap();
        let a = iterated_extension(&pair, 5).unwrap();
        let b = markov_joint(&t, &mu, 5).unwrap();
        for (x, y) in a.values().iter().zip(b.values()) {
            assert!((x - y).abs() < 1e-15);
        }
    }

    #[test]
    fn entropy_rate_examples() {
        let iid = StochasticMatrix::from_rows(&[&[0.5, 0.5], &[0.5, 0.5]]).unwrap();
        let r = entropy_rate_classical(&iid, &ProbVector::uniform(2)).unwrap();
        assert!((r.h - std::f64::consts::LN_2).abs() < 1e-15);

        let perm = StochasticMatrix::from_rows(&[&[0.0, 1.0], &[1.0, 0.0]]).unwrap();
        let r = entropy_rate_classical(&perm, &ProbVector::uniform(2)).unwrap();
        assert_eq!(r.h, 0.0);

        let t = sample_chain();
        let mu = ProbVector::new(vec![0.25, 0.75]).unwrap();
        let r = entropy_rate_classical(&t, &mu).unwrap();
        // 0.25 H(0.7, 0.3) + 0.75 H(0.1, 0.9), 30-digit evaluation
        assert!((r.h - 0.396_528_305_557_309_5).abs() < 1e-14, "{}", r.h);
        assert!((r.increment.unwrap() - r.h).abs() < 1e-12);
        assert!((r.h_min - 0.325_082_973_391_448_2).abs() < 1e-14);
    }

    #[test]
    fn block_entropy_monotonicity() {
        let mut rng = substream(3, "blocks");
        for _ in 0..5 {
            let t = StochasticMatrix::new(random_stochastic(2, &mut rng)).unwrap();
            let mu = invariant_measure(&t, false).unwrap();
            let h = block_entropies(&t, &mu, 8).unwrap();
            let rate = entropy_rate_classical(&t, &mu).unwrap().h;
            for n in 1..=8 {
                assert!(h[n] >= h[n - 1] - 1e-12);
                if n >= 2 {
                    assert!(h[n] - h[n - 1] <= h[n - 1] - h[n - 2] + 1e-12);
                }
                if n >= 1 {
                    assert!((h[n] - h[n - 1] - rate).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn stationary_marginals_agree() {
        let mut rng = substream(9, "stationary");
        let t = StochasticMatrix::new(random_stochastic(3, &mut rng)).unwrap();
        let mu = invariant_measure(&t, false).unwrap();
        let w = markov_joint(&t, &mu, 3).unwrap();
        let first = w.marginal(&[0]).unwrap();
        let last = w.marginal(&[3]).unwrap();
        for (a, b) in first.values().iter().zip(last.values()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn arity_cap() {
        let t = sample_chain();
        let mu = ProbVector::new(vec![0.25, 0.75]).unwrap();
        assert!(markov_joint(&t, &mu, 11).is_ok());
        assert!(matches!(markov_joint(&t, &mu, 12), Err(Error::TooLarge(_))));
    }

    #[test]
    fn json_round_trip() {
        let spec: MarkovSpecJson = serde_json::from_str(r#"{"T": [[0.7, 0.3], [0.1, 0.9]]}"#).unwrap();
        let (_, mu) = spec.build(false).unwrap();
        assert!((mu.as_slice()[0] - 0.25).abs() < 1e-14);
        assert!(serde_json::from_str::<MarkovSpecJson>(r#"{"T": [[1]], "extra": 1}"#).is_err());
    }
}
