//! Hidden Markov processes generated by a stochastic extension `S` of a
//! transition matrix `T`.
//!
//! `S` is a `d x d^2` stochastic matrix whose column `eta * d + eps` holds the
//! probability of moving from hidden state `phi` to hidden state `eta` while
//! emitting `eps`. The process is described by the matrices
//! `E(eps)[phi][eta] = S[phi][eta * d + eps]`, and word probabilities are
//! `<mu, E(e0) ... E(en) 1>`.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classical::{invariant_measure, stationarity_residual, StochasticMatrix, STATIONARITY_TOL};
use crate::error::{Error, Result};
use crate::json::RealMatrix;
use crate::linalg::{entropy_of_weights, xlogx_term, ProbVector, PROB_TOL};
use crate::random::{indexed_substream, random_probability, substream};

/// Largest number of words enumerated by [`HmmSpec::word_entropies`].
pub const MAX_WORDS: usize = 1 << 24;

#[derive(Debug, Clone, PartialEq)]
pub struct HmmSpec {
    e: Vec<DMatrix<f64>>,
    mu: ProbVector,
}

impl HmmSpec {
    /// Validates `E(eps) >= 0`, `T = sum E(eps)` stochastic, and `mu T = mu`.
    /// A missing `mu` is solved for.
    pub fn new(e: Vec<DMatrix<f64>>, mu: Option<ProbVector>) -> Result<Self> {
        let Some(first) = e.first() else {
            return Err(Error::Shape("no emission matrices".into()));
        };
        let d = first.nrows();
        if e.iter().any(|m| m.nrows() != d || m.ncols() != d) {
            return Err(Error::Shape("emission matrices must all be square of one size".into()));
        }
        if let Some(x) = e.iter().flat_map(|m| m.iter()).find(|x| !x.is_finite() || **x < 0.0) {
            return Err(Error::InvalidDistribution(format!("negative emission weight {x}")));
        }
        let t = StochasticMatrix::new(e.iter().fold(DMatrix::zeros(d, d), |acc, m| acc + m))?;
        let mu = match mu {
            Some(mu) => {
                if mu.dim() != d {
                    return Err(Error::Shape(format!("measure of length {} for {d} hidden states", mu.dim())));
                }
                let residual = stationarity_residual(&t, mu.as_slice());
                if residual > STATIONARITY_TOL {
                    return Err(Error::NotStationary { residual });
                }
                mu
            }
            None => invariant_measure(&t, true)?,
        };
        Ok(Self { e, mu })
    }

    /// Independent symbols with law `p`, one hidden state.
    pub fn iid(p: &ProbVector) -> Self {
        let e = p.as_slice().iter().map(|&x| DMatrix::from_element(1, 1, x)).collect();
        Self {
            e,
            mu: ProbVector::uniform(1),
        }
    }

    /// The extension `S[phi][(eta, eps)] = delta(eta, eps) T[phi][eps]`, whose
    /// observed process is the Markov chain of `T` itself.
    pub fn markov_embedding(t: &StochasticMatrix) -> Result<Self> {
        let d = t.dim();
        let s = DMatrix::from_fn(d, d * d, |phi, col| {
            let (eta, eps) = (col / d, col % d);
            if eta == eps {
                t.get(phi, eps)
            } else {
                0.0
            }
        });
        hmm_from_extension(&s)
    }

    pub fn hidden_dim(&self) -> usize {
        self.mu.dim()
    }

    pub fn obs_dim(&self) -> usize {
        self.e.len()
    }

    pub fn emission(&self, eps: usize) -> &DMatrix<f64> {
        &self.e[eps]
    }

    pub fn mu(&self) -> &ProbVector {
        &self.mu
    }

    pub fn transition(&self) -> StochasticMatrix {
        let d = self.hidden_dim();
        let t = self.e.iter().fold(DMatrix::zeros(d, d), |acc, m| acc + m);
        StochasticMatrix::new(t).expect("validated at construction")
    }

    fn push(&self, p: &[f64], eps: usize) -> Vec<f64> {
        let m = &self.e[eps];
        let d = p.len();
        (0..d).map(|j| (0..d).map(|i| p[i] * m[(i, j)]).sum()).collect()
    }

    /// `<mu, E(e0) ... E(en) 1>`; the empty word has probability one.
    pub fn word_probability(&self, word: &[usize]) -> Result<f64> {
        let mut p = self.mu.as_slice().to_vec();
        for &eps in word {
            if eps >= self.obs_dim() {
                return Err(Error::Shape(format!("symbol {eps} out of range 0..{}", self.obs_dim())));
            }
            p = self.push(&p, eps);
        }
        Ok(p.iter().sum())
    }

    /// `[H_0, ..., H_nmax]` where `H_n` is the entropy of words of length
    /// `n + 1`, by exhaustive enumeration.
    pub fn word_entropies(&self, n_max: usize) -> Result<Vec<f64>> {
        let words = (self.obs_dim() as f64).powi(n_max as i32 + 1);
        if words > MAX_WORDS as f64 {
            return Err(Error::TooLarge(format!(
                "{}^{} words exceed the enumeration limit",
                self.obs_dim(),
                n_max + 1
            )));
        }
        // The first symbol is enumerated in parallel; each branch returns its
        // per-length entropy contributions.
        let branches: Vec<Vec<f64>> = (0..self.obs_dim())
            .into_par_iter()
            .map(|eps| {
                let mut acc = vec![0.0; n_max + 1];
                let p = self.push(self.mu.as_slice(), eps);
                self.descend(p, 0, n_max, &mut acc);
                acc
            })
            .collect();
        let mut h = vec![0.0; n_max + 1];
        for b in branches {
            for (hk, bk) in h.iter_mut().zip(b) {
                *hk += bk;
            }
        }
        Ok(h)
    }

    fn descend(&self, p: Vec<f64>, depth: usize, n_max: usize, acc: &mut [f64]) {
        let mass: f64 = p.iter().sum();
        if mass <= 0.0 {
            return;
        }
        acc[depth] += xlogx_term(mass);
        if depth == n_max {
            return;
        }
        for eps in 0..self.obs_dim() {
            self.descend(self.push(&p, eps), depth + 1, n_max, acc);
        }
    }

    /// Observed-symbol law at a single site.
    pub fn symbol_law(&self) -> Vec<f64> {
        (0..self.obs_dim())
            .map(|eps| self.push(self.mu.as_slice(), eps).iter().sum())
            .collect()
    }

    /// `sum_phi mu_phi H(S[phi][.])`, the entropy rate of the joint
    /// hidden-and-observed chain, an upper bound on the observed entropy rate.
    pub fn joint_chain_entropy_rate(&self) -> f64 {
        let d = self.hidden_dim();
        (0..d)
            .map(|phi| {
                let row_h: f64 = self.e.iter().map(|m| entropy_of_weights(m.row(phi).iter())).sum();
                self.mu.as_slice()[phi] * row_h
            })
            .sum()
    }
}

/// Builds the hidden Markov spec of an extension `S` (`d x d^2`).
pub fn hmm_from_extension(s: &DMatrix<f64>) -> Result<HmmSpec> {
    let d = s.nrows();
    if d == 0 || s.ncols() != d * d {
        return Err(Error::Shape(format!("extension must be d x d^2, got {}x{}", s.nrows(), s.ncols())));
    }
    if let Some(x) = s.iter().find(|x| !x.is_finite() || **x < 0.0) {
        return Err(Error::InvalidDistribution(format!("negative extension entry {x}")));
    }
    for (phi, row) in s.row_iter().enumerate() {
        let total: f64 = row.sum();
        if (total - 1.0).abs() > PROB_TOL {
            return Err(Error::InvalidDistribution(format!("row {phi} of S sums to {total}")));
        }
    }
    let mut max_deviation: f64 = 0.0;
    for phi in 0..d {
        for k in 0..d {
            let first: f64 = (0..d).map(|e2| s[(phi, k * d + e2)]).sum();
            let second: f64 = (0..d).map(|e1| s[(phi, e1 * d + k)]).sum();
            max_deviation = max_deviation.max((first - second).abs());
        }
    }
    if max_deviation > 1e-12 {
        return Err(Error::Incompatible { max_deviation });
    }
    let e = (0..d)
        .map(|eps| DMatrix::from_fn(d, d, |phi, eta| s[(phi, eta * d + eps)]))
        .collect();
    HmmSpec::new(e, None)
}

/// `H_n - H_{n-1}` for words of length `n + 1`; for `n = 0` this is `H_0`.
pub fn hmm_entropy_increment(spec: &HmmSpec, n: usize) -> Result<f64> {
    let h = spec.word_entropies(n)?;
    Ok(if n == 0 { h[0] } else { h[n] - h[n - 1] })
}

/// All increments `H_0, H_1 - H_0, ..., H_nmax - H_{nmax-1}`.
pub fn hmm_entropy_increments(spec: &HmmSpec, n_max: usize) -> Result<Vec<f64>> {
    let h = spec.word_entropies(n_max)?;
    Ok((0..=n_max).map(|n| if n == 0 { h[0] } else { h[n] - h[n - 1] }).collect())
}

/// Blackwell's filter: the conditional law of the hidden state given the
/// symbols seen so far.
#[derive(Debug, Clone)]
pub struct BlackwellFilter<'a> {
    spec: &'a HmmSpec,
    p: Vec<f64>,
    restarts: usize,
}

/// One filter step: the emitted symbol and the entropy of the predictive law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterStep {
    pub symbol: usize,
    pub predictive_entropy: f64,
}

impl<'a> BlackwellFilter<'a> {
    pub fn new(spec: &'a HmmSpec) -> Self {
        Self {
            spec,
            p: spec.mu.as_slice().to_vec(),
            restarts: 0,
        }
    }

    pub fn state(&self) -> &[f64] {
        &self.p
    }

    pub fn restarts(&self) -> usize {
        self.restarts
    }

    /// Predictive symbol law `q(eps) = <p E(eps), 1>` and the updated
    /// unnormalised vectors.
    fn predictive(&self) -> (Vec<f64>, Vec<Vec<f64>>) {
        let pushed: Vec<Vec<f64>> = (0..self.spec.obs_dim()).map(|eps| self.spec.push(&self.p, eps)).collect();
        let q = pushed.iter().map(|v| v.iter().sum()).collect();
        (q, pushed)
    }

    pub fn step(&mut self, rng: &mut impl Rng) -> Result<FilterStep> {
        let (mut q, mut pushed) = self.predictive();
        let mut total: f64 = q.iter().sum();
        if total <= f64::MIN_POSITIVE {
            self.restarts += 1;
            self.p = self.spec.mu.as_slice().to_vec();
            (q, pushed) = self.predictive();
            total = q.iter().sum();
            if total <= f64::MIN_POSITIVE {
                return Err(Error::Absorbing("no symbol has positive probability".into()));
            }
        }
        for x in q.iter_mut() {
            *x /= total;
        }
        let predictive_entropy = entropy_of_weights(&q);
        let u: f64 = rng.random();
        let mut symbol = q.len() - 1;
        let mut cum = 0.0;
        for (eps, &qe) in q.iter().enumerate() {
            cum += qe;
            if u < cum && qe > 0.0 {
                symbol = eps;
                break;
            }
        }
        while q[symbol] <= 0.0 {
            symbol -= 1;
        }
        let next = std::mem::take(&mut pushed[symbol]);
        let mass: f64 = next.iter().sum();
        self.p = next.into_iter().map(|x| x / mass).collect();
        Ok(FilterStep {
            symbol,
            predictive_entropy,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlackwellOptions {
    pub samples: usize,
    pub burn_in: usize,
    pub seed: u64,
    /// Independent chains; the sample budget is split evenly.
    pub chains: usize,
    /// Batches per chain for the batch-means standard error.
    pub batches: usize,
}

impl Default for BlackwellOptions {
    fn default() -> Self {
        Self {
            samples: 100_000,
            burn_in: 1_000,
            seed: 0,
            chains: 8,
            batches: 25,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlackwellEstimate {
    pub h: f64,
    pub std_err: f64,
    pub samples: usize,
    pub restarts: usize,
}

/// Monte Carlo entropy rate: the time average of the predictive entropy along
/// filter trajectories. Results depend only on the options, not on the number
/// of worker threads.
pub fn blackwell_entropy(spec: &HmmSpec, opts: &BlackwellOptions) -> Result<BlackwellEstimate> {
    let chains = opts.chains.max(1);
    let batches = opts.batches.max(1);
    let per_batch = (opts.samples / (chains * batches)).max(1);
    let runs: Vec<Result<(Vec<f64>, usize)>> = (0..chains)
        .into_par_iter()
        .map(|chain| {
            let mut rng = indexed_substream(opts.seed, "blackwell", chain);
            let mut filter = BlackwellFilter::new(spec);
            for _ in 0..opts.burn_in {
                filter.step(&mut rng)?;
            }
            let mut means = Vec::with_capacity(batches);
            for _ in 0..batches {
                let mut s = 0.0;
                for _ in 0..per_batch {
                    s += filter.step(&mut rng)?.predictive_entropy;
                }
                means.push(s / per_batch as f64);
            }
            Ok((means, filter.restarts()))
        })
        .collect();
    let mut means = Vec::with_capacity(chains * batches);
    let mut restarts = 0;
    for r in runs {
        let (m, k) = r?;
        means.extend(m);
        restarts += k;
    }
    let n = means.len() as f64;
    let h = means.iter().sum::<f64>() / n;
    let var = if means.len() > 1 {
        means.iter().map(|m| (m - h).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    Ok(BlackwellEstimate {
        h,
        std_err: (var / n).sqrt(),
        samples: per_batch * batches * chains,
        restarts,
    })
}

/// Sinkhorn scaling of a positive matrix to the given row and column sums.
fn sinkhorn(mut m: DMatrix<f64>, rows: &[f64], cols: &[f64]) -> DMatrix<f64> {
    let d = rows.len();
    for _ in 0..10_000 {
        for i in 0..d {
            let s: f64 = m.row(i).sum();
            let f = if s > 0.0 { rows[i] / s } else { 0.0 };
            m.row_mut(i).scale_mut(f);
        }
        let mut err: f64 = 0.0;
        for j in 0..d {
            let s: f64 = m.column(j).sum();
            let f = if s > 0.0 { cols[j] / s } else { 0.0 };
            m.column_mut(j).scale_mut(f);
        }
        for i in 0..d {
            err = err.max((m.row(i).sum() - rows[i]).abs());
        }
        if err < 1e-15 {
            break;
        }
    }
    m
}

/// A random extension of `t` satisfying the compatibility condition: for each
/// hidden state the `d x d` block `S[phi][(eta, eps)]` is a coupling of row
/// `phi` of `t` with itself.
pub fn random_compatible_extension(t: &StochasticMatrix, rng: &mut impl Rng) -> DMatrix<f64> {
    let d = t.dim();
    let mut s = DMatrix::zeros(d, d * d);
    for phi in 0..d {
        let row = t.row(phi);
        let seed = random_probability(d * d, rng);
        let block = DMatrix::from_fn(d, d, |a, b| seed[a * d + b]);
        let coupled = sinkhorn(block, &row, &row);
        // Symmetrising keeps both marginals and removes Sinkhorn's residual
        // asymmetry between them.
        let coupled = (&coupled + coupled.transpose()) * 0.5;
        let total: f64 = coupled.sum();
        for a in 0..d {
            for b in 0..d {
                s[(phi, a * d + b)] = coupled[(a, b)] / total;
            }
        }
    }
    s
}

/// Outcome of comparing the Markov embedding of `T` with random compatible
/// extensions of the same `T`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtensionScan {
    pub n: usize,
    pub markov_increment: f64,
    pub increments: Vec<f64>,
    /// Extensions whose increment at `n` falls below the Markov one.
    pub below_markov: usize,
}

pub fn markov_extension_scan(t: &StochasticMatrix, count: usize, n: usize, seed: u64) -> Result<ExtensionScan> {
    let markov_increment = hmm_entropy_increment(&HmmSpec::markov_embedding(t)?, n)?;
    let mut rng = substream(seed, "extension-scan");
    let mut increments = Vec::with_capacity(count);
    for _ in 0..count {
        let s = random_compatible_extension(t, &mut rng);
        increments.push(hmm_entropy_increment(&hmm_from_extension(&s)?, n)?);
    }
    let below_markov = increments.iter().filter(|&&h| h < markov_increment - 1e-12).count();
    Ok(ExtensionScan {
        n,
        markov_increment,
        increments,
        below_markov,
    })
}

/// JSON form `{"E": {"0": [[...]], "1": [[...]]}, "seed": 0, "mu": [...]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HmmSpecJson {
    #[serde(rename = "E")]
    pub e: BTreeMap<String, RealMatrix>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<Vec<f64>>,
}

impl HmmSpecJson {
    pub fn build(&self) -> Result<HmmSpec> {
        let mut e = Vec::with_capacity(self.e.len());
        for k in 0..self.e.len() {
            let m = self
                .e
                .get(&k.to_string())
                .ok_or_else(|| Error::Shape(format!("symbols must be keyed \"0\"..\"{}\"", self.e.len() - 1)))?;
            e.push(m.0.clone());
        }
        let mu = self.mu.clone().map(ProbVector::new).transpose()?;
        HmmSpec::new(e, mu)
    }

    pub fn from_spec(spec: &HmmSpec, seed: u64) -> Self {
        Self {
            e: spec.e.iter().enumerate().map(|(k, m)| (k.to_string(), RealMatrix(m.clone()))).collect(),
            seed,
            mu: Some(spec.mu.as_slice().to_vec()),
        }
    }
}
