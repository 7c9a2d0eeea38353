//! Derivative-free minimisation: Nelder–Mead and a grid-seeded driver over
//! boxes.
//!
//! Box constraints are handled by clamping the argument before every
//! evaluation, so an optimum on a face or corner of the box is reached
//! exactly. Other constraints are expressed by returning `+inf`.

use rayon::prelude::*;

#[derive(Debug, Clone, Copy)]
pub struct NelderMead {
    pub max_iter: usize,
    /// Simplex diameter at which a run stops.
    pub xtol: f64,
    /// Spread of simplex values at which a run stops.
    pub ftol: f64,
    pub initial_step: f64,
    /// Number of times the simplex is rebuilt around the incumbent after
    /// convergence; guards against collapse onto a face.
    pub restarts: usize,
}

impl Default for NelderMead {
    fn default() -> Self {
        Self {
            max_iter: 20_000,
            xtol: 1e-10,
            ftol: 1e-14,
            initial_step: 0.1,
            restarts: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub evaluations: usize,
}

impl NelderMead {
    pub fn minimize<F: Fn(&[f64]) -> f64>(&self, f: F, x0: &[f64]) -> Minimum {
        let mut best = Minimum {
            x: x0.to_vec(),
            value: f(x0),
            evaluations: 1,
        };
        let mut step = self.initial_step;
        for _ in 0..=self.restarts {
            let run = self.run(&f, &best.x, step);
            let improved = run.value < best.value;
            let evals = best.evaluations + run.evaluations;
            if improved || !best.value.is_finite() {
                best = run;
            }
            best.evaluations = evals;
            step *= 0.1;
            if !improved && best.value.is_finite() {
                break;
            }
        }
        best
    }

    fn run<F: Fn(&[f64]) -> f64>(&self, f: &F, x0: &[f64], step: f64) -> Minimum {
        let n = x0.len();
        let mut evaluations = 0usize;
        let mut eval = |x: &[f64]| {
            evaluations += 1;
            let v = f(x);
            if v.is_nan() {
                f64::INFINITY
            } else {
                v
            }
        };

        let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
        simplex.push((x0.to_vec(), eval(x0)));
        for i in 0..n {
            let mut x = x0.to_vec();
            x[i] += if x[i].abs() > 1.0 { step * x[i].abs() } else { step };
            let v = eval(&x);
            simplex.push((x, v));
        }

        let (alpha, gamma, rho, sigma) = (1.0, 2.0, 0.5, 0.5);
        for _ in 0..self.max_iter {
            simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
            let fbest = simplex[0].1;
            let fworst = simplex[n].1;
            let diameter = simplex[1..]
                .iter()
                .map(|(x, _)| {
                    x.iter()
                        .zip(&simplex[0].0)
                        .map(|(a, b)| (a - b).abs())
                        .fold(0.0, f64::max)
                })
                .fold(0.0, f64::max);
            if diameter < self.xtol
                || (fworst.is_finite() && (fworst - fbest).abs() <= self.ftol * (1.0 + fbest.abs()) && diameter < self.xtol.sqrt())
            {
                break;
            }

            let mut centroid = vec![0.0; n];
            for (x, _) in &simplex[..n] {
                for (c, xi) in centroid.iter_mut().zip(x) {
                    *c += xi / n as f64;
                }
            }
            let along = |t: f64| -> Vec<f64> {
                centroid
                    .iter()
                    .zip(&simplex[n].0)
                    .map(|(c, w)| c + t * (c - w))
                    .collect()
            };

            let xr = along(alpha);
            let fr = eval(&xr);
            if fr < simplex[0].1 {
                let xe = along(gamma);
                let fe = eval(&xe);
                simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
            } else if fr < simplex[n - 1].1 {
                simplex[n] = (xr, fr);
            } else {
                let (xc, fc) = if fr < simplex[n].1 {
                    let xc = along(rho);
                    let fc = eval(&xc);
                    (xc, fc)
                } else {
                    let xc = along(-rho);
                    let fc = eval(&xc);
                    (xc, fc)
                };
                if fc < simplex[n].1.min(fr) {
                    simplex[n] = (xc, fc);
                } else {
                    let x0 = simplex[0].0.clone();
                    for (x, v) in simplex[1..].iter_mut() {
                        for (xi, bi) in x.iter_mut().zip(&x0) {
                            *xi = bi + sigma * (*xi - bi);
                        }
                        *v = eval(x);
                    }
                }
            }
        }
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let (x, value) = simplex.swap_remove(0);
        Minimum {
            x,
            value,
            evaluations,
        }
    }
}

/// A closed box `[lo_i, hi_i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Bounds {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl Bounds {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Self {
        assert_eq!(lo.len(), hi.len());
        Self { lo, hi }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn clamp(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .map(|(&v, (&l, &h))| v.clamp(l, h))
            .collect()
    }

    /// Cell centres and corners of a uniform grid with `per_dim` points per
    /// axis, endpoints included.
    pub fn grid(&self, per_dim: usize) -> Vec<Vec<f64>> {
        let per_dim = per_dim.max(2);
        let mut pts = vec![Vec::new()];
        for k in 0..self.dim() {
            let mut next = Vec::with_capacity(pts.len() * per_dim);
            for p in &pts {
                for i in 0..per_dim {
                    let t = i as f64 / (per_dim - 1) as f64;
                    let mut q = p.clone();
                    q.push(self.lo[k] + t * (self.hi[k] - self.lo[k]));
                    next.push(q);
                }
            }
            pts = next;
        }
        pts
    }
}

/// Grid search followed by Nelder–Mead from the `seeds` best grid points.
/// The objective is only ever evaluated at clamped arguments and the returned
/// `x` is clamped.
pub fn grid_then_refine<F>(f: F, bounds: &Bounds, per_dim: usize, seeds: usize, nm: &NelderMead) -> Minimum
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let clamped = |x: &[f64]| f(&bounds.clamp(x));
    let mut scored: Vec<(Vec<f64>, f64)> = bounds
        .grid(per_dim)
        .into_par_iter()
        .map(|x| {
            let v = clamped(&x);
            (x, v)
        })
        .collect();
    let grid_evals = scored.len();
    scored.sort_by(|a, b| a.1.total_cmp(&b.1));
    let mut runs: Vec<Minimum> = scored
        .into_iter()
        .take(seeds.max(1))
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|(x0, _)| nm.minimize(clamped, &x0))
        .collect();
    runs.sort_by(|a, b| a.value.total_cmp(&b.value));
    let evaluations = grid_evals + runs.iter().map(|r| r.evaluations).sum::<usize>();
    let mut best = runs.swap_remove(0);
    best.x = bounds.clamp(&best.x);
    best.evaluations = evaluations;
    best
}
