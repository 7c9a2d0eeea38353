//! Maximisation of the nearest-neighbour singlet weight `<p>` over several
//! classes of shift-invariant states.

use std::collections::BTreeMap;
use std::f64::consts::{PI, TAU};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::su2::{singlet_weight, three_qubit_matrix, three_qubit_operators, Su2Params, REGION_TOL};
use super::{fcs_marginal_with, swap_slots};
use crate::error::{Error, Result};
use crate::linalg::{c, hermitian_eigenvalues, kron, paulis, psd_check_matrix, CMatrix, DensityMatrix};
use crate::optimize::{grid_then_refine, Bounds, NelderMead};

/// Tolerance on the smallest eigenvalue of a candidate state.
pub const STATE_PSD_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SingletMode {
    Exchangeable,
    Separable,
    Su2Stationary,
    Period2,
    ThreeQubitSu2,
}

impl SingletMode {
    pub const ALL: [SingletMode; 5] = [
        SingletMode::Exchangeable,
        SingletMode::Separable,
        SingletMode::Su2Stationary,
        SingletMode::Period2,
        SingletMode::ThreeQubitSu2,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            SingletMode::Exchangeable => "exchangeable",
            SingletMode::Separable => "separable",
            SingletMode::Su2Stationary => "su2_stationary",
            SingletMode::Period2 => "period2",
            SingletMode::ThreeQubitSu2 => "three_qubit_su2",
        }
    }
}

impl fmt::Display for SingletMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SingletMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "exchangeable" => Ok(SingletMode::Exchangeable),
            "separable" | "product" => Ok(SingletMode::Separable),
            "su2_stationary" | "su2" => Ok(SingletMode::Su2Stationary),
            "period2" | "period_2" => Ok(SingletMode::Period2),
            "three_qubit_su2" | "three_qubit" => Ok(SingletMode::ThreeQubitSu2),
            other => Err(Error::Parameter(format!(
                "unknown mode '{other}' (expected exchangeable, separable, su2_stationary, period2 or three_qubit_su2)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionSummary {
    pub feasible: bool,
    #[serde(flatten)]
    pub values: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingletOptimum {
    pub mode: SingletMode,
    pub value: f64,
    pub argmax: BTreeMap<String, f64>,
    pub region_check: RegionSummary,
    pub evaluations: usize,
}

fn named(pairs: &[(&str, f64)]) -> BTreeMap<String, f64> {
    pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

/// Maps a point of the cube `[-1, 1]^3` into the closed unit ball.
fn into_ball(x: &[f64]) -> [f64; 3] {
    let n = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
    let s = if n > 1.0 { 1.0 / n } else { 1.0 };
    [x[0] * s, x[1] * s, x[2] * s]
}

/// `(1 + x.s)/2`.
pub fn bloch_state(x: [f64; 3]) -> CMatrix {
    let s = paulis();
    (&s[0] + &s[1] * c(x[0], 0.0) + &s[2] * c(x[1], 0.0) + &s[3] * c(x[2], 0.0)) * c(0.5, 0.0)
}

/// Two-site marginal of the equal-weight mixture of the two period-2
/// product states built from `x1` and `x2`.
pub fn neel_marginal(x1: [f64; 3], x2: [f64; 3]) -> CMatrix {
    let (r1, r2) = (bloch_state(x1), bloch_state(x2));
    (kron(&r1, &r2) + kron(&r2, &r1)) * c(0.5, 0.0)
}

fn optimizer() -> NelderMead {
    NelderMead {
        restarts: 6,
        ..NelderMead::default()
    }
}

fn exchangeable() -> Result<SingletOptimum> {
    let f = |x: &[f64]| {
        let r = bloch_state(into_ball(x));
        -singlet_weight(&kron(&r, &r))
    };
    let bounds = Bounds::new(vec![-1.0; 3], vec![1.0; 3]);
    let m = grid_then_refine(f, &bounds, 9, 4, &optimizer());
    let x = into_ball(&m.x);
    Ok(SingletOptimum {
        mode: SingletMode::Exchangeable,
        value: -m.value,
        argmax: named(&[("x1", x[0]), ("x2", x[1]), ("x3", x[2])]),
        region_check: RegionSummary {
            feasible: true,
            values: named(&[("bloch_norm", (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt())]),
        },
        evaluations: m.evaluations,
    })
}

fn separable() -> Result<SingletOptimum> {
    let split = |x: &[f64]| (into_ball(&x[..3]), into_ball(&x[3..]));
    let f = |x: &[f64]| {
        let (a, b) = split(x);
        -singlet_weight(&neel_marginal(a, b))
    };
    let bounds = Bounds::new(vec![-1.0; 6], vec![1.0; 6]);
    let m = grid_then_refine(f, &bounds, 5, 8, &optimizer());
    let (a, b) = split(&m.x);
    let norm = |v: [f64; 3]| (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    // the mixture is shift invariant, so <p> at the other bond is the same
    let product = singlet_weight(&kron(&bloch_state(a), &bloch_state(b)));
    let dot = a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
    Ok(SingletOptimum {
        mode: SingletMode::Separable,
        value: -m.value,
        argmax: named(&[
            ("x1", a[0]),
            ("x2", a[1]),
            ("x3", a[2]),
            ("y1", b[0]),
            ("y2", b[1]),
            ("y3", b[2]),
        ]),
        region_check: RegionSummary {
            feasible: true,
            values: named(&[
                ("norm_x", norm(a)),
                ("norm_y", norm(b)),
                ("x_dot_y", dot),
                ("product_state_value", product),
            ]),
        },
        evaluations: m.evaluations,
    })
}

/// Largest `r >= 0` such that `c0 + b r + a r^2 >= 0` on `[0, r]`, given
/// `c0 > 0`.
fn quadratic_limit(c0: f64, b: f64, a: f64) -> f64 {
    if a.abs() < 1e-15 {
        return if b < 0.0 { -c0 / b } else { f64::INFINITY };
    }
    let disc = b * b - 4.0 * a * c0;
    if disc < 0.0 {
        return f64::INFINITY;
    }
    let sq = disc.sqrt();
    let roots = [(-b - sq) / (2.0 * a), (-b + sq) / (2.0 * a)];
    roots
        .into_iter()
        .filter(|&r| r > 0.0)
        .fold(f64::INFINITY, f64::min)
}

fn linear_limit(c0: f64, slope: f64) -> f64 {
    if slope.abs() < 1e-15 {
        f64::INFINITY
    } else {
        c0 / slope.abs()
    }
}

/// Boundary distance of the `eta = 0` slice of the four-parameter region
/// along the unit direction `(u_alpha, u_mu, u_nu)`.
fn ray_limit_four(u: [f64; 3]) -> f64 {
    let [ua, um, un] = u;
    let lin = linear_limit(3.0, 3.0 * um + 3.0 * un - ua);
    let b = -2.0 * ua + 6.0 * (um + un);
    let a = -ua * ua - 6.0 * ua * (um + un) - 9.0 * (um - un).powi(2);
    lin.min(quadratic_limit(3.0, b, a))
}

fn sphere(theta: f64, phi: f64) -> [f64; 3] {
    [theta.cos(), theta.sin() * phi.cos(), theta.sin() * phi.sin()]
}

fn su2_stationary() -> Result<SingletOptimum> {
    // eta only enters through -9 eta^2 in the quadratic inequality, so the
    // maximum over the full region is attained in the eta = 0 slice
    let point = |x: &[f64]| {
        let (ua, um) = (x[0].cos(), x[0].sin());
        let r = x[1] * ray_limit_four([ua, um, um]);
        (r * ua, r * um)
    };
    let f = |x: &[f64]| {
        let (a, m) = point(x);
        -Su2Params::three(a, m, 0.0).singlet_closed_form()
    };
    let bounds = Bounds::new(vec![0.0, 0.0], vec![TAU, 1.0]);
    let m = grid_then_refine(f, &bounds, 64, 6, &optimizer());
    let (alpha, mu) = point(&m.x);
    let params = Su2Params::three(alpha, mu, 0.0);
    let check = params.region_check();
    let spec = params.build()?;
    let marginal = super::su2::singlet_expectation(&spec)?;
    let mut values = named(&[
        ("linear_slack", check.linear_slack),
        ("quadratic_slack", check.quadratic_slack),
        ("choi_min_eigenvalue", check.choi_min_eigenvalue),
        ("marginal_value", marginal),
        ("eta_max", (check.quadratic_slack.max(0.0) / 9.0).sqrt()),
    ]);
    values.insert("closed_form_value".into(), params.singlet_closed_form());
    Ok(SingletOptimum {
        mode: SingletMode::Su2Stationary,
        value: -m.value,
        argmax: named(&[("alpha", alpha), ("mu", mu), ("eta", 0.0)]),
        region_check: RegionSummary {
            feasible: check.inside || (check.linear_slack > -REGION_TOL && check.quadratic_slack > -REGION_TOL),
            values,
        },
        evaluations: m.evaluations,
    })
}

/// `<p>` in the equal-weight average of the two period-2 processes,
/// `1/4 - (alpha_2 mu_1 + alpha_1 nu_2)/8`.
pub fn period2_closed_form(l1: &Su2Params, l2: &Su2Params) -> f64 {
    0.25 - 0.125 * (l2.alpha * l1.mu + l1.alpha * l2.nu)
}

/// `<p>` of the equal-weight average of the two phases of the alternating
/// process. With `swap_first` the first map receives its arguments in
/// exchanged order.
pub fn period2_construction(l1: &Su2Params, l2: &Su2Params, swap_first: bool) -> Result<f64> {
    let m1 = l1.lambda()?;
    let m1 = if swap_first { swap_slots(&m1) } else { m1 };
    let m2 = l2.lambda()?;
    let rho = DensityMatrix::maximally_mixed(2);
    let a = fcs_marginal_with(&[&m1, &m2], &rho)?;
    let b = fcs_marginal_with(&[&m2, &m1], &rho)?;
    Ok(0.5 * (singlet_weight(a.matrix()) + singlet_weight(b.matrix())))
}

fn period2() -> Result<SingletOptimum> {
    let maps = |x: &[f64]| {
        let u1 = sphere(x[0], x[1]);
        let u2 = sphere(x[3], x[4]);
        let (r1, r2) = (x[2] * ray_limit_four(u1), x[5] * ray_limit_four(u2));
        (
            Su2Params::four(r1 * u1[0], r1 * u1[1], r1 * u1[2], 0.0),
            Su2Params::four(r2 * u2[0], r2 * u2[1], r2 * u2[2], 0.0),
        )
    };
    let f = |x: &[f64]| {
        let (a, b) = maps(x);
        -period2_closed_form(&a, &b)
    };
    let bounds = Bounds::new(vec![0.0, 0.0, 0.0, 0.0, 0.0, 0.0], vec![PI, TAU, 1.0, PI, TAU, 1.0]);
    let m = grid_then_refine(f, &bounds, 7, 12, &optimizer());
    let (l1, l2) = maps(&m.x);
    let (c1, c2) = (l1.region_check(), l2.region_check());
    let swapped = period2_construction(&l1, &l2, true)?;
    let standard = period2_construction(&l1, &l2, false)?;
    let feasible = [c1, c2]
        .iter()
        .all(|c| c.linear_slack > -REGION_TOL && c.quadratic_slack > -REGION_TOL);
    Ok(SingletOptimum {
        mode: SingletMode::Period2,
        value: -m.value,
        argmax: named(&[
            ("alpha1", l1.alpha),
            ("mu1", l1.mu),
            ("nu1", l1.nu),
            ("eta1", 0.0),
            ("alpha2", l2.alpha),
            ("mu2", l2.mu),
            ("nu2", l2.nu),
            ("eta2", 0.0),
        ]),
        region_check: RegionSummary {
            feasible,
            values: named(&[
                ("linear_slack1", c1.linear_slack),
                ("quadratic_slack1", c1.quadratic_slack),
                ("choi_min_eigenvalue1", c1.choi_min_eigenvalue),
                ("linear_slack2", c2.linear_slack),
                ("quadratic_slack2", c2.quadratic_slack),
                ("choi_min_eigenvalue2", c2.choi_min_eigenvalue),
                ("construction_value", swapped),
                ("construction_value_unswapped", standard),
            ]),
        },
        evaluations: m.evaluations,
    })
}

/// `(a, b, c)` on the slice `a = b` of the constraint set
/// `2a + 2b + Re c = 1`, `|c|^2 <= 4ab`, with `|c| = 2a r` and `arg c = phi`.
pub fn three_qubit_coefficients(r: f64, phi: f64) -> (f64, f64, crate::linalg::C64) {
    let a = 1.0 / (4.0 + 2.0 * r * phi.cos());
    (a, a, crate::linalg::C64::from_polar(2.0 * a * r, phi))
}

fn three_qubit_su2() -> Result<SingletOptimum> {
    let (p1, p2, _) = three_qubit_operators();
    let state = |x: &[f64]| {
        let (a, b, cc) = three_qubit_coefficients(x[1], x[2]);
        three_qubit_matrix(x[0], a, b, cc)
    };
    let f = |x: &[f64]| {
        let rho = state(x);
        if hermitian_eigenvalues(&rho)[0] < -STATE_PSD_TOL {
            return f64::INFINITY;
        }
        -(&rho * &p1).trace().re
    };
    let bounds = Bounds::new(vec![0.0, 0.0, 0.0], vec![1.0, 1.0, TAU]);
    let m = grid_then_refine(f, &bounds, 13, 6, &optimizer());
    let rho = state(&m.x);
    let (a, b, cc) = three_qubit_coefficients(m.x[1], m.x[2]);
    let psd = psd_check_matrix(&rho, STATE_PSD_TOL);
    let e1 = (&rho * &p1).trace().re;
    let e2 = (&rho * &p2).trace().re;
    let feasible = psd.psd && (2.0 * a + 2.0 * b + cc.re - 1.0).abs() < 1e-12 && cc.norm_sqr() <= 4.0 * a * b + 1e-12;
    Ok(SingletOptimum {
        mode: SingletMode::ThreeQubitSu2,
        value: -m.value,
        argmax: named(&[
            ("lambda", m.x[0]),
            ("a", a),
            ("b", b),
            ("re_c", cc.re),
            ("im_c", cc.im),
        ]),
        region_check: RegionSummary {
            feasible,
            values: named(&[
                ("min_eigenvalue", psd.min_eigenvalue),
                ("trace", rho.trace().re),
                ("p1", e1),
                ("p2", e2),
                ("linear_constraint", 2.0 * a + 2.0 * b + cc.re),
                ("modulus_slack", 4.0 * a * b - cc.norm_sqr()),
            ]),
        },
        evaluations: m.evaluations,
    })
}

pub fn optimize_singlet(mode: SingletMode) -> Result<SingletOptimum> {
    let out = match mode {
        SingletMode::Exchangeable => exchangeable(),
        SingletMode::Separable => separable(),
        SingletMode::Su2Stationary => su2_stationary(),
        SingletMode::Period2 => period2(),
        SingletMode::ThreeQubitSu2 => three_qubit_su2(),
    }?;
    if !out.value.is_finite() || !out.region_check.feasible {
        return Err(Error::Optimization(format!("{mode}: no feasible maximiser found")));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn arg(o: &SingletOptimum, k: &str) -> f64 {
        o.argmax[k]
    }

    #[test]
    fn modes_parse() {
        for m in SingletMode::ALL {
            assert_eq!(m.name().parse::<SingletMode>().unwrap(), m);
        }
        assert!("bethe".parse::<SingletMode>().is_err());
    }

    #[test]
    fn quadratic_limit_cases() {
        assert!((quadratic_limit(3.0, -1.0, 0.0) - 3.0).abs() < 1e-15);
        assert_eq!(quadratic_limit(3.0, 1.0, 0.0), f64::INFINITY);
        // 3 - r^2
        assert!((quadratic_limit(3.0, 0.0, -1.0) - 3f64.sqrt()).abs() < 1e-15);
        // 3 - 4r + r^2 = (r - 1)(r - 3)
        assert!((quadratic_limit(3.0, -4.0, 1.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn exchangeable_optimum() {
        let o = optimize_singlet(SingletMode::Exchangeable).unwrap();
        assert!((o.value - 0.25).abs() < 1e-9);
        assert!(o.region_check.values["bloch_norm"] < 1e-6);
    }

    #[test]
    fn separable_optimum() {
        let o = optimize_singlet(SingletMode::Separable).unwrap();
        assert!((o.value - 0.5).abs() < 1e-9, "{o:?}");
        let v = &o.region_check.values;
        assert!((v["x_dot_y"] + 1.0).abs() < 1e-6);
        assert!((v["product_state_value"] - 0.5).abs() < 1e-9);
    }

    #[test]
    fn su2_stationary_optimum() {
        let o = optimize_singlet(SingletMode::Su2Stationary).unwrap();
        assert!((o.value - 11.0 / 32.0).abs() < 1e-9, "{o:?}");
        assert!((arg(&o, "alpha") + 1.5).abs() < 1e-6);
        assert!((arg(&o, "mu") - 0.25).abs() < 1e-6);
        assert!((o.region_check.values["marginal_value"] - 11.0 / 32.0).abs() < 1e-9);
        assert!(o.region_check.values["eta_max"] > 1.0);
    }

    #[test]
    fn period2_optimum_and_construction() {
        let o = optimize_singlet(SingletMode::Period2).unwrap();
        assert!((o.value - 0.625).abs() < 1e-9, "{o:?}");
        let v = &o.region_check.values;
        assert!((v["construction_value"] - o.value).abs() < 1e-9, "{v:?}");
    }

    #[test]
    fn period2_slot_order() {
        let l1 = Su2Params::four(-0.9, 0.15, 0.4, 0.1);
        let l2 = Su2Params::four(-0.6, 0.3, 0.05, 0.2);
        let closed = period2_closed_form(&l1, &l2);
        assert!((period2_construction(&l1, &l2, true).unwrap() - closed).abs() < 1e-12);
        let standard = period2_construction(&l1, &l2, false).unwrap();
        assert!((standard - (0.25 - 0.125 * (l2.alpha * l1.nu + l1.alpha * l2.nu))).abs() < 1e-12);
        assert!((standard - closed).abs() > 1e-3);
    }

    #[test]
    fn three_qubit_optimum() {
        let o = optimize_singlet(SingletMode::ThreeQubitSu2).unwrap();
        assert!((o.value - 0.75).abs() < 1e-9, "{o:?}");
        let v = &o.region_check.values;
        assert!((v["p1"] - v["p2"]).abs() < 1e-12);
        assert!((arg(&o, "lambda") - 1.0).abs() < 1e-6);
        assert!((arg(&o, "a") - 1.0 / 6.0).abs() < 1e-6);
        assert!((arg(&o, "re_c") - 1.0 / 3.0).abs() < 1e-6);
    }

    #[test]
    fn three_qubit_expectations_closed_form() {
        let (p1, p2, _) = three_qubit_operators();
        for (lam, a, b, cc) in [(0.7, 0.2, 0.1, c(0.4, 0.05)), (0.3, 0.15, 0.25, c(0.2, -0.1))] {
            let rho = three_qubit_matrix(lam, a, b, cc);
            let e1 = (&rho * &p1).trace().re;
            let e2 = (&rho * &p2).trace().re;
            assert!((e1 - lam * (2.0 * a + 0.5 * b + cc.re)).abs() < 1e-12);
            assert!((e2 - lam * (0.5 * a + 2.0 * b + cc.re)).abs() < 1e-12);
        }
    }
}
