use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use qproc::channels::davies::DaviesSpecJson;
use qproc::classical::{stationarity_residual, MarkovSpecJson, StochasticMatrix};
use qproc::fcs::su2::Su2Params;
use qproc::fermion::{extension_check, free_cp_validate, invariant_symbol, spectral_radius, FermionSpecJson};
use qproc::hmm::HmmSpecJson;

use crate::{parse_json, read_input, CliError, CliResult, Common};

#[derive(Debug, Clone, Serialize)]
struct Check {
    name: &'static str,
    passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    value: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    detail: Option<String>,
}

fn check(name: &'static str, passed: bool, value: f64) -> Check {
    Check {
        name,
        passed,
        value: Some(value),
        detail: None,
    }
}

fn failed(name: &'static str, err: impl std::fmt::Display) -> Check {
    Check {
        name,
        passed: false,
        value: None,
        detail: Some(err.to_string()),
    }
}

/// SU(2) parameter file `{"alpha", "mu", "nu"?, "eta"?}`.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct Su2Json {
    alpha: f64,
    mu: f64,
    #[serde(default)]
    nu: Option<f64>,
    #[serde(default)]
    eta: f64,
}

fn markov_checks(spec: &MarkovSpecJson, tol: f64) -> Vec<Check> {
    let t = match StochasticMatrix::new(spec.t.clone()) {
        Ok(t) => t,
        Err(e) => return vec![failed("row_stochastic", e)],
    };
    let mut out = vec![check("row_stochastic", true, 0.0)];
    match &spec.mu {
        Some(mu) => match qproc::ProbVector::new(mu.clone()) {
            Ok(p) => {
                let r = stationarity_residual(&t, p.as_slice());
                out.push(check("stationary", r <= tol, r));
            }
            Err(e) => out.push(failed("mu_distribution", e)),
        },
        None => out.push(match qproc::classical::invariant_measure(&t, false) {
            Ok(_) => check("unique_invariant_measure", true, 0.0),
            Err(e) => failed("unique_invariant_measure", e),
        }),
    }
    out
}

fn davies_checks(spec: &DaviesSpecJson, tol: f64) -> Vec<Check> {
    let symmetric = spec.d.nrows() == spec.d.ncols() && (&spec.d - spec.d.transpose()).abs().max() <= 1e-12;
    if !symmetric {
        return vec![failed("D_symmetric", "damping matrix D is not symmetric")];
    }
    match spec.validate() {
        Ok(r) => vec![
            check("D_symmetric", true, 0.0),
            check("detailed_balance", r.detailed_balance_residual <= tol, r.detailed_balance_residual),
            check("triangle_condition", r.triangle_residual <= tol, r.triangle_residual),
            check("mixed_matrix_psd", r.mixed_psd, r.mixed_min_eigenvalue),
            check("choi_psd", r.choi_psd, r.choi_min_eigenvalue),
            check("cp_tests_agree", r.cp_tests_agree, 0.0),
        ],
        Err(e) => vec![failed("construction", e)],
    }
}

fn hmm_checks(spec: &HmmSpecJson) -> Vec<Check> {
    match spec.build() {
        Ok(h) => vec![
            check("emissions_stochastic", true, 0.0),
            check("stationary_hidden_law", true, h.hidden_dim() as f64),
        ],
        Err(e) => vec![failed("hmm_spec", e)],
    }
}

fn fermion_checks(spec: &FermionSpecJson) -> Vec<Check> {
    let mut out = Vec::new();
    match free_cp_validate(&spec.a, &spec.b) {
        Ok(r) => {
            out.push(check("B_psd", r.b_hermitian && r.b_min_eigenvalue >= -1e-10, r.b_min_eigenvalue));
            out.push(check("B_below_1_minus_AstarA", r.slack_min_eigenvalue >= -1e-10, r.slack_min_eigenvalue));
        }
        Err(e) => return vec![failed("shapes", e)],
    }
    match extension_check(&spec.a, &spec.b, &spec.x) {
        Ok(r) => {
            out.push(check("AstarA_below_half", r.half_slack >= -1e-10, r.half_slack));
            out.push(check("AstarA_below_1_minus_B", r.b_slack >= -1e-10, r.b_slack));
            out.push(check("D_psd", r.d_min_eigenvalue >= -1e-10, r.d_min_eigenvalue));
            out.push(check("D_below_1_minus_CstarC", r.cd_slack >= -1e-10, r.cd_slack));
        }
        Err(e) => out.push(failed("extension", e)),
    }
    match spectral_radius(&spec.a) {
        Ok(r) => out.push(check("spectral_radius_below_1", r < 1.0, r)),
        Err(e) => out.push(failed("spectral_radius_below_1", e)),
    }
    if out.iter().all(|c| c.passed) {
        out.push(match invariant_symbol(&spec.a, &spec.b) {
            Ok(_) => check("invariant_symbol", true, 0.0),
            Err(e) => failed("invariant_symbol", e),
        });
    }
    out
}

fn su2_checks(spec: &Su2Json) -> Vec<Check> {
    let p = match spec.nu {
        Some(nu) => Su2Params::four(spec.alpha, spec.mu, nu, spec.eta),
        None => Su2Params::three(spec.alpha, spec.mu, spec.eta),
    };
    let r = p.region_check();
    let mut out = vec![
        check("linear_inequality", r.linear_slack >= -1e-9, r.linear_slack),
        check("quadratic_inequality", r.quadratic_slack >= -1e-9, r.quadratic_slack),
        check("choi_psd", r.choi_psd, r.choi_min_eigenvalue),
    ];
    if p.mu == p.nu && out.iter().all(|c| c.passed) {
        out.push(match p.build() {
            Ok(s) => {
                let rep = s.report();
                check("compatibility", rep.passes(), rep.compatibility_residual)
            }
            Err(e) => failed("compatibility", e),
        });
    }
    out
}

fn kind_of(v: &Value) -> Option<&'static str> {
    let obj = v.as_object()?;
    let has = |k: &str| obj.contains_key(k);
    if has("A") {
        Some("fermion")
    } else if has("E") {
        Some("hmm")
    } else if has("T") && has("D") {
        Some("davies")
    } else if has("T") {
        Some("markov")
    } else if has("alpha") {
        Some("su2")
    } else {
        None
    }
}

pub fn validate(common: &Common) -> CliResult<Value> {
    let path = common
        .input
        .as_deref()
        .ok_or_else(|| CliError::Usage("validate needs --input".into()))?;
    let text = read_input(path)?;
    let raw: Value = parse_json(&text, path)?;
    let kind = kind_of(&raw).ok_or_else(|| {
        CliError::Usage(format!(
            "{}: cannot tell the spec kind (expected keys A/B/X, E, T/D, T or alpha/mu)",
            path.display()
        ))
    })?;
    let checks = match kind {
        "markov" => markov_checks(&parse_json(&text, path)?, common.tol),
        "davies" => davies_checks(&parse_json(&text, path)?, common.tol),
        "hmm" => hmm_checks(&parse_json(&text, path)?),
        "fermion" => fermion_checks(&parse_json(&text, path)?),
        _ => su2_checks(&parse_json(&text, path)?),
    };
    let failures: Vec<&str> = checks.iter().filter(|c| !c.passed).map(|c| c.name).collect();
    let passed = failures.is_empty();
    let out = json!({
        "kind": kind,
        "passed": passed,
        "checks": checks,
        "failures": failures,
    });
    if passed {
        Ok(out)
    } else {
        Err(CliError::Failed(out))
    }
}
