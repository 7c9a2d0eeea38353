use std::f64::consts::LN_2;

use serde_json::{json, Value};

use qproc::channels::davies::{
    davies_build, davies_process_condition, min_output_entropy_search, min_row_entropy, qubit_davies, DaviesSpecJson,
    MinOutputOptions,
};
use qproc::classical::{block_entropies, entropy_rate_classical, MarkovSpecJson, StochasticMatrix};
use qproc::fcs::optimize::{optimize_singlet, SingletMode};
use qproc::fcs::su2::{werner_ppt_threshold, Su2Params};
use qproc::fcs::{fcs_entropy_sequence, su2::singlet_expectation};
use qproc::fermion::toeplitz::{
    entropy_rate_integral, figure1_rows, figure2_rows, szego_check, ToeplitzSymbolFn,
};
use qproc::fermion::{binary_entropy, entropy_curve, entropy_rate_truncation, sample_specs, FermionProcessSpec, FermionSpecJson};
use qproc::hmm::{blackwell_entropy, hmm_entropy_increments, hmm_from_extension, BlackwellOptions, HmmSpecJson};

use crate::{load, out_file, CliError, CliResult, Common};

fn to_value<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("serialisable")
}

fn sample_chain() -> StochasticMatrix {
    StochasticMatrix::from_rows(&[&[0.7, 0.3], &[0.1, 0.9]]).expect("sample chain")
}

pub fn markov(common: &Common, nmax: usize) -> CliResult<Value> {
    let (t, mu) = match &common.input {
        Some(p) => load::<MarkovSpecJson>(p)?.build(false)?,
        None => {
            let t = sample_chain();
            let mu = qproc::classical::invariant_measure(&t, false)?;
            (t, mu)
        }
    };
    let rate = entropy_rate_classical(&t, &mu)?;
    let h = block_entropies(&t, &mu, nmax)?;
    let increments: Vec<f64> = h.windows(2).map(|w| w[1] - w[0]).collect();
    Ok(json!({
        "T": qproc::json::real_matrix_to_rows(t.matrix()),
        "mu": mu.as_slice(),
        "entropy_rate": rate.h,
        "min_row_entropy": rate.h_min,
        "block_entropies": h,
        "increments": increments,
    }))
}

pub fn hmm_entropy(common: &Common, nmax: usize, samples: usize) -> CliResult<Value> {
    let (spec, seed) = match &common.input {
        Some(p) => {
            let j: HmmSpecJson = load(p)?;
            let seed = if common.seed != 0 { common.seed } else { j.seed };
            (j.build()?, seed)
        }
        None => {
            let s = nalgebra::DMatrix::from_row_slice(2, 4, &[0.3, 0.2, 0.2, 0.3, 0.05, 0.15, 0.15, 0.65]);
            (hmm_from_extension(&s)?, common.seed)
        }
    };
    let increments = hmm_entropy_increments(&spec, nmax)?;
    let est = blackwell_entropy(
        &spec,
        &BlackwellOptions {
            samples,
            seed,
            ..BlackwellOptions::default()
        },
    )?;
    Ok(json!({
        "hidden_dim": spec.hidden_dim(),
        "obs_dim": spec.obs_dim(),
        "seed": seed,
        "increments": increments,
        "blackwell": to_value(&est),
        "upper_bounds": {
            "log_obs_dim": (spec.obs_dim() as f64).ln(),
            "joint_chain_rate": spec.joint_chain_entropy_rate(),
        },
    }))
}

pub fn davies_check(common: &Common) -> CliResult<Value> {
    let spec = match &common.input {
        Some(p) => load::<DaviesSpecJson>(p)?,
        None => {
            let (t, d) = qubit_davies(0.3, 0.1, 0.5)?;
            DaviesSpecJson {
                t: t.matrix().clone(),
                d,
                mu: None,
            }
        }
    };
    let report = spec.validate()?;
    let passed = report.passes(common.tol);
    let mut out = json!({
        "passed": passed,
        "report": to_value(&report),
    });
    if passed {
        let t = StochasticMatrix::new(spec.t.clone())?;
        let state_channel = davies_build(&t, &spec.d)?.adjoint();
        let min_out = min_output_entropy_search(
            &state_channel,
            &MinOutputOptions {
                seed: common.seed,
                ..MinOutputOptions::default()
            },
        )?;
        out["min_output_entropy"] = json!(min_out.value);
        out["min_row_entropy"] = json!(min_row_entropy(&t));
        if t.dim() == 2 {
            let (a, b, d) = (t.get(0, 1), t.get(1, 0), spec.d[(0, 1)]);
            out["generates_process"] = json!(davies_process_condition(a.max(b), a.min(b), d)?);
        }
        Ok(out)
    } else {
        Err(CliError::Failed(out))
    }
}

#[allow(clippy::too_many_arguments)]
pub fn fcs_su2(
    _common: &Common,
    mode: Option<&str>,
    alpha: Option<f64>,
    mu: Option<f64>,
    nu: Option<f64>,
    eta: f64,
    nmax: usize,
) -> CliResult<Value> {
    if let Some(mode) = mode {
        if mode == "all" {
            let mut all = serde_json::Map::new();
            for m in SingletMode::ALL {
                all.insert(m.name().into(), to_value(&optimize_singlet(m)?));
            }
            return Ok(Value::Object(all));
        }
        let m: SingletMode = mode.parse().map_err(|e: qproc::Error| CliError::Usage(e.to_string()))?;
        return Ok(to_value(&optimize_singlet(m)?));
    }
    let (Some(alpha), Some(mu)) = (alpha, mu) else {
        return Err(CliError::Usage("fcs-su2 needs --mode or both --alpha and --mu".into()));
    };
    let params = match nu {
        Some(nu) => Su2Params::four(alpha, mu, nu, eta),
        None => Su2Params::three(alpha, mu, eta),
    };
    let check = params.region_check();
    let mut out = json!({
        "params": to_value(&params),
        "region_check": to_value(&check),
        "closed_form_value": params.singlet_closed_form(),
    });
    if let Err(e) = params.lambda() {
        out["error"] = json!(e.to_string());
        return Err(CliError::Failed(out));
    }
    if params.mu == params.nu {
        let spec = params.build()?;
        out["value"] = json!(singlet_expectation(&spec)?);
        out["entropy_sequence"] = to_value(&fcs_entropy_sequence(&spec, nmax)?);
    }
    Ok(out)
}

fn fermion_spec(common: &Common, sample: &str) -> CliResult<(String, FermionProcessSpec)> {
    match &common.input {
        Some(p) => Ok(("input".into(), load::<FermionSpecJson>(p)?.build()?)),
        None => sample_specs()
            .into_iter()
            .find(|(name, _)| *name == sample)
            .map(|(name, s)| (name.to_string(), s))
            .ok_or_else(|| CliError::Usage(format!("unknown sample '{sample}' (scalar, normal, non_normal)"))),
    }
}

pub fn fermion_entropy(common: &Common, nmax: usize, sample: &str) -> CliResult<Value> {
    if nmax == 0 {
        return Err(CliError::Usage("--nmax must be positive".into()));
    }
    let (name, spec) = fermion_spec(common, sample)?;
    let integral = entropy_rate_integral(&spec, None)?;
    let curve = entropy_curve(&spec, nmax)?;
    let path = out_file(common, "entropy_curve.csv")?;
    let mut w = csv::Writer::from_path(&path)?;
    w.write_record(["n", "H_n", "increment", "integral_target"])?;
    for p in &curve {
        w.write_record(&[
            p.n.to_string(),
            p.h_n.to_string(),
            p.increment.to_string(),
            integral.value.to_string(),
        ])?;
    }
    w.flush()?;
    let last = curve.last().expect("nmax > 0");
    Ok(json!({
        "spec": name,
        "integral": to_value(&integral),
        "last": to_value(last),
        "increment_error": (last.increment - integral.value).abs(),
        "average_error": (last.average - integral.value).abs(),
        "csv": path.display().to_string(),
    }))
}

fn szego_n_list(nmax: usize) -> Vec<usize> {
    let mut v: Vec<usize> = std::iter::successors(Some(1usize), |n| Some(n * 2)).take_while(|&n| n < nmax).collect();
    v.push(nmax.max(1));
    v
}

pub fn szego_demo(_common: &Common, nmax: usize) -> CliResult<Value> {
    let ns = szego_n_list(nmax);
    let fig = ToeplitzSymbolFn::figure1();
    let (_, scalar) = sample_specs().into_iter().next().expect("samples");
    let proc_fn = ToeplitzSymbolFn::process(&scalar);
    Ok(json!({
        "n": ns,
        "identity": to_value(&szego_check(&fig, |x| x, &ns)?),
        "square": to_value(&szego_check(&fig, |x| x * x, &ns)?),
        "binary_entropy_scalar_process": to_value(&szego_check(&proc_fn, binary_entropy, &ns)?),
    }))
}

pub fn write_eigenvalues(path: &std::path::Path, rows: &[(usize, usize, f64)]) -> CliResult<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["n", "index", "value"])?;
    for (n, i, v) in rows {
        w.write_record(&[n.to_string(), i.to_string(), v.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn toeplitz_eigs(common: &Common, n: usize) -> CliResult<Value> {
    if n == 0 {
        return Err(CliError::Usage("--n must be positive".into()));
    }
    let eigs = toeplitz_eigs_fig(n)?;
    let rows: Vec<(usize, usize, f64)> = eigs.iter().enumerate().map(|(i, &v)| (n, i, v)).collect();
    let path = out_file(common, "eigenvalues.csv")?;
    write_eigenvalues(&path, &rows)?;
    Ok(json!({
        "n": n,
        "min": eigs[0],
        "max": eigs[n - 1],
        "csv": path.display().to_string(),
    }))
}

fn toeplitz_eigs_fig(n: usize) -> CliResult<Vec<f64>> {
    Ok(qproc::fermion::toeplitz::toeplitz_eigs(&ToeplitzSymbolFn::figure1(), n)?)
}

fn write_figure1(common: &Common) -> CliResult<std::path::PathBuf> {
    let path = out_file(common, "figure1.csv")?;
    let mut w = csv::Writer::from_path(&path)?;
    w.write_record(["theta", "T"])?;
    for (t, v) in figure1_rows(1024) {
        w.write_record(&[t.to_string(), v.to_string()])?;
    }
    w.flush()?;
    Ok(path)
}

fn write_figure2(common: &Common) -> CliResult<std::path::PathBuf> {
    let path = out_file(common, "figure2.csv")?;
    write_eigenvalues(&path, &figure2_rows(&ToeplitzSymbolFn::figure1())?)?;
    Ok(path)
}

pub fn figure(common: &Common, which: u8) -> CliResult<Value> {
    let path = if which == 1 { write_figure1(common)? } else { write_figure2(common)? };
    Ok(json!({ "figure": which, "csv": path.display().to_string() }))
}

pub fn report(common: &Common, n: usize) -> CliResult<Value> {
    let mut optima = serde_json::Map::new();
    for m in SingletMode::ALL {
        let o = optimize_singlet(m)?;
        optima.insert(m.name().into(), json!({ "value": o.value, "argmax": o.argmax }));
    }
    let value = |k: &str| optima[k]["value"].as_f64().expect("number");
    let ordered = value("exchangeable") < value("su2_stationary")
        && value("su2_stationary") < value("separable")
        && value("separable") < value("period2")
        && value("period2") < LN_2;

    // qubit Davies maps with a = b = 0.3: boundary d^2 = (1 - a)(1 - b)/2
    let (a, b) = (0.3f64, 0.3f64);
    let d_star = (0.5 * (1.0 - a) * (1.0 - b)).sqrt();
    let davies = json!({
        "a": a,
        "b": b,
        "boundary_d": d_star,
        "inside": davies_process_condition(a, b, d_star - 1e-6)?,
        "outside": davies_process_condition(a, b, d_star + 1e-6)?,
    });

    let mut fermion = serde_json::Map::new();
    for (name, spec) in sample_specs() {
        let integral = entropy_rate_integral(&spec, None)?;
        let p = entropy_rate_truncation(&spec, n)?;
        fermion.insert(
            name.into(),
            json!({
                "integral": integral.value,
                "n": n,
                "increment": p.increment,
                "average": p.average,
            }),
        );
    }

    let f1 = write_figure1(common)?;
    let f2 = write_figure2(common)?;
    let out = json!({
        "singlet_optima": Value::Object(optima),
        "ordering_holds": ordered,
        "werner_ppt_threshold": werner_ppt_threshold(1e-12)?,
        "davies_boundary": davies,
        "fermion_entropy_rate": Value::Object(fermion),
        "bethe_bound": {
            "value": LN_2,
            "expression": "log 2",
            "computed": false,
            "note": "cited constant for the antiferromagnetic ground state; not computed here",
        },
        "figures": [f1.display().to_string(), f2.display().to_string()],
    });
    let path = out_file(common, "report.json")?;
    std::fs::write(&path, serde_json::to_string_pretty(&out).expect("serialisable"))?;
    Ok(out)
}
