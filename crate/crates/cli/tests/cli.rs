use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn qproc(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qproc"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn json_of(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!(
            "stdout is not JSON ({e}): {}\nstderr: {}",
            String::from_utf8_lossy(&out.stdout),
            String::from_utf8_lossy(&out.stderr)
        )
    })
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.display().to_string()
}

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    let mut r = csv::Reader::from_path(path).unwrap();
    r.records().map(|rec| rec.unwrap().iter().map(String::from).collect()).collect()
}

#[test]
fn toeplitz_eigs_writes_sorted_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = qproc(&["toeplitz-eigs", "--n", "100", "--output", "."], dir.path());
    assert!(out.status.success());
    let rows = csv_rows(&dir.path().join("eigenvalues.csv"));
    assert_eq!(rows.len(), 100);
    let vals: Vec<f64> = rows.iter().map(|r| r[2].parse().unwrap()).collect();
    assert!(vals.windows(2).all(|w| w[0] <= w[1]));

    let out = qproc(&["toeplitz-eigs", "--n", "1"], dir.path());
    let rows = csv_rows(&dir.path().join("eigenvalues.csv"));
    assert!(out.status.success());
    assert!((rows[0][2].parse::<f64>().unwrap() - 0.5).abs() < 1e-14);
}

#[test]
fn fcs_su2_modes() {
    let dir = tempfile::tempdir().unwrap();
    let out = qproc(&["fcs-su2", "--mode", "su2_stationary"], dir.path());
    assert!(out.status.success());
    let v = json_of(&out);
    assert!((v["value"].as_f64().unwrap() - 0.34375).abs() < 1e-9);
    assert!((v["argmax"]["alpha"].as_f64().unwrap() + 1.5).abs() < 1e-6);
    assert!(v["region_check"]["feasible"].as_bool().unwrap());

    let out = qproc(&["fcs-su2", "--mode", "period2"], dir.path());
    assert!((json_of(&out)["value"].as_f64().unwrap() - 0.625).abs() < 1e-9);

    let out = qproc(&["fcs-su2", "--mode", "bethe"], dir.path());
    assert_eq!(out.status.code(), Some(2));

    let out = qproc(&["fcs-su2", "--alpha", "-1.5", "--mu", "0.25", "--nmax", "4"], dir.path());
    assert!(out.status.success());
    let v = json_of(&out);
    assert!((v["value"].as_f64().unwrap() - 11.0 / 32.0).abs() < 1e-12);
    assert!(v["entropy_sequence"]["increments_non_increasing"].as_bool().unwrap());

    let out = qproc(&["fcs-su2", "--alpha", "-5", "--mu", "0"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(json_of(&out)["error"].as_str().unwrap().contains("alpha| <= 3"));
}

#[test]
fn markov_entropy_rate() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write(dir.path(), "m.json", r#"{"T": [[0.7, 0.3], [0.1, 0.9]]}"#);
    let out = qproc(&["markov", "--input", &spec, "--nmax", "4"], dir.path());
    assert!(out.status.success());
    let v = json_of(&out);
    let h = v["entropy_rate"].as_f64().unwrap();
    // 0.25 H(0.7, 0.3) + 0.75 H(0.1, 0.9)
    let oracle = 0.25 * -(0.7f64 * 0.7f64.ln() + 0.3 * 0.3f64.ln()) + 0.75 * -(0.1f64 * 0.1f64.ln() + 0.9 * 0.9f64.ln());
    assert!((h - oracle).abs() < 1e-14);
    for inc in v["increments"].as_array().unwrap() {
        assert!((inc.as_f64().unwrap() - oracle).abs() < 1e-12);
    }
    let bad = write(dir.path(), "bad.json", r#"{"T": [[0.7, 0.3], [0.1, 0.9]], "extra": 1}"#);
    assert_eq!(qproc(&["markov", "--input", &bad], dir.path()).status.code(), Some(2));
}

#[test]
fn hmm_entropy_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write(
        dir.path(),
        "h.json",
        r#"{"E": {"0": [[0.7, 0.0], [0.1, 0.0]], "1": [[0.0, 0.3], [0.0, 0.9]]}, "seed": 5}"#,
    );
    let args = ["hmm-entropy", "--input", &spec, "--nmax", "5", "--samples", "20000"];
    let a = qproc(&args, dir.path());
    let b = qproc(&args, dir.path());
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let v = json_of(&a);
    let last = v["increments"].as_array().unwrap().last().unwrap().as_f64().unwrap();
    assert!((last - 0.3965283055573095).abs() < 1e-12);
    let est = &v["blackwell"];
    let err = (est["h"].as_f64().unwrap() - 0.3965283055573095).abs();
    assert!(err < (3.0 * est["std_err"].as_f64().unwrap()).max(5e-3));
}

#[test]
fn davies_check_default_and_failure() {
    let dir = tempfile::tempdir().unwrap();
    let out = qproc(&["davies-check"], dir.path());
    assert!(out.status.success());
    let v = json_of(&out);
    assert!(v["passed"].as_bool().unwrap());
    let m = v["min_output_entropy"].as_f64().unwrap();
    let r = v["min_row_entropy"].as_f64().unwrap();
    assert!((m - r).abs() < 1e-7);
    let bad = write(dir.path(), "d.json", r#"{"T": [[0.5, 0.5], [0.5, 0.5]], "D": [[1, 0.9], [0.9, 1]]}"#);
    let out = qproc(&["davies-check", "--input", &bad], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(!json_of(&out)["passed"].as_bool().unwrap());
}

#[test]
fn fermion_entropy_curve() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write(dir.path(), "f.json", r#"{"A": [[0.5]], "B": [[0.3]], "X": [[[0.1, 0.0]]]}"#);
    let out = qproc(&["fermion-entropy", "--input", &spec, "--nmax", "40", "--output", "curves"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json_of(&out);
    let rows = csv_rows(&dir.path().join("curves/entropy_curve.csv"));
    assert_eq!(rows.len(), 40);
    let target: f64 = rows[0][3].parse().unwrap();
    assert_eq!(target, v["integral"]["value"].as_f64().unwrap());
    let inc: Vec<f64> = rows.iter().map(|r| r[2].parse().unwrap()).collect();
    assert!(inc.windows(2).all(|w| w[1] <= w[0] + 1e-10));
    assert!((inc[39] - target).abs() < 1e-3);
    assert_eq!(qproc(&["fermion-entropy", "--sample", "nope"], dir.path()).status.code(), Some(2));
}

#[test]
fn szego_demo_identity_rows() {
    let dir = tempfile::tempdir().unwrap();
    let out = qproc(&["szego-demo", "--nmax", "16"], dir.path());
    assert!(out.status.success());
    let v = json_of(&out);
    for row in v["identity"].as_array().unwrap() {
        assert!((row["average"].as_f64().unwrap() - 0.5).abs() < 1e-13);
    }
    let sq = v["square"].as_array().unwrap();
    let oracle = 0.25 + 2.0 * (0.01 + 1.0 / 36.0);
    assert!((sq.last().unwrap()["target"].as_f64().unwrap() - oracle).abs() < 1e-12);
}

#[test]
fn figures_have_expected_shape() {
    let dir = tempfile::tempdir().unwrap();
    assert!(qproc(&["figure", "--figure", "1"], dir.path()).status.success());
    assert!(qproc(&["figure", "--figure", "2"], dir.path()).status.success());
    let f1 = csv_rows(&dir.path().join("figure1.csv"));
    assert_eq!(f1.len(), 1024);
    assert_eq!(f1[512][0].parse::<f64>().unwrap(), 0.0);
    assert!((f1[512][1].parse::<f64>().unwrap() - 0.7).abs() < 1e-15);
    let f2 = csv_rows(&dir.path().join("figure2.csv"));
    assert_eq!(f2.len(), 1275 + 100);
    assert_eq!(f2[0][0], "1");
    assert!((f2[0][2].parse::<f64>().unwrap() - 0.5).abs() < 1e-14);
    assert_eq!(qproc(&["figure", "--figure", "3"], dir.path()).status.code(), Some(2));
}

#[test]
fn report_collects_headline_numbers() {
    let dir = tempfile::tempdir().unwrap();
    let a = qproc(&["report", "--output", "a"], dir.path());
    let b = qproc(&["report", "--output", "b"], dir.path());
    assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
    let v = json_of(&a);
    let want = [
        ("exchangeable", 0.25),
        ("separable", 0.5),
        ("su2_stationary", 11.0 / 32.0),
        ("period2", 0.625),
        ("three_qubit_su2", 0.75),
    ];
    for (k, x) in want {
        assert!((v["singlet_optima"][k]["value"].as_f64().unwrap() - x).abs() < 1e-6, "{k}");
    }
    assert!(v["ordering_holds"].as_bool().unwrap());
    assert!((v["werner_ppt_threshold"].as_f64().unwrap() - 0.5).abs() < 1e-9);
    assert!(v["davies_boundary"]["inside"].as_bool().unwrap());
    assert!(!v["davies_boundary"]["outside"].as_bool().unwrap());
    assert!(!v["bethe_bound"]["computed"].as_bool().unwrap());
    for (name, f) in v["fermion_entropy_rate"].as_object().unwrap() {
        let diff = f["increment"].as_f64().unwrap() - f["integral"].as_f64().unwrap();
        assert!(diff.abs() < 1e-3, "{name}");
    }
    assert!(b.status.success());
    for f in ["figure1.csv", "figure2.csv"] {
        let x = std::fs::read(dir.path().join("a").join(f)).unwrap();
        let y = std::fs::read(dir.path().join("b").join(f)).unwrap();
        assert_eq!(x, y, "{f}");
    }
}

#[test]
fn validate_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let ok = write(d, "ok.json", r#"{"T": [[0.7, 0.3], [0.1, 0.9]], "D": [[1, 0.3], [0.3, 1]]}"#);
    let out = qproc(&["validate", "--input", &ok], d);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json_of(&out)["kind"], "davies");

    let asym = write(d, "asym.json", r#"{"T": [[0.7, 0.3], [0.1, 0.9]], "D": [[1, 0.3], [0.2, 1]]}"#);
    let out = qproc(&["validate", "--input", &asym], d);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(json_of(&out)["failures"][0], "D_symmetric");

    let trunc = write(d, "trunc.json", r#"{"T": [[0.7, 0.3], [0.1"#);
    let out = qproc(&["validate", "--input", &trunc], d);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 1"));

    let unknown = write(d, "unknown.json", r#"{"T": [[1.0]], "D": [[1.0]], "Z": 0}"#);
    assert_eq!(qproc(&["validate", "--input", &unknown], d).status.code(), Some(2));

    let fermion = write(d, "f.json", r#"{"A": [[0.5]], "B": [[0.3]], "X": [[0.1]]}"#);
    assert_eq!(qproc(&["validate", "--input", &fermion], d).status.code(), Some(0));
    let fermion_bad = write(d, "fb.json", r#"{"A": [[0.9]], "B": [[0.1]], "X": [[0.0]]}"#);
    let out = qproc(&["validate", "--input", &fermion_bad], d);
    assert_eq!(out.status.code(), Some(1));
    assert!(json_of(&out)["failures"].as_array().unwrap().iter().any(|f| f == "AstarA_below_half"));

    let su2 = write(d, "s.json", r#"{"alpha": -1.5, "mu": 0.25}"#);
    assert_eq!(qproc(&["validate", "--input", &su2], d).status.code(), Some(0));
    let su2_bad = write(d, "sb.json", r#"{"alpha": 0.0, "mu": 0.0, "eta": 1.0}"#);
    let out = qproc(&["validate", "--input", &su2_bad], d);
    assert_eq!(json_of(&out)["failures"][0], "quadratic_inequality");

    let markov = write(d, "m.json", r#"{"T": [[0.7, 0.3], [0.1, 0.9]], "mu": [0.5, 0.5]}"#);
    let out = qproc(&["validate", "--input", &markov], d);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(json_of(&out)["failures"][0], "stationary");

    let hmm = write(d, "h.json", r#"{"E": {"0": [[0.7, 0.0], [0.1, 0.0]], "1": [[0.0, 0.3], [0.0, 0.9]]}}"#);
    assert_eq!(qproc(&["validate", "--input", &hmm], d).status.code(), Some(0));

    assert_eq!(qproc(&["validate"], d).status.code(), Some(2));
    assert_eq!(qproc(&["no-such-command"], d).status.code(), Some(2));
}

#[test]
fn thread_count_does_not_change_output() {
    let dir = tempfile::tempdir().unwrap();
    let run = |threads: &str| {
        Command::new(env!("CARGO_BIN_EXE_qproc"))
            .args(["fcs-su2", "--mode", "three_qubit_su2"])
            .env("QPROC_THREADS", threads)
            .current_dir(dir.path())
            .output()
            .unwrap()
    };
    let one = run("1");
    let four = run("4");
    assert!(one.status.success());
    assert_eq!(one.stdout, four.stdout);
    assert_eq!(run("zero").status.code(), Some(2));
}
