use std::path::PathBuf;
use std::process::Command;

use serde_json::Value;

fn data(name: &str) -> String {
    let mut p = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    p.push("tests/data");
    p.push(name);
    p.to_string_lossy().into_owned()
}

/// Runs `qfrac`, returning the exit code and parsed stdout.
fn qfrac(args: &[&str]) -> (i32, Value) {
    let out = Command::new(env!("CARGO_BIN_EXE_qfrac"))
        .args(args)
        .env_remove("QFRAC_SEED")
        .output()
        .expect("binary runs");
    let code = out.status.code().expect("exit code");
    let text = String::from_utf8(out.stdout).expect("utf-8 output");
    let json = if text.trim().is_empty() {
        Value::Null
    } else {
        serde_json::from_str(&text).unwrap_or_else(|e| panic!("invalid JSON ({e}): {text}"))
    };
    (code, json)
}

fn entry(m: &Value, i: usize, j: usize) -> [f64; 4] {
    let q = &m["entries"][i][j];
    [0, 1, 2, 3].map(|k| q[k].as_f64().unwrap())
}

fn assert_diagonal(m: &Value, diag: [f64; 4], tol: f64) {
    let n = m["n"].as_u64().unwrap() as usize;
    for i in 0..n {
        for j in 0..n {
            let want = if i == j { diag } else { [0.0; 4] };
            let got = entry(m, i, j);
            for k in 0..4 {
                assert!((got[k] - want[k]).abs() <= tol, "entry ({i},{j}) = {got:?}");
            }
        }
    }
}

#[test]
fn spectrum_of_the_identity() {
    let (code, out) = qfrac(&["spectrum", &data("identity.json")]);
    assert_eq!(code, 0);
    let spheres = out["spheres"].as_array().unwrap();
    assert_eq!(spheres.len(), 1);
    assert_eq!(spheres[0]["s0"].as_f64(), Some(1.0));
    assert_eq!(spheres[0]["s1"].as_f64(), Some(0.0));
    assert_eq!(spheres[0]["multiplicity"].as_u64(), Some(3));
}

#[test]
fn spectrum_of_imaginary_diagonal() {
    let (code, out) = qfrac(&["spectrum", &data("diag_e1_2e2.json")]);
    assert_eq!(code, 0);
    let mut got: Vec<(f64, f64)> = out["spheres"]
        .as_array()
        .unwrap()
        .iter()
        .map(|s| (s["s0"].as_f64().unwrap(), s["s1"].as_f64().unwrap()))
        .collect();
    got.sort_by(|a, b| a.1.total_cmp(&b.1));
    assert_eq!(got.len(), 2);
    assert!(got[0].0.abs() < 1e-12 && (got[0].1 - 1.0).abs() < 1e-12);
    assert!(got[1].0.abs() < 1e-12 && (got[1].1 - 2.0).abs() < 1e-12);
}

#[test]
fn malformed_and_missing_files_exit_2() {
    let (code, out) = qfrac(&["spectrum", &data("malformed.json")]);
    assert_eq!(code, 2);
    assert_eq!(out["error"]["kind"], "parse");
    let (code, _) = qfrac(&["spectrum", &data("absent.json")]);
    assert_eq!(code, 2);
    let (code, _) = qfrac(&[
        "fracpow",
        &data("identity.json"),
        "--alpha",
        "0.5",
        "--plane",
        "1,1,0",
    ]);
    assert_eq!(code, 2);
    let (code, _) = qfrac(&["fracpow", &data("identity.json")]);
    assert_eq!(code, 2);
}

#[test]
fn identity_to_one_half_is_the_identity() {
    for method in ["ray", "contour", "halfplane", "kato"] {
        let (code, out) = qfrac(&[
            "fracpow",
            &data("identity.json"),
            "--alpha",
            "0.5",
            "--method",
            method,
        ]);
        assert_eq!(code, 0, "{method}: {out}");
        assert_diagonal(&out["matrix"], [1.0, 0.0, 0.0, 0.0], 1e-9);
        assert_eq!(out["report"]["converged"], true);
    }
}

#[test]
fn scalar_four_to_minus_one_half() {
    let (code, out) = qfrac(&["fracpow", &data("diag4.json"), "--alpha", "0.5", "--verify"]);
    assert_eq!(code, 0, "{out}");
    assert_diagonal(&out["matrix"], [0.5, 0.0, 0.0, 0.0], 1e-9);
    assert_eq!(out["verify"]["agree"], true);
}

#[test]
fn methods_agree_on_a_sectorial_matrix() {
    let args = |m: &'static str| {
        vec![
            "fracpow".to_string(),
            data("sectorial.json"),
            "--alpha".into(),
            "0.4".into(),
            "--method".into(),
            m.into(),
        ]
    };
    let runs: Vec<Value> = ["ray", "contour", "halfplane"]
        .iter()
        .map(|m| {
            let a = args(m);
            let (code, out) = qfrac(&a.iter().map(String::as_str).collect::<Vec<_>>());
            assert_eq!(code, 0, "{m}: {out}");
            out
        })
        .collect();
    for other in &runs[1..] {
        for i in 0..2 {
            for j in 0..2 {
                let (a, b) = (
                    entry(&runs[0]["matrix"], i, j),
                    entry(&other["matrix"], i, j),
                );
                for k in 0..4 {
                    assert!((a[k] - b[k]).abs() < 1e-8, "{a:?} vs {b:?}");
                }
            }
        }
    }
    let (code, out) = qfrac(&[
        "fracpow",
        &data("sectorial.json"),
        "--alpha",
        "0.4",
        "--method",
        "contour",
        "--plane",
        "0,0.6,0.8",
        "--side",
        "left",
    ]);
    assert_eq!(code, 0, "{out}");
    assert!(out["window"]["thetaMin"].as_f64().unwrap() < std::f64::consts::PI);
}

#[test]
fn negative_spectrum_is_a_precondition_failure() {
    let (code, out) = qfrac(&["fracpow", &data("negdiag.json"), "--alpha", "0.5"]);
    assert_eq!(code, 3);
    assert_eq!(out["error"]["kind"], "precondition");
    let (code, _) = qfrac(&["verify", &data("negdiag.json"), "--suite", "semigroup"]);
    assert_eq!(code, 3);
    let (code, _) = qfrac(&["convergence", &data("negdiag.json"), "--alpha", "0.5"]);
    assert_eq!(code, 3);
    let (code, _) = qfrac(&["fracpow", &data("identity.json"), "--alpha", "-1"]);
    assert_eq!(code, 3);
}

#[test]
fn verify_passes_on_random_and_identity_input() {
    let (code, out) = qfrac(&[
        "verify",
        "--random",
        "4",
        "--seed",
        "7",
        "--suite",
        "resolvent",
    ]);
    assert_eq!(code, 0, "{out}");
    assert_eq!(out["pass"], true);
    assert_eq!(out["seed"], 7);
    let (code, out) = qfrac(&["verify", &data("identity.json"), "--suite", "all"]);
    assert_eq!(code, 0, "{out}");
    assert_eq!(out["matrices"][0]["suites"].as_array().unwrap().len(), 4);
}

#[test]
fn seed_variable_overrides_the_flag() {
    let run = |env: Option<&str>, seed: &str| {
        let mut c = Command::new(env!("CARGO_BIN_EXE_qfrac"));
        c.args([
            "verify",
            "--random",
            "2",
            "--count",
            "1",
            "--seed",
            seed,
            "--suite",
            "resolvent",
        ]);
        match env {
            Some(v) => c.env("QFRAC_SEED", v),
            None => c.env_remove("QFRAC_SEED"),
        };
        c.output().unwrap().stdout
    };
    assert_eq!(run(Some("11"), "3"), run(None, "11"));
    assert_ne!(run(None, "3"), run(None, "11"));
}

#[test]
fn convergence_drift_decreases() {
    let (code, out) = qfrac(&[
        "convergence",
        &data("diag4.json"),
        "--alpha",
        "0.5",
        "--tols",
        "1e-6,1e-8,1e-10",
    ]);
    assert_eq!(code, 0, "{out}");
    assert_eq!(out["monotone"], true);
    let rows = out["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 3);
    assert!(rows[2]["drift"].as_f64().unwrap() <= 1e-9);
    let (code, out) = qfrac(&["convergence", &data("identity.json"), "--alpha", "0.5"]);
    assert_eq!(code, 0);
    for r in out["rows"].as_array().unwrap() {
        assert!(r["drift"].as_f64().unwrap() <= 1e-12);
    }
}
