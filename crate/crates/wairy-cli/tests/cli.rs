//! End-to-end runs of the binary: exit codes, JSON bodies, determinism,
//! and the config-file merge.

use std::process::Command;

fn wairy(args: &[&str]) -> (String, String, i32) {
    let out = Command::new(env!("CARGO_BIN_EXE_wairy"))
        .args(args)
        .output()
        .expect("binary runs");
    (
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
        out.status.code().unwrap_or(-1),
    )
}

#[test]
fn classify_admissible_and_rejected() {
    let (stdout, _, code) = wairy(&["classify", "--rho", "2", "--n", "2", "--s", "1"]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(v["admissible"], true);
    assert_eq!(v["case"], "b");
    assert_eq!(v["partition"], serde_json::json!([3, 1]));
    assert!(v["version"].is_string());

    let (stdout, _, code) = wairy(&["classify", "--rho", "2", "--n", "2", "--s", "2"]);
    assert_eq!(code, 1, "negative verdicts exit 1 but still emit JSON");
    let v: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(v["admissible"], false);
    assert_eq!(v["reason"], "NonCoprime");
}

#[test]
fn classify_explicit_shifts() {
    // Equal rational shifts make the matrix singular.
    let shifts = r#"[{"N":1,"terms":[{"omega_pow":0,"num":"5","den":"1","c_monomial":[]}]},
                     {"N":1,"terms":[{"omega_pow":0,"num":"5","den":"1","c_monomial":[]}]}]"#;
    let (stdout, _, code) = wairy(&["classify", "--rho", "1", "--n", "2", "--s", "1", "--shifts", shifts]);
    assert_eq!(code, 1);
    let v: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(v["reason"], "SingularShiftMatrix");
}

#[test]
fn enumerate_table() {
    let (stdout, _, code) = wairy(&["enumerate", "--r-max", "4"]);
    assert_eq!(code, 0);
    let rows: Vec<serde_json::Value> = stdout
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(rows.len(), 5);
    assert!(rows.iter().any(|r| r["rho"] == 2 && r["n"] == 2 && r["s"] == 1));
}

#[test]
fn shift_matrix_output() {
    let (stdout, _, code) = wairy(&["shift-matrix", "--rho", "2", "--n", "2", "--s", "1"]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(v["invertible"], true);
    assert_eq!(v["det_text"], "2");
    assert_eq!(v["matrix_text"][0][1], "-1");
}

#[test]
fn curve_output() {
    let (stdout, _, code) = wairy(&["curve", "--rho", "2", "--n", "2", "--s", "1"]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(v["verified"], true);
    assert_eq!(v["polynomial_text"], "(-1) + (4)*x^2*y^4");
    // Inadmissible data is a negative verdict.
    let (_, _, code) = wairy(&["curve", "--rho", "2", "--n", "2", "--s", "2"]);
    assert_eq!(code, 1);
}

#[test]
fn append_verdicts() {
    let (stdout, _, code) = wairy(&["append", "--rho", "1", "--n", "2", "--s", "1", "--m-max", "3"]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(v["accepted"], true);
    assert_eq!(v["lambda_tilde"], serde_json::json!([2, 1]));

    let (stdout, _, code) = wairy(&["append", "--rho", "1", "--n", "2", "--s", "2", "--m-max", "3"]);
    assert_eq!(code, 1);
    let v: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(v["reason"], "NoPartitionExtension");
    assert_eq!(v["required"], 4);
    assert_eq!(v["achievable"], serde_json::json!([3]));
}

#[test]
fn solve_small_pipeline() {
    let (stdout, _, code) = wairy(&[
        "solve", "--rho", "1", "--n", "2", "--s", "1", "--degree", "4",
    ]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(v["residual_clean"], true);
    assert!(v["coefficients"].as_array().unwrap().len() > 0);
    assert!(v["convention"].as_str().unwrap().contains("hbar"));
}

#[test]
fn solve_structure_input() {
    // hbar d/dx - x^2 from a file.
    let dir = std::env::temp_dir().join("wairy-cli-test");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("toy_structure.json");
    let structure = r#"{"max_p_degree":2,"ops":[{"cycle":1,"index":1,"op":{"window":{"W":4,"D":6},
        "terms":[
          {"coeff":{"N":1,"terms":[{"omega_pow":0,"num":"1","den":"1","c_monomial":[]}]},
           "hbar_half":2,"creators":[],"annihilators":[[1,1]]},
          {"coeff":{"N":1,"terms":[{"omega_pow":0,"num":"-1","den":"1","c_monomial":[]}]},
           "hbar_half":0,"creators":[[1,-1],[1,-1]],"annihilators":[]}
        ]}}]}"#;
    std::fs::write(&path, structure).unwrap();
    let (stdout, _, code) = wairy(&["solve", "--input", path.to_str().unwrap(), "--degree", "4"]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(v["residual_clean"], true);
    // F[0, {x1,x1,x1}] = 2.
    let coeffs = v["coefficients"].as_array().unwrap();
    let cubic = coeffs
        .iter()
        .find(|c| c["hbar_half"] == 0 && c["vars"].as_array().unwrap().len() == 3)
        .expect("cubic coefficient present");
    assert_eq!(cubic["value"]["terms"][0]["num"], "2");
}

#[test]
fn verify_suite_runs() {
    let (stdout, _, code) = wairy(&["verify", "vieta"]);
    assert_eq!(code, 0);
    assert!(stdout.contains("suite vieta:"));
    assert!(!stdout.contains("FAIL"));
    // Unknown suites are usage errors.
    let (_, stderr, code) = wairy(&["verify", "nonsense"]);
    assert_eq!(code, 2);
    assert!(stderr.contains("unknown suite"));
}

#[test]
fn usage_errors_exit_2() {
    let (_, _, code) = wairy(&["classify", "--rho", "2"]);
    assert_eq!(code, 2);
    let (_, _, code) = wairy(&["no-such-command"]);
    assert_eq!(code, 2);
}

#[test]
fn byte_determinism() {
    let a = wairy(&["classify", "--rho", "3", "--n", "2", "--s", "2"]);
    let b = wairy(&["classify", "--rho", "3", "--n", "2", "--s", "2"]);
    assert_eq!(a, b);
    let a = wairy(&["curve", "--rho", "3", "--n", "3", "--s", "1"]);
    let b = wairy(&["curve", "--rho", "3", "--n", "3", "--s", "1"]);
    assert_eq!(a.0, b.0);
}

#[test]
fn config_file_merge() {
    let dir = std::env::temp_dir().join("wairy-cli-test");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("spec.conf");
    std::fs::write(&path, "rho = 2\nn = 2\ns = 1\n# comment\n").unwrap();
    let (stdout, _, code) = wairy(&["classify", "--config", path.to_str().unwrap()]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(v["case"], "b");
    // Flags override the file: s = 2 is NonCoprime.
    let (stdout, _, code) = wairy(&[
        "classify", "--config", path.to_str().unwrap(), "--s", "2",
    ]);
    assert_eq!(code, 1);
    let v: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(v["reason"], "NonCoprime");
}

#[test]
fn output_file_and_text_format() {
    let dir = std::env::temp_dir().join("wairy-cli-test");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("verdict.json");
    let (stdout, _, code) = wairy(&[
        "classify", "--rho", "2", "--n", "2", "--s", "1", "--output", path.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    assert!(stdout.is_empty());
    let body = std::fs::read_to_string(&path).unwrap();
    assert!(body.contains("\"admissible\":true"));

    let (stdout, _, code) = wairy(&[
        "classify", "--rho", "2", "--n", "2", "--s", "1", "--format", "text",
    ]);
    assert_eq!(code, 0);
    assert!(stdout.contains("admissible: true"));
}
