use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::sync::OnceLock;

use serde_json::Value;

fn repo() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn document(name: &str) -> String {
    repo().join("data/documents").join(name).to_string_lossy().into_owned()
}

fn sundman(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sundman"))
        .args(args)
        .env_remove("SUNDMAN_CONFIG")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&o.stdout)))
}

fn schemas() -> &'static Vec<(String, Value)> {
    static SCHEMAS: OnceLock<Vec<(String, Value)>> = OnceLock::new();
    SCHEMAS.get_or_init(|| {
        ["defs", "check", "verify", "demo", "field"]
            .iter()
            .map(|name| {
                let path = repo().join(format!("data/schema/{name}.schema.json"));
                let text = std::fs::read_to_string(&path).unwrap();
                (name.to_string(), serde_json::from_str(&text).unwrap())
            })
            .collect()
    })
}

fn assert_valid(schema: &str, instance: &Value) {
    let all = schemas();
    let mut opts = jsonschema::options();
    for (_, s) in all {
        let id = s["$id"].as_str().unwrap();
        opts.with_resource(id, jsonschema::Resource::from_contents(s.clone()).unwrap());
    }
    let root = &all.iter().find(|(n, _)| n == schema).unwrap().1;
    let validator = opts.build(root).unwrap();
    let errors: Vec<String> = validator.iter_errors(instance).map(|e| format!("{e} at {}", e.instance_path)).collect();
    assert!(errors.is_empty(), "{schema}: {errors:?}");
}

#[test]
fn check_linear_case_with_document_anchor() {
    let o = sundman(&["check", &document("nap.json")]);
    assert_eq!(code(&o), 0);
    let v = json(&o);
    assert_valid("check", &v);
    let piece = &v["pieces"][0];
    assert_eq!(piece["case"], "linear");
    assert_eq!(piece["alpha"], 1.0);
    assert!((piece["C"].as_f64().unwrap() - 0.5).abs() <= 1e-8);
}

#[test]
fn cubic_velocity_term_is_not_quadratic() {
    let o = sundman(&["check", &document("rayleigh.json")]);
    assert_eq!(code(&o), 2);
    let v = json(&o);
    assert_valid("check", &v);
    assert_eq!(v["pieces"][0]["case"], "not_quadratic");
}

#[test]
fn malformed_expression_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(&path, r#"{"gamma": "1/(x", "A": "0", "b": "1", "domain": [1, 2]}"#).unwrap();
    let o = sundman(&["check", path.to_str().unwrap()]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("error"));
    assert_eq!(code(&sundman(&["check", "/nonexistent.json"])), 1);
}

#[test]
fn perturbed_family_member_is_not_linearisable() {
    let o = sundman(&["check", &document("cubic_forcing.json"), "--param", "eps=0.01"]);
    assert_eq!(code(&o), 2);
    let v = json(&o);
    assert_valid("check", &v);
    assert_eq!(v["pieces"][0]["case"], "not_linearisable");
    assert_eq!(code(&sundman(&["check", &document("cubic_forcing.json")])), 0);
}

#[test]
fn linearize_exports_knot_tables_and_check_does_not() {
    let full = json(&sundman(&["linearize", &document("ermakov.json")]));
    let brief = json(&sundman(&["check", &document("ermakov.json")]));
    assert_valid("check", &full);
    assert_valid("check", &brief);
    let h = |v: &Value| v["pieces"][0]["transform"]["h_dtau_per_dt"].clone();
    assert_eq!(h(&full)["kind"], "numeric");
    assert!(h(&full)["knots"].as_array().unwrap().len() > 100);
    assert!(h(&brief).get("knots").is_none());
}

#[test]
fn verify_fixtures_pass() {
    for doc in ["ermakov.json", "sphere.json", "nap.json", "lienard.json"] {
        let o = sundman(&["verify", &document(doc)]);
        let v = json(&o);
        assert_valid("verify", &v);
        assert_eq!(code(&o), 0, "{doc}: {v}");
        assert_eq!(v["verification"]["verdict"], "pass");
    }
}

#[test]
fn injected_h_error_fails_verification() {
    let o = sundman(&["verify", &document("nap.json"), "--inject-h-scale", "1.01"]);
    assert_eq!(code(&o), 2);
    let v = json(&o);
    assert_valid("verify", &v);
    assert!(v["verification"]["max_state_error"].as_f64().unwrap() >= 1e-3);
}

#[test]
fn verify_needs_initial_conditions() {
    let o = sundman(&["verify", &document("cubic_forcing.json")]);
    assert_eq!(code(&o), 1);
    let o = sundman(&["verify", &document("cubic_forcing.json"), "--x0", "1", "--v0", "0", "--t-end", "0.5"]);
    assert_eq!(code(&o), 0);
}

#[test]
fn verify_csv_has_comparison_columns() {
    let o = sundman(&["verify", &document("nap.json"), "--format", "csv", "--samples", "4"]);
    let text = String::from_utf8(o.stdout).unwrap();
    assert_eq!(text.lines().next().unwrap(), "t,x,v,tau,y_mapped,w_mapped,y_closed_form,w_closed_form");
    assert_eq!(text.lines().count(), 5);
}

#[test]
fn demos_pass_and_validate() {
    for name in ["ermakov", "sphere", "nap", "lienard", "kepler", "oscillator-damped"] {
        let o = sundman(&["demo", name]);
        let v = json(&o);
        assert_valid("demo", &v);
        assert_eq!(code(&o), 0, "{name}");
        let csv = sundman(&["demo", name, "--format", "csv"]);
        let header = String::from_utf8(csv.stdout).unwrap().lines().next().unwrap().to_string();
        for col in ["t", "x", "tau", "y_mapped", "y_closed_form"] {
            assert!(header.split(',').any(|c| c == col), "{name}: {header}");
        }
    }
}

#[test]
fn kepler_demo_reports_small_residual() {
    let csv = String::from_utf8(sundman(&["demo", "kepler", "--format", "csv"]).stdout).unwrap();
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let k = header.iter().position(|c| *c == "residual").unwrap();
    for line in lines {
        let r: f64 = line.split(',').nth(k).unwrap().parse().unwrap();
        assert!(r <= 1e-4);
    }
}

#[test]
fn unknown_demo_lists_names() {
    let o = sundman(&["demo", "pendulum"]);
    assert_eq!(code(&o), 1);
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("oscillator-damped") && err.contains("kepler"));
}

#[test]
fn field_verdicts() {
    let v = json(&sundman(&["field", &document("linear_2d.json")]));
    assert_valid("field", &v);
    assert_eq!(v["linear"]["holds"], true);
    let a = &v["linear"]["certificate"]["A"];
    assert!((a[0][0].as_f64().unwrap() + 2.0).abs() < 1e-8 && (a[1][1].as_f64().unwrap() + 3.0).abs() < 1e-8);

    let v = json(&sundman(&["field", &document("kepler_reduced.json")]));
    assert_valid("field", &v);
    assert_eq!(v["inhomogeneous_linear"]["holds"], true);
    let cert = &v["inhomogeneous_linear"]["certificate"];
    assert!((cert["A"][0][0].as_f64().unwrap() + 1.0).abs() < 1e-8);
    assert!(cert["B"][0][0].as_f64().unwrap().abs() < 1e-8);
    assert!((cert["C"][0].as_f64().unwrap() - 1.0).abs() < 1e-8);

    let v = json(&sundman(&["field", &document("velocity_squared.json")]));
    assert_valid("field", &v);
    for key in ["linear", "fibre_linear", "inhomogeneous_linear"] {
        assert_eq!(v[key]["holds"], false, "{key}");
    }
}

#[test]
fn field_time_change_is_verified() {
    for doc in ["oscillator_2d.json", "kepler_radial.json"] {
        let o = sundman(&["field", &document(doc)]);
        let v = json(&o);
        assert_valid("field", &v);
        assert_eq!(code(&o), 0);
        assert_eq!(v["transformed"]["verification"]["verdict"], "pass");
    }
}

#[test]
fn config_file_and_environment() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "output_format = \"csv\"\n").unwrap();
    let o = sundman(&["check", &document("nap.json"), "--config", cfg.to_str().unwrap()]);
    assert!(String::from_utf8(o.stdout).unwrap().starts_with("piece,x,q\n"));

    let o = Command::new(env!("CARGO_BIN_EXE_sundman"))
        .args(["check", &document("nap.json")])
        .env("SUNDMAN_CONFIG", &cfg)
        .output()
        .unwrap();
    assert!(String::from_utf8(o.stdout).unwrap().starts_with("piece,x,q\n"));

    // Flags win over the file.
    let o = sundman(&["check", &document("nap.json"), "--config", cfg.to_str().unwrap(), "--format", "json"]);
    assert_valid("check", &json(&o));

    std::fs::write(&cfg, "q_tol = -1\n").unwrap();
    assert_eq!(code(&sundman(&["check", &document("nap.json"), "--config", cfg.to_str().unwrap()])), 1);
}

#[test]
fn out_flag_writes_file_and_stdin_is_accepted() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("report.json");
    let o = sundman(&["check", &document("nap.json"), "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    assert!(o.stdout.is_empty());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_valid("check", &v);

    use std::io::Write;
    let mut child = Command::new(env!("CARGO_BIN_EXE_sundman"))
        .args(["check", "-", "--base-point", "1"])
        .stdin(std::process::Stdio::piped())
        .stdout(std::process::Stdio::piped())
        .spawn()
        .unwrap();
    let text = std::fs::read_to_string(document("nap.json")).unwrap();
    child.stdin.take().unwrap().write_all(text.as_bytes()).unwrap();
    let o = child.wait_with_output().unwrap();
    assert_eq!(code(&o), 0);
}

#[test]
fn exit_codes_are_deterministic() {
    let a = sundman(&["check", &document("lienard.json"), "--param", "shift=0.05"]);
    let b = sundman(&["check", &document("lienard.json"), "--param", "shift=0.05"]);
    assert_eq!(code(&a), 2);
    assert_eq!((code(&a), &a.stdout), (code(&b), &b.stdout));
}

#[test]
fn help_lists_defaults() {
    let o = sundman(&["--help"]);
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("[default: 1e-9]") && text.contains("[default: 1e-10]"));
}

#[test]
fn schemas_reject_malformed_reports() {
    let mut v = json(&sundman(&["check", &document("nap.json")]));
    v["pieces"][0]["case"] = "bogus".into();
    let result = std::panic::catch_unwind(|| assert_valid("check", &v));
    assert!(result.is_err(), "shared definitions must be resolved and enforced");
    let mut v = json(&sundman(&["field", &document("linear_2d.json")]));
    v["linear"]["certificate"]["A"] = "not a matrix".into();
    assert!(std::panic::catch_unwind(|| assert_valid("field", &v)).is_err());
}
