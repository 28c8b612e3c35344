use std::path::Path;
use std::process::{Command, Output};

use approx::assert_relative_eq;
use serde_json::Value;

fn formlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_formlab")).args(args).output().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

fn record(output: &Output) -> Value {
    serde_json::from_slice(&output.stdout).expect("run record on stdout")
}

const HARDY: &str = r#"
name = "hardy"
example = "hardy(n=3, c=0.16)"
operations = ["formbound"]
mesh = { start = 1e-12, end = 1e12, elements = 4000 }

[[expect]]
operation = "formbound"
quantity = "lambda"
value = 0.64
relative = 0.02
"#;

#[test]
fn hardy_run_meets_its_expectation() {
    let dir = tempfile::tempdir().unwrap();
    let out = formlab(&["run", &write(dir.path(), "hardy.toml", HARDY)]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let rec = record(&out);
    let op = &rec["operations"][0];
    assert_eq!(op["verdict"], "pass");
    let lambda = op["payload"]["lambda"].as_f64().unwrap();
    assert!(lambda <= 0.64 && lambda > 0.62, "{lambda}");
}

#[test]
fn failed_expectation_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let text = HARDY.replace("value = 0.64", "value = 0.5");
    let out = formlab(&["run", &write(dir.path(), "hardy.toml", &text)]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(record(&out)["operations"][0]["verdict"], "fail");
}

#[test]
fn gauge_center_value_from_json_config() {
    let dir = tempfile::tempdir().unwrap();
    let config = r#"{"name": "gauge", "example": "constant(q=2.4674011002723395)", "operations": ["gauge"]}"#;
    let out = formlab(&["--out", &dir.path().to_string_lossy(), "run", &write(dir.path(), "g.json", config)]);
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(dir.path().join("gauge.json")).unwrap();
    let rec: Value = serde_json::from_str(&text).unwrap();
    assert_relative_eq!(rec["operations"][0]["payload"]["u_half"].as_f64().unwrap(), 2f64.sqrt(), epsilon = 1e-5);
}

#[test]
fn config_and_io_errors_have_distinct_codes() {
    let dir = tempfile::tempdir().unwrap();
    let empty = write(dir.path(), "empty.toml", "name = \"x\"\nexample = \"constant\"\noperations = []\n");
    assert_eq!(formlab(&["run", &empty]).status.code(), Some(2));
    let unknown = write(dir.path(), "unknown.toml", "name = \"x\"\nexample = \"constant\"\noperations = [\"gauge\"]\ncolour = 1\n");
    assert_eq!(formlab(&["run", &unknown]).status.code(), Some(2));
    let missing = dir.path().join("nope.toml");
    let out = formlab(&["run", &missing.to_string_lossy()]);
    assert_eq!(out.status.code(), Some(3));
    assert!(!out.stderr.is_empty());
}

#[test]
fn supercritical_gauge_is_an_operation_failure() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(dir.path(), "s.toml", "name = \"s\"\nexample = \"constant(q=20)\"\noperations = [\"gauge\"]\n");
    let out = formlab(&["run", &config]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(record(&out)["operations"][0]["verdict"], "fail");
}

#[test]
fn catalog_lists_examples() {
    let out = formlab(&["catalog"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("hardy"));
    assert!(text.contains("alpha+"));
    assert!(text.contains("radial_oscillating"));
}

fn study(dir: &Path, config: &str, refinements: &str) -> Vec<csv::StringRecord> {
    let path = write(dir, "study.toml", config);
    let out = formlab(&["study", &path, "--refinements", refinements]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let mut reader = csv::Reader::from_reader(out.stdout.as_slice());
    assert_eq!(
        reader.headers().unwrap(),
        vec!["level", "elements", "h", "value", "difference", "order"]
    );
    reader.records().map(Result::unwrap).collect()
}

#[test]
fn study_of_constant_form_bound_is_second_order() {
    let dir = tempfile::tempdir().unwrap();
    let rows = study(
        dir.path(),
        "name = \"q\"\nexample = \"constant(q=1)\"\noperations = [\"formbound\"]\ntrack = \"formbound.lambda\"\nmesh = { elements = 50 }\n",
        "4",
    );
    assert_eq!(rows.len(), 4);
    let order: f64 = rows[3][5].parse().unwrap();
    assert!((order - 2.0).abs() < 0.05, "{order}");
}

#[test]
fn study_of_zero_gauge_is_exact() {
    let dir = tempfile::tempdir().unwrap();
    let rows = study(
        dir.path(),
        "name = \"z\"\nexample = \"constant(q=0)\"\noperations = [\"gauge\"]\nmesh = { elements = 20 }\n",
        "3",
    );
    assert_eq!(&rows[2][5], "exact");
    assert_eq!(rows[2][3].parse::<f64>().unwrap(), 1.0);
}

#[test]
fn hardy_riccati_residual_shrinks_under_refinement() {
    let dir = tempfile::tempdir().unwrap();
    let rows = study(
        dir.path(),
        "name = \"r\"\nexample = \"hardy(n=3, c=0.1875)\"\noperations = [\"solve\", \"riccati\"]\ntrack = \"riccati.relative_residual\"\nmesh = { elements = 200 }\n",
        "3",
    );
    let values: Vec<f64> = rows.iter().map(|r| r[3].parse().unwrap()).collect();
    assert!(values.windows(2).all(|w| w[1] <= w[0]), "{values:?}");
}

#[test]
fn runs_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(dir.path(), "hardy.toml", HARDY);
    let strip = |v: Value| {
        let mut v = v;
        for op in v["operations"].as_array_mut().unwrap() {
            op.as_object_mut().unwrap().remove("seconds");
        }
        v
    };
    let a = strip(record(&formlab(&["run", &config])));
    let b = strip(record(&formlab(&["run", &config])));
    assert_eq!(a, b);
}
