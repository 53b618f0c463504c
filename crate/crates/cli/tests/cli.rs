use std::path::Path;
use std::process::Command;
use willmore::config::{Overrides, RunConfig};
use willmore::report::{emit_report, Cell, Format, Table};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_willmore"))
}

fn run_in(dir: &Path, args: &[&str]) -> (i32, String) {
    let out = bin().args(args).arg("--out").arg(dir).output().unwrap();
    (out.status.code().unwrap(), String::from_utf8_lossy(&out.stdout).into_owned() + &String::from_utf8_lossy(&out.stderr))
}

#[test]
fn empty_table_is_header_only() {
    let t = Table::new(&["a", "b"]);
    assert_eq!(emit_report(&t, Format::Csv).unwrap(), b"a,b\n");
}

#[test]
fn json_round_trip_and_stable_bytes() {
    let mut t = Table::new(&["name", "x", "n", "ok"]);
    t.push(vec!["leaf".into(), 0.1f64.into(), 3usize.into(), true.into()]);
    t.push(vec!["nan".into(), f64::NAN.into(), 0usize.into(), false.into()]);
    t.push(vec!["tiny".into(), 1.0000000000000002e-300f64.into(), 7usize.into(), true.into()]);
    let bytes = emit_report(&t, Format::Json).unwrap();
    let back: Table = serde_json::from_slice(&bytes).unwrap();
    assert_eq!(back, t);
    assert_eq!(back.schema_version, willmore::report::SCHEMA_VERSION);
    assert_eq!(emit_report(&t, Format::Json).unwrap(), bytes);
    let csv = String::from_utf8(emit_report(&t, Format::Csv).unwrap()).unwrap();
    assert_eq!(csv.lines().nth(1).unwrap(), "leaf,1.0000000000000001e-1,3,true");
    assert_eq!(csv.lines().nth(2).unwrap(), "nan,NaN,0,false");
    // 17 significant digits reproduce the value
    let x: f64 = csv.lines().nth(3).unwrap().split(',').nth(1).unwrap().parse().unwrap();
    assert_eq!(x, 1.0000000000000002e-300);
}

#[test]
fn leaf_column_count_is_fixed() {
    assert_eq!(willmore::commands::leaf_columns().len(), 36);
}

#[test]
fn config_errors_name_the_key() {
    let e = toml::from_str::<RunConfig>("[numerics]\nbogus = 1\n").unwrap_err().to_string();
    assert!(e.contains("bogus"), "{e}");
    let mut c: RunConfig = toml::from_str("command = \"solve\"\n[numerics]\nL = 4\n").unwrap();
    assert!(c.validate().unwrap_err().to_string().contains("numerics.L"));
    c.numerics.bandlimit = 8;
    c.validate().unwrap();
    c.sweep.rs.clear();
    assert!(c.validate().unwrap_err().to_string().contains("sweep"));
}

#[test]
fn flags_override_the_file() {
    let mut c: RunConfig = toml::from_str("command = \"solve\"\nseed = 4\n[metric]\nm = 2.0\n[sweep]\nlambdas = [1e-3]\n").unwrap();
    c.apply(&Overrides { m: Some(1.5), r: Some(vec![12.0, 9.0]), seed: Some(9), ..Default::default() });
    assert_eq!(c.metric.m, 1.5);
    assert_eq!(c.seed, 9);
    assert!(c.sweep.lambdas.is_empty());
    let l = c.lambdas();
    assert_eq!(l.len(), 2);
    assert!(l[0] > l[1]);
}

#[test]
fn ladder_from_range() {
    let c: RunConfig = toml::from_str("command = \"foliate\"\n[sweep]\nrs = [8.0, 32.0]\nn_leaves = 9\n").unwrap();
    c.validate().unwrap();
    let l = c.lambdas();
    assert_eq!(l.len(), 9);
    let r: Vec<f64> = l.iter().map(|&x| willmore_core::oracle::r_of_lambda(1.0, x).unwrap()).collect();
    assert!((r[0] - 8.0).abs() < 1e-9 && (r[8] - 32.0).abs() < 1e-9);
}

#[test]
fn schwarzschild_exact_single_row() {
    let d = tempfile::tempdir().unwrap();
    let (code, text) = run_in(d.path(), &["schwarzschild-exact", "--m", "1", "--r", "10", "--L", "16"]);
    assert_eq!(code, 0, "{text}");
    let mut rd = csv::Reader::from_path(d.path().join("leaves.csv")).unwrap();
    let headers = rd.headers().unwrap().clone();
    let rows: Vec<csv::StringRecord> = rd.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 1);
    let h = headers.iter().position(|c| c == "hawking").unwrap();
    let v: f64 = rows[0][h].parse().unwrap();
    assert!((v - 1.0).abs() < 1e-7);
    let run: serde_json::Value = serde_json::from_slice(&std::fs::read(d.path().join("run.json")).unwrap()).unwrap();
    assert_eq!(run["schema_version"], 1);
    assert_eq!(run["command"], "schwarzschild-exact");
    assert_eq!(run["passed"], true);
}

#[test]
fn reruns_are_byte_identical_and_echo_reproduces() {
    let d = tempfile::tempdir().unwrap();
    let args = ["solve", "--r", "12", "--L", "10", "--seed", "5"];
    assert_eq!(run_in(d.path(), &args).0, 0);
    let first = (std::fs::read(d.path().join("leaves.csv")).unwrap(), std::fs::read(d.path().join("run.json")).unwrap());
    assert_eq!(run_in(d.path(), &args).0, 0);
    assert_eq!(std::fs::read(d.path().join("leaves.csv")).unwrap(), first.0);
    assert_eq!(std::fs::read(d.path().join("run.json")).unwrap(), first.1);
    let echo = d.path().join("echo.json");
    std::fs::copy(d.path().join("run.json"), &echo).unwrap();
    let out = bin().arg("--config").arg(&echo).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(std::fs::read(d.path().join("leaves.csv")).unwrap(), first.0);
    assert_eq!(std::fs::read(d.path().join("run.json")).unwrap(), first.1);
}

#[test]
fn exit_codes() {
    let d = tempfile::tempdir().unwrap();
    let (code, text) = run_in(d.path(), &["no-such-command"]);
    assert_eq!(code, 1);
    assert!(text.contains("Usage"), "{text}");
    assert_eq!(run_in(d.path(), &[]).0, 1);
    assert_eq!(run_in(d.path(), &["solve", "--L", "4"]).0, 1);
    let (code, text) = run_in(d.path(), &["verify-integrals"]);
    assert_eq!(code, 0, "{text}");
    // an ellipsoid this eccentric is far from resolved at L = 8
    let cfg = d.path().join("c.toml");
    std::fs::write(&cfg, "command = \"verify-identities\"\n[numerics]\nL = 8\n[graph]\naxes = [3.0, 6.0, 12.0]\n").unwrap();
    let (code, text) = run_in(d.path(), &["--config", cfg.to_str().unwrap()]);
    assert_eq!(code, 2, "{text}");
    let bad = d.path().join("bad.toml");
    std::fs::write(&bad, "command = \"solve\"\n[metric]\nmass = 1\n").unwrap();
    let (code, text) = run_in(d.path(), &["--config", bad.to_str().unwrap()]);
    assert_eq!(code, 1);
    assert!(text.contains("mass"), "{text}");
}

#[test]
fn integrals_csv_has_all_rows() {
    let d = tempfile::tempdir().unwrap();
    assert_eq!(run_in(d.path(), &["verify-integrals"]).0, 0);
    let t = std::fs::read_to_string(d.path().join("integrals.csv")).unwrap();
    assert_eq!(t.lines().count(), 1 + willmore_core::oracle::verification_table(1.0).unwrap().len());
    let _ = Cell::from(1.0);
}
