use std::fs;
use std::path::{Path, PathBuf};

use freecert::certifier::{verify_certificate, Certificate, ExponentClaim};
use freecert::cli::{run, EXIT_INVALID, EXIT_OK, EXIT_REFUSED};
use tempfile::TempDir;

fn model_file(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p
}

struct Fixture {
    dir: TempDir,
    f2: PathBuf,
    c4: PathBuf,
    zxz2: PathBuf,
}

fn fixture() -> Fixture {
    let dir = TempDir::new().unwrap();
    let f2 = model_file(dir.path(), "f2.json", r#"{"kind": "free-group", "rank": 2}"#);
    let c4 = model_file(dir.path(), "c4.json", r#"{"kind": "cycle", "n": 4}"#);
    let zxz2 = model_file(dir.path(), "zxz2.json", r#"{"kind": "free-product"}"#);
    Fixture { dir, f2, c4, zxz2 }
}

fn call(args: &[&str]) -> i32 {
    let mut argv = vec!["freecert"];
    argv.extend_from_slice(args);
    run(argv)
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn exit_code_matrix() {
    let fx = fixture();
    let out = fx.dir.path().join("cert.json");
    let bad = model_file(fx.dir.path(), "bad.json", r#"{"kind": "free-group"}"#);
    let (f2, c4, zxz2, o) = (s(&fx.f2), s(&fx.c4), s(&fx.zxz2), s(&out));
    let scratch = fx.dir.path().join("scratch.json");
    let sc = s(&scratch);
    let cases: Vec<(Vec<&str>, i32)> = vec![
        (vec!["certify", "--model", f2, "--a", "a", "--b", "b", "--criterion", "nielsen", "--out", o], EXIT_OK),
        (vec!["certify", "--model", f2, "--a", "ab", "--b", "b", "--criterion", "prop6", "--no-verify", "--out", sc], EXIT_OK),
        (vec!["certify", "--model", f2, "--a", "a", "--b", "aa", "--criterion", "nielsen", "--out", sc], EXIT_REFUSED),
        (
            vec![
                "certify", "--model", zxz2, "--a", "ffs", "--b", "ff", "--criterion", "nielsen", "--epsilon-mode",
                "sharp-experimental", "--epsilon", "1", "--exponents", "1,1", "--out", sc,
            ],
            EXIT_REFUSED,
        ),
        (vec!["certify", "--model", f2, "--a", "a", "--b", "b", "--criterion", "bogus"], EXIT_INVALID),
        (vec!["certify", "--model", s(&bad), "--a", "a", "--b", "b", "--criterion", "nielsen"], EXIT_INVALID),
        (vec!["delta", "--model", c4, "--out", sc], EXIT_OK),
        (vec!["delta", "--model", f2], EXIT_INVALID),
        (vec!["delta", "--model", f2, "--radius", "65"], EXIT_INVALID),
        (vec!["verify", "--certificate", o, "--out", sc], EXIT_OK),
        (vec!["certify", "--model", f2, "--a", "az", "--b", "b", "--criterion", "nielsen"], EXIT_INVALID),
        (vec!["frobnicate", "--model", f2], EXIT_INVALID),
    ];
    assert_eq!(cases.len(), 12);
    for (args, want) in cases {
        assert_eq!(call(&args), want, "{args:?}");
    }
}

#[test]
fn certify_writes_verifiable_document() {
    let fx = fixture();
    let out = fx.dir.path().join("cert.json");
    assert_eq!(call(&["certify", "--model", s(&fx.f2), "--a", "a", "--b", "b", "--criterion", "nielsen", "--out", s(&out)]), 0);
    let text = fs::read_to_string(&out).unwrap();
    let cert = Certificate::from_document(&text).unwrap();
    assert_eq!(cert.exponents, ExponentClaim::AtLeast { n_min: 100, m_min: 100 });
    assert_eq!(cert.to_document(), text);
    assert!(verify_certificate(&cert).unwrap().ok);
    let leftovers: Vec<_> = fs::read_dir(fx.dir.path())
        .unwrap()
        .filter_map(|e| e.ok())
        .filter(|e| e.file_name().to_string_lossy().ends_with(".tmp"))
        .collect();
    assert!(leftovers.is_empty());
}

#[test]
fn tampered_certificate_is_rejected() {
    let fx = fixture();
    let out = fx.dir.path().join("cert.json");
    assert_eq!(call(&["certify", "--model", s(&fx.f2), "--a", "a", "--b", "b", "--criterion", "nielsen", "--out", s(&out)]), 0);
    let text = fs::read_to_string(&out).unwrap().replace("\"n_min\": 100", "\"n_min\": 1");
    fs::write(&out, text).unwrap();
    let report = fx.dir.path().join("report.json");
    assert_eq!(call(&["verify", "--certificate", s(&out), "--out", s(&report)]), EXIT_REFUSED);
    let rep: serde_json::Value = serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(rep["reproduced"], false);
}

#[test]
fn refusal_document_names_reason() {
    let fx = fixture();
    let out = fx.dir.path().join("refusal.json");
    let code = call(&["certify", "--model", s(&fx.f2), "--a", "a", "--b", "aa", "--criterion", "theorem9", "--out", s(&out)]);
    assert_eq!(code, EXIT_REFUSED);
    let doc: serde_json::Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(doc["refused"]["reason"], "dependent");
    assert_eq!(doc["refused"]["criterion"], "theorem9");
}

#[test]
fn sweep_reports_free_product_relation() {
    let fx = fixture();
    let out = fx.dir.path().join("sweep.csv");
    assert_eq!(call(&["sweep", "--model", s(&fx.zxz2), "--a", "ffs", "--b", "ff", "--range", "1:3", "--out", s(&out)]), 0);
    let text = fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("n,m,certifier,oracle,status,witness"));
    let first = lines.next().unwrap();
    assert!(first.starts_with("1,1,") && first.contains("relation-found"), "{first}");
    assert_eq!(text.lines().count(), 10);
}

#[test]
fn sweep_marks_certified_cells() {
    let fx = fixture();
    let out = fx.dir.path().join("sweep.json");
    let args = ["sweep", "--model", s(&fx.f2), "--a", "a", "--b", "b", "--range", "99:101", "--depth", "3", "--format", "json", "--out", s(&out)];
    assert_eq!(call(&args), 0);
    let doc: serde_json::Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    for row in doc["rows"].as_array().unwrap() {
        let (n, m) = (row["n"].as_i64().unwrap(), row["m"].as_i64().unwrap());
        let certified = n >= 100 && m >= 100;
        assert_eq!(row["status"] == "certified", certified, "{row}");
        if certified {
            assert_eq!(row["certifier"], "nielsen");
        }
    }
}

#[test]
fn report_commands_succeed() {
    let fx = fixture();
    let out = fx.dir.path().join("r.json");
    let o = s(&out);
    let read = || -> serde_json::Value { serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap() };
    assert_eq!(call(&["delta", "--model", s(&fx.c4), "--out", o]), 0);
    assert_eq!(read()["delta"], 1);
    assert_eq!(call(&["profile", "--model", s(&fx.f2), "--a", "abA", "--out", o]), 0);
    assert_eq!(read()["profile"]["hyperbolic"], "yes");
    assert_eq!(call(&["overlap", "--model", s(&fx.f2), "--a", "ab", "--b", "aB", "--out", o]), 0);
    assert_eq!(read()["overlap"]["D"], 1);
    assert_eq!(call(&["acyl", "--model", s(&fx.c4), "--radii", "0,1", "--out", o]), 0);
    assert!(read()["entries"]["1"]["K_hat"].as_u64().is_some());
    let chain = ["chain", "--model", s(&fx.f2), "--a", "a", "--b", "b", "--word", "xy", "--n", "204", "--e", "1/5", "--q", "3", "--out", o];
    assert_eq!(call(&chain), 0);
    assert_eq!(read()["all_hold"], true);
}
