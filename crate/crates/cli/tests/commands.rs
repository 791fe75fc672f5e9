use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use monodromy::algebra::matrix::{c64, inverse, product};
use monodromy::algebra::CMatrix;
use monodromy::bundles::Representation;
use monodromy_cli::codec::{read_matrix, representation};
use monodromy_cli::{Envelope, Kind};
use serde_json::{json, Value};
use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_monodromy"))
}

fn write_doc(dir: &TempDir, name: &str, kind: Kind, payload: Value) -> PathBuf {
    let path = dir.path().join(name);
    std::fs::write(&path, Envelope::new(kind, payload).to_canonical()).unwrap();
    path
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn document(out: &Output) -> Envelope {
    Envelope::parse(std::str::from_utf8(&out.stdout).unwrap()).unwrap()
}

fn real(rows: &[&[f64]]) -> CMatrix {
    CMatrix::from_fn(rows.len(), rows[0].len(), |i, k| c64(rows[i][k], 0.0))
}

fn closed(mut mats: Vec<CMatrix>) -> Vec<CMatrix> {
    let prod = product(&mats).unwrap();
    mats.push(inverse(&prod).unwrap());
    mats
}

fn commuting_rep() -> Value {
    let rep = Representation::with_default_punctures(closed(vec![
        real(&[&[2.0, 1.0], &[0.0, 2.0]]),
        real(&[&[0.5, 0.0], &[0.0, 0.5]]),
    ]))
    .unwrap();
    representation(&rep)
}

#[test]
fn normlog_of_identity_is_zero() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("id.json");
    std::fs::write(&path, "[[1, 0, 0], [0, 1, 0], [0, 0, 1]]").unwrap();
    let out = run(&["normlog", p(&path)]);
    assert_eq!(out.status.code(), Some(0));
    let payload = document(&out).expect(Kind::Report).unwrap();
    let k = read_matrix(&payload["k"], "k").unwrap();
    assert!(k.iter().all(|z| z.norm() == 0.0));
}

#[test]
fn synthesized_system_verifies_against_its_input() {
    let dir = TempDir::new().unwrap();
    let rep = write_doc(&dir, "rep.json", Kind::Representation, commuting_rep());
    let sys = dir.path().join("sys.json");
    let out = run(&["synth-commutative", p(&rep), "--out", p(&sys)]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let out = run(&["verify", p(&sys), "--target", p(&rep)]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let payload = document(&out).expect(Kind::Report).unwrap();
    assert_eq!(payload["conjugate"], json!(true));
    for r in payload["residuals"].as_array().unwrap() {
        assert!(r.as_f64().unwrap() < 1e-6);
    }
}

#[test]
fn irreducible_rank3_is_realizable() {
    let dir = TempDir::new().unwrap();
    let rep = Representation::with_default_punctures(closed(vec![
        real(&[&[2.0, 1.0, 0.0], &[0.0, 1.0, 1.0], &[0.0, 0.0, 3.0]]),
        real(&[&[1.0, 0.0, 0.0], &[1.0, 2.0, 0.0], &[0.0, 1.0, 1.5]]),
    ]))
    .unwrap();
    let path = write_doc(&dir, "rep.json", Kind::Representation, representation(&rep));
    let out = run(&["decide-rank3", p(&path)]);
    assert_eq!(out.status.code(), Some(0));
    let payload = document(&out).expect(Kind::Report).unwrap();
    assert_eq!(payload["verdict"], json!("realizable"));
    assert_eq!(payload["certificate"], json!("irreducible"));
}

#[test]
fn degree_and_shift() {
    let dir = TempDir::new().unwrap();
    let bundle = json!({ "representation": commuting_rep(), "flags": [1, 0, -2] });
    let path = write_doc(&dir, "wfb.json", Kind::WeightedBundle, bundle);
    let out = run(&["degree", p(&path)]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let before = document(&out).expect(Kind::Report).unwrap()["degree"].as_i64().unwrap();

    let shifted = dir.path().join("shifted.json");
    let out = run(&["shift-weights", p(&path), "--by", "1,-1,2", "--out", p(&shifted)]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let out = run(&["degree", p(&shifted)]);
    let after = document(&out).expect(Kind::Report).unwrap()["degree"].as_i64().unwrap();
    assert_eq!(after - before, 2 * 2);
}

#[test]
fn solve_weights_on_triangular_input() {
    let dir = TempDir::new().unwrap();
    let rep = Representation::with_default_punctures(closed(vec![
        real(&[&[2.0, 1.0], &[0.0, 0.5]]),
        real(&[&[3.0, 0.0], &[0.0, 1.0]]),
    ]))
    .unwrap();
    let path = write_doc(&dir, "rep.json", Kind::Representation, representation(&rep));
    for mode in ["strict", "relaxed"] {
        let out = run(&["solve-weights", p(&path), "--mode", mode]);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
        let payload = document(&out).expect(Kind::Report).unwrap();
        assert_eq!(payload["mode"], json!(mode));
    }
}

#[test]
fn normal_form_and_growth_of_a_constant_connection() {
    let dir = TempDir::new().unwrap();
    let a0 = json!([[[-1.5, 0.0]]]);
    let zero = json!([[[0.0, 0.0]]]);
    let conn = json!({ "order": 2, "coeffs": [a0, zero, zero] });
    let path = write_doc(&dir, "conn.json", Kind::LocalConnection, conn);
    let out = run(&["normal-form", p(&path)]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let payload = document(&out).expect(Kind::Report).unwrap();
    assert_eq!(payload["weights"], json!([1]));

    let out = run(&["growth", p(&path), "--tol", "1e-10"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let payload = document(&out).expect(Kind::Report).unwrap();
    assert_eq!(payload["exponent"], json!(1));
    assert_eq!(payload["reliable"], json!(true));
}

#[test]
fn bq_frame_from_report_input() {
    let dir = TempDir::new().unwrap();
    let id = json!([[[1.0, 0.0], [0.0, 0.0]], [[0.0, 0.0], [1.0, 0.0]]]);
    let zero = json!([[[0.0, 0.0], [0.0, 0.0]], [[0.0, 0.0], [0.0, 0.0]]]);
    let payload = json!({ "splitting": [1, 0], "q": { "order": 2, "coeffs": [id, zero.clone(), zero] } });
    let path = write_doc(&dir, "bq.json", Kind::Report, payload);
    let out = run(&["bq-frame", p(&path)]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let payload = document(&out).expect(Kind::Report).unwrap();
    assert!(payload["residual"].as_f64().unwrap() <= 1e-9);
}

#[test]
fn stdin_input_and_deterministic_output() {
    let doc = Envelope::new(Kind::Representation, commuting_rep()).to_canonical();
    let go = || {
        use std::io::Write;
        let mut child = bin()
            .args(["synth-commutative", "-"])
            .stdin(std::process::Stdio::piped())
            .stdout(std::process::Stdio::piped())
            .spawn()
            .unwrap();
        child.stdin.take().unwrap().write_all(doc.as_bytes()).unwrap();
        child.wait_with_output().unwrap()
    };
    let (a, b) = (go(), go());
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(document(&a).kind, Kind::FuchsianSystem);
}

#[test]
fn exit_codes_and_error_reasons() {
    let dir = TempDir::new().unwrap();
    let missing = dir.path().join("absent.json");
    let out = run(&["degree", p(&missing)]);
    assert_eq!(out.status.code(), Some(2));
    let err = Envelope::parse(std::str::from_utf8(&out.stderr).unwrap()).unwrap();
    assert_eq!(err.payload["error"]["reason"], json!("io"));

    // product of the matrices is not the identity
    let bad = json!({ "matrices": [[[2.0]], [[3.0]]] });
    let path = write_doc(&dir, "bad.json", Kind::Representation, bad);
    let out = run(&["synth-commutative", p(&path)]);
    assert_eq!(out.status.code(), Some(2));
    let err = Envelope::parse(std::str::from_utf8(&out.stderr).unwrap()).unwrap();
    assert_eq!(err.payload["error"]["reason"], json!("invalid-input"));

    let path = dir.path().join("v2.json");
    std::fs::write(&path, r#"{"kind": "representation", "version": "2", "payload": {}}"#).unwrap();
    let out = run(&["embed-double", p(&path)]);
    assert_eq!(out.status.code(), Some(2));

    // radial path crosses another puncture: a numerical failure
    let sys = json!({
        "punctures": [[0.0, 0.0], [0.05, 0.0], [-0.05, 0.0], [0.0, 0.05], [0.0, -0.05]],
        "residues": [[[[0.4, 0.0]]], [[[-0.1, 0.0]]], [[[-0.1, 0.0]]], [[[-0.1, 0.0]]], [[[-0.1, 0.0]]]],
    });
    let path = write_doc(&dir, "sys.json", Kind::FuchsianSystem, sys);
    let out = run(&["growth", p(&path), "--radii", "1,0.5,0.1,0.05,0.01,0.005,0.001,0.0005,0.0001"]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn strict_flag_turns_unreliable_growth_into_status_4() {
    let dir = TempDir::new().unwrap();
    // two weights, and a generic vector crossing over between them
    let a0 = json!([[[-1.0, 0.0], [0.0, 0.0]], [[0.0, 0.0], [-3.0, 0.0]]]);
    let conn = json!({ "order": 0, "coeffs": [a0] });
    let path = write_doc(&dir, "conn.json", Kind::LocalConnection, conn);
    let radii = "1,0.3,0.1,0.03,0.01,0.003,0.001,0.0003";
    let lax = run(&["growth", p(&path), "--radii", radii]);
    assert_eq!(lax.status.code(), Some(0), "{}", String::from_utf8_lossy(&lax.stderr));
    assert_eq!(document(&lax).expect(Kind::Report).unwrap()["reliable"], json!(false));
    let strict = run(&["growth", p(&path), "--radii", radii, "--strict"]);
    assert_eq!(strict.status.code(), Some(4));
}
