use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use discrete_cover::verifier::mutations::{mutate, Mutation};

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_discrete-cover"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn text(bytes: &[u8]) -> String {
    String::from_utf8_lossy(bytes).into_owned()
}

fn construct(dir: &Path, file: &str, extra: &[&str]) -> (Output, String) {
    let out = dir.join(file);
    let mut args = vec!["construct", "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    let o = bin(&args);
    (o, out.to_str().unwrap().to_string())
}

#[test]
fn construct_writes_header_and_records() {
    let dir = tempfile::tempdir().unwrap();
    let (o, path) = construct(dir.path(), "run.jsonl", &["--instance", "z-in-zp", "--p", "2", "--steps", "50"]);
    assert_eq!(o.status.code(), Some(0), "{}", text(&o.stderr));
    assert_eq!(fs::read_to_string(&path).unwrap().lines().count(), 51);
    let summary = text(&o.stdout);
    assert!(summary.contains("|A| = "), "{summary}");
    assert!(summary.contains("covered prefix = "), "{summary}");
    assert!(summary.contains("measure = "), "{summary}");

    let (o, path) = construct(dir.path(), "q.jsonl", &["--instance", "q-usual", "--steps", "100", "--thin"]);
    assert_eq!(o.status.code(), Some(0));
    let body = fs::read_to_string(path).unwrap();
    assert_eq!(body.lines().count(), 101);
    assert!(body.lines().nth(1).unwrap().contains(r#""case":2"#));
}

#[test]
fn construct_rejects_bad_config() {
    let dir = tempfile::tempdir().unwrap();
    let (o, path) = construct(dir.path(), "x.jsonl", &["--instance", "z-in-zp", "--p", "6", "--steps", "5"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(text(&o.stderr).contains("p must be prime"));
    assert!(!Path::new(&path).exists());
    for args in [
        &["--instance", "nope", "--steps", "5"][..],
        &["--instance", "z-discrete", "--steps", "10001"],
        &["--instance", "golden-rotation", "--steps", "5", "--budget", "geom-1/2"],
        &["--steps", "5"],
    ] {
        let (o, _) = construct(dir.path(), "y.jsonl", args);
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", text(&o.stderr));
    }
}

#[test]
fn config_file_mirrors_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    let from_file = dir.path().join("a.jsonl");
    fs::write(
        &cfg,
        format!(r#"{{"instance":"golden-rotation","steps":12,"thin":true,"out":{:?}}}"#, from_file.to_str().unwrap()),
    )
    .unwrap();
    let o = bin(&["construct", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", text(&o.stderr));
    let (o, from_flags) = construct(dir.path(), "b.jsonl", &["--instance", "golden-rotation", "--steps", "12", "--thin"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(fs::read(from_file).unwrap(), fs::read(from_flags).unwrap());

    fs::write(&cfg, r#"{"instance":"z-discrete","steps":3,"colour":"red"}"#).unwrap();
    assert_eq!(bin(&["construct", "--config", cfg.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn stdout_trace_is_byte_identical() {
    let args = ["construct", "--instance", "f2-discrete", "--steps", "40", "--thin"];
    let (a, b) = (bin(&args), bin(&args));
    assert_eq!(a.status.code(), Some(0));
    assert!(!a.stdout.is_empty());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn verify_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let (_, path) = construct(dir.path(), "run.jsonl", &["--instance", "z-in-zp", "--p", "3", "--steps", "20"]);
    let certs = dir.path().join("certs.jsonl");
    let o = bin(&["verify", &path, "--certs", certs.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", text(&o.stdout));
    let table = text(&o.stdout);
    for check in ["header", "records", "replay", "cover", "disjoint", "z-sep", "budget"] {
        assert!(table.lines().any(|l| l.starts_with("PASS") && l.contains(check)), "{check}: {table}");
    }
    let certs = fs::read_to_string(certs).unwrap();
    assert_eq!(certs.lines().count(), table.lines().count());
    assert!(certs.lines().all(|l| l.contains(r#""verdict":"pass""#)));

    let bad = mutate(&fs::read_to_string(&path).unwrap(), Mutation::Center, 7).unwrap();
    let bad_path = dir.path().join("bad.jsonl");
    fs::write(&bad_path, &bad.text).unwrap();
    let o = bin(&["verify", bad_path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let stage = format!("stage {}", bad.stage);
    assert!(text(&o.stdout).lines().any(|l| l.starts_with("FAIL") && l.contains(&stage)), "{}", text(&o.stdout));

    let missing = dir.path().join("missing.jsonl");
    assert_eq!(bin(&["verify", missing.to_str().unwrap()]).status.code(), Some(2));
    let garbage = dir.path().join("garbage.jsonl");
    fs::write(&garbage, "not json\n").unwrap();
    assert_eq!(bin(&["verify", garbage.to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(bin(&["verify", &path, "--checks", "cover,bogus"]).status.code(), Some(2));
}

#[test]
fn verify_selected_checks() {
    let dir = tempfile::tempdir().unwrap();
    let (_, path) = construct(dir.path(), "run.jsonl", &["--instance", "z-discrete", "--steps", "30"]);
    let o = bin(&["verify", &path, "--checks", "cover,separation", "--no-replay"]);
    assert_eq!(o.status.code(), Some(0));
    let table = text(&o.stdout);
    assert!(table.contains("separation") && table.contains("cover"));
    assert!(!table.contains("disjoint") && !table.contains("replay"));
}

#[test]
fn oracle_diff_agrees_and_reports_divergence() {
    for args in [
        &["oracle-diff", "--instance", "z-in-zp", "--p", "2", "--steps", "20"][..],
        &["oracle-diff", "--instance", "golden-rotation", "--steps", "20"],
        &["oracle-diff", "--instance", "q-usual", "--steps", "20", "--thin"],
    ] {
        let o = bin(args);
        assert_eq!(o.status.code(), Some(0), "{args:?}: {}", text(&o.stdout));
    }
    let o = bin(&["oracle-diff", "--instance", "z-in-zp", "--p", "2", "--steps", "20", "--inject-divergence", "9"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(text(&o.stdout).contains("stage 9"), "{}", text(&o.stdout));
    let o = bin(&["oracle-diff", "--instance", "z-discrete", "--steps", "201"]);
    assert_eq!(o.status.code(), Some(2));
}
