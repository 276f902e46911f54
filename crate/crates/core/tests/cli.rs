use std::path::Path;
use std::process::{Command, Output};

fn spreadcp(args: &[&str], store: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spreadcp"))
        .args(args)
        .env("SPREADCP_STORE", store)
        .env("RUST_LOG", "warn")
        .output()
        .unwrap()
}

fn configs() -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

#[test]
fn validate_prints_a_stable_hash() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("rw.toml");
    let a = spreadcp(&["validate", cfg.to_str().unwrap()], dir.path());
    let b = spreadcp(&["validate", cfg.to_str().unwrap()], dir.path());
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let c = spreadcp(&["validate", cfg.to_str().unwrap(), "--set", "model.lambda=0.9"], dir.path());
    assert!(c.status.success());
    assert_ne!(a.stdout, c.stdout);
}

#[test]
fn run_writes_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let cfg = configs().join("exact.toml");
    let o = spreadcp(
        &["run", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()],
        &dir.path().join("store"),
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["kind"], "exact");
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("exact.toml");
    let cfg = cfg.to_str().unwrap();
    let bad = spreadcp(&["validate", cfg, "--set", "model.eps=2.0"], dir.path());
    assert_eq!(bad.status.code(), Some(1));
    let unknown = spreadcp(&["validate", cfg, "--set", "model.nope=1"], dir.path());
    assert_eq!(unknown.status.code(), Some(1));
    let out = dir.path().join("out");
    let cap = spreadcp(
        &["run", cfg, "--set", "model.d=3", "--set", "model.n_max=6", "--out", out.to_str().unwrap()],
        dir.path(),
    );
    assert_eq!(cap.status.code(), Some(3), "{}", String::from_utf8_lossy(&cap.stderr));
}

#[test]
fn cache_gc_on_empty_store() {
    let dir = tempfile::tempdir().unwrap();
    let o = spreadcp(&["cache", "gc"], &dir.path().join("store"));
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
}
