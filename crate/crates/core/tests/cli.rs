use std::path::Path;
use std::process::{Command, Output};

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_conformal-drift")).args(args).output().unwrap()
}

fn config(dir: &Path, text: &str) -> String {
    let p = dir.join("run.toml");
    std::fs::write(&p, text).unwrap();
    p.display().to_string()
}

#[test]
fn verify_on_defaults_exits_zero() {
    let d = tempfile::tempdir().unwrap();
    let out = d.path().join("out");
    let cfg = config(d.path(), "n = 3\ncommand = \"verify\"\n[grid]\nm = 32\n");
    let o = bin(&["--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stdout));
    assert!(out.join("verify.json").exists());
    let r = bin(&["report", "--out", out.to_str().unwrap()]);
    assert!(r.status.success());
    assert!(std::fs::read_to_string(out.join("report.csv")).unwrap().starts_with("artifact,check,value,tolerance,passed\n"));
}

#[test]
fn dimension_six_fails() {
    let d = tempfile::tempdir().unwrap();
    let o = bin(&["verify", "--config", &config(d.path(), "n = 6\n")]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("dimension outside theorem range 3..5"));
}

#[test]
fn missing_snapshot_is_named() {
    let d = tempfile::tempdir().unwrap();
    let o = bin(&["solve", "--config", &config(d.path(), "n = 3\n[coefficients]\nsnapshot = \"no_such_bundle\"\n")]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("no_such_bundle"));
}

#[test]
fn zero_perturbation_sweep_is_byte_reproducible() {
    let d = tempfile::tempdir().unwrap();
    let cfg = config(
        d.path(),
        "n = 3\n[grid]\nm = 12\n[sweep]\namplitudes = [0.0, 0.0, 0.0]\ndrift = []\nconvergence = false\n",
    );
    let mut csv = Vec::new();
    for (k, threads) in ["1", "3"].iter().enumerate() {
        let out = d.path().join(format!("out{k}"));
        let o = bin(&["sweep", "--config", &cfg, "--out", out.to_str().unwrap(), "--threads", threads]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stdout));
        csv.push(std::fs::read(out.join("sweep.csv")).unwrap());
    }
    assert_eq!(csv[0], csv[1]);
}

#[test]
fn help_lists_defaults() {
    let o = bin(&["--help"]);
    let s = String::from_utf8_lossy(&o.stdout);
    for needle in ["verify", "pohozaev", "--threads", "theta = 0.1", "norm_cap = 100"] {
        assert!(s.contains(needle), "missing {needle}");
    }
}
