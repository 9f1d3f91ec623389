use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dronecast-sim"))
        .args(args)
        .env_remove("DRONECAST_SIM_OUT")
        .output()
        .unwrap()
}

fn scenario(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("examples/scenarios")
        .join(name)
        .to_string_lossy()
        .into_owned()
}

#[test]
fn shipped_scenarios_validate() {
    for name in ["crossing.toml", "urban.toml"] {
        let out = bin(&["validate", &scenario(name)]);
        assert!(out.status.success(), "{name}: {}", String::from_utf8_lossy(&out.stderr));
        assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "OK");
    }
}

#[test]
fn exit_codes() {
    assert_eq!(bin(&["--help"]).status.code(), Some(0));
    assert_eq!(bin(&["--bogus"]).status.code(), Some(1));
    assert_eq!(bin(&["mission", "--id", "4"]).status.code(), Some(1));

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    fs::write(&bad, "seed = 1\nduration = -3.0\n").unwrap();
    let out = bin(&["validate", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("duration"));
    assert_eq!(bin(&["validate", "/nonexistent/x.toml"]).status.code(), Some(1));
}

#[test]
fn cots_mission_is_lossless_and_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let run = |sub: &str| {
        let out_dir = dir.path().join(sub);
        let out = bin(&["mission", "--id", "1", "--radio", "cots", "--seed", "5", "--out", out_dir.to_str().unwrap()]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        let report: serde_json::Value = serde_json::from_slice(&fs::read(out_dir.join("report.json")).unwrap()).unwrap();
        assert_eq!(report["per"], 0.0);
        fs::read(out_dir.join("packets.csv")).unwrap()
    };
    assert_eq!(run("a"), run("b"));
}

#[test]
fn experimental_mission_packets_repeat() {
    let dir = tempfile::tempdir().unwrap();
    let packets = |sub: &str| {
        let out_dir = dir.path().join(sub);
        let out = bin(&["mission", "--id", "2", "--radio", "experimental", "--seed", "7", "--out", out_dir.to_str().unwrap()]);
        assert!(out.status.success());
        fs::read(out_dir.join("packets.csv")).unwrap()
    };
    let a = packets("a");
    assert!(a.len() > 1000);
    assert_eq!(a, packets("b"));
}

#[test]
fn seed_sweep_writes_one_directory_per_seed() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_dronecast-sim"))
        .args(["run", &scenario("crossing.toml"), "--seed", "3", "--seeds", "2", "--jobs", "2"])
        .env("DRONECAST_SIM_OUT", dir.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for s in ["seed_3", "seed_4"] {
        assert!(dir.path().join(s).join("packets.csv").exists(), "{s}");
    }
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("seed 3") && stdout.contains("seed 4"));
}
