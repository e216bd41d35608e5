use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn bcfb(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bcfb")).args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn write(dir: &TempDir, name: &str, body: &str) -> PathBuf {
    let p = dir.path().join(name);
    fs::write(&p, body).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn channel_a(dir: &TempDir) -> PathBuf {
    write(dir, "a.json", r#"{"type":"scalar","sigma1_sq":1,"sigma2_sq":2,"rho":0,"power":10,"sigma_fb_sq":1}"#)
}

fn superposition_n1(dir: &TempDir) -> PathBuf {
    let g = 5f64.sqrt();
    write(dir, "sp.json", &format!(r#"{{"n":1,"a":[{g}],"b":[{g}],"c":[[]]}}"#))
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

#[test]
fn help_lists_all_flags() {
    let mut all = String::new();
    for sub in ["region", "threshold", "map", "rates", "verify", "search", "simulate"] {
        let out = bcfb(&[sub, "--help"]);
        assert_eq!(code(&out), 0);
        all.push_str(&String::from_utf8_lossy(&out.stdout));
    }
    for flag in
        ["--channel", "--scheme", "--points", "--xmax", "--ymax", "--step", "--n", "--mu", "--budget", "--seed", "--tol", "--samples", "--out"]
    {
        assert!(all.contains(flag), "missing {flag}");
    }
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(code(&bcfb(&["map", "--step", "0"])), 2);
    assert_eq!(code(&bcfb(&["map", "--bogus"])), 2);
    assert_eq!(code(&bcfb(&["frobnicate"])), 2);
    assert_eq!(code(&bcfb(&[])), 2);
    let dir = TempDir::new().unwrap();
    let ch = channel_a(&dir);
    assert_eq!(code(&bcfb(&["region", "--channel", s(&ch), "--points", "1"])), 2);
    assert_eq!(code(&bcfb(&["search", "--channel", s(&ch), "--mu", "1.5"])), 2);
}

#[test]
fn input_errors_exit_3() {
    let dir = TempDir::new().unwrap();
    let missing = dir.path().join("missing.json");
    assert_eq!(code(&bcfb(&["threshold", "--channel", s(&missing)])), 3);
    let garbage = write(&dir, "g.json", "{not json");
    assert_eq!(code(&bcfb(&["threshold", "--channel", s(&garbage)])), 3);
    let extra = write(&dir, "e.json", r#"{"type":"scalar","sigma1_sq":1,"sigma2_sq":2,"rho":0,"power":10,"sigma_fb_sq":1,"x":1}"#);
    assert_eq!(code(&bcfb(&["threshold", "--channel", s(&extra)])), 3);
    let bad = write(&dir, "b.json", r#"{"type":"scalar","sigma1_sq":3,"sigma2_sq":2,"rho":0,"power":10,"sigma_fb_sq":1}"#);
    assert_eq!(code(&bcfb(&["threshold", "--channel", s(&bad)])), 3);
}

#[test]
fn threshold_of_degraded_channel_is_zero() {
    let dir = TempDir::new().unwrap();
    let ch = write(&dir, "d.json", r#"{"type":"scalar","sigma1_sq":1,"sigma2_sq":4,"rho":0.5,"power":10,"sigma_fb_sq":1}"#);
    let out = bcfb(&["threshold", "--channel", s(&ch)]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    assert_eq!(v["threshold_sigma_fb_sq"], 0.0);
    assert_eq!(v["verdict"], "CoveredUseless");
    for key in ["tool_version", "seed", "tolerances"] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
}

#[test]
fn map_csv_format() {
    let out = bcfb(&["map"]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(!text.contains('\r'));
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("x,y,useless"));
    let rows: Vec<&str> = lines.collect();
    assert!(rows.contains(&"1,3,1"));
    assert!(rows.contains(&"1,1.5,0"));
    for r in &rows {
        let useless = r.rsplit(',').next().unwrap();
        assert!(useless == "0" || useless == "1");
    }
}

#[test]
fn region_csv_points() {
    let dir = TempDir::new().unwrap();
    let ch = channel_a(&dir);
    let out_path = dir.path().join("region.csv");
    let out = bcfb(&["region", "--channel", s(&ch), "--points", "3", "--out", s(&out_path)]);
    assert_eq!(code(&out), 0);
    let text = fs::read_to_string(&out_path).unwrap();
    assert_eq!(text, "theta,r1_bits,r2_bits\n0,0,1.29248125036\n0.5,1.29248125036,0.388803789332\n1,1.72971580932,0\n");
}

#[test]
fn rates_of_superposition() {
    let dir = TempDir::new().unwrap();
    let out = bcfb(&["rates", "--channel", s(&channel_a(&dir)), "--scheme", s(&superposition_n1(&dir))]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    assert!((v["rates"]["r1_bits"].as_f64().unwrap() - 0.5 * 6f64.log2()).abs() < 1e-10);
    assert!((v["avg_power"].as_f64().unwrap() - 10.0).abs() < 1e-12);
}

#[test]
fn verify_superposition_passes() {
    let dir = TempDir::new().unwrap();
    let out = bcfb(&["verify", "--channel", s(&channel_a(&dir)), "--scheme", s(&superposition_n1(&dir)), "--tol", "1e-9"]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    assert_eq!(v["all_pass"], true);
    assert_eq!(v["tolerances"]["converse_nats"], 1e-9);
}

#[test]
fn verify_exit_code_follows_applicable_steps() {
    // With zero tolerance, steps that hold with equality can fail by rounding.
    let dir = TempDir::new().unwrap();
    let out = bcfb(&["verify", "--channel", s(&channel_a(&dir)), "--scheme", s(&superposition_n1(&dir)), "--tol", "0"]);
    let v = json(&out);
    let failing = v["report"]["steps"]
        .as_array()
        .unwrap()
        .iter()
        .any(|st| st["applicable"] == true && st["pass"] == false);
    assert_eq!(code(&out), if failing { 1 } else { 0 });
    assert_eq!(v["all_pass"], !failing);
}

#[test]
fn search_and_simulate_are_byte_identical() {
    let dir = TempDir::new().unwrap();
    let ch = channel_a(&dir);
    let scheme = write(&dir, "s.json", r#"{"n":2,"a":[1.0,0.5],"b":[0.3,1.0],"c":[[],[0.2]]}"#);
    let search = ["search", "--channel", s(&ch), "--n", "2", "--budget", "300", "--seed", "7"];
    let a = bcfb(&search);
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, bcfb(&search).stdout);
    let v = json(&a);
    assert_eq!(v["seed"], 7);
    assert_eq!(v["certified"], true);
    assert_eq!(v["evaluations"], 300);

    let sim = ["simulate", "--channel", s(&ch), "--scheme", s(&scheme), "--samples", "50000", "--seed", "3"];
    let b = bcfb(&sim);
    assert_eq!(code(&b), 0);
    assert_eq!(b.stdout, bcfb(&sim).stdout);
    assert!(json(&b)["relative_frobenius"].as_f64().unwrap() < 0.05);

    let m1 = bcfb(&["map", "--xmax", "2", "--ymax", "3", "--step", "0.1"]);
    assert_eq!(m1.stdout, bcfb(&["map", "--xmax", "2", "--ymax", "3", "--step", "0.1"]).stdout);
}

#[test]
fn vector_channel_commands() {
    let dir = TempDir::new().unwrap();
    let ch = write(&dir, "v.json", r#"{"type":"vector","sigma2_sq":2,"sigma_a_sq":1,"sigma_b_sq":3,"power":9}"#);
    let scheme = write(&dir, "s.json", r#"{"n":2,"a":[1.5,1.0],"b":[1.0,1.2],"c":[[],[0.3]]}"#);
    let out = bcfb(&["verify", "--channel", s(&ch), "--scheme", s(&scheme)]);
    assert_eq!(code(&out), 0);
    assert_eq!(json(&out)["all_pass"], true);
    assert_eq!(code(&bcfb(&["threshold", "--channel", s(&ch)])), 3);
}
