use std::path::Path;
use std::process::{Command, Output};

use kemplab::io::{load_group, load_subset};
use kemplab::plant::plant;
use serde_json::Value;

fn kemplab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kemplab")).args(args).output().expect("binary runs")
}

fn json_of(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("report is json")
}

fn gen(dir: &Path, noise: usize) -> [String; 3] {
    let out = kemplab(&["gen", "--dims", "48,5", "--len-a", "10", "--len-b", "12", "--noise", &noise.to_string(), "--out", dir.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    ["group.txt", "a.txt", "b.txt"].map(|f| dir.join(f).to_str().unwrap().to_string())
}

#[test]
fn gen_files_round_trip() {
    let tmp = tempfile::tempdir().unwrap();
    let [g, a, b] = gen(tmp.path(), 0);
    let p = plant(&[48, 5], 10, 12).unwrap();
    let group = load_group(Path::new(&g)).unwrap();
    assert_eq!(group, p.group);
    assert_eq!(load_subset(Path::new(&a), &group).unwrap().words(), p.a.words());
    assert_eq!(load_subset(Path::new(&b), &group).unwrap().words(), p.b.words());
}

#[test]
fn deficit_of_planted_pair() {
    let tmp = tempfile::tempdir().unwrap();
    let [g, a, b] = gen(tmp.path(), 0);
    let r = json_of(&kemplab(&["deficit", "--group", &g, "--set-a", &a, "--set-b", &b]));
    assert_eq!(r["result"]["report"]["deficit"], "-1/48");
    assert_eq!(r["verdict"]["pass"], true);

    let [g, a, b] = gen(&tmp.path().join("noisy"), 2);
    let r = json_of(&kemplab(&["deficit", "--group", &g, "--set-a", &a, "--set-b", &b]));
    assert_ne!(r["result"]["report"]["excess"], "0/1");
}

#[test]
fn pipeline_recovers_exact_pair() {
    let tmp = tempfile::tempdir().unwrap();
    let [g, a, b] = gen(tmp.path(), 0);
    let r = json_of(&kemplab(&["pipeline", "--group", &g, "--set-a", &a, "--set-b", &b, "--delta", "1/2"]));
    assert_eq!(r["result"]["epsilon"], "0/1");
    assert_eq!(r["result"]["arc_a"]["length"], 10);
    assert_eq!(r["result"]["arc_b"]["length"], 12);
    assert_eq!(r["verdict"]["pass"], true);
}

#[test]
fn sign_algebra_suite_reports_counts() {
    let r = json_of(&kemplab(&["suite", "--suite", "sign-algebra"]));
    let s = &r["result"]["suites"][0];
    assert_eq!(s["suite"], "sign-algebra");
    assert_eq!(s["pass"], true);
    assert_eq!(s["violations"], 0);
    assert!(s["checked"].as_u64().unwrap() > 0);
}

#[test]
fn malformed_spec_names_the_line() {
    let tmp = tempfile::tempdir().unwrap();
    let spec = tmp.path().join("spec.txt");
    std::fs::write(&spec, "dims: [48, 5]\nlen_a: 10\nlen_b: twelve\n").unwrap();
    let out = kemplab(&["gen", "--spec", spec.to_str().unwrap(), "--out", tmp.path().join("o").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3"));
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let g = tmp.path().join("g.txt");
    let full = tmp.path().join("full.txt");
    std::fs::write(&g, "kind: cyclic\nn: 8\n").unwrap();
    std::fs::write(&full, "n: 8\nmask: ff\n").unwrap();
    let (g, full) = (g.to_str().unwrap(), full.to_str().unwrap());
    // the whole group is never nearly minimal: a verdict failure
    let out = kemplab(&["deficit", "--group", g, "--set-a", full, "--set-b", full, "--delta", "1/10"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(kemplab(&["suite", "--suite", "nope"]).status.code(), Some(2));
    assert_eq!(kemplab(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn reports_are_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let [g, a, b] = gen(tmp.path(), 1);
    let run = || {
        let mut r = json_of(&kemplab(&["pipeline", "--group", &g, "--set-a", &a, "--set-b", &b, "--delta", "1/2", "--seed", "9"]));
        r.as_object_mut().unwrap().remove("timings_ms");
        r
    };
    assert_eq!(run(), run());
}

#[test]
fn csv_output_to_file() {
    let tmp = tempfile::tempdir().unwrap();
    let [g, a, b] = gen(tmp.path(), 0);
    let csv = tmp.path().join("d.csv");
    let out = kemplab(&["deficit", "--group", &g, "--set-a", &a, "--set-b", &b, "--format", "csv", "--out", csv.to_str().unwrap()]);
    assert!(out.status.success());
    let text = std::fs::read_to_string(&csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "element,in_a,in_b,in_ab");
    assert_eq!(lines.len(), 241);
}
