use std::path::Path;
use std::process::{Command, Output};

fn seqgrad(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_seqgrad"))
        .args(args)
        .env_remove("SEQGRAD_SEED")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn bounds_prints_exact_fraction() {
    let o = seqgrad(&[
        "bounds", "--n", "4", "--B", "1", "--W", "2", "--lambda", "4",
    ]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("L_B* = 1/2"), "{}", stdout(&o));
}

#[test]
fn bounds_sweep_writes_csv_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sweep.csv");
    let o = seqgrad(&[
        "bounds",
        "--n",
        "256",
        "--B",
        "1",
        "--W",
        "4",
        "--lambda",
        "27",
        "--sweep-w",
        "4..8",
        "--out",
        path_str(&out),
    ]);
    assert!(o.status.success());
    let csv = std::fs::read_to_string(&out).unwrap();
    assert_eq!(csv.lines().count(), 6);
    let manifest: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("sweep.csv.manifest.json")).unwrap())
            .unwrap();
    assert_eq!(manifest["subcommand"], "bounds");
}

#[test]
fn check_pattern_verdicts_and_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("p.csv");
    std::fs::write(
        &p,
        "round,w0,w1,w2,w3\n1,0,0,0,0\n2,1,1,0,0\n3,0,1,0,0\n4,0,0,0,0\n",
    )
    .unwrap();
    let o = seqgrad(&[
        "check-pattern",
        "--model",
        "bursty",
        "--B",
        "2",
        "--W",
        "3",
        "--lambda",
        "2",
        "--pattern",
        path_str(&p),
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).trim(), "conforms");

    let o = seqgrad(&[
        "check-pattern",
        "--model",
        "bursty",
        "--B",
        "1",
        "--W",
        "3",
        "--lambda",
        "2",
        "--pattern",
        path_str(&p),
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).starts_with("does not conform"));
}

#[test]
fn simulate_without_stragglers_meets_deadlines() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.json");
    let o = seqgrad(&[
        "simulate",
        "--scheme",
        "m-sgc",
        "--n",
        "16",
        "--B",
        "1",
        "--W",
        "3",
        "--lambda",
        "4",
        "--gen",
        "ge:0,0",
        "--jobs",
        "30",
        "--out",
        path_str(&out),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let r: serde_json::Value = serde_json::from_slice(&std::fs::read(&out).unwrap()).unwrap();
    assert_eq!(r["waitout_count"], 0);
    let delay = r["delay"].as_u64().unwrap();
    let records = r["job_records"].as_array().unwrap();
    assert_eq!(records.len(), 30);
    assert!(records
        .iter()
        .all(|j| j["delay"].as_u64().unwrap() <= delay));
    assert!(dir.path().join("r.json.manifest.json").exists());
}

#[test]
fn simulate_is_deterministic_for_a_seed() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let out = dir.path().join(name);
        let o = seqgrad(&[
            "simulate",
            "--scheme",
            "sr-sgc",
            "--n",
            "8",
            "--B",
            "1",
            "--W",
            "2",
            "--lambda",
            "3",
            "--gen",
            "ge:0.4,0.05",
            "--seed",
            "11",
            "--dim",
            "4",
            "--out",
            path_str(&out),
        ]);
        assert!(o.status.success());
        std::fs::read(out).unwrap()
    };
    assert_eq!(run("a.json"), run("b.json"));
}

#[test]
fn generated_profile_round_trips_through_tune() {
    let dir = tempfile::tempdir().unwrap();
    let prof = dir.path().join("prof.csv");
    let rank = dir.path().join("rank.csv");
    let o = seqgrad(&[
        "gen-pattern",
        "--kind",
        "ge-profile:0.5,0.05",
        "--n",
        "8",
        "--rounds",
        "20",
        "--seed",
        "2",
        "--out",
        path_str(&prof),
    ]);
    assert!(o.status.success());
    let o = seqgrad(&[
        "tune",
        "--profile",
        path_str(&prof),
        "--alpha",
        "5",
        "--grid-gc",
        "s=1..3",
        "--grid-m",
        "B=1;W=2..3;lambda=1..4",
        "--out",
        path_str(&rank),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(&rank).unwrap();
    assert_eq!(
        csv.lines().next().unwrap(),
        "scheme,params,load,estimated_runtime_s,waitout_count"
    );
    let manifest: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("rank.csv.manifest.json")).unwrap())
            .unwrap();
    assert_eq!(manifest["inputs"].as_object().unwrap().len(), 1);
}

#[test]
fn bad_parameters_exit_with_two() {
    let o = seqgrad(&[
        "simulate", "--scheme", "m-sgc", "--n", "4", "--B", "2", "--W", "2", "--lambda", "1",
        "--gen", "none",
    ]);
    assert_eq!(o.status.code(), Some(2));
    let o = seqgrad(&["bounds", "--n", "4", "--no-such-flag"]);
    assert_eq!(o.status.code(), Some(2));
    let o = seqgrad(&[
        "simulate",
        "--scheme",
        "gc",
        "--s",
        "1",
        "--n",
        "4",
        "--pattern",
        "/nonexistent/p.csv",
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn layout_lists_every_worker() {
    let o = seqgrad(&["layout", "--scheme", "gc", "--n", "5", "--s", "2"]);
    assert!(o.status.success());
    assert_eq!(
        stdout(&o)
            .lines()
            .filter(|l| l.starts_with("worker "))
            .count(),
        5
    );
}
