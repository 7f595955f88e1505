use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use incflow_cli::gen;
use incflow_cli::stream::parse_stream;

fn incflow(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_incflow")).args(args).output().expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

/// Drops the wall-time field so records can be compared across runs.
fn strip_wall(s: &str) -> String {
    s.lines()
        .map(|l| l.split(' ').filter(|kv| !kv.starts_with("wall_ms=")).collect::<Vec<_>>().join(" "))
        .collect::<Vec<_>>()
        .join("\n")
}

const TWO_RESISTORS: &str = "\
problem effres n=2 mmax=2 s=1 t=2 theta=0.6 eps=0.1
edge 1 2 r=1
start
add 1 2 r=1
";

#[test]
fn effres_two_resistors_goes_below() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(dir.path(), "two.txt", TWO_RESISTORS);
    let o = incflow(&["effres", &path]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let out = stdout(&o);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[0].contains("verdict=above"));
    assert!(lines[1].contains("verdict=below"));

    let o = incflow(&["effres", &path, "--json"]);
    let recs: Vec<serde_json::Value> = stdout(&o).lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(recs[0]["verdict"], "above");
    assert_eq!(recs[1]["verdict"], "below");
    let est = recs[1]["objective"].as_f64().unwrap();
    assert!((0.5 - 1e-9..=0.66).contains(&est), "{est}");
}

#[test]
fn verify_seeded_pnorm_stream() {
    let dir = tempfile::tempdir().unwrap();
    let mut s = gen::random_pnorm(11, 3, 20).unwrap();
    s.header.n = s.header.n.max(8);
    let path = write(dir.path(), "p.txt", &s.to_string());
    let o = incflow(&["verify", &path]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let out = stdout(&o);
    assert_eq!(out.lines().count(), s.events.len() + 1);
    assert!(out.lines().all(|l| l.ends_with("agree=true")));
}

#[test]
fn assert_invariants_run_exits_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    for (i, s) in [gen::random_pnorm(5, 2, 25).unwrap(), gen::random_pnorm(6, 4, 25).unwrap()].iter().enumerate() {
        let path = write(dir.path(), &format!("s{i}.txt"), &s.to_string());
        let o = incflow(&["pnorm", &path, "--assert-invariants"]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let mf = gen::random_maxflow(2, 0.25, 15, 8);
    let path = write(dir.path(), "mf.txt", &mf.to_string());
    let o = incflow(&["maxflow", &path, "--assert-invariants"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn metrics_are_deterministic_apart_from_wall_time() {
    let dir = tempfile::tempdir().unwrap();
    let s = gen::random_pnorm(21, 3, 25).unwrap();
    let path = write(dir.path(), "d.txt", &s.to_string());
    for backend in ["exact", "trees"] {
        let a = incflow(&["pnorm", &path, "--seed", "4", "--backend", backend]);
        let b = incflow(&["pnorm", &path, "--seed", "4", "--backend", backend]);
        assert!(a.status.success());
        assert_eq!(strip_wall(&stdout(&a)), strip_wall(&stdout(&b)));
    }
}

#[test]
fn trace_goes_to_its_own_file() {
    let dir = tempfile::tempdir().unwrap();
    let s = gen::planted_pnorm(3, 12, 40, 2, 0.5).unwrap();
    let path = write(dir.path(), "t.txt", &s.to_string());
    let trace = dir.path().join("trace.jsonl");
    let o = incflow(&["pnorm", &path, "--trace", trace.to_str().unwrap(), "--json"]);
    assert!(o.status.success());
    let text = fs::read_to_string(&trace).unwrap();
    let kinds: Vec<String> = text
        .lines()
        .map(|l| serde_json::from_str::<serde_json::Value>(l).unwrap()["kind"].as_str().unwrap().to_owned())
        .collect();
    assert!(kinds.iter().any(|k| k == "mwu"));
    assert!(kinds.iter().any(|k| k == "step"));
    assert!(!stdout(&o).contains("phi"));
}

#[test]
fn gen_output_round_trips() {
    let o = incflow(&["gen", "random", "--problem", "maxflow", "--seed", "8", "--m", "12"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let parsed = parse_stream(&text).unwrap();
    assert_eq!(parsed.to_string(), text);
    assert_eq!(parsed.events.len(), 12);
    let again = incflow(&["gen", "random", "--problem", "maxflow", "--seed", "8", "--m", "12"]);
    assert_eq!(stdout(&again), text);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let good = write(dir.path(), "two.txt", TWO_RESISTORS);
    let bad = write(dir.path(), "bad.txt", "problem effres n=2 mmax=2 s=1 t=2 theta=0.6 eps=0.1\nstart\nadd 1 1 r=1\n");
    assert_eq!(incflow(&["effres", &bad]).status.code(), Some(1));
    assert_eq!(incflow(&["effres", "/nonexistent/stream"]).status.code(), Some(1));
    assert_eq!(incflow(&["pnorm", &good]).status.code(), Some(1));
    assert_eq!(incflow(&["effres", &good, "--kappa", "2"]).status.code(), Some(1));
    assert_eq!(incflow(&["effres", &good, "--kappa", "2", "--backend", "trees"]).status.code(), Some(0));
    assert_eq!(incflow(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(incflow(&["maxflow", "--help"]).status.code(), Some(0));
    // overflowing weights: the energy of every flow is infinite
    let ov = write(
        dir.path(),
        "ov.txt",
        "problem pnorm n=2 mmax=1 p=2 F=1 eps=0.1\ndemand 1 -1\ndemand 2 1\nedge 1 2 w=1e200\nstart\n",
    );
    assert_eq!(incflow(&["pnorm", &ov]).status.code(), Some(2));
}

#[test]
fn bench_prints_one_line_per_stream() {
    let dir = tempfile::tempdir().unwrap();
    let a = write(dir.path(), "a.txt", TWO_RESISTORS);
    let b = write(dir.path(), "b.txt", &gen::phase_stress(0, 5, 0.5).to_string());
    let o = incflow(&["bench", &a, &b, "--json"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let recs: Vec<serde_json::Value> = stdout(&o).lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(recs.len(), 2);
    assert_eq!(recs[1]["problem"], "maxflow");
}
