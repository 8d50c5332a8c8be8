use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn snap(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_snap")).args(args).output().unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn sample_then_verify_and_stats() {
    let dir = tempfile::tempdir().unwrap();
    let cnf = dir.path().join("f.cnf");
    let suite = dir.path().join("f.suite");
    let stats = dir.path().join("f.json");
    let gen = snap(&["gen-synth", "--vars", "60", "--seed", "3", "--out", p(&cnf)]);
    assert!(gen.status.success());

    let run = snap(&[
        "sample", p(&cnf), "--seed", "3", "--n-init", "20", "--out", p(&suite), "--stats", p(&stats),
    ]);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(&stats).unwrap()).unwrap();
    assert_eq!(json["engine"], "snap");
    assert_eq!(json["initial_samples"], 20);

    let v = snap(&["verify", p(&cnf), p(&suite)]);
    assert_eq!(v.status.code(), Some(0));
    assert!(stdout(&v).starts_with("ok: "));

    let s = snap(&["stats", p(&cnf), p(&suite), "--bins", "4"]);
    assert!(s.status.success());
    let out = stdout(&s);
    assert!(out.contains("validity_rate=1.000000"));
    assert!(out.contains("bucket_low,bucket_high,percent"));
}

#[test]
fn verify_names_the_failing_rows() {
    let dir = tempfile::tempdir().unwrap();
    let cnf = dir.path().join("f.cnf");
    let suite = dir.path().join("bad.suite");
    fs::write(&cnf, "p cnf 3 2\n1 2 0\n-1 3 0\n").unwrap();
    fs::write(&suite, "c snap suite v1 vars=3 tests=3 seed=0\n101\n100\n001\n").unwrap();
    let v = snap(&["verify", p(&cnf), p(&suite)]);
    assert_eq!(v.status.code(), Some(4));
    let out = stdout(&v);
    assert!(out.contains("row 2: invalid, falsifies 1 clause(s), first #2 (-1 3 0)"), "{out}");
    assert!(out.contains("row 3: invalid"), "{out}");
    assert!(!out.contains("row 1:"));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let unsat = dir.path().join("unsat.cnf");
    fs::write(&unsat, "p cnf 1 2\n1 0\n-1 0\n").unwrap();
    assert_eq!(snap(&["sample", p(&unsat)]).status.code(), Some(3));
    assert_eq!(snap(&["baseline", p(&unsat)]).status.code(), Some(3));

    let broken = dir.path().join("broken.cnf");
    fs::write(&broken, "p cnf 2 1\n1 3 0\n").unwrap();
    let o = snap(&["sample", p(&broken)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2"));

    assert_eq!(snap(&["sample", "/does/not/exist.cnf"]).status.code(), Some(2));
    assert_eq!(snap(&["sample"]).status.code(), Some(1));
    assert_eq!(snap(&["frobnicate"]).status.code(), Some(1));

    let ok = dir.path().join("ok.cnf");
    fs::write(&ok, "p cnf 2 1\n1 2 0\n").unwrap();
    assert_eq!(snap(&["sample", p(&ok), "--solver", "z3"]).status.code(), Some(2));
    assert_eq!(snap(&["sample", p(&ok), "--time-budget", "0"]).status.code(), Some(2));
    assert_eq!(snap(&["sample", p(&ok), "--k", "0"]).status.code(), Some(2));
}

#[test]
fn gen_synth_is_valid_dimacs() {
    let o = snap(&["gen-synth", "--vars", "30", "--ratio", "2.5", "--width", "4", "--seed", "9"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.starts_with("c planted vars=30 ratio=2.5 width=4 seed=9\n"));
    let f = snap_core::parse_dimacs(text.as_bytes()).unwrap();
    assert_eq!(f.num_vars(), 30);
    assert_eq!(f.num_clauses(), 75);
    assert_eq!(snap(&["gen-synth", "--vars", "2", "--width", "3"]).status.code(), Some(2));
}

#[test]
fn bench_writes_paired_report() {
    let dir = tempfile::tempdir().unwrap();
    let inst = dir.path().join("inst");
    fs::create_dir(&inst).unwrap();
    for seed in ["1", "2"] {
        let out = inst.join(format!("p{seed}.cnf"));
        assert!(snap(&["gen-synth", "--vars", "50", "--seed", seed, "--out", p(&out)]).status.success());
    }
    let report = dir.path().join("report.csv");
    let runs = dir.path().join("runs");
    let o = snap(&[
        "bench", "--instances", p(&inst), "--repeats", "2", "--n-init", "20", "--time-budget", "2",
        "--max-candidates", "2000", "--report", p(&report), "--out-dir", p(&runs),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(&report).unwrap();
    let mut lines = csv.lines();
    let header = lines.next().unwrap();
    assert!(header.contains("instance") && header.contains("engine"), "{header}");
    assert_eq!(lines.count(), 2 * 2 * 2);
    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(json["ratios"].as_array().unwrap().len(), 2);
    assert!(runs.join("p1.snap.s1.suite").exists());
    assert!(runs.join("p2.baseline.s2.stats.json").exists());
}
