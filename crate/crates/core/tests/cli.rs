mod common;

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use common::{script, ENROLL_COPY, MATCH_CHECKSUM};

fn veinrate(cwd: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_veinrate"))
        .current_dir(cwd)
        .args(args)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[track_caller]
fn ok(o: Output) -> String {
    assert!(o.status.success(), "exit {:?}\n{}", o.status.code(), stderr(&o));
    stdout(&o)
}

/// Relative path -> contents for every file under `root`.
fn tree(root: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(root).unwrap().display().to_string();
                out.insert(rel, fs::read(&p).unwrap());
            }
        }
    }
    out
}

#[test]
fn gen_data_counts_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["gen-data", "--classes", "50", "--samples", "5", "--tier", "1", "--seed", "42"];
    let a: Vec<&str> = args.iter().copied().chain(["--out", "ds1"]).collect();
    let b: Vec<&str> = args.iter().copied().chain(["--out", "ds2"]).collect();
    ok(veinrate(dir.path(), &a));
    ok(veinrate(dir.path(), &b));
    let t1 = tree(&dir.path().join("ds1"));
    assert_eq!(t1.keys().filter(|k| k.ends_with(".bmp")).count(), 250);
    assert!(t1.contains_key("dataset.json"));
    assert_eq!(t1, tree(&dir.path().join("ds2")));
}

#[test]
fn usage_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let o = veinrate(dir.path(), &["gen-data", "--classes", "2", "--samples", "2", "--tier", "4", "--out", "x"]);
    assert_eq!(o.status.code(), Some(2));
    let o = veinrate(dir.path(), &["gen-data", "--classes", "2", "--tier", "1", "--out", "x"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("--samples"));
    assert_eq!(veinrate(dir.path(), &["frobnicate"]).status.code(), Some(2));
    assert_eq!(veinrate(dir.path(), &["--help"]).status.code(), Some(0));
}

#[test]
fn gen_bench_thousand_class_counts() {
    let dir = tempfile::tempdir().unwrap();
    ok(veinrate(
        dir.path(),
        &["gen-data", "--classes", "1000", "--samples", "5", "--tier", "1", "--width", "8", "--height", "8", "--out", "ds"],
    ));
    let out = ok(veinrate(
        dir.path(),
        &["gen-bench", "--dataset", "ds", "--strategy", "allInnerOneInter", "--seed", "1", "--out", "a.bench"],
    ));
    assert_eq!(out.trim(), "genuine=10000 imposter=499500");
    let out = ok(veinrate(dir.path(), &["gen-bench", "--dataset", "ds", "--strategy", "general", "--seed", "1", "--out", "g.bench"]));
    assert_eq!(out.trim(), "genuine=10000 imposter=10000");
    ok(veinrate(dir.path(), &["gen-bench", "--dataset", "ds", "--strategy", "general", "--seed", "1", "--out", "g2.bench"]));
    assert_eq!(fs::read(dir.path().join("g.bench")).unwrap(), fs::read(dir.path().join("g2.bench")).unwrap());
}

#[test]
fn gen_bench_one_class_fails() {
    let dir = tempfile::tempdir().unwrap();
    ok(veinrate(dir.path(), &["gen-data", "--classes", "1", "--samples", "3", "--tier", "1", "--out", "ds"]));
    let o = veinrate(dir.path(), &["gen-bench", "--dataset", "ds", "--strategy", "general", "--out", "b"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(!stderr(&o).is_empty());
}

fn small_setup(dir: &Path) {
    ok(veinrate(dir, &["gen-data", "--classes", "10", "--samples", "3", "--tier", "1", "--seed", "3", "--out", "ds"]));
    ok(veinrate(dir, &["gen-bench", "--dataset", "ds", "--strategy", "allInnerOneInter", "--seed", "2", "--out", "b.bench"]));
}

#[test]
fn builtin_run_writes_all_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    small_setup(dir.path());
    let out = ok(veinrate(dir.path(), &["run", "--benchmark", "b.bench", "--dataset", "ds", "--builtin", "t9", "--out", "r"]));
    let line = out.lines().last().unwrap();
    assert!(line.starts_with("EER=") && line.contains(" FMR100=") && line.contains(" FMR1000="), "{line}");
    assert!(line.ends_with("FTE=0 FTM=0"), "{line}");
    for f in ["scores.csv", "report.json", "det.csv", "det.svg", "histograms.csv", "run.json"] {
        assert!(dir.path().join("r").join(f).is_file(), "{f}");
    }

    // policies agree when nothing failed
    let out2 = ok(veinrate(
        dir.path(),
        &["run", "--benchmark", "b.bench", "--dataset", "ds", "--builtin", "t9", "--policy", "revised", "--out", "r2"],
    ));
    let eer = |s: &str| s.split_whitespace().next().unwrap().to_string();
    assert_eq!(eer(&out), eer(&out2));

    // re-analysis reproduces the run's report
    let rep = ok(veinrate(dir.path(), &["report", "--scores", "r/scores.csv", "--out", "rep"]));
    assert_eq!(rep, out);
    assert_eq!(fs::read(dir.path().join("r/report.json")).unwrap(), fs::read(dir.path().join("rep/report.json")).unwrap());
    assert_eq!(fs::read(dir.path().join("r/det.csv")).unwrap(), fs::read(dir.path().join("rep/det.csv")).unwrap());
}

#[test]
fn external_run_matches_report_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    small_setup(dir.path());
    let e = script(dir.path(), "enroll.sh", ENROLL_COPY);
    let m = script(dir.path(), "match.sh", MATCH_CHECKSUM);
    let out = ok(veinrate(
        dir.path(),
        &[
            "run", "--benchmark", "b.bench", "--dataset", "ds",
            "--enroll-cmd", e.to_str().unwrap(), "--match-cmd", m.to_str().unwrap(),
            "--workers", "3", "--out", "ext",
        ],
    ));
    let rep = ok(veinrate(dir.path(), &["report", "--scores", "ext/scores.csv", "--out", "rep"]));
    assert_eq!(out, rep);
    assert_eq!(fs::read(dir.path().join("ext/report.json")).unwrap(), fs::read(dir.path().join("rep/report.json")).unwrap());
    let run: serde_json::Value = serde_json::from_slice(&fs::read(dir.path().join("ext/run.json")).unwrap()).unwrap();
    assert_eq!(run["mode"], "external");
    assert_eq!(run["memory_enforcement"], "rss-poll-50ms");
    assert_eq!(run["workers"], 3);
}

#[test]
fn failed_metrics_keep_scores() {
    let dir = tempfile::tempdir().unwrap();
    small_setup(dir.path());
    let e = script(dir.path(), "enroll.sh", "exit 1");
    let m = script(dir.path(), "match.sh", "echo 0.5");
    let o = veinrate(
        dir.path(),
        &["run", "--benchmark", "b.bench", "--dataset", "ds", "--enroll-cmd", e.to_str().unwrap(), "--match-cmd", m.to_str().unwrap(), "--out", "r"],
    );
    assert_eq!(o.status.code(), Some(1));
    let scores = fs::read_to_string(dir.path().join("r/scores.csv")).unwrap();
    assert_eq!(scores.lines().filter(|l| l.contains(",fte_left,")).count(), 75);
}

#[test]
fn run_rejects_ambiguous_matcher() {
    let dir = tempfile::tempdir().unwrap();
    small_setup(dir.path());
    let o = veinrate(dir.path(), &["run", "--benchmark", "b.bench", "--builtin", "t9", "--match-cmd", "/bin/true", "--out", "r"]);
    assert_eq!(o.status.code(), Some(2));
    let o = veinrate(dir.path(), &["run", "--benchmark", "b.bench", "--builtin", "t5", "--out", "r"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("unknown matcher"));
}

#[test]
fn report_worked_example() {
    let dir = tempfile::tempdir().unwrap();
    let csv = "pair_index,kind,status,score,match_time_ms\n0,G,ok,0.9,\n1,G,ok,0.8,\n2,G,ok,0.3,\n3,I,ok,0.1,\n4,I,ok,0.2,\n5,I,ok,0.7,\n";
    fs::write(dir.path().join("s.csv"), csv).unwrap();
    let out = ok(veinrate(dir.path(), &["report", "--scores", "s.csv", "--out", "r"]));
    assert_eq!(out.trim(), "EER=0.333333 FMR100=0.333333 FMR1000=0.333333 FTE=0 FTM=0");
    let rep: serde_json::Value = serde_json::from_slice(&fs::read(dir.path().join("r/report.json")).unwrap()).unwrap();
    assert_eq!(rep["eer"].as_f64().unwrap(), 1.0 / 3.0);
}

#[test]
fn report_errors() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("empty.csv"), "pair_index,kind,status,score,match_time_ms\n").unwrap();
    let o = veinrate(dir.path(), &["report", "--scores", "empty.csv", "--out", "r"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("no genuine records"));
    fs::write(dir.path().join("bad.csv"), "pair_index,kind,status,score,match_time_ms\n0,G,ok,0.5,\n1,G,ok,zzz,\n").unwrap();
    let o = veinrate(dir.path(), &["report", "--scores", "bad.csv", "--out", "r"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("row 3"), "{}", stderr(&o));
}

#[test]
fn config_file_precedence() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("c.conf"), "# shared settings\nclasses=3\nsamples=2\ntier=1\nseed=5\nout=from_config\n").unwrap();
    ok(veinrate(dir.path(), &["--config", "c.conf", "gen-data"]));
    assert_eq!(tree(&dir.path().join("from_config")).len(), 7);
    ok(veinrate(dir.path(), &["gen-data", "--config", "c.conf", "--samples", "1", "--out", "from_flags"]));
    assert_eq!(tree(&dir.path().join("from_flags")).len(), 4);
    fs::write(dir.path().join("bad.conf"), "tier=4\nclasses=1\nsamples=1\nout=z\n").unwrap();
    assert_eq!(veinrate(dir.path(), &["--config", "bad.conf", "gen-data"]).status.code(), Some(2));
    fs::write(dir.path().join("unknown.conf"), "colour=blue\n").unwrap();
    assert_eq!(veinrate(dir.path(), &["--config", "unknown.conf", "gen-data"]).status.code(), Some(2));
}
