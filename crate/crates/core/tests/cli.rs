use std::path::Path;
use std::process::{Command, Output};

const LINE: &str = "m 3\nn 4\nk 2\nweights 1 1 0 0\ncosts\n0 5 10 11\n4 1 6 7\n10 5 0 1\n";

fn okm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_okm")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn field(out: &str, key: &str) -> f64 {
    out.lines()
        .find_map(|l| l.strip_prefix(key).map(|v| v.trim().parse().unwrap()))
        .unwrap_or_else(|| panic!("no `{key}` in\n{out}"))
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_owned()
}

#[test]
fn gen_then_validate() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.txt");
    let b = dir.path().join("b.txt");
    for p in [&a, &b] {
        let o = okm(&["gen", "--kind", "euclidean", "--m", "5", "--n", "8", "--k", "2", "--weights", "rect:3", "--seed", "9", "--out", p.to_str().unwrap()]);
        assert!(o.status.success());
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let o = okm(&["validate", a.to_str().unwrap()]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("metric true"));
}

#[test]
fn gen_rejects_bad_parameters() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x.txt");
    let o = okm(&["gen", "--kind", "random-metric", "--m", "2", "--n", "4", "--k", "3", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!out.exists());
}

#[test]
fn solve_rect_and_poly() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "i1.txt", LINE);
    let report = dir.path().join("r.json");
    let o = okm(&["solve", &p, "--variant", "rect", "--ell", "2", "--report", report.to_str().unwrap()]);
    assert!(o.status.success());
    let best = field(&stdout(&o), "best_cost");
    assert!(best <= 75.0);
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(json["best_cost"].as_f64(), Some(best));

    let o = okm(&["solve", &p, "--variant", "poly", "--eps", "0.5", "--trials", "2"]);
    assert!(o.status.success());
    assert!(field(&stdout(&o), "mean_cost") >= 5.0);
}

#[test]
fn oracle_on_line_instance() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "i1.txt", LINE);
    let o = okm(&["oracle", &p]);
    assert_eq!(field(&stdout(&o), "opt_cost"), 5.0);
    let o = okm(&["oracle", &p, "--ell", "4"]);
    assert_eq!(field(&stdout(&o), "opt_cost"), 6.0);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("none.txt");
    assert_eq!(okm(&["solve", missing.to_str().unwrap(), "--variant", "multi"]).status.code(), Some(4));

    let bad = write(dir.path(), "bad.txt", "m 1\nn 1\nk 1\nweights x\ncosts\n1\n");
    let o = okm(&["validate", &bad]);
    assert_eq!(o.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 4"));

    let nonmetric = write(dir.path(), "nm.txt", "m 2\nn 2\nk 1\nweights 1 1\ncosts\n0 10\n1 1\n");
    assert_eq!(okm(&["validate", &nonmetric]).status.code(), Some(4));

    let line = write(dir.path(), "i1.txt", LINE);
    assert_eq!(okm(&["solve", &line, "--variant", "multi", "--cap", "3"]).status.code(), Some(3));
    assert_eq!(okm(&["solve", &line, "--variant", "poly"]).status.code(), Some(2));
    assert_eq!(okm(&["solve", &line, "--variant", "nope"]).status.code(), Some(2));
}

#[test]
fn bench_writes_rows_and_aggregate() {
    let dir = tempfile::tempdir().unwrap();
    for s in 0..3 {
        let out = dir.path().join(format!("g{s}.txt"));
        let o = okm(&["gen", "--kind", "random-metric", "--m", "4", "--n", "5", "--k", "2", "--weights", "rect:2", "--seed", &s.to_string(), "--out", out.to_str().unwrap()]);
        assert!(o.status.success());
    }
    let o = okm(&["bench", dir.path().to_str().unwrap(), "--variant", "rect", "--trials", "3"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert_eq!(text.lines().filter(|l| l.starts_with('g')).count(), 3);
    assert!(text.contains("max over 3"));
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("bench.json")).unwrap()).unwrap();
    let rows = json["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 3);
    for r in rows {
        assert!(r["ratio"].as_f64().unwrap() >= 1.0 - 1e-9);
    }
}
