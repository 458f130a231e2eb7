use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn corpus() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus")
}

fn rabmc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rabmc")).args(args).output().unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn visa_verifies_safe() {
    let o = rabmc(&["verify", path(&corpus().join("visa.rab"))]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.starts_with("property"));
    let safe: Vec<&str> = out.lines().filter(|l| l.contains(" SAFE ")).collect();
    assert_eq!(safe.len(), 1);
    assert!(safe[0].starts_with("rejected-notified"));
}

#[test]
fn declared_invariants_can_be_switched_off() {
    let visa = corpus().join("visa.rab");
    let iterations = |extra: &[&str]| {
        let mut args = vec!["verify", path(&visa), "--stats", "json"];
        args.extend_from_slice(extra);
        let o = rabmc(&args);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
        assert_eq!(v[0]["certificate"], "passed");
        v[0]["iterations"].as_u64().unwrap()
    };
    // The declared invariant excludes the unsafe states outright.
    assert_eq!(iterations(&[]), 0);
    assert!(iterations(&["--no-declared-invariants"]) >= 1);
}

#[test]
fn unsafe_property_exits_with_one() {
    let o = rabmc(&["verify", path(&corpus().join("chain.rab")), "--check-spurious"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).lines().any(|l| l.starts_with("shipped ") && l.contains("UNSAFE") && l.contains("genuine")));
}

#[test]
fn json_stats_follow_the_report_schema() {
    let o = rabmc(&["verify", path(&corpus().join("chain.rab")), "--stats", "json", "-p", "shipped"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let r = &v.as_array().unwrap()[0];
    assert_eq!(r["schema"], 1);
    assert_eq!(r["verdict"], "UNSAFE");
    assert_eq!(r["trace"], serde_json::json!(["stage", "check", "ship"]));
}

#[test]
fn reports_are_written_per_property() {
    let dir = tempfile::tempdir().unwrap();
    let o = rabmc(&["verify", path(&corpus().join("bank.rab")), "--report-dir", path(dir.path())]);
    assert_eq!(o.status.code(), Some(0));
    for p in ["overdrawn", "unowned-funds"] {
        let text = fs::read_to_string(dir.path().join(format!("bank.{p}.json"))).unwrap();
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["certificate"], "passed");
    }
}

#[test]
fn modes_agree_on_the_corpus() {
    for spec in ["batch.rab", "mutex.rab", "review.rab", "hiring.rab"] {
        let verdicts = |mode: &str| {
            let o = rabmc(&["verify", path(&corpus().join(spec)), "--mode", mode]);
            let lines: Vec<String> = stdout(&o).lines().skip(1).map(|l| l.split_whitespace().take(2).collect::<Vec<_>>().join(" ")).collect();
            (o.status.code(), lines)
        };
        assert_eq!(verdicts("inst"), verdicts("transform"), "{spec}");
    }
}

#[test]
fn missing_solver_names_the_variable() {
    let o = Command::new(env!("CARGO_BIN_EXE_rabmc"))
        .args(["verify", path(&corpus().join("visa.rab"))])
        .env("RABMC_SOLVER", "/nonexistent/z3")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("RABMC_SOLVER"));
    let o = Command::new(env!("CARGO_BIN_EXE_rabmc"))
        .args(["verify", path(&corpus().join("visa.rab"))])
        .env_remove("RABMC_SOLVER")
        .env("PATH", "")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("RABMC_SOLVER"));
}

#[test]
fn bad_input_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("bad.rab");
    fs::write(&f, "(sort D :value)\n(var x D\n").unwrap();
    let o = rabmc(&["verify", path(&f)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("bad.rab"));
    let o = rabmc(&["verify", path(&corpus().join("visa.rab")), "-p", "nope"]);
    assert_eq!(o.status.code(), Some(2));
    let o = rabmc(&["verify", path(&corpus().join("batch.rab")), "--mode", "exact-pre"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn bench_on_the_corpus_matches_every_sidecar() {
    let o = rabmc(&["bench", path(&corpus())]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = stdout(&o);
    let rows: Vec<Vec<&str>> = csv.lines().skip(1).map(|l| l.split(',').collect()).collect();
    assert!(rows.iter().filter(|r| r[0] == "property").all(|r| r[5] == "true"));
    assert_eq!(rows.last().unwrap()[0], "all");
}

#[test]
fn bench_reports_a_wrong_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    fs::copy(corpus().join("chain.rab"), dir.path().join("chain.rab")).unwrap();
    fs::write(dir.path().join("chain.expect"), "shipped SAFE\n").unwrap();
    let o = rabmc(&["bench", path(dir.path())]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("expected SAFE, got UNSAFE"));
}

#[test]
fn bench_on_an_empty_directory() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out.csv");
    let o = rabmc(&["bench", path(dir.path()), "--csv", path(&out)]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(fs::read_to_string(out).unwrap(), "");
}

#[test]
fn transform_matches_its_goldens() {
    for name in ["batch", "visa", "bank"] {
        for stage in ["tilde", "hat"] {
            let g = corpus().join("golden").join(format!("{name}.{stage}.rab"));
            let o = rabmc(&["transform", path(&corpus().join(format!("{name}.rab"))), "--stage", stage, "--golden", path(&g)]);
            assert_eq!(o.status.code(), Some(0), "{name} {stage}: {}", stderr(&o));
        }
    }
    let dir = tempfile::tempdir().unwrap();
    let g = dir.path().join("g.rab");
    fs::write(&g, "(theory none)\n").unwrap();
    let o = rabmc(&["transform", path(&corpus().join("batch.rab")), "--golden", path(&g)]);
    assert_eq!(o.status.code(), Some(1));
    let o = rabmc(&["transform", path(&corpus().join("batch.rab")), "--golden", path(&g), "--bless"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(fs::read_to_string(&g).unwrap(), fs::read_to_string(corpus().join("golden/batch.hat.rab")).unwrap());
}

#[test]
fn invariants_that_fail_are_not_used() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("inv.rab");
    fs::write(&f, "(invariant nothing-shipped (forall (i Slot)) (not (= (select st i) shipped)))\n").unwrap();
    let o = rabmc(&["verify", path(&corpus().join("chain.rab")), "-p", "shipped", "--invariant-file", path(&f)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("invariant `nothing-shipped` not preserved by ship"));
}

#[test]
fn oracle_finds_the_chain_counterexample() {
    let o = rabmc(&["oracle", path(&corpus().join("chain.rab"))]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("shipped: reachable in 3 steps"));
    let o = rabmc(&["oracle", path(&corpus().join("mutex.rab")), "--depth", "6"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("two-critical: not reached"));
}
