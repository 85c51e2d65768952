use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

const BIN: &str = env!("CARGO_BIN_EXE_mipnl");

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("binary runs")
}

fn stdout_json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&o.stdout)))
}

fn tree(root: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            let rel = p.strip_prefix(root).unwrap().display().to_string();
            if p.is_dir() {
                out.insert(rel + "/", vec![]);
                stack.push(p);
            } else {
                out.insert(rel, fs::read(&p).unwrap());
            }
        }
    }
    out
}

const TWO_VAR: &str = "NAME two\nROWS\n N obj\n G c1\nCOLUMNS\n x1 obj 1 c1 1\n x2 obj 1 c1 1\nRHS\n rhs c1 1\nENDATA\n";

#[test]
fn analyze_two_variable_fixture() {
    let tmp = tempfile::tempdir().unwrap();
    let p = tmp.path().join("two.mps");
    fs::write(&p, TWO_VAR).unwrap();
    let o = run(&["analyze", p.to_str().unwrap()]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("2 vars, 1 rows, 4 nonzeros"), "{text}");
    let o = run(&["analyze", p.to_str().unwrap(), "--format", "json"]);
    assert_eq!(o.status.code(), Some(0));
    let v = stdout_json(&o);
    assert_eq!(v["families"][0]["name"], "c");
    assert_eq!(v["families"][0]["n_rows"], 1);
}

#[test]
fn generate_twice_gives_identical_trees() {
    let tmp = tempfile::tempdir().unwrap();
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    for d in [&a, &b] {
        let o = run(&["generate", "--name", "knapsack", "--seed", "7", "--n-items", "3", "--out", d.to_str().unwrap()]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    assert_eq!(tree(&a), tree(&b));
}

#[test]
fn knapsack_optimum_matches_subset_enumeration() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path().join("k");
    let o = run(&["generate", "--name", "knapsack", "--seed", "11", "--n-items", "3", "--out", d.to_str().unwrap(), "--format", "json"]);
    assert!(o.status.success());
    let reported = stdout_json(&o)["optimal_value"].as_f64().unwrap();

    let items: Vec<(f64, f64)> = fs::read_to_string(d.join("data/items.csv"))
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| {
            let f: Vec<f64> = l.split(',').map(|x| x.parse().unwrap()).collect();
            (f[1], f[2])
        })
        .collect();
    let params = fs::read_to_string(d.join("data/parameters.csv")).unwrap();
    let header: Vec<&str> = params.lines().next().unwrap().split(',').collect();
    let values: Vec<&str> = params.lines().nth(1).unwrap().split(',').collect();
    let cap: f64 = values[header.iter().position(|h| *h == "capacity").unwrap()].parse().unwrap();
    let mut best = 0.0f64;
    for mask in 0..8u32 {
        let (mut v, mut w) = (0.0, 0.0);
        for (i, it) in items.iter().enumerate() {
            if mask >> i & 1 == 1 {
                v += it.0;
                w += it.1;
            }
        }
        if w <= cap {
            best = best.max(v);
        }
    }
    assert_eq!(reported, best);
}

fn planted_corpus(root: &Path) -> Vec<(String, f64)> {
    let mut truths = Vec::new();
    for seed in 1..=3 {
        let d = root.join(format!("k{seed}"));
        let o = run(&["generate", "--name", "knapsack", "--seed", &seed.to_string(), "--n-items", "4", "--out", d.to_str().unwrap(), "--format", "json"]);
        let v = stdout_json(&o);
        truths.push((v["id"].as_str().unwrap().to_string(), v["optimal_value"].as_f64().unwrap()));
    }
    truths
}

#[test]
fn evaluate_planted_corpus() {
    let tmp = tempfile::tempdir().unwrap();
    let corpus = tmp.path().join("corpus");
    let t = planted_corpus(&corpus);
    // instance 1 passes at once, instance 2 on the second attempt, instance 3 crashes twice
    let lines = [
        format!(r#"{{"instance_id":"{}","attempt":1,"exit_status":"OK","reported_objective":{},"wall_seconds":1}}"#, t[0].0, t[0].1),
        format!(r#"{{"instance_id":"{}","attempt":1,"exit_status":"OK","reported_objective":{},"wall_seconds":1}}"#, t[1].0, t[1].1 + 1.0),
        format!(r#"{{"instance_id":"{}","attempt":2,"exit_status":"OK","reported_objective":{},"wall_seconds":1}}"#, t[1].0, t[1].1),
        format!(r#"{{"instance_id":"{}","attempt":1,"exit_status":"CRASH","wall_seconds":1}}"#, t[2].0),
        format!(r#"{{"instance_id":"{}","attempt":2,"exit_status":"CRASH","wall_seconds":1}}"#, t[2].0),
    ];
    let results = tmp.path().join("runs.jsonl");
    fs::write(&results, lines.join("\n") + "\n").unwrap();
    let passed = |n: &str| {
        let o = run(&["evaluate", "--results", results.to_str().unwrap(), "--instances", corpus.to_str().unwrap(), "--n", n, "--format", "json"]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        let v = stdout_json(&o);
        assert_eq!(v["overall"]["n_instances"], 3);
        (v["overall"]["n_passed"].as_u64().unwrap(), v["error_counts"].clone())
    };
    let (p1, e1) = passed("1");
    assert_eq!(p1, 1);
    assert_eq!(e1["EXECUTION"], 1);
    assert_eq!(e1["MODELING"], 1);
    assert_eq!(passed("2").0, 2);
}

#[test]
fn inspect_localizes_injected_row() {
    let tmp = tempfile::tempdir().unwrap();
    let w = |name: &str, text: &str| {
        let p = tmp.path().join(name);
        fs::write(&p, text).unwrap();
        p.to_str().unwrap().to_string()
    };
    let reference = w("ref.mps", "NAME r\nROWS\n N obj\nCOLUMNS\n x obj 1\nBOUNDS\n BV BND x\nENDATA\n");
    let candidate = w(
        "cand.mps",
        "NAME c\nROWS\n N obj\n G force\nCOLUMNS\n x obj 1 force 1\nRHS\n rhs force 1\nBOUNDS\n BV BND x\nENDATA\n",
    );
    let cs = w("cs.json", r#"{"x": 1}"#);
    let rs = w("rs.json", r#"{"x": 0}"#);
    let o = run(&["inspect", "--candidate", &candidate, "--reference", &reference, "--cand-sol", &cs, "--ref-sol", &rs, "--sense", "min"]);
    assert!(o.status.success());
    let v = stdout_json(&o);
    assert_eq!(v["verdict"], "OVER_CONSTRAINED");
    assert_eq!(v["violated_in_candidate"][0]["name"], "force");

    let o = run(&["inspect", "--candidate", &candidate, "--reference", &reference, "--cand-sol", &rs, "--ref-value", "0"]);
    assert_eq!(o.status.code(), Some(1));
    let err: Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(err["error"]["code"], "INFEASIBLE_CANDIDATE_SOLUTION");
}

#[test]
fn oracle_json_output() {
    let tmp = tempfile::tempdir().unwrap();
    let p = tmp.path().join("two.mps");
    fs::write(&p, TWO_VAR.replace("COLUMNS\n", "COLUMNS\n MARKER 'MARKER' 'INTORG'\n").replace("RHS\n", " MARKER 'MARKER' 'INTEND'\nRHS\n")).unwrap();
    let o = run(&["oracle", "--mps", p.to_str().unwrap(), "--legacy-int-bounds"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v = stdout_json(&o);
    assert_eq!(v["status"], "OPTIMAL");
    assert_eq!(v["objective"], 1.0);
}

#[test]
fn exit_codes() {
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(run(&["generate", "--name", "roster", "--n-items", "3"]).status.code(), Some(2));
    assert_eq!(run(&["analyze", "/nonexistent/x.mps"]).status.code(), Some(1));
    let o = run(&["analyze", "/nonexistent/x.mps", "--format", "json"]);
    let err: Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(err["error"]["code"], "IO");

    let tmp = tempfile::tempdir().unwrap();
    let bad = tmp.path().join("bad.mps");
    fs::write(&bad, "NAME b\nROWS\n Q obj\nENDATA\n").unwrap();
    let o = run(&["analyze", bad.to_str().unwrap(), "--format", "json"]);
    assert_eq!(o.status.code(), Some(1));
    let err: Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(err["error"]["code"], "SYNTAX");
}

#[test]
fn stats_and_extract_round_trip() {
    let tmp = tempfile::tempdir().unwrap();
    let g = tmp.path().join("g");
    assert!(run(&["generate", "--name", "setcover", "--seed", "2", "--out", g.to_str().unwrap()]).status.success());
    let e = tmp.path().join("e");
    let mps = g.join("model.mps");
    let o = run(&["extract", mps.to_str().unwrap(), "--out", e.to_str().unwrap(), "--major-category", "Covering"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let o = run(&["stats", g.to_str().unwrap(), e.to_str().unwrap(), "--validate", "--format", "json"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stdout));
    let v = stdout_json(&o);
    assert_eq!(v["corpus"]["n_instances"], 2);
}

#[test]
fn help_snapshots() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/snapshots");
    let mut cases = vec![(vec!["--help"], "help.txt".to_string())];
    for c in ["analyze", "extract", "generate", "inspect", "evaluate", "oracle", "stats"] {
        cases.push((vec![c, "--help"], format!("help_{c}.txt")));
    }
    for (args, file) in cases {
        let o = run(&args);
        assert!(o.status.success());
        let want = fs::read_to_string(dir.join(&file)).unwrap();
        assert_eq!(String::from_utf8(o.stdout).unwrap(), want, "{file}");
    }
    let gen = fs::read_to_string(dir.join("help_generate.txt")).unwrap();
    for flag in ["--seed", "--out", "--n-nodes", "--n-commodities", "--density", "--n-people", "--n-periods", "--window",
        "--max-shifts", "--min-cover", "--fixed-assignments", "--n-elements", "--n-sets", "--n-items",
        "--capacity-ratio", "--n-jobs", "--n-blocks", "--smoothing", "--format", "--dialect", "--legacy-int-bounds"]
    {
        assert!(gen.contains(flag), "{flag}");
    }
}
