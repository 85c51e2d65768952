//! One PASS / FAIL / SKIP line per acceptance criterion. Optional corpus
//! checks run when MIPNL_MIPLIB_DIR or MIPNL_CORPUS_DIR point at local copies.

mod common;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde_json::Value;

use mipnl::classify::{classify_all, ClassifyOptions};
use mipnl::generators::{
    generate, GeneratorParams, HarvestParams, KnapsackParams, McndParams, PairwiseParams, RosterParams, SetcoverParams,
};
use mipnl::inspector::{classify_deviation, diagnose, DiagnoseOptions, Verdict};
use mipnl::metrics::{compare_objective, pass_at_n, ExitStatus, RunArtifact, ScaleBucket};
use mipnl::mps::{
    evaluate_solution, read_mps_file, Model, ModelParts, ObjectiveSense, Row, RowSense, Solution,
};
use mipnl::oracle::{enumerate_points, solve_exhaustive, verify_optimum};
use mipnl::schema::{
    compute_cr, corpus_stats, discover_instances, validate_instance, write_record, FileRef, InstanceRecord, ProblemType,
    SizeUnit, Status, Verification,
};

enum Outcome {
    Pass(String),
    Fail(String),
    Skip(String),
}

fn verdict(ok: bool, detail: String) -> Outcome {
    if ok {
        Outcome::Pass(detail)
    } else {
        Outcome::Fail(detail)
    }
}

fn find_mps(dir: &Path, stem: &str) -> Option<PathBuf> {
    [format!("{stem}.mps"), format!("{stem}.mps.gz")].into_iter().map(|f| dir.join(f)).find(|p| p.is_file())
}

fn mps_fidelity() -> Outcome {
    let Ok(dir) = std::env::var("MIPNL_MIPLIB_DIR") else {
        return Outcome::Skip("MIPNL_MIPLIB_DIR not set (needs ex9.mps and wachplan.mps)".into());
    };
    let dir = PathBuf::from(dir);
    let mut details = Vec::new();
    let mut ok = true;
    for (stem, want) in [("ex9", 517_112usize), ("wachplan", 89_361)] {
        let Some(path) = find_mps(&dir, stem) else {
            return Outcome::Skip(format!("{stem}.mps not found in {}", dir.display()));
        };
        let t = Instant::now();
        match read_mps_file(&path, &Default::default()) {
            Ok(m) => {
                let secs = t.elapsed().as_secs_f64();
                let nz = m.stats().n_nonzeros;
                ok &= nz == want && secs < 10.0;
                details.push(format!("{stem} nonzeros {nz} (want {want}) in {secs:.2}s"));
            }
            Err(e) => {
                ok = false;
                details.push(format!("{stem}: {e}"));
            }
        }
    }
    verdict(ok, details.join("; "))
}

fn record_with_sizes(id: &str, mps_bytes: u64, nl_bytes: usize, data_bytes: usize) -> InstanceRecord {
    let abstract_problem = "n".repeat(nl_bytes);
    InstanceRecord {
        id: id.into(),
        problem_type: ProblemType { major_category: "Test".into(), subcategory: "Sizes".into() },
        abstract_problem,
        parameters: BTreeMap::new(),
        files: vec![FileRef { path: "data/pad.csv".into(), description: "padding".into(), schema: vec!["v".into()] }],
        concrete_problem: None,
        mathematical_formulation: "model.md".into(),
        solver_code: "solve.py".into(),
        generator_code: "generator.py".into(),
        optimal_value: None,
        verification: Verification { status: Status::Unknown, runtime: None, gap: None, log_paths: vec![] },
        metadata: BTreeMap::from([("mps_bytes".to_string(), Value::from(mps_bytes)), ("_pad".to_string(), Value::from(data_bytes))]),
    }
}

fn compression_formula() -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    let mut details = Vec::new();
    let mut ok = true;
    // recorded sizes in KB: MPS, NL plus data, and the reported ratio
    for (name, mps_kb, small_kb, want) in [("ex9", 15_917u64, 3.29f64, 4.84e3), ("wachplan", 5_861, 2.77, 2.12e3)] {
        let dir = tmp.path().join(name);
        fs::create_dir_all(dir.join("data")).unwrap();
        let small = (small_kb * 1000.0).round() as usize;
        let nl = small / 3;
        let data = small - nl;
        let body = "v\n".to_string() + &"1".repeat(data - 3) + "\n";
        assert_eq!(body.len(), data);
        fs::write(dir.join("data/pad.csv"), body).unwrap();
        write_record(&dir, &record_with_sizes(name, mps_kb * 1000, nl, data)).unwrap();
        let c = compute_cr(&dir).unwrap();
        let rel = (c.cr - want).abs() / want;
        ok &= rel <= 0.005 && c.nl_bytes as usize == nl && c.data_bytes as usize == data;
        details.push(format!("{name} CR {:.2} vs {want:.3e} ({:.3}%)", c.cr, rel * 100.0));
    }
    verdict(ok, details.join("; "))
}

fn corpus_statistics() -> Outcome {
    let Ok(dir) = std::env::var("MIPNL_CORPUS_DIR") else {
        return Outcome::Skip("MIPNL_CORPUS_DIR not set (needs the released instance corpus)".into());
    };
    let dirs = match discover_instances(Path::new(&dir)) {
        Ok(d) if !d.is_empty() => d,
        Ok(_) => return Outcome::Skip(format!("no instances under {dir}")),
        Err(e) => return Outcome::Fail(e.to_string()),
    };
    let s = match corpus_stats(&dirs, SizeUnit::Decimal) {
        Ok(s) => s,
        Err(e) => return Outcome::Fail(e.to_string()),
    };
    let (g, f) = (s.n_groups, s.n_families);
    let ok = (s.cr.median * 10.0).round() == 65.0
        && s.cr.max.round() == 293_277.0
        && g.is_some_and(|g| g.median == 2.0 && g.max == 9.0)
        && f.is_some_and(|f| f.median == 3.0 && f.max == 14.0);
    verdict(
        ok,
        format!(
            "{} instances: CR median {} max {}; groups {:?}; families {:?}",
            s.n_instances, s.cr.median, s.cr.max, g, f
        ),
    )
}

fn matrix() -> Vec<GeneratorParams> {
    let mut out = Vec::new();
    for seed in [1u64, 2, 3] {
        out.push(GeneratorParams::Mcnd(McndParams { seed, ..Default::default() }));
        out.push(GeneratorParams::Mcnd(McndParams { seed, n_nodes: 8, n_commodities: 1, density: 0.3 }));
        out.push(GeneratorParams::Mcnd(McndParams { seed, n_nodes: 4, n_commodities: 2, density: 1.0 }));
        out.push(GeneratorParams::Roster(RosterParams { seed, ..Default::default() }));
        out.push(GeneratorParams::Roster(RosterParams {
            seed,
            n_people: 8,
            n_periods: 28,
            window: 6,
            max_shifts: 2,
            ..Default::default()
        }));
        out.push(GeneratorParams::Roster(RosterParams {
            seed,
            n_people: 3,
            n_periods: 10,
            window: 4,
            max_shifts: 2,
            min_cover: 1,
            fixed_assignments: true,
        }));
        out.push(GeneratorParams::Setcover(SetcoverParams { seed, ..Default::default() }));
        out.push(GeneratorParams::Setcover(SetcoverParams { seed, n_elements: 30, n_sets: 12, density: 0.2 }));
        out.push(GeneratorParams::Knapsack(KnapsackParams { seed, n_items: 3, ..Default::default() }));
        out.push(GeneratorParams::Knapsack(KnapsackParams { seed, n_items: 25, capacity_ratio: 0.3 }));
        out.push(GeneratorParams::Pairwise(PairwiseParams { seed, n_jobs: 3 }));
        out.push(GeneratorParams::Pairwise(PairwiseParams { seed, n_jobs: 6 }));
        out.push(GeneratorParams::Harvest(HarvestParams { seed, ..Default::default() }));
        out.push(GeneratorParams::Harvest(HarvestParams { seed, n_blocks: 6, n_periods: 5, smoothing: 0.2 }));
    }
    out
}

fn scaffold_round_trip() -> Outcome {
    let t = Instant::now();
    let tmp = tempfile::tempdir().unwrap();
    let (mut labels, mut labels_ok, mut counts_ok) = (0usize, 0usize, 0usize);
    let mut misses = Vec::new();
    let params = matrix();
    for (k, p) in params.iter().enumerate() {
        let g = generate(p, &tmp.path().join(k.to_string())).unwrap();
        let report = classify_all(&g.model, &ClassifyOptions::default());
        for (family, label) in &g.declared_labels {
            labels += 1;
            let got = report.family(family);
            if got.and_then(|f| f.scaffold) == Some(*label) {
                labels_ok += 1;
            } else {
                misses.push(format!("{}/{family}", g.record.id));
            }
            if got.map(|f| f.n_rows) == Some(g.declared_counts[family]) {
                counts_ok += 1;
            }
        }
        if report.families.len() != g.declared_labels.len() {
            misses.push(format!("{}: {} families mined", g.record.id, report.families.len()));
        }
    }
    let secs = t.elapsed().as_secs_f64();
    let ok = params.len() >= 40 && labels_ok == labels && counts_ok == labels && misses.is_empty() && secs < 60.0;
    verdict(
        ok,
        format!(
            "{} instances, labels {labels_ok}/{labels}, counts {counts_ok}/{labels}, {secs:.1}s{}",
            params.len(),
            if misses.is_empty() { String::new() } else { format!(", misses {misses:?}") }
        ),
    )
}

fn tree(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            let rel = p.strip_prefix(root).unwrap().to_path_buf();
            if p.is_dir() {
                out.insert(rel, Vec::new());
                stack.push(p);
            } else {
                out.insert(rel, fs::read(&p).unwrap());
            }
        }
    }
    out
}

fn generator_contract() -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    let params = matrix();
    let (mut identical, mut clean) = (0usize, 0usize);
    let mut bad = Vec::new();
    for (k, p) in params.iter().enumerate() {
        let a = generate(p, &tmp.path().join(format!("{k}a"))).unwrap();
        let b = generate(p, &tmp.path().join(format!("{k}b"))).unwrap();
        if tree(&a.dir) == tree(&b.dir) {
            identical += 1;
        } else {
            bad.push(format!("{} differs", a.record.id));
        }
        let v = validate_instance(&a.dir);
        if v.is_empty() {
            clean += 1;
        } else {
            bad.push(format!("{}: {} violations", a.record.id, v.len()));
        }
    }
    let n = params.len();
    verdict(
        identical == n && clean == n,
        format!("{identical}/{n} byte-identical, {clean}/{n} schema-clean{}", if bad.is_empty() { String::new() } else { format!(" {bad:?}") }),
    )
}

fn oracle_equivalence() -> Outcome {
    let t = Instant::now();
    let (mut points, mut disagreements, mut unbeaten) = (0u64, 0u64, 0usize);
    let models = 100;
    for seed in 0..models {
        let m = common::random_binary_model(1000 + seed, 12, 20);
        enumerate_points(&m, 1 << 12, |x, feasible, obj| {
            points += 1;
            let e = evaluate_solution(&m, &Solution::from_dense(&m, x), 1e-9).unwrap();
            if e.is_feasible() != feasible || common::feasible(&m, x) != feasible || e.objective != obj {
                disagreements += 1;
            }
        })
        .unwrap();
        let r = solve_exhaustive(&m, 1 << 12).unwrap();
        let ok = match (r.objective, common::brute_force(&m)) {
            (Some(v), Some(b)) => v == b && verify_optimum(&m, v, 1 << 12).unwrap(),
            (None, None) => true,
            _ => false,
        };
        unbeaten += ok as usize;
    }
    let secs = t.elapsed().as_secs_f64();
    verdict(
        disagreements == 0 && unbeaten == models as usize && secs < 30.0,
        format!("{models} models, {points} points, {disagreements} disagreements, {unbeaten} optima unbeaten, {secs:.1}s"),
    )
}

fn with_rows(base: &Model, rows: Vec<Row>, obj_flip: bool) -> Model {
    let p = base.parts();
    let mut all = vec![p.rows[p.objective_row].clone()];
    let mut sense = p.objective_sense;
    if obj_flip {
        for t in &mut all[0].terms {
            t.1 = -t.1;
        }
        sense = sense.flipped();
    }
    all.extend(rows);
    Model::from_parts(ModelParts {
        name: p.name.clone(),
        variables: p.variables.clone(),
        rows: all,
        objective_row: 0,
        objective_sense: sense,
        objective_constant: p.objective_constant,
    })
    .unwrap()
}

fn constraints(m: &Model) -> Vec<Row> {
    m.constraint_rows().map(|i| m.rows()[i].clone()).collect()
}

/// Row excluding exactly the point `x`.
fn no_good(x: &[f64]) -> Row {
    let ones = x.iter().filter(|&&v| v == 1.0).count() as f64;
    let terms = x.iter().enumerate().map(|(j, &v)| (j, if v == 1.0 { -1.0 } else { 1.0 })).collect();
    Row::new("injected", RowSense::G, 1.0 - ones, terms)
}

struct Case {
    kind: &'static str,
    want: Verdict,
    row: Option<String>,
    candidate: Model,
    reference: Model,
    cand: (f64, Vec<f64>),
    refr: (f64, Vec<f64>),
}

fn distinct(a: f64, b: f64) -> bool {
    (a - b).abs() > 1e-6 * b.abs().max(1.0) && (a + b).abs() > 1e-6 * b.abs().max(1.0)
}

fn inspector_cases() -> Vec<Case> {
    let mut cases = Vec::new();
    let (mut extra, mut deleted, mut flipped) = (0, 0, 0);
    let mut seed = 5000;
    while extra + deleted + flipped < 25 {
        seed += 1;
        let base = common::random_binary_model(seed, 6, 5);
        let Some(refr) = common::brute_force_witness(&base) else { continue };
        match seed % 3 {
            0 if extra < 9 => {
                let mut rows = constraints(&base);
                rows.push(no_good(&refr.1));
                let cand_model = with_rows(&base, rows, false);
                let Some(cand) = common::brute_force_witness(&cand_model) else { continue };
                if !distinct(cand.0, refr.0) {
                    continue;
                }
                extra += 1;
                cases.push(Case {
                    kind: "extra",
                    want: Verdict::OverConstrained,
                    row: Some("injected".into()),
                    candidate: cand_model,
                    reference: base,
                    cand,
                    refr,
                });
            }
            1 if deleted < 8 => {
                let rows = constraints(&base);
                if rows.is_empty() {
                    continue;
                }
                let k = (seed as usize / 3) % rows.len();
                let mut kept = rows.clone();
                let gone = kept.remove(k);
                let cand_model = with_rows(&base, kept, false);
                let Some(cand) = common::brute_force_witness(&cand_model) else { continue };
                if !distinct(cand.0, refr.0) {
                    continue;
                }
                deleted += 1;
                cases.push(Case {
                    kind: "deleted",
                    want: Verdict::UnderConstrained,
                    row: Some(gone.name),
                    candidate: cand_model,
                    reference: base,
                    cand,
                    refr,
                });
            }
            2 if flipped < 8 => {
                if refr.0.abs() < 1.0 {
                    continue;
                }
                let cand_model = with_rows(&base, constraints(&base), true);
                let Some(cand) = common::brute_force_witness(&cand_model) else { continue };
                flipped += 1;
                cases.push(Case {
                    kind: "flipped",
                    want: Verdict::DirectionMismatch,
                    row: None,
                    candidate: cand_model,
                    reference: base,
                    cand,
                    refr,
                });
            }
            _ => {}
        }
    }
    cases
}

fn inspector_correctness() -> Outcome {
    let cases = inspector_cases();
    let mut good = 0usize;
    let mut bad = Vec::new();
    for (k, c) in cases.iter().enumerate() {
        let cs = Solution::from_dense(&c.candidate, &c.cand.1);
        let rs = Solution::from_dense(&c.reference, &c.refr.1);
        let opts = DiagnoseOptions { sense: c.reference.objective_sense(), ..Default::default() };
        let r = match diagnose(&c.candidate, &c.reference, &cs, Some(&rs), &opts) {
            Ok(r) => r,
            Err(e) => {
                bad.push(format!("#{k} {}: {e}", c.kind));
                continue;
            }
        };
        let names = |l: &Option<Vec<mipnl::mps::Violation>>| -> Option<Vec<String>> {
            l.as_ref().map(|v| v.iter().map(|x| x.name.clone()).collect())
        };
        let localized = match c.want {
            Verdict::OverConstrained => {
                names(&r.violated_in_candidate) == Some(vec![c.row.clone().unwrap()]) && r.violated_in_reference.is_none()
            }
            Verdict::UnderConstrained => {
                names(&r.violated_in_reference).is_some_and(|v| v.contains(c.row.as_ref().unwrap()))
                    && r.violated_in_candidate.is_none()
            }
            _ => r.violated_in_candidate.as_ref().is_some_and(|v| v.is_empty()),
        };
        if r.verdict == c.want && localized {
            good += 1;
        } else {
            bad.push(format!("#{k} {}: got {:?}", c.kind, r.verdict));
        }
    }
    let sc = classify_deviation(310.0, 345.0, ObjectiveSense::Max, 1e-6).ok();
    let kinds = ["extra", "deleted", "flipped"].map(|k| cases.iter().filter(|c| c.kind == k).count());
    verdict(
        cases.len() == 25 && good == 25 && sc == Some(Verdict::OverConstrained),
        format!(
            "{good}/{} pairs (extra {}, deleted {}, flipped {}); 310 vs 345 MAX -> {:?}{}",
            cases.len(),
            kinds[0],
            kinds[1],
            kinds[2],
            sc,
            if bad.is_empty() { String::new() } else { format!(" {bad:?}") }
        ),
    )
}

fn metrics() -> Outcome {
    let pass = compare_objective(345.0000001, 345.0, 1e-6) == Ok(true);
    let fail = compare_objective(310.0, 345.0, 1e-6) == Ok(false);
    let want = [
        (499, ScaleBucket::Small),
        (500, ScaleBucket::Medium),
        (999, ScaleBucket::Medium),
        (1000, ScaleBucket::Large),
        (9999, ScaleBucket::Large),
        (10000, ScaleBucket::VeryLarge),
    ];
    let buckets = want.iter().all(|&(s, b)| ScaleBucket::of_size(s) == b);
    let mut rng = common::TestRng::new(77);
    let mut monotone = true;
    for _ in 0..500 {
        let truth = rng.int(-5, 5) as f64;
        let len = rng.below(9) as usize;
        let arts: Vec<RunArtifact> = (0..len)
            .map(|k| {
                let crash = rng.below(4) == 0;
                RunArtifact {
                    instance_id: "i".into(),
                    attempt: k + 1,
                    exit_status: if crash { ExitStatus::Crash } else { ExitStatus::Ok },
                    reported_objective: (!crash).then(|| rng.int(-5, 5) as f64),
                    wall_seconds: 0.0,
                    stderr_excerpt: None,
                }
            })
            .collect();
        let mut prev = false;
        for n in 1..=10 {
            let now = pass_at_n(&arts, truth, n, 1e-6);
            monotone &= !prev || now;
            prev = now;
        }
    }
    verdict(
        pass && fail && buckets && monotone,
        format!("345.0000001~345 {pass}, 310!~345 {fail}, buckets {buckets}, pass_at_n monotone over 500 sets {monotone}"),
    )
}

fn cr_ladder() -> String {
    let tmp = tempfile::tempdir().unwrap();
    let mut parts = Vec::new();
    for n in [5, 10, 20] {
        let p = GeneratorParams::Mcnd(McndParams { seed: 1, n_nodes: n, n_commodities: n / 2, density: 0.3 });
        let g = generate(&p, &tmp.path().join(n.to_string())).unwrap();
        let c = compute_cr(&g.dir).unwrap();
        parts.push(format!("n={n}: CR {:.2}", c.cr));
    }
    parts.join(", ")
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("mps fidelity", mps_fidelity),
        ("compression formula", compression_formula),
        ("corpus statistics", corpus_statistics),
        ("scaffold round-trip", scaffold_round_trip),
        ("generator contract", generator_contract),
        ("oracle equivalence", oracle_equivalence),
        ("inspector correctness", inspector_correctness),
        ("metrics", metrics),
    ];
    let mut failed = 0;
    for (name, f) in criteria {
        match f() {
            Outcome::Pass(d) => println!("PASS {name}: {d}"),
            Outcome::Fail(d) => {
                failed += 1;
                println!("FAIL {name}: {d}");
            }
            Outcome::Skip(d) => println!("SKIP {name}: {d}"),
        }
    }
    println!("INFO mcnd compression ladder: {}", cr_ladder());
    if failed > 0 {
        eprintln!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
