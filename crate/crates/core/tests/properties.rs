mod common;

use proptest::prelude::*;

use mipnl::generators::SplitMix64;
use mipnl::inspector::{classify_deviation, map_solution, NameMap, Verdict};
use mipnl::metrics::{compare_objective, pass_at_n, ExitStatus, RunArtifact};
use mipnl::mps::{evaluate_solution, parse_mps_str, write_mps_string, Model, ModelParts, ObjectiveSense, Row, Solution};
use mipnl::oracle::{enumerate_points, solve_exhaustive};

fn permuted(model: &Model, seed: u64) -> Model {
    let mut rng = SplitMix64::new(seed);
    let parts = model.parts();
    let n = parts.variables.len();
    let mut col: Vec<usize> = (0..n).collect();
    rng.shuffle(&mut col);
    let mut inv = vec![0; n];
    for (new, &old) in col.iter().enumerate() {
        inv[old] = new;
    }
    let mut rows: Vec<Row> = parts
        .rows
        .iter()
        .map(|r| {
            let mut r = r.clone();
            r.terms = r.terms.iter().map(|&(j, a)| (inv[j], a)).collect();
            r.terms.sort_by_key(|t| t.0);
            r
        })
        .collect();
    let obj = rows.remove(parts.objective_row);
    rng.shuffle(&mut rows);
    rows.insert(0, obj);
    Model::from_parts(ModelParts {
        name: parts.name.clone(),
        variables: col.iter().map(|&j| parts.variables[j].clone()).collect(),
        rows,
        objective_row: 0,
        objective_sense: parts.objective_sense,
        objective_constant: parts.objective_constant,
    })
    .unwrap()
}

fn artifact(attempt: usize, objective: Option<f64>) -> RunArtifact {
    RunArtifact {
        instance_id: "i".into(),
        attempt,
        exit_status: if objective.is_some() { ExitStatus::Ok } else { ExitStatus::Crash },
        reported_objective: objective,
        wall_seconds: 0.0,
        stderr_excerpt: None,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn mps_round_trip(seed in any::<u64>()) {
        let m = common::random_binary_model(seed, 8, 6);
        let text = write_mps_string(&m).unwrap();
        let back = parse_mps_str(&text, &Default::default()).unwrap();
        prop_assert_eq!(back.parts(), m.parts());
        prop_assert_eq!(write_mps_string(&back).unwrap(), text);
    }

    #[test]
    fn nonzeros_and_optimum_survive_permutation(seed in any::<u64>(), perm in any::<u64>()) {
        let m = common::random_binary_model(seed, 7, 6);
        let p = permuted(&m, perm);
        prop_assert_eq!(m.stats(), p.stats());
        let a = solve_exhaustive(&m, 1 << 10).unwrap();
        let b = solve_exhaustive(&p, 1 << 10).unwrap();
        prop_assert_eq!(a.status, b.status);
        prop_assert_eq!(a.objective, b.objective);
    }

    #[test]
    fn oracle_agrees_with_evaluator(seed in any::<u64>()) {
        let m = common::random_binary_model(seed, 8, 8);
        let mut mismatches = 0;
        enumerate_points(&m, 1 << 10, |x, feasible, obj| {
            let e = evaluate_solution(&m, &Solution::from_dense(&m, x), 1e-9).unwrap();
            if e.is_feasible() != feasible || e.objective != obj || common::feasible(&m, x) != feasible {
                mismatches += 1;
            }
        }).unwrap();
        prop_assert_eq!(mismatches, 0);
        prop_assert_eq!(solve_exhaustive(&m, 1 << 10).unwrap().objective, common::brute_force(&m));
    }

    #[test]
    fn pass_at_n_is_monotone(objs in proptest::collection::vec(proptest::option::of(-3i32..3), 0..10), truth in -3i32..3) {
        let arts: Vec<RunArtifact> = objs.iter().enumerate().map(|(k, o)| artifact(k + 1, o.map(f64::from))).collect();
        let mut prev = false;
        for n in 1..=12 {
            let now = pass_at_n(&arts, truth as f64, n, 1e-6);
            prop_assert!(!prev || now);
            prev = now;
        }
    }

    #[test]
    fn objective_compares_equal_to_itself(t in -1e9f64..1e9) {
        prop_assert!(compare_objective(t, t, 1e-6).unwrap());
    }

    #[test]
    fn verdict_sense_duality(c in -1000i32..1000, r in -1000i32..1000) {
        let (c, r) = (c as f64, r as f64);
        for sense in [ObjectiveSense::Min, ObjectiveSense::Max] {
            let v = classify_deviation(c, r, sense, 1e-6).unwrap();
            let dual = classify_deviation(-c, -r, sense.flipped(), 1e-6).unwrap();
            prop_assert_eq!(v, dual);
            if v == Verdict::Match {
                prop_assert_eq!(classify_deviation(r, c, sense, 1e-6).unwrap(), Verdict::Match);
            }
        }
    }

    #[test]
    fn identity_map_preserves_solution(vals in proptest::collection::btree_map("[a-z]{1,4}", -5.0f64..5.0, 0..6)) {
        let sol = Solution { values: vals };
        let m = map_solution(&sol, &NameMap::new(), true).unwrap();
        prop_assert_eq!(m.solution, sol);
    }

    #[test]
    fn splitmix_is_pure(seed in any::<u64>()) {
        let mut a = SplitMix64::new(seed);
        let mut b = SplitMix64::new(seed);
        for _ in 0..16 {
            prop_assert_eq!(a.next_u64(), b.next_u64());
        }
    }
}
