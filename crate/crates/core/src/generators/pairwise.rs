use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{invalid, n, params_table, DataTable, Draft, GenError, ModelBuilder, SplitMix64};
use crate::classify::ScaffoldLabel;
use crate::mps::{ObjectiveSense, RowSense, Variable};

pub const BIG_M: f64 = 1000.0;
pub const MAX_JOBS: usize = 90;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PairwiseParams {
    pub seed: u64,
    pub n_jobs: usize,
}

impl Default for PairwiseParams {
    fn default() -> Self {
        PairwiseParams { seed: 0, n_jobs: 4 }
    }
}

pub(crate) fn draft(p: &PairwiseParams) -> Result<Draft, GenError> {
    let nj = p.n_jobs;
    if !(3..=MAX_JOBS).contains(&nj) {
        return Err(invalid("n_jobs", format!("must lie in [3, {MAX_JOBS}]")));
    }
    let mut rng = SplitMix64::new(p.seed);
    let jobs: Vec<(i64, i64)> = (0..nj).map(|_| (rng.int(1, 10), rng.int(1, 10))).collect();
    let horizon: i64 = jobs.iter().map(|j| j.0).sum();
    let mut b = ModelBuilder::new(&format!("pairwise_{}", p.seed));
    for (i, &(_, w)) in jobs.iter().enumerate() {
        b.var(Variable::integer(format!("t_{}", i + 1), 0.0, horizon as f64), w as f64);
    }
    for i in 1..=nj {
        for j in i + 1..=nj {
            b.var(Variable::binary(format!("y_{i}_{j}")), 0.0);
        }
    }
    let t = |b: &ModelBuilder, i: usize| b.id(&format!("t_{i}"));
    let y = |b: &ModelBuilder, i: usize, j: usize| b.id(&format!("y_{i}_{j}"));
    for i in 1..=nj {
        for j in i + 1..=nj {
            let pi = jobs[i - 1].0 as f64;
            let terms = vec![(t(&b, i), 1.0), (t(&b, j), -1.0), (y(&b, i, j), BIG_M)];
            b.row(format!("before_{i}_{j}"), RowSense::L, BIG_M - pi, terms);
        }
    }
    for i in 1..=nj {
        for j in i + 1..=nj {
            let pj = jobs[j - 1].0 as f64;
            let terms = vec![(t(&b, j), 1.0), (t(&b, i), -1.0), (y(&b, i, j), -BIG_M)];
            b.row(format!("after_{i}_{j}"), RowSense::L, -pj, terms);
        }
    }
    let model = b.build(ObjectiveSense::Min);
    let pairs = nj * (nj - 1) / 2;
    let tables = vec![
        DataTable {
            name: "jobs",
            description: "Processing time and weight of each job".into(),
            header: vec!["job", "processing_time", "weight"],
            rows: jobs.iter().enumerate().map(|(i, &(pt, w))| vec![n((i + 1) as f64), n(pt as f64), n(w as f64)]).collect(),
        },
        params_table(
            "Number of jobs, scheduling horizon and disjunction constant",
            &[("n_jobs", n(nj as f64)), ("horizon", n(horizon as f64)), ("big_m", n(BIG_M))],
        ),
    ];
    let parameters = BTreeMap::from([
        ("n_jobs".to_string(), Value::from(nj)),
        ("horizon".to_string(), Value::from(horizon)),
        ("big_m".to_string(), Value::from(BIG_M as i64)),
    ]);
    let abstract_problem = "A single machine processes `n_jobs` jobs, one at a time and without interruption. Each job \
has the processing time and weight listed in `data/jobs.csv`, and its integer start time lies between zero and \
`horizon`. For every pair of jobs one must finish before the other starts; the order of each pair is a binary \
decision linked to the start times through the constant `big_m`. Minimize the weighted sum of start times. The \
values are repeated in `data/parameters.csv`."
        .to_string();
    Ok(Draft {
        model,
        problem_type: ("Scheduling", "Single Machine Disjunctive Scheduling"),
        abstract_problem,
        parameters,
        tables,
        md_sets: vec![format!("J = jobs 1..{nj}")],
        md_variables: vec![
            "t[i] in {0..horizon}: start time of job i".into(),
            "y[i,j] in {0,1} for i < j: job i precedes job j".into(),
        ],
        md_objective: "minimize sum_i w_i t[i]".into(),
        md_constraints: vec![
            "for each i < j: t[i] + p_i <= t[j] + M (1 - y[i,j])".into(),
            "for each i < j: t[j] + p_j <= t[i] + M y[i,j]".into(),
        ],
        declared: vec![
            ("before".into(), ScaffoldLabel::PairwiseAllPairs, pairs),
            ("after".into(), ScaffoldLabel::PairwiseAllPairs, pairs),
        ],
    })
}
