use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{invalid, n, params_table, DataTable, Draft, GenError, ModelBuilder, SplitMix64};
use crate::classify::ScaffoldLabel;
use crate::mps::{ObjectiveSense, RowSense, Variable};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RosterParams {
    pub seed: u64,
    pub n_people: usize,
    /// Cycle length S; period 1 follows period S.
    pub n_periods: usize,
    /// Window width W.
    pub window: usize,
    /// Shifts allowed per window, K.
    pub max_shifts: usize,
    /// Staff required in every period.
    pub min_cover: usize,
    /// Pre-assign person i to period i for the first people.
    pub fixed_assignments: bool,
}

impl Default for RosterParams {
    fn default() -> Self {
        RosterParams { seed: 0, n_people: 4, n_periods: 7, window: 3, max_shifts: 1, min_cover: 1, fixed_assignments: false }
    }
}

pub(crate) fn draft(p: &RosterParams) -> Result<Draft, GenError> {
    let (np, s, w, k) = (p.n_people, p.n_periods, p.window, p.max_shifts);
    if np < 2 {
        return Err(invalid("n_people", "must be at least 2"));
    }
    if w < 3 || w >= s {
        return Err(invalid("window", "must satisfy 3 <= window < n_periods"));
    }
    if k < 1 || k >= w {
        return Err(invalid("max_shifts", "must satisfy 1 <= max_shifts < window"));
    }
    if p.min_cover < 1 || p.min_cover > np {
        return Err(invalid("min_cover", "must lie in [1, n_people]"));
    }
    let mut rng = SplitMix64::new(p.seed);
    let pref: Vec<Vec<i64>> = (0..np).map(|_| (0..s).map(|_| rng.int(1, 10)).collect()).collect();
    let fixed: Vec<(usize, usize)> = if p.fixed_assignments { (1..=np.min(s)).map(|i| (i, i)).collect() } else { vec![] };

    let mut b = ModelBuilder::new(&format!("roster_{}", p.seed));
    for i in 1..=np {
        for t in 1..=s {
            let mut v = Variable::binary(format!("x#{i}#{t}"));
            if fixed.contains(&(i, t)) {
                v.lower = 1.0;
            }
            b.var(v, pref[i - 1][t - 1] as f64);
        }
    }
    let x = |b: &ModelBuilder, i: usize, t: usize| b.id(&format!("x#{i}#{t}"));
    for i in 1..=np {
        for t in 1..=s {
            let terms = vec![(x(&b, i, t), 1.0), (x(&b, i, t % s + 1), 1.0)];
            b.row(format!("adj#{i}#{t}"), RowSense::L, 1.0, terms);
        }
    }
    for i in 1..=np {
        for t in 1..=s {
            let terms = (0..w).map(|d| (x(&b, i, (t + d - 1) % s + 1), 1.0)).collect();
            b.row(format!("win#{i}#{t}"), RowSense::L, k as f64, terms);
        }
    }
    for t in 1..=s {
        let terms = (1..=np).map(|i| (x(&b, i, t), 1.0)).collect();
        b.row(format!("cov#{t}"), RowSense::G, p.min_cover as f64, terms);
    }
    let model = b.build(ObjectiveSense::Max);

    let mut tables = vec![DataTable {
        name: "preferences",
        description: "Preference score of each person for working each period".into(),
        header: vec!["person", "period", "preference"],
        rows: (1..=np)
            .flat_map(|i| {
                let pref = &pref;
                (1..=s).map(move |t| vec![n(i as f64), n(t as f64), n(pref[i - 1][t - 1] as f64)])
            })
            .collect(),
    }];
    if !fixed.is_empty() {
        tables.push(DataTable {
            name: "fixed_assignments",
            description: "Shifts that are assigned in advance".into(),
            header: vec!["person", "period"],
            rows: fixed.iter().map(|&(i, t)| vec![n(i as f64), n(t as f64)]).collect(),
        });
    }
    tables.push(params_table(
        "Roster dimensions and rules",
        &[
            ("n_people", n(np as f64)),
            ("n_periods", n(s as f64)),
            ("window", n(w as f64)),
            ("max_shifts", n(k as f64)),
            ("min_cover", n(p.min_cover as f64)),
        ],
    ));
    let parameters = BTreeMap::from([
        ("n_people".to_string(), Value::from(np)),
        ("n_periods".to_string(), Value::from(s)),
        ("window".to_string(), Value::from(w)),
        ("max_shifts".to_string(), Value::from(k)),
        ("min_cover".to_string(), Value::from(p.min_cover)),
    ]);
    let mut abstract_problem = "A cyclic roster assigns `n_people` people to shifts over `n_periods` periods, where the \
first period follows the last one. Nobody works two consecutive periods, including the pair formed by the last and \
the first period. In every run of `window` consecutive periods, again wrapping around, a person works at most \
`max_shifts` shifts. Every period is staffed by at least `min_cover` people. The preference of each person for each \
period is given in `data/preferences.csv`; maximize the total preference of the assigned shifts."
        .to_string();
    if !fixed.is_empty() {
        abstract_problem.push_str(" The shifts in `data/fixed_assignments.csv` are assigned in advance.");
    }
    abstract_problem.push_str(" All sizes are repeated in `data/parameters.csv`.");
    Ok(Draft {
        model,
        problem_type: ("Scheduling", "Cyclic Staff Rostering"),
        abstract_problem,
        parameters,
        tables,
        md_sets: vec![format!("P = people 1..{np}"), format!("T = periods 1..{s}, cyclic")],
        md_variables: vec!["x[i,t] in {0,1}: person i works period t".into()],
        md_objective: "maximize sum_{i,t} pref[i,t] x[i,t]".into(),
        md_constraints: vec![
            "for each i in P and t in T: x[i,t] + x[i,(t mod S)+1] <= 1".into(),
            format!("for each i in P and t in T: sum_(d=0..{}) x[i,((t+d-1) mod S)+1] <= K", w - 1),
            "for each t in T: sum_i x[i,t] >= min_cover".into(),
        ],
        declared: vec![
            ("adj".into(), ScaffoldLabel::CyclicModular, np * s),
            ("win".into(), ScaffoldLabel::SlidingWindow, np * s),
            ("cov".into(), ScaffoldLabel::SingleLoop, s),
        ],
    })
}
