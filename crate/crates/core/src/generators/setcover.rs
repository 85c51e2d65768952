use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{invalid, n, num_param, params_table, DataTable, Draft, GenError, ModelBuilder, SplitMix64};
use crate::classify::ScaffoldLabel;
use crate::mps::{ObjectiveSense, RowSense, Variable};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SetcoverParams {
    pub seed: u64,
    pub n_elements: usize,
    pub n_sets: usize,
    /// Probability that a set covers an element, in (0, 1].
    pub density: f64,
}

impl Default for SetcoverParams {
    fn default() -> Self {
        SetcoverParams { seed: 0, n_elements: 10, n_sets: 8, density: 0.3 }
    }
}

/// Covering sets per element. Element 1 is covered by sets {1, 3}, element 2
/// by set 2 and at least one other, every other element by at least two.
fn draw_cover(p: &SetcoverParams, rng: &mut SplitMix64) -> Vec<BTreeSet<usize>> {
    let ns = p.n_sets;
    let mut out = Vec::with_capacity(p.n_elements);
    for e in 1..=p.n_elements {
        if e == 1 {
            out.push(BTreeSet::from([1, 3]));
            continue;
        }
        let mut s: BTreeSet<usize> = (1..=ns).filter(|_| rng.bernoulli(p.density)).collect();
        if e == 2 {
            s.insert(2);
        }
        while s.len() < 2 {
            s.insert(rng.int(1, ns as i64) as usize);
        }
        out.push(s);
    }
    out
}

pub(crate) fn draft(p: &SetcoverParams) -> Result<Draft, GenError> {
    if p.n_sets < 4 {
        return Err(invalid("n_sets", "must be at least 4"));
    }
    if p.n_elements < 2 {
        return Err(invalid("n_elements", "must be at least 2"));
    }
    if !(p.density > 0.0 && p.density <= 1.0) {
        return Err(invalid("density", "must lie in (0, 1]"));
    }
    let mut rng = SplitMix64::new(p.seed);
    let cost: Vec<i64> = (0..p.n_sets).map(|_| rng.int(1, 100)).collect();
    let cover = draw_cover(p, &mut rng);
    let mut b = ModelBuilder::new(&format!("setcover_{}", p.seed));
    for j in 1..=p.n_sets {
        b.var(Variable::binary(format!("x_{j}")), cost[j - 1] as f64);
    }
    for (e, sets) in cover.iter().enumerate() {
        let terms = sets.iter().map(|&j| (j - 1, 1.0)).collect();
        b.row(format!("cover_{}", e + 1), RowSense::G, 1.0, terms);
    }
    let model = b.build(ObjectiveSense::Min);
    let tables = vec![
        DataTable {
            name: "sets",
            description: "Candidate sets and their costs".into(),
            header: vec!["set", "cost"],
            rows: cost.iter().enumerate().map(|(j, c)| vec![n((j + 1) as f64), n(*c as f64)]).collect(),
        },
        DataTable {
            name: "membership",
            description: "Which sets cover which elements, one pair per line".into(),
            header: vec!["element", "set"],
            rows: cover
                .iter()
                .enumerate()
                .flat_map(|(e, s)| s.iter().map(move |&j| vec![n((e + 1) as f64), n(j as f64)]))
                .collect(),
        },
        params_table(
            "Instance dimensions",
            &[("n_elements", n(p.n_elements as f64)), ("n_sets", n(p.n_sets as f64)), ("density", n(p.density))],
        ),
    ];
    let parameters = BTreeMap::from([
        ("n_elements".to_string(), Value::from(p.n_elements)),
        ("n_sets".to_string(), Value::from(p.n_sets)),
        ("density".to_string(), num_param(p.density)),
    ]);
    let abstract_problem = "There are `n_elements` elements to cover and `n_sets` candidate sets with the costs listed in \
`data/sets.csv`. The pairs in `data/membership.csv` state which sets cover which elements. Select sets so that every \
element is covered by at least one selected set, at minimum total cost. Sets were drawn with coverage probability \
`density`, and the sizes are repeated in `data/parameters.csv`."
        .to_string();
    Ok(Draft {
        model,
        problem_type: ("Covering", "Set Cover"),
        abstract_problem,
        parameters,
        tables,
        md_sets: vec![
            format!("E = elements 1..{}", p.n_elements),
            format!("J = sets 1..{}", p.n_sets),
            "S_e = sets covering element e".into(),
        ],
        md_variables: vec!["x[j] in {0,1}: set j is selected".into()],
        md_objective: "minimize sum_j c_j x[j]".into(),
        md_constraints: vec!["for each e in E: sum_{j in S_e} x[j] >= 1".into()],
        declared: vec![("cover".into(), ScaffoldLabel::SubsetIndexed, p.n_elements)],
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_row_has_terms() {
        for seed in 0..10 {
            let d = draft(&SetcoverParams { seed, density: 0.01, ..Default::default() }).unwrap();
            assert!(d.model.constraint_rows().all(|i| d.model.rows()[i].terms.len() >= 2));
        }
    }
}
