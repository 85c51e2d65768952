use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{invalid, n, num_param, params_table, DataTable, Draft, GenError, ModelBuilder, SplitMix64};
use crate::classify::ScaffoldLabel;
use crate::mps::{ObjectiveSense, RowSense, Variable};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct KnapsackParams {
    pub seed: u64,
    pub n_items: usize,
    /// Capacity as a fraction of the total weight, in (0, 1].
    pub capacity_ratio: f64,
}

impl Default for KnapsackParams {
    fn default() -> Self {
        KnapsackParams { seed: 0, n_items: 10, capacity_ratio: 0.5 }
    }
}

pub(crate) fn draft(p: &KnapsackParams) -> Result<Draft, GenError> {
    if p.n_items < 1 {
        return Err(invalid("n_items", "must be at least 1"));
    }
    if !(p.capacity_ratio > 0.0 && p.capacity_ratio <= 1.0) {
        return Err(invalid("capacity_ratio", "must lie in (0, 1]"));
    }
    let mut rng = SplitMix64::new(p.seed);
    let items: Vec<(i64, i64)> = (0..p.n_items).map(|_| (rng.int(1, 100), rng.int(1, 100))).collect();
    let total: i64 = items.iter().map(|x| x.1).sum();
    let capacity = ((p.capacity_ratio * total as f64).floor() as i64).max(1);
    let mut b = ModelBuilder::new(&format!("knapsack_{}", p.seed));
    for (i, &(v, _)) in items.iter().enumerate() {
        b.var(Variable::binary(format!("x_{}", i + 1)), v as f64);
    }
    let terms = items.iter().enumerate().map(|(i, &(_, w))| (i, w as f64)).collect();
    b.row("capacity".into(), RowSense::L, capacity as f64, terms);
    let model = b.build(ObjectiveSense::Max);
    let tables = vec![
        DataTable {
            name: "items",
            description: "Item values and weights".into(),
            header: vec!["item", "value", "weight"],
            rows: items.iter().enumerate().map(|(i, &(v, w))| vec![n((i + 1) as f64), n(v as f64), n(w as f64)]).collect(),
        },
        params_table(
            "Knapsack size and capacity",
            &[
                ("n_items", n(p.n_items as f64)),
                ("capacity", n(capacity as f64)),
                ("capacity_ratio", n(p.capacity_ratio)),
            ],
        ),
    ];
    let parameters = BTreeMap::from([
        ("n_items".to_string(), Value::from(p.n_items)),
        ("capacity".to_string(), Value::from(capacity)),
        ("capacity_ratio".to_string(), num_param(p.capacity_ratio)),
    ]);
    let abstract_problem = "Choose a subset of the `n_items` items in `data/items.csv` whose total weight does not \
exceed `capacity`, maximizing the total value. The capacity is the fraction `capacity_ratio` of the total weight, \
rounded down; the values are repeated in `data/parameters.csv`."
        .to_string();
    Ok(Draft {
        model,
        problem_type: ("Packing", "Binary Knapsack"),
        abstract_problem,
        parameters,
        tables,
        md_sets: vec![format!("I = items 1..{}", p.n_items)],
        md_variables: vec!["x[i] in {0,1}: item i is packed".into()],
        md_objective: "maximize sum_i v_i x[i]".into(),
        md_constraints: vec!["sum_i w_i x[i] <= capacity".into()],
        declared: vec![("capacity".into(), ScaffoldLabel::Global, 1)],
    })
}
