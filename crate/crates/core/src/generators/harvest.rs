use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{invalid, n, num_param, params_table, DataTable, Draft, GenError, ModelBuilder, SplitMix64};
use crate::classify::ScaffoldLabel;
use crate::mps::{ObjectiveSense, RowSense, Variable};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HarvestParams {
    pub seed: u64,
    pub n_blocks: usize,
    pub n_periods: usize,
    /// Allowed relative change of the harvest volume between periods, in [0, 1).
    pub smoothing: f64,
}

impl Default for HarvestParams {
    fn default() -> Self {
        HarvestParams { seed: 0, n_blocks: 4, n_periods: 3, smoothing: 0.1 }
    }
}

pub(crate) fn draft(p: &HarvestParams) -> Result<Draft, GenError> {
    let (nb, nt) = (p.n_blocks, p.n_periods);
    if nb < 2 {
        return Err(invalid("n_blocks", "must be at least 2"));
    }
    if nb > 101 {
        return Err(invalid("n_blocks", "must be at most 101"));
    }
    if nt < 3 {
        return Err(invalid("n_periods", "must be at least 3"));
    }
    if !(0.0..1.0).contains(&p.smoothing) {
        return Err(invalid("smoothing", "must lie in [0, 1)"));
    }
    let mut rng = SplitMix64::new(p.seed);
    let volume: Vec<i64> = (0..nb).map(|_| rng.int(10, 100)).collect();
    let mut caps = BTreeSet::new();
    let mut road_cap = Vec::with_capacity(nb);
    while road_cap.len() < nb {
        let r = rng.int(100, 200);
        if caps.insert(r) {
            road_cap.push(r);
        }
    }
    let road_cost: Vec<i64> = (0..nb).map(|_| rng.int(50, 150)).collect();
    let price: Vec<i64> = (0..nt).map(|_| rng.int(1, 10)).collect();
    let (lo, hi) = (1.0 - p.smoothing, 1.0 + p.smoothing);

    let mut b = ModelBuilder::new(&format!("harvest_{}", p.seed));
    for i in 1..=nb {
        for t in 1..=nt {
            b.var(Variable::binary(format!("x_{i}_{t}")), 0.0);
        }
    }
    for i in 1..=nb {
        b.var(Variable::binary(format!("z_{i}")), -(road_cost[i - 1] as f64));
    }
    for t in 1..=nt {
        b.var(Variable::continuous(format!("H_{t}"), 0.0, f64::INFINITY), price[t - 1] as f64);
    }
    let id = |b: &ModelBuilder, s: String| b.id(&s);
    for i in 1..=nb {
        let terms = (1..=nt).map(|t| (id(&b, format!("x_{i}_{t}")), 1.0)).collect();
        b.row(format!("once_{i}"), RowSense::L, 1.0, terms);
    }
    for t in 1..=nt {
        let mut terms: Vec<(usize, f64)> =
            (1..=nb).map(|i| (id(&b, format!("x_{i}_{t}")), -(volume[i - 1] as f64))).collect();
        terms.push((id(&b, format!("H_{t}")), 1.0));
        b.row(format!("vol_{t}"), RowSense::E, 0.0, terms);
    }
    for t in 2..=nt {
        let terms = vec![(id(&b, format!("H_{t}")), 1.0), (id(&b, format!("H_{}", t - 1)), -lo)];
        b.row(format!("smlo_{t}"), RowSense::G, 0.0, terms);
    }
    for t in 2..=nt {
        let terms = vec![(id(&b, format!("H_{t}")), 1.0), (id(&b, format!("H_{}", t - 1)), -hi)];
        b.row(format!("smup_{t}"), RowSense::L, 0.0, terms);
    }
    for i in 1..=nb {
        for t in 1..=nt {
            let terms = vec![
                (id(&b, format!("x_{i}_{t}")), volume[i - 1] as f64),
                (id(&b, format!("z_{i}")), -(road_cap[i - 1] as f64)),
            ];
            b.row(format!("road_{i}_{t}"), RowSense::L, 0.0, terms);
        }
    }
    let model = b.build(ObjectiveSense::Max);
    let tables = vec![
        DataTable {
            name: "blocks",
            description: "Timber volume, road capacity and road cost of each block".into(),
            header: vec!["block", "volume", "road_capacity", "road_cost"],
            rows: (0..nb)
                .map(|i| vec![n((i + 1) as f64), n(volume[i] as f64), n(road_cap[i] as f64), n(road_cost[i] as f64)])
                .collect(),
        },
        DataTable {
            name: "periods",
            description: "Timber price per unit volume in each period".into(),
            header: vec!["period", "price"],
            rows: price.iter().enumerate().map(|(t, pr)| vec![n((t + 1) as f64), n(*pr as f64)]).collect(),
        },
        params_table(
            "Planning dimensions and smoothing tolerance",
            &[("n_blocks", n(nb as f64)), ("n_periods", n(nt as f64)), ("smoothing", n(p.smoothing))],
        ),
    ];
    let parameters = BTreeMap::from([
        ("n_blocks".to_string(), Value::from(nb)),
        ("n_periods".to_string(), Value::from(nt)),
        ("smoothing".to_string(), num_param(p.smoothing)),
    ]);
    let abstract_problem = "A forest of `n_blocks` blocks is harvested over `n_periods` periods. Each block in \
`data/blocks.csv` has a timber volume and can be harvested at most once, in a single period. Harvesting a block \
requires building its access road, which has a cost and a capacity that must cover the harvested volume. The \
harvest volume of a period is the total volume of the blocks cut in it and sells at the price in \
`data/periods.csv`. From one period to the next the harvest volume may change by at most the fraction \
`smoothing`. Maximize the revenue minus the road costs. The sizes are repeated in `data/parameters.csv`."
        .to_string();
    Ok(Draft {
        model,
        problem_type: ("Natural Resources", "Forest Harvest Scheduling"),
        abstract_problem,
        parameters,
        tables,
        md_sets: vec![format!("B = blocks 1..{nb}"), format!("T = periods 1..{nt}")],
        md_variables: vec![
            "x[i,t] in {0,1}: block i is harvested in period t".into(),
            "z[i] in {0,1}: the road to block i is built".into(),
            "H[t] >= 0: harvest volume in period t".into(),
        ],
        md_objective: "maximize sum_t price_t H[t] - sum_i cost_i z[i]".into(),
        md_constraints: vec![
            "for each i in B: sum_t x[i,t] <= 1".into(),
            "for each t in T: H[t] = sum_i V_i x[i,t]".into(),
            "for each t in T, t >= 2: H[t] >= (1 - smoothing) H[t-1]".into(),
            "for each t in T, t >= 2: H[t] <= (1 + smoothing) H[t-1]".into(),
            "for each i in B and t in T: V_i x[i,t] <= R_i z[i]".into(),
        ],
        declared: vec![
            ("once".into(), ScaffoldLabel::SingleLoop, nb),
            ("vol".into(), ScaffoldLabel::SingleLoop, nt),
            ("smlo".into(), ScaffoldLabel::TemporalCoupled, nt - 1),
            ("smup".into(), ScaffoldLabel::TemporalCoupled, nt - 1),
            ("road".into(), ScaffoldLabel::NestedLoop, nb * nt),
        ],
    })
}
