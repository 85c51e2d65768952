use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{invalid, n, num_param, params_table, DataTable, Draft, GenError, ModelBuilder, SplitMix64};
use crate::classify::ScaffoldLabel;
use crate::mps::{ObjectiveSense, RowSense, Variable};

pub const CONNECT_ATTEMPTS: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct McndParams {
    pub seed: u64,
    pub n_nodes: usize,
    pub n_commodities: usize,
    /// Arc probability per ordered node pair, in (0, 1].
    pub density: f64,
}

impl Default for McndParams {
    fn default() -> Self {
        McndParams { seed: 0, n_nodes: 5, n_commodities: 3, density: 0.4 }
    }
}

fn strongly_connected(n: usize, arcs: &BTreeSet<(usize, usize)>) -> bool {
    let reach = |forward: bool| {
        let mut seen = vec![false; n + 1];
        let mut stack = vec![1];
        seen[1] = true;
        while let Some(u) = stack.pop() {
            for &(i, j) in arcs {
                let (a, b) = if forward { (i, j) } else { (j, i) };
                if a == u && !seen[b] {
                    seen[b] = true;
                    stack.push(b);
                }
            }
        }
        seen[1..].iter().all(|&s| s)
    };
    reach(true) && reach(false)
}

fn draw_arcs(p: &McndParams, rng: &mut SplitMix64) -> BTreeSet<(usize, usize)> {
    let nn = p.n_nodes;
    let mut arcs = BTreeSet::new();
    let mut connected = false;
    for _ in 0..CONNECT_ATTEMPTS {
        arcs.clear();
        for i in 1..=nn {
            for j in 1..=nn {
                if i != j && rng.bernoulli(p.density) {
                    arcs.insert((i, j));
                }
            }
        }
        if strongly_connected(nn, &arcs) {
            connected = true;
            break;
        }
    }
    if !connected {
        let mut order: Vec<usize> = (1..=nn).collect();
        rng.shuffle(&mut order);
        for k in 0..nn {
            arcs.insert((order[k], order[(k + 1) % nn]));
        }
    }
    // a bare cycle gets one random chord
    if nn >= 3 && arcs.len() == nn {
        let missing: Vec<(usize, usize)> = (1..=nn)
            .flat_map(|i| (1..=nn).map(move |j| (i, j)))
            .filter(|&(i, j)| i != j && !arcs.contains(&(i, j)))
            .collect();
        arcs.insert(missing[rng.index(missing.len())]);
    }
    arcs
}

pub(crate) fn draft(p: &McndParams) -> Result<Draft, GenError> {
    if p.n_nodes < 2 {
        return Err(invalid("n_nodes", "must be at least 2"));
    }
    if p.n_commodities < 1 {
        return Err(invalid("n_commodities", "must be at least 1"));
    }
    if !(p.density > 0.0 && p.density <= 1.0) {
        return Err(invalid("density", "must lie in (0, 1]"));
    }
    let mut rng = SplitMix64::new(p.seed);
    let arcs: Vec<(usize, usize)> = draw_arcs(p, &mut rng).into_iter().collect();
    let (nn, nk, na) = (p.n_nodes, p.n_commodities, arcs.len());
    let commodities: Vec<(usize, usize, i64)> = (0..nk)
        .map(|_| {
            let o = rng.int(1, nn as i64) as usize;
            let mut d = rng.int(1, nn as i64 - 1) as usize;
            if d >= o {
                d += 1;
            }
            (o, d, rng.int(1, 10))
        })
        .collect();
    let max_d = commodities.iter().map(|c| c.2).max().unwrap_or(1);
    let total_d: i64 = commodities.iter().map(|c| c.2).sum();
    let arc_data: Vec<(i64, i64, i64)> =
        (0..na).map(|_| (rng.int(max_d, 2 * total_d), rng.int(1, 100), rng.int(1, 100))).collect();

    let mut b = ModelBuilder::new(&format!("mcnd_{}", p.seed));
    for a in 1..=na {
        for k in 1..=nk {
            b.var(Variable::continuous(format!("x_{a}_{k}"), 0.0, f64::INFINITY), arc_data[a - 1].1 as f64);
        }
    }
    for a in 1..=na {
        b.var(Variable::binary(format!("y_{a}")), arc_data[a - 1].2 as f64);
    }
    for k in 1..=nk {
        let (o, d, dem) = commodities[k - 1];
        for i in 1..=nn {
            let mut terms = Vec::new();
            for (a, &(from, to)) in arcs.iter().enumerate() {
                if from == i {
                    terms.push((b.id(&format!("x_{}_{k}", a + 1)), 1.0));
                } else if to == i {
                    terms.push((b.id(&format!("x_{}_{k}", a + 1)), -1.0));
                }
            }
            let rhs = if i == o { dem } else if i == d { -dem } else { 0 };
            b.row(format!("bal_{i}_{k}"), RowSense::E, rhs as f64, terms);
        }
    }
    for a in 1..=na {
        let mut terms: Vec<(usize, f64)> = (1..=nk).map(|k| (b.id(&format!("x_{a}_{k}")), 1.0)).collect();
        terms.push((b.id(&format!("y_{a}")), -(arc_data[a - 1].0 as f64)));
        b.row(format!("cap_{a}"), RowSense::L, 0.0, terms);
    }
    let model = b.build(ObjectiveSense::Min);

    let support = |i: usize| -> BTreeSet<usize> {
        arcs.iter().enumerate().filter(|(_, &(f, t))| f == i || t == i).map(|(a, _)| a).collect()
    };
    let bal_label = if nk >= 2 {
        ScaffoldLabel::ExtraDimension
    } else if (2..=nn).all(|i| support(i) == support(1)) {
        ScaffoldLabel::SingleLoop
    } else {
        ScaffoldLabel::SubsetIndexed
    };

    let tables = vec![
        DataTable {
            name: "nodes",
            description: "Network nodes".into(),
            header: vec!["node"],
            rows: (1..=nn).map(|i| vec![n(i as f64)]).collect(),
        },
        DataTable {
            name: "arcs",
            description: "Directed arcs with tail node, head node and capacity".into(),
            header: vec!["arc", "from", "to", "capacity"],
            rows: arcs
                .iter()
                .enumerate()
                .map(|(a, &(f, t))| vec![n((a + 1) as f64), n(f as f64), n(t as f64), n(arc_data[a].0 as f64)])
                .collect(),
        },
        DataTable {
            name: "commodities",
            description: "Commodities with origin node, destination node and demand".into(),
            header: vec!["commodity", "origin", "destination", "demand"],
            rows: commodities
                .iter()
                .enumerate()
                .map(|(k, &(o, d, dem))| vec![n((k + 1) as f64), n(o as f64), n(d as f64), n(dem as f64)])
                .collect(),
        },
        DataTable {
            name: "arc_costs",
            description: "Per-unit flow cost and fixed opening cost of each arc".into(),
            header: vec!["arc", "variable_cost", "fixed_cost"],
            rows: arc_data.iter().enumerate().map(|(a, c)| vec![n((a + 1) as f64), n(c.1 as f64), n(c.2 as f64)]).collect(),
        },
        params_table(
            "Realized structural parameters",
            &[
                ("n_nodes", n(nn as f64)),
                ("n_commodities", n(nk as f64)),
                ("n_arcs", n(na as f64)),
                ("density", n(p.density)),
            ],
        ),
    ];
    let parameters = BTreeMap::from([
        ("n_nodes".to_string(), Value::from(nn)),
        ("n_commodities".to_string(), Value::from(nk)),
        ("n_arcs".to_string(), Value::from(na)),
        ("density".to_string(), num_param(p.density)),
    ]);
    let abstract_problem = "A directed network has `n_nodes` nodes, listed in `data/nodes.csv`, and `n_arcs` arcs, \
listed in `data/arcs.csv` with their end nodes and capacities. Each of the `n_commodities` commodities in \
`data/commodities.csv` must be shipped from its origin node to its destination node in the amount of its demand. \
An arc can carry flow only if it is opened, and the total flow of all commodities on an open arc may not exceed its \
capacity. Opening an arc incurs the fixed cost given in `data/arc_costs.csv`, and every unit of flow incurs the \
arc's variable cost. Flow is conserved at every node for every commodity. Choose which arcs to open and how to route \
the flows so that the total fixed and variable cost is minimized. The arcs were drawn with probability `density` \
per ordered node pair, and the realized sizes are recorded in `data/parameters.csv`."
        .to_string();
    Ok(Draft {
        model,
        problem_type: ("Network Design", "Multi-Commodity Capacitated Network Design"),
        abstract_problem,
        parameters,
        tables,
        md_sets: vec![
            format!("N = nodes 1..{nn}"),
            format!("A = arcs 1..{na}, arc a = (from_a, to_a)"),
            format!("K = commodities 1..{nk} with origin o_k, destination d_k, demand q_k"),
        ],
        md_variables: vec![
            "x[a,k] >= 0: flow of commodity k on arc a".into(),
            "y[a] in {0,1}: arc a is opened".into(),
        ],
        md_objective: "minimize sum_{a,k} c_a x[a,k] + sum_a f_a y[a]".into(),
        md_constraints: vec![
            "for each node i in N and commodity k in K: sum_{a out of i} x[a,k] - sum_{a into i} x[a,k] = q_k [i = o_k] - q_k [i = d_k]"
                .into(),
            "for each arc a in A: sum_k x[a,k] <= u_a y[a]".into(),
        ],
        declared: vec![("bal".into(), bal_label, nn * nk), ("cap".into(), ScaffoldLabel::SingleLoop, na)],
    })
}
