//! Exact optimization of small all-integer models by full enumeration.

use serde::Serialize;
use thiserror::Error;

use crate::mps::{row_tolerance, Model, ObjectiveSense, Solution};

pub const DEFAULT_MAX_POINTS: u64 = 1 << 25;
/// Feasibility tolerance of the oracle, matching `evaluate_solution(.., ORACLE_TOL)`.
pub const ORACLE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum OracleStatus {
    Optimal,
    Infeasible,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleResult {
    pub status: OracleStatus,
    pub objective: Option<f64>,
    pub witness: Option<Solution>,
    pub nodes_enumerated: u64,
}

#[derive(Debug, Error, PartialEq)]
pub enum OracleError {
    #[error("enumeration needs {points} points, limit is {max_points}")]
    TooLarge { points: u128, max_points: u64 },
    #[error("variable `{0}` is continuous")]
    ContinuousUnsupported(String),
    #[error("variable `{0}` has an unbounded domain")]
    UnboundedDomain(String),
}

impl OracleError {
    pub fn code(&self) -> &'static str {
        match self {
            OracleError::TooLarge { .. } => "TOO_LARGE",
            OracleError::ContinuousUnsupported(_) => "CONTINUOUS_UNSUPPORTED",
            OracleError::UnboundedDomain(_) => "UNBOUNDED_DOMAIN",
        }
    }
}

/// Integer domains `[lo, hi]` per variable.
pub fn domains(model: &Model) -> Result<Vec<(i64, i64)>, OracleError> {
    model
        .variables()
        .iter()
        .map(|v| {
            if !v.integrality.is_integral() {
                return Err(OracleError::ContinuousUnsupported(v.name.clone()));
            }
            if !v.lower.is_finite() || !v.upper.is_finite() {
                return Err(OracleError::UnboundedDomain(v.name.clone()));
            }
            Ok((v.lower.ceil() as i64, v.upper.floor() as i64))
        })
        .collect()
}

pub fn point_count(domains: &[(i64, i64)]) -> u128 {
    domains.iter().fold(1u128, |acc, &(lo, hi)| acc.saturating_mul((hi - lo + 1).max(0) as u128))
}

/// Visits every point of the integer box in lexicographic order (first
/// variable most significant, values ascending) with its feasibility and
/// objective value. Returns the number of points visited.
pub fn enumerate_points<F>(model: &Model, max_points: u64, mut visit: F) -> Result<u64, OracleError>
where
    F: FnMut(&[f64], bool, f64),
{
    let doms = domains(model)?;
    let points = point_count(&doms);
    if points > max_points as u128 {
        return Err(OracleError::TooLarge { points, max_points });
    }
    if points == 0 {
        return Ok(0);
    }
    let rows = model.rows();
    let bounds: Vec<(f64, f64, f64)> = rows
        .iter()
        .map(|r| {
            let (lo, hi) = r.bounds();
            (lo, hi, row_tolerance(lo, hi, ORACLE_TOL))
        })
        .collect();
    let columns = model.columns();
    let n = doms.len();
    let m = rows.len();
    let obj = model.objective_row();
    let constant = model.objective_constant();
    // act[d] holds row activities of the prefix x_0..x_{d-1}
    let mut act = vec![vec![0.0f64; m]; n + 1];
    let mut x = vec![0.0f64; n];
    let mut value: Vec<i64> = doms.iter().map(|d| d.0).collect();
    let mut visited = 0u64;
    let mut depth = 0usize;
    // fill from `depth` down to the leaf, then walk the odometer
    loop {
        for d in depth..n {
            let (head, tail) = act.split_at_mut(d + 1);
            tail[0].copy_from_slice(&head[d]);
            x[d] = value[d] as f64;
            for &(i, a) in &columns[d] {
                tail[0][i] += a * x[d];
            }
        }
        let leaf = &act[n];
        let feasible = (0..m).all(|i| {
            if i == obj {
                return true;
            }
            let (lo, hi, tau) = bounds[i];
            leaf[i] >= lo - tau && leaf[i] <= hi + tau
        });
        visit(&x, feasible, constant + leaf[obj]);
        visited += 1;
        let mut d = n;
        loop {
            if d == 0 {
                return Ok(visited);
            }
            d -= 1;
            if value[d] < doms[d].1 {
                value[d] += 1;
                break;
            }
            value[d] = doms[d].0;
        }
        depth = d;
    }
}

fn improves(sense: ObjectiveSense, candidate: f64, best: f64) -> bool {
    let slack = ORACLE_TOL * best.abs().max(1.0);
    match sense {
        ObjectiveSense::Min => candidate < best - slack,
        ObjectiveSense::Max => candidate > best + slack,
    }
}

/// Best feasible point; ties (within the oracle tolerance) keep the
/// lexicographically smallest witness.
pub fn solve_exhaustive(model: &Model, max_points: u64) -> Result<OracleResult, OracleError> {
    let sense = model.objective_sense();
    let mut best: Option<(f64, Vec<f64>)> = None;
    let nodes = enumerate_points(model, max_points, |x, feasible, obj| {
        if !feasible {
            return;
        }
        match &best {
            Some((b, _)) if !improves(sense, obj, *b) => {}
            _ => best = Some((obj, x.to_vec())),
        }
    })?;
    Ok(match best {
        Some((objective, x)) => OracleResult {
            status: OracleStatus::Optimal,
            objective: Some(objective),
            witness: Some(Solution::from_dense(model, &x)),
            nodes_enumerated: nodes,
        },
        None => OracleResult { status: OracleStatus::Infeasible, objective: None, witness: None, nodes_enumerated: nodes },
    })
}

/// True when no feasible point beats `objective` by more than the oracle tolerance.
pub fn verify_optimum(model: &Model, objective: f64, max_points: u64) -> Result<bool, OracleError> {
    let sense = model.objective_sense();
    let mut ok = true;
    enumerate_points(model, max_points, |_, feasible, obj| {
        if feasible && improves(sense, obj, objective) {
            ok = false;
        }
    })?;
    Ok(ok)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mps::{evaluate_solution, ModelParts, Row, RowSense, Variable};

    fn knapsack() -> Model {
        Model::from_parts(ModelParts {
            name: "k".into(),
            variables: (1..=3).map(|i| Variable::binary(format!("item_{i}"))).collect(),
            rows: vec![
                Row::new("obj", RowSense::N, 0.0, vec![(0, 10.0), (1, 6.0), (2, 5.0)]),
                Row::new("capacity", RowSense::L, 7.0, vec![(0, 5.0), (1, 4.0), (2, 3.0)]),
            ],
            objective_row: 0,
            objective_sense: ObjectiveSense::Max,
            objective_constant: 0.0,
        })
        .unwrap()
    }

    #[test]
    fn knapsack_by_hand() {
        // subsets by weight <= 7: {}, {1}, {2}, {3}, {2,3}; values 0, 10, 6, 5, 11
        let r = solve_exhaustive(&knapsack(), DEFAULT_MAX_POINTS).unwrap();
        assert_eq!(r.status, OracleStatus::Optimal);
        assert_eq!(r.objective, Some(11.0));
        assert_eq!(r.nodes_enumerated, 8);
        let w = r.witness.unwrap();
        assert_eq!(w, Solution::from_pairs([("item_1", 0.0), ("item_2", 1.0), ("item_3", 1.0)]));
        assert!(evaluate_solution(&knapsack(), &w, ORACLE_TOL).unwrap().is_feasible());
    }

    #[test]
    fn contradictory_rows_are_infeasible() {
        let m = Model::from_parts(ModelParts {
            name: "c".into(),
            variables: vec![Variable::binary("x")],
            rows: vec![
                Row::new("obj", RowSense::N, 0.0, vec![(0, 1.0)]),
                Row::new("lo", RowSense::G, 1.0, vec![(0, 1.0)]),
                Row::new("hi", RowSense::L, 0.0, vec![(0, 1.0)]),
            ],
            objective_row: 0,
            objective_sense: ObjectiveSense::Min,
            objective_constant: 0.0,
        })
        .unwrap();
        let r = solve_exhaustive(&m, 16).unwrap();
        assert_eq!(r.status, OracleStatus::Infeasible);
        assert_eq!(r.witness, None);
    }

    #[test]
    fn empty_model_is_optimal_at_constant() {
        let mut p = Model::empty("e").into_parts();
        p.objective_constant = 4.5;
        let r = solve_exhaustive(&Model::from_parts(p).unwrap(), 1).unwrap();
        assert_eq!(r.objective, Some(4.5));
        assert_eq!(r.witness, Some(Solution::new()));
        assert_eq!(r.nodes_enumerated, 1);
    }

    #[test]
    fn limits_and_domain_errors() {
        assert!(matches!(solve_exhaustive(&knapsack(), 7), Err(OracleError::TooLarge { points: 8, .. })));
        let mut p = knapsack().into_parts();
        p.variables[0] = Variable::continuous("item_1", 0.0, 1.0);
        assert_eq!(
            solve_exhaustive(&Model::from_parts(p).unwrap(), 100).unwrap_err(),
            OracleError::ContinuousUnsupported("item_1".into())
        );
        let mut p = knapsack().into_parts();
        p.variables[0] = Variable::integer("item_1", 0.0, f64::INFINITY);
        assert!(matches!(solve_exhaustive(&Model::from_parts(p).unwrap(), 100), Err(OracleError::UnboundedDomain(_))));
    }

    #[test]
    fn general_integer_domains() {
        let m = Model::from_parts(ModelParts {
            name: "g".into(),
            variables: vec![Variable::integer("a", -2.0, 2.0), Variable::integer("b", 0.0, 3.0)],
            rows: vec![
                Row::new("obj", RowSense::N, 0.0, vec![(0, 1.0), (1, -1.0)]),
                Row::new("r", RowSense::E, 1.0, vec![(0, 1.0), (1, 1.0)]),
            ],
            objective_row: 0,
            objective_sense: ObjectiveSense::Min,
            objective_constant: 0.0,
        })
        .unwrap();
        let r = solve_exhaustive(&m, 100).unwrap();
        assert_eq!(r.nodes_enumerated, 20);
        assert_eq!(r.objective, Some(-5.0));
        assert!(verify_optimum(&m, -5.0, 100).unwrap());
        assert!(!verify_optimum(&m, -4.0, 100).unwrap());
    }
}
