use serde::Serialize;
use thiserror::Error;

use super::{Model, Solution};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ViolationKind {
    Row,
    Bound,
    Integrality,
}

/// One violated row, variable bound or integrality requirement.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub kind: ViolationKind,
    pub name: String,
    /// Row activity, or the variable value for bound/integrality records.
    pub value: f64,
    pub lower: f64,
    pub upper: f64,
    /// Distance outside `[lower, upper]`, or to the nearest integer.
    pub amount: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Evaluation {
    pub objective: f64,
    pub violations: Vec<Violation>,
}

impl Evaluation {
    pub fn is_feasible(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn row_violations(&self) -> impl Iterator<Item = &Violation> {
        self.violations.iter().filter(|v| v.kind == ViolationKind::Row)
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("solution names unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("solution value for `{0}` is not finite")]
    NonFiniteValue(String),
    #[error("tolerance must be finite and non-negative, got {0}")]
    BadTolerance(f64),
}

impl EvalError {
    pub fn code(&self) -> &'static str {
        match self {
            EvalError::UnknownVariable(_) => "UNKNOWN_VARIABLE",
            EvalError::NonFiniteValue(_) => "NON_FINITE_VALUE",
            EvalError::BadTolerance(_) => "BAD_TOLERANCE",
        }
    }
}

/// `tol * max(1, |lo|, |hi|)`, ignoring infinite ends.
pub fn row_tolerance(lo: f64, hi: f64, tol: f64) -> f64 {
    let mut scale: f64 = 1.0;
    for v in [lo, hi] {
        if v.is_finite() {
            scale = scale.max(v.abs());
        }
    }
    tol * scale
}

fn outside(value: f64, lo: f64, hi: f64, tol: f64) -> Option<f64> {
    let tau = row_tolerance(lo, hi, tol);
    if value < lo - tau {
        Some(lo - value)
    } else if value > hi + tau {
        Some(value - hi)
    } else {
        None
    }
}

/// Objective value and every violated row, bound and integrality requirement.
/// Variables missing from `sol` are taken as 0.
pub fn evaluate_solution(model: &Model, sol: &Solution, tol: f64) -> Result<Evaluation, EvalError> {
    if !(tol >= 0.0 && tol.is_finite()) {
        return Err(EvalError::BadTolerance(tol));
    }
    let mut x = vec![0.0; model.variables().len()];
    for (name, &value) in &sol.values {
        let j = model.variable_index(name).ok_or_else(|| EvalError::UnknownVariable(name.clone()))?;
        if !value.is_finite() {
            return Err(EvalError::NonFiniteValue(name.clone()));
        }
        x[j] = value;
    }
    let mut violations = Vec::new();
    for (v, &xj) in model.variables().iter().zip(&x) {
        if let Some(amount) = outside(xj, v.lower, v.upper, tol) {
            violations.push(Violation {
                kind: ViolationKind::Bound,
                name: v.name.clone(),
                value: xj,
                lower: v.lower,
                upper: v.upper,
                amount,
            });
        }
        if v.integrality.is_integral() {
            let frac = (xj - xj.round()).abs();
            if frac > tol {
                violations.push(Violation {
                    kind: ViolationKind::Integrality,
                    name: v.name.clone(),
                    value: xj,
                    lower: v.lower,
                    upper: v.upper,
                    amount: frac,
                });
            }
        }
    }
    for i in model.constraint_rows() {
        let row = &model.rows()[i];
        let activity = row.activity(&x);
        let (lo, hi) = row.bounds();
        if let Some(amount) = outside(activity, lo, hi, tol) {
            violations.push(Violation { kind: ViolationKind::Row, name: row.name.clone(), value: activity, lower: lo, upper: hi, amount });
        }
    }
    let objective = model.objective_constant() + model.objective().activity(&x);
    Ok(Evaluation { objective, violations })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mps::{ModelParts, ObjectiveSense, Row, RowSense, Variable};

    fn fixture() -> Model {
        Model::from_parts(ModelParts {
            name: "f".into(),
            variables: vec![Variable::continuous("x1", 0.0, f64::INFINITY), Variable::continuous("x2", 0.0, f64::INFINITY)],
            rows: vec![
                Row::new("obj", RowSense::N, 0.0, vec![(0, 1.0), (1, 1.0)]),
                Row::new("c1", RowSense::G, 1.0, vec![(0, 1.0), (1, 1.0)]),
            ],
            objective_row: 0,
            objective_sense: ObjectiveSense::Min,
            objective_constant: 0.0,
        })
        .unwrap()
    }

    #[test]
    fn zero_solution_violates_cover_row() {
        let e = evaluate_solution(&fixture(), &Solution::new(), 1e-9).unwrap();
        assert_eq!(e.violations.len(), 1);
        assert_eq!(e.violations[0].name, "c1");
        assert_eq!(e.violations[0].value, 0.0);
        assert_eq!(e.objective, 0.0);
    }

    #[test]
    fn feasible_point_has_no_violations() {
        let e = evaluate_solution(&fixture(), &Solution::from_pairs([("x1", 1.0), ("x2", 0.0)]), 1e-9).unwrap();
        assert!(e.is_feasible());
        assert_eq!(e.objective, 1.0);
    }

    #[test]
    fn tolerance_scales_with_bound_magnitude() {
        assert_eq!(row_tolerance(-5.0, f64::INFINITY, 0.1), 0.5);
        assert_eq!(row_tolerance(f64::NEG_INFINITY, 0.2, 0.1), 0.1);
        let e = evaluate_solution(&fixture(), &Solution::from_pairs([("x1", 0.9999995)]), 1e-6).unwrap();
        assert!(e.is_feasible());
    }

    #[test]
    fn bound_and_integrality_records() {
        let mut p = fixture().into_parts();
        p.variables[1] = Variable::integer("x2", 0.0, 3.0);
        let m = Model::from_parts(p).unwrap();
        let e = evaluate_solution(&m, &Solution::from_pairs([("x1", -1.0), ("x2", 2.5)]), 1e-6).unwrap();
        let kinds: Vec<_> = e.violations.iter().map(|v| (v.kind, v.name.as_str())).collect();
        assert_eq!(kinds, vec![(ViolationKind::Bound, "x1"), (ViolationKind::Integrality, "x2")]);
    }

    #[test]
    fn unknown_variable_is_rejected() {
        let err = evaluate_solution(&fixture(), &Solution::from_pairs([("zz", 1.0)]), 1e-6).unwrap_err();
        assert_eq!(err, EvalError::UnknownVariable("zz".into()));
        assert_eq!(err.code(), "UNKNOWN_VARIABLE");
    }
}
