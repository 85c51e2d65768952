use std::collections::BTreeMap;

use serde::Serialize;

use crate::mining::ConstraintFamily;
use crate::mps::{Integrality, Model, RowSense};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum AtomicType {
    UpperBoundVar,
    UpperBoundSum,
    UpperBoundWeighted,
    UpperBoundProportion,
    LowerBoundVar,
    LowerBoundSum,
    LowerBoundWeighted,
    LowerBoundProportion,
    Comparison,
    Implication,
    ExactlyOne,
    AtLeastOne,
    AtMostOne,
    Equality,
    AggregationDef,
    Indicator,
    DomainIntegrality,
}

impl AtomicType {
    pub fn as_str(self) -> &'static str {
        match self {
            AtomicType::UpperBoundVar => "UPPER_BOUND_VAR",
            AtomicType::UpperBoundSum => "UPPER_BOUND_SUM",
            AtomicType::UpperBoundWeighted => "UPPER_BOUND_WEIGHTED",
            AtomicType::UpperBoundProportion => "UPPER_BOUND_PROPORTION",
            AtomicType::LowerBoundVar => "LOWER_BOUND_VAR",
            AtomicType::LowerBoundSum => "LOWER_BOUND_SUM",
            AtomicType::LowerBoundWeighted => "LOWER_BOUND_WEIGHTED",
            AtomicType::LowerBoundProportion => "LOWER_BOUND_PROPORTION",
            AtomicType::Comparison => "COMPARISON",
            AtomicType::Implication => "IMPLICATION",
            AtomicType::ExactlyOne => "EXACTLY_ONE",
            AtomicType::AtLeastOne => "AT_LEAST_ONE",
            AtomicType::AtMostOne => "AT_MOST_ONE",
            AtomicType::Equality => "EQUALITY",
            AtomicType::AggregationDef => "AGGREGATION_DEF",
            AtomicType::Indicator => "INDICATOR",
            AtomicType::DomainIntegrality => "DOMAIN_INTEGRALITY",
        }
    }
}

pub(crate) fn median_abs_coefficient(model: &Model, rows: &[usize]) -> f64 {
    let mut v: Vec<f64> = rows.iter().flat_map(|&i| model.rows()[i].terms.iter().map(|t| t.1.abs())).collect();
    if v.is_empty() {
        return 0.0;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

/// Atomic type of a single row; `big` is the magnitude threshold for Big-M terms.
pub fn classify_row(model: &Model, row: usize, big: f64) -> AtomicType {
    let r = &model.rows()[row];
    let vars = model.variables();
    let by_sense = |le: AtomicType, ge: AtomicType| match r.sense {
        RowSense::L => le,
        RowSense::G => ge,
        _ => AtomicType::Equality,
    };
    let terms = &r.terms;
    let binary = |j: usize| vars[j].integrality == Integrality::Binary;
    if terms.is_empty() {
        return by_sense(AtomicType::UpperBoundWeighted, AtomicType::LowerBoundWeighted);
    }
    if terms.len() == 1 {
        let positive = terms[0].1 > 0.0;
        return match (r.sense, positive) {
            (RowSense::E, _) | (RowSense::N, _) => AtomicType::Equality,
            (RowSense::L, true) | (RowSense::G, false) => AtomicType::UpperBoundVar,
            _ => AtomicType::LowerBoundVar,
        };
    }
    if big > 0.0 && terms.iter().any(|&(j, a)| binary(j) && a.abs() >= big) {
        return AtomicType::Implication;
    }
    let all_binary = terms.iter().all(|&(j, _)| binary(j));
    if all_binary && terms.iter().all(|t| t.1 == 1.0) && r.rhs == 1.0 {
        return match r.sense {
            RowSense::E => AtomicType::ExactlyOne,
            RowSense::G => AtomicType::AtLeastOne,
            _ => AtomicType::AtMostOne,
        };
    }
    let n_pos = terms.iter().filter(|t| t.1 > 0.0).count();
    let n_neg = terms.len() - n_pos;
    let mixed = n_pos > 0 && n_neg > 0;
    let lone = n_pos == 1 || n_neg == 1;
    if r.rhs == 0.0 && mixed {
        if terms.len() == 2 && all_binary {
            return AtomicType::Implication;
        }
        if r.sense == RowSense::E && lone && terms.len() >= 3 {
            return AtomicType::AggregationDef;
        }
        let bins: Vec<&(usize, f64)> = terms.iter().filter(|t| binary(t.0)).collect();
        if bins.len() == 1 && terms.len() >= 2 {
            let s = bins[0].1 > 0.0;
            if terms.iter().filter(|t| !binary(t.0)).all(|t| (t.1 > 0.0) != s) {
                return AtomicType::Indicator;
            }
        }
        if terms.len() == 2 {
            return if r.sense == RowSense::E { AtomicType::Equality } else { AtomicType::Comparison };
        }
        if r.sense != RowSense::E {
            return by_sense(AtomicType::UpperBoundProportion, AtomicType::LowerBoundProportion);
        }
    }
    if !mixed {
        let equal = terms.iter().all(|t| t.1 == terms[0].1);
        let upper = (r.sense == RowSense::L) == (n_pos > 0);
        return match (r.sense, equal, upper) {
            (RowSense::E, ..) | (RowSense::N, ..) => AtomicType::Equality,
            (_, true, true) => AtomicType::UpperBoundSum,
            (_, true, false) => AtomicType::LowerBoundSum,
            (_, false, true) => AtomicType::UpperBoundWeighted,
            (_, false, false) => AtomicType::LowerBoundWeighted,
        };
    }
    by_sense(AtomicType::UpperBoundWeighted, AtomicType::LowerBoundWeighted)
}

/// Majority row type of a family; ties go to the earliest type in declaration order.
pub fn classify_atomic(model: &Model, family: &ConstraintFamily, bigm_ratio: f64) -> AtomicType {
    let big = bigm_ratio * median_abs_coefficient(model, &family.rows);
    let mut counts: BTreeMap<AtomicType, usize> = BTreeMap::new();
    for &i in &family.rows {
        *counts.entry(classify_row(model, i, big)).or_default() += 1;
    }
    let best = counts.values().copied().max().unwrap_or(0);
    counts
        .into_iter()
        .find(|&(_, n)| n == best)
        .map(|(t, _)| t)
        .unwrap_or(AtomicType::UpperBoundWeighted)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mps::{ModelParts, ObjectiveSense, Row, Variable};

    fn one_row(vars: Vec<Variable>, row: Row) -> Model {
        Model::from_parts(ModelParts {
            name: "t".into(),
            variables: vars,
            rows: vec![Row::new("obj", RowSense::N, 0.0, vec![]), row],
            objective_row: 0,
            objective_sense: ObjectiveSense::Min,
            objective_constant: 0.0,
        })
        .unwrap()
    }

    fn bins(n: usize) -> Vec<Variable> {
        (0..n).map(|i| Variable::binary(format!("y_{i}"))).collect()
    }

    fn kind(m: &Model) -> AtomicType {
        let big = 100.0 * median_abs_coefficient(m, &[1]);
        classify_row(m, 1, big)
    }

    #[test]
    fn table_examples() {
        let eq = one_row(bins(3), Row::new("c", RowSense::E, 1.0, vec![(0, 1.0), (1, 1.0), (2, 1.0)]));
        assert_eq!(kind(&eq), AtomicType::ExactlyOne);
        let ub = one_row(vec![Variable::continuous("x_3", 0.0, 10.0)], Row::new("c", RowSense::L, 5.0, vec![(0, 1.0)]));
        assert_eq!(kind(&ub), AtomicType::UpperBoundVar);
        let mut vars = vec![Variable::continuous("H_1", 0.0, f64::INFINITY)];
        vars.extend(bins(3));
        let agg = one_row(vars, Row::new("c", RowSense::E, 0.0, vec![(0, 1.0), (1, -4.0), (2, -7.0), (3, -2.0)]));
        assert_eq!(kind(&agg), AtomicType::AggregationDef);
    }

    #[test]
    fn set_and_bigm_rows() {
        let cover = one_row(bins(3), Row::new("c", RowSense::G, 1.0, vec![(0, 1.0), (2, 1.0)]));
        assert_eq!(kind(&cover), AtomicType::AtLeastOne);
        let pack = one_row(bins(3), Row::new("c", RowSense::L, 1.0, vec![(0, 1.0), (2, 1.0)]));
        assert_eq!(kind(&pack), AtomicType::AtMostOne);
        let mut vars = vec![
            Variable::integer("t_1", 0.0, 50.0),
            Variable::integer("t_2", 0.0, 50.0),
        ];
        vars.extend(bins(1));
        let bigm = one_row(vars, Row::new("c", RowSense::L, 997.0, vec![(0, 1.0), (1, -1.0), (2, 1000.0)]));
        assert_eq!(kind(&bigm), AtomicType::Implication);
        let w = one_row(bins(3), Row::new("c", RowSense::L, 7.0, vec![(0, 5.0), (1, 4.0), (2, 3.0)]));
        assert_eq!(kind(&w), AtomicType::UpperBoundWeighted);
        let cmp = one_row(
            vec![Variable::continuous("a", 0.0, 9.0), Variable::continuous("b", 0.0, 9.0)],
            Row::new("c", RowSense::G, 0.0, vec![(0, 1.0), (1, -2.0)]),
        );
        assert_eq!(kind(&cmp), AtomicType::Comparison);
    }
}
