//! Sparse MILP model, MPS reader/writer and solution evaluation.
//!
//! A [`Model`] is built once (by the parser or a [`ModelParts`] value) and is
//! immutable afterwards. The objective is stored as an ordinary row of sense
//! `N`; `n_rows` style counts always exclude it.

mod eval;
mod parse;
mod write;

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use eval::{evaluate_solution, row_tolerance, EvalError, Evaluation, Violation};
pub use parse::{parse_mps, parse_mps_str, read_mps_file, Dialect, MpsError, ParseOptions};
pub use write::{write_mps, write_mps_string, WriteError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum ObjectiveSense {
    Min,
    Max,
}

impl ObjectiveSense {
    pub fn flipped(self) -> Self {
        match self {
            ObjectiveSense::Min => ObjectiveSense::Max,
            ObjectiveSense::Max => ObjectiveSense::Min,
        }
    }

    /// True when `a` is strictly better than `b` under this sense.
    pub fn better(self, a: f64, b: f64) -> bool {
        match self {
            ObjectiveSense::Min => a < b,
            ObjectiveSense::Max => a > b,
        }
    }
}

impl fmt::Display for ObjectiveSense {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ObjectiveSense::Min => f.write_str("MIN"),
            ObjectiveSense::Max => f.write_str("MAX"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum RowSense {
    L,
    G,
    E,
    N,
}

impl RowSense {
    pub fn as_str(self) -> &'static str {
        match self {
            RowSense::L => "L",
            RowSense::G => "G",
            RowSense::E => "E",
            RowSense::N => "N",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Integrality {
    Continuous,
    Integer,
    Binary,
}

impl Integrality {
    pub fn is_integral(self) -> bool {
        !matches!(self, Integrality::Continuous)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Variable {
    pub name: String,
    pub lower: f64,
    pub upper: f64,
    pub integrality: Integrality,
}

impl Variable {
    pub fn continuous(name: impl Into<String>, lower: f64, upper: f64) -> Self {
        Variable { name: name.into(), lower, upper, integrality: Integrality::Continuous }
    }

    pub fn integer(name: impl Into<String>, lower: f64, upper: f64) -> Self {
        Variable { name: name.into(), lower, upper, integrality: Integrality::Integer }
    }

    pub fn binary(name: impl Into<String>) -> Self {
        Variable { name: name.into(), lower: 0.0, upper: 1.0, integrality: Integrality::Binary }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub name: String,
    pub sense: RowSense,
    pub rhs: f64,
    /// Raw RANGES value; see [`Row::bounds`] for how it is interpreted.
    pub range: Option<f64>,
    /// `(variable index, coefficient)`, sorted by variable index.
    pub terms: Vec<(usize, f64)>,
}

impl Row {
    pub fn new(name: impl Into<String>, sense: RowSense, rhs: f64, terms: Vec<(usize, f64)>) -> Self {
        Row { name: name.into(), sense, rhs, range: None, terms }
    }

    pub fn with_range(mut self, range: f64) -> Self {
        self.range = Some(range);
        self
    }

    /// Activity interval `[lo, hi]` of the row.
    ///
    /// RANGES on an L row gives `[b-|r|, b]`, on a G row `[b, b+|r|]`, on an
    /// E row `[b, b+r]` for `r >= 0` and `[b+r, b]` for `r < 0`.
    pub fn bounds(&self) -> (f64, f64) {
        let b = self.rhs;
        match (self.sense, self.range) {
            (RowSense::N, _) => (f64::NEG_INFINITY, f64::INFINITY),
            (RowSense::L, None) => (f64::NEG_INFINITY, b),
            (RowSense::G, None) => (b, f64::INFINITY),
            (RowSense::E, None) => (b, b),
            (RowSense::L, Some(r)) => (b - r.abs(), b),
            (RowSense::G, Some(r)) => (b, b + r.abs()),
            (RowSense::E, Some(r)) if r >= 0.0 => (b, b + r),
            (RowSense::E, Some(r)) => (b + r, b),
        }
    }

    pub fn activity(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|&(j, a)| a * x[j]).sum()
    }
}

/// Plain-data view of a model, used to construct or derive models.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParts {
    pub name: String,
    pub variables: Vec<Variable>,
    pub rows: Vec<Row>,
    pub objective_row: usize,
    pub objective_sense: ObjectiveSense,
    pub objective_constant: f64,
}

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("duplicate variable name `{0}`")]
    DuplicateVariable(String),
    #[error("duplicate row name `{0}`")]
    DuplicateRow(String),
    #[error("row `{row}` references variable index {index} out of range")]
    BadVariableIndex { row: String, index: usize },
    #[error("row `{0}` has unsorted or duplicate terms")]
    UnsortedTerms(String),
    #[error("objective row index {0} is not an N row")]
    BadObjectiveRow(usize),
    #[error("model has {0} N rows; exactly one is required")]
    ObjectiveCount(usize),
    #[error("variable `{name}` has lower bound {lower} above upper bound {upper}")]
    InconsistentBounds { name: String, lower: f64, upper: f64 },
    #[error("binary variable `{0}` has bounds outside [0, 1]")]
    BinaryBounds(String),
    #[error("non-finite coefficient in row `{0}`")]
    NonFinite(String),
}

/// Immutable sparse MILP.
#[derive(Debug, Clone)]
pub struct Model {
    parts: ModelParts,
    var_index: HashMap<String, usize>,
    row_index: HashMap<String, usize>,
}

impl PartialEq for Model {
    fn eq(&self, other: &Self) -> bool {
        self.parts == other.parts
    }
}

impl Model {
    pub fn from_parts(parts: ModelParts) -> Result<Model, ModelError> {
        let mut var_index = HashMap::with_capacity(parts.variables.len());
        for (j, v) in parts.variables.iter().enumerate() {
            if var_index.insert(v.name.clone(), j).is_some() {
                return Err(ModelError::DuplicateVariable(v.name.clone()));
            }
            if v.lower > v.upper || v.lower.is_nan() || v.upper.is_nan() {
                return Err(ModelError::InconsistentBounds {
                    name: v.name.clone(),
                    lower: v.lower,
                    upper: v.upper,
                });
            }
            if v.integrality == Integrality::Binary && (v.lower < 0.0 || v.upper > 1.0) {
                return Err(ModelError::BinaryBounds(v.name.clone()));
            }
        }
        let mut row_index = HashMap::with_capacity(parts.rows.len());
        let mut n_free = 0;
        for (i, r) in parts.rows.iter().enumerate() {
            if row_index.insert(r.name.clone(), i).is_some() {
                return Err(ModelError::DuplicateRow(r.name.clone()));
            }
            if r.sense == RowSense::N {
                n_free += 1;
            }
            let mut prev: Option<usize> = None;
            for &(j, a) in &r.terms {
                if j >= parts.variables.len() {
                    return Err(ModelError::BadVariableIndex { row: r.name.clone(), index: j });
                }
                if prev.is_some_and(|p| p >= j) {
                    return Err(ModelError::UnsortedTerms(r.name.clone()));
                }
                if !a.is_finite() {
                    return Err(ModelError::NonFinite(r.name.clone()));
                }
                prev = Some(j);
            }
            if !r.rhs.is_finite() || r.range.is_some_and(|x| !x.is_finite()) {
                return Err(ModelError::NonFinite(r.name.clone()));
            }
        }
        if n_free != 1 {
            return Err(ModelError::ObjectiveCount(n_free));
        }
        if parts.rows.get(parts.objective_row).map(|r| r.sense) != Some(RowSense::N) {
            return Err(ModelError::BadObjectiveRow(parts.objective_row));
        }
        Ok(Model { parts, var_index, row_index })
    }

    /// A model with no variables and only an empty objective row.
    pub fn empty(name: impl Into<String>) -> Model {
        Model::from_parts(ModelParts {
            name: name.into(),
            variables: vec![],
            rows: vec![Row::new("obj", RowSense::N, 0.0, vec![])],
            objective_row: 0,
            objective_sense: ObjectiveSense::Min,
            objective_constant: 0.0,
        })
        .expect("empty model is valid")
    }

    pub fn parts(&self) -> &ModelParts {
        &self.parts
    }

    pub fn into_parts(self) -> ModelParts {
        self.parts
    }

    pub fn name(&self) -> &str {
        &self.parts.name
    }

    pub fn variables(&self) -> &[Variable] {
        &self.parts.variables
    }

    pub fn rows(&self) -> &[Row] {
        &self.parts.rows
    }

    pub fn objective_row(&self) -> usize {
        self.parts.objective_row
    }

    pub fn objective(&self) -> &Row {
        &self.parts.rows[self.parts.objective_row]
    }

    pub fn objective_sense(&self) -> ObjectiveSense {
        self.parts.objective_sense
    }

    pub fn objective_constant(&self) -> f64 {
        self.parts.objective_constant
    }

    pub fn variable_index(&self, name: &str) -> Option<usize> {
        self.var_index.get(name).copied()
    }

    pub fn row_index(&self, name: &str) -> Option<usize> {
        self.row_index.get(name).copied()
    }

    /// Indices of constraint rows (every row except the objective).
    pub fn constraint_rows(&self) -> impl Iterator<Item = usize> + '_ {
        let obj = self.parts.objective_row;
        (0..self.parts.rows.len()).filter(move |&i| i != obj)
    }

    /// Objective coefficient per variable (dense).
    pub fn objective_dense(&self) -> Vec<f64> {
        let mut c = vec![0.0; self.parts.variables.len()];
        for &(j, a) in &self.objective().terms {
            c[j] = a;
        }
        c
    }

    /// Column-major view: for every variable the `(row, coefficient)`
    /// entries, rows in increasing order (objective row included).
    pub fn columns(&self) -> Vec<Vec<(usize, f64)>> {
        let mut cols = vec![Vec::new(); self.parts.variables.len()];
        for (i, r) in self.parts.rows.iter().enumerate() {
            for &(j, a) in &r.terms {
                cols[j].push((i, a));
            }
        }
        cols
    }

    pub fn stats(&self) -> ModelStats {
        model_stats(self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ModelStats {
    pub n_vars: usize,
    pub n_rows: usize,
    pub n_nonzeros: usize,
    /// General integers (binaries excluded).
    pub n_integer: usize,
    pub n_binary: usize,
}

impl ModelStats {
    /// Size metric used for scale buckets.
    pub fn size(&self) -> usize {
        self.n_vars + self.n_rows
    }
}

pub fn model_stats(model: &Model) -> ModelStats {
    let vars = model.variables();
    ModelStats {
        n_vars: vars.len(),
        n_rows: model.rows().len() - 1,
        n_nonzeros: model.rows().iter().map(|r| r.terms.len()).sum(),
        n_integer: vars.iter().filter(|v| v.integrality == Integrality::Integer).count(),
        n_binary: vars.iter().filter(|v| v.integrality == Integrality::Binary).count(),
    }
}

/// Variable assignment keyed by variable name.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Solution {
    pub values: BTreeMap<String, f64>,
}

impl Solution {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_pairs<I, S>(pairs: I) -> Self
    where
        I: IntoIterator<Item = (S, f64)>,
        S: Into<String>,
    {
        Solution { values: pairs.into_iter().map(|(k, v)| (k.into(), v)).collect() }
    }

    /// Dense vector for `model`, filling missing entries with 0.
    pub fn from_dense(model: &Model, x: &[f64]) -> Self {
        Solution {
            values: model.variables().iter().zip(x).map(|(v, &val)| (v.name.clone(), val)).collect(),
        }
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.values.get(name).copied()
    }

    pub fn insert(&mut self, name: impl Into<String>, value: f64) {
        self.values.insert(name.into(), value);
    }

    /// Reads `{"x": 1.0, ...}` or `{"values": {"x": 1.0, ...}}`.
    pub fn from_json(text: &str) -> Result<Solution, serde_json::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Wrapped { values: BTreeMap<String, f64> },
            Flat(BTreeMap<String, f64>),
        }
        Ok(match serde_json::from_str::<Repr>(text)? {
            Repr::Wrapped { values } | Repr::Flat(values) => Solution { values },
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranges_follow_sign_table() {
        let l = Row::new("l", RowSense::L, 4.0, vec![]).with_range(-3.0);
        assert_eq!(l.bounds(), (1.0, 4.0));
        let g = Row::new("g", RowSense::G, 4.0, vec![]).with_range(-3.0);
        assert_eq!(g.bounds(), (4.0, 7.0));
        let e_pos = Row::new("e", RowSense::E, 4.0, vec![]).with_range(3.0);
        assert_eq!(e_pos.bounds(), (4.0, 7.0));
        let e_neg = Row::new("e", RowSense::E, 4.0, vec![]).with_range(-3.0);
        assert_eq!(e_neg.bounds(), (1.0, 4.0));
    }

    #[test]
    fn from_parts_rejects_broken_invariants() {
        let base = Model::empty("m").into_parts();
        let mut p = base.clone();
        p.variables = vec![Variable::binary("x"), Variable::binary("x")];
        assert_eq!(Model::from_parts(p).unwrap_err(), ModelError::DuplicateVariable("x".into()));

        let mut p = base.clone();
        p.variables = vec![Variable::binary("x")];
        p.rows.push(Row::new("c", RowSense::L, 1.0, vec![(3, 1.0)]));
        assert!(matches!(Model::from_parts(p), Err(ModelError::BadVariableIndex { .. })));

        let mut p = base.clone();
        p.rows.push(Row::new("o2", RowSense::N, 0.0, vec![]));
        assert_eq!(Model::from_parts(p).unwrap_err(), ModelError::ObjectiveCount(2));

        let mut p = base;
        p.variables = vec![Variable::continuous("x", 2.0, 1.0)];
        assert!(matches!(Model::from_parts(p), Err(ModelError::InconsistentBounds { .. })));
    }

    #[test]
    fn empty_model_stats_are_zero() {
        let s = Model::empty("e").stats();
        assert_eq!(s, ModelStats::default());
        assert_eq!(s.size(), 0);
    }

    #[test]
    fn solution_json_accepts_both_layouts() {
        let a = Solution::from_json(r#"{"x": 1.5}"#).unwrap();
        let b = Solution::from_json(r#"{"values": {"x": 1.5}}"#).unwrap();
        assert_eq!(a, b);
        assert_eq!(serde_json::to_string(&a).unwrap(), r#"{"x":1.5}"#);
    }
}
