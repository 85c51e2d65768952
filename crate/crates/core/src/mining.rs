//! Variable-group and constraint-family recovery from a flat model.
//!
//! Variables are grouped by the `(base, arity)` of their tokenized names.
//! Constraint rows are grouped by row-name template, sense and the set of
//! `(group, sign)` pairs they touch; coefficients, term counts and right-hand
//! sides that differ inside a family collapse to [`CoeffClass::Varies`].

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::ser::Serializer;
use serde::Serialize;

use crate::mps::{Model, RowSense};

/// Characters that separate index tokens in a name.
pub const DELIMITERS: &[char] = &['_', '#', '(', ')', '[', ']', ',', '.'];

/// Jaccard similarity at or above which two families are reported as near duplicates.
pub const NEAR_DUPLICATE_JACCARD: f64 = 0.9;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct NameToken {
    pub base: String,
    pub indices: Vec<String>,
    /// `delimiters[k]` precedes `indices[k]`; the last entry is the trailing text.
    pub delimiters: Vec<String>,
}

impl NameToken {
    pub fn arity(&self) -> usize {
        self.indices.len()
    }

    pub fn reassemble(&self) -> String {
        let mut s = self.base.clone();
        for (d, i) in self.delimiters.iter().zip(&self.indices) {
            s.push_str(d);
            s.push_str(i);
        }
        if let Some(t) = self.delimiters.last() {
            s.push_str(t);
        }
        s
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum CharClass {
    Delim,
    Digit,
    Alpha,
}

fn char_class(c: char) -> CharClass {
    if DELIMITERS.contains(&c) {
        CharClass::Delim
    } else if c.is_ascii_digit() {
        CharClass::Digit
    } else {
        CharClass::Alpha
    }
}

pub fn tokenize_name(name: &str) -> NameToken {
    let mut runs: Vec<(CharClass, &str)> = Vec::new();
    let mut start = 0;
    let mut prev: Option<CharClass> = None;
    for (i, c) in name.char_indices() {
        let cls = char_class(c);
        if let Some(p) = prev {
            if p != cls {
                runs.push((p, &name[start..i]));
                start = i;
            }
        }
        prev = Some(cls);
    }
    if let Some(p) = prev {
        runs.push((p, &name[start..]));
    }
    let mut it = runs.into_iter().peekable();
    let base = match it.peek() {
        Some((CharClass::Alpha, s)) => {
            let s = s.to_string();
            it.next();
            s
        }
        _ => String::new(),
    };
    let mut indices = Vec::new();
    let mut delimiters = Vec::new();
    let mut pending = String::new();
    for (cls, s) in it {
        if cls == CharClass::Delim {
            pending.push_str(s);
        } else {
            delimiters.push(std::mem::take(&mut pending));
            indices.push(s.to_string());
        }
    }
    delimiters.push(pending);
    NameToken { base, indices, delimiters }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IndexDomain {
    /// Distinct observed tokens, numerically sorted when all are integers.
    pub values: Vec<String>,
    pub numeric: bool,
    pub min: Option<i64>,
    pub max: Option<i64>,
}

impl IndexDomain {
    fn from_tokens<'a>(tokens: impl Iterator<Item = &'a str>) -> IndexDomain {
        let set: BTreeSet<&str> = tokens.collect();
        let nums: Option<Vec<i64>> = set.iter().map(|t| t.parse::<i64>().ok()).collect();
        match nums {
            Some(mut n) if !n.is_empty() => {
                let mut values: Vec<String> = set.iter().map(|s| s.to_string()).collect();
                values.sort_by_key(|v| v.parse::<i64>().unwrap_or(0));
                n.sort_unstable();
                IndexDomain { values, numeric: true, min: n.first().copied(), max: n.last().copied() }
            }
            _ => IndexDomain { values: set.iter().map(|s| s.to_string()).collect(), numeric: false, min: None, max: None },
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VariableGroup {
    pub id: usize,
    pub base: String,
    pub arity: usize,
    pub members: Vec<usize>,
    pub index_domains: Vec<IndexDomain>,
}

/// Either an exact shared value or the marker `VARIES`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CoeffClass {
    Exact(f64),
    Varies,
}

impl CoeffClass {
    pub fn exact(self) -> Option<f64> {
        match self {
            CoeffClass::Exact(v) => Some(v),
            CoeffClass::Varies => None,
        }
    }

    pub fn is_varies(self) -> bool {
        matches!(self, CoeffClass::Varies)
    }

    fn merge(self, other: CoeffClass) -> CoeffClass {
        match (self, other) {
            (CoeffClass::Exact(a), CoeffClass::Exact(b)) if a == b => self,
            _ => CoeffClass::Varies,
        }
    }
}

impl Serialize for CoeffClass {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            CoeffClass::Exact(v) => s.serialize_f64(*v),
            CoeffClass::Varies => s.serialize_str("VARIES"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CountClass {
    Exact(usize),
    Varies,
}

impl CountClass {
    pub fn exact(self) -> Option<usize> {
        match self {
            CountClass::Exact(v) => Some(v),
            CountClass::Varies => None,
        }
    }

    fn merge(self, other: CountClass) -> CountClass {
        if self == other {
            self
        } else {
            CountClass::Varies
        }
    }
}

impl Serialize for CountClass {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            CountClass::Exact(v) => s.serialize_u64(*v as u64),
            CountClass::Varies => s.serialize_str("VARIES"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TermClass {
    pub group: usize,
    pub sign: i8,
    pub coefficient: CoeffClass,
    pub count: CountClass,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RowSignature {
    pub sense: RowSense,
    pub terms: Vec<TermClass>,
    pub rhs: CoeffClass,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub range: Option<CoeffClass>,
}

impl RowSignature {
    fn merge(&mut self, other: &RowSignature) {
        for (a, b) in self.terms.iter_mut().zip(&other.terms) {
            a.coefficient = a.coefficient.merge(b.coefficient);
            a.count = a.count.merge(b.count);
        }
        self.rhs = self.rhs.merge(other.rhs);
        if let (Some(a), Some(b)) = (self.range.as_mut(), other.range) {
            *a = a.merge(b);
        }
    }

    pub fn pattern(&self) -> BTreeSet<(usize, i8)> {
        self.terms.iter().map(|t| (t.group, t.sign)).collect()
    }
}

/// Signature of one constraint row given the variable-to-group assignment.
pub fn row_signature(model: &Model, row: usize, var_group: &[usize]) -> RowSignature {
    let r = &model.rows()[row];
    let mut buckets: BTreeMap<(usize, i8), (CoeffClass, usize)> = BTreeMap::new();
    for &(j, a) in &r.terms {
        let key = (var_group[j], if a < 0.0 { -1 } else { 1 });
        buckets
            .entry(key)
            .and_modify(|(c, n)| {
                *c = c.merge(CoeffClass::Exact(a));
                *n += 1;
            })
            .or_insert((CoeffClass::Exact(a), 1));
    }
    RowSignature {
        sense: r.sense,
        terms: buckets
            .into_iter()
            .map(|((group, sign), (coefficient, n))| TermClass { group, sign, coefficient, count: CountClass::Exact(n) })
            .collect(),
        rhs: CoeffClass::Exact(r.rhs),
        range: r.range.map(CoeffClass::Exact),
    }
}

/// A `(group, index position)` pair of the variables a family touches.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct IndexSlot {
    pub group: usize,
    pub position: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConstraintFamily {
    pub id: usize,
    pub name: String,
    pub signature: RowSignature,
    pub rows: Vec<usize>,
    pub atomic: bool,
    pub index_slots: Vec<IndexSlot>,
    /// Per row, per slot: the token shared by all the row's terms of that
    /// group at that position, or `None` when it varies inside the row.
    pub index_map: Vec<Vec<Option<String>>>,
}

impl ConstraintFamily {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NearDuplicate {
    pub a: usize,
    pub b: usize,
    pub jaccard: f64,
}

/// Mined scaffold of a model: groups, families and their supporting tokens.
#[derive(Debug, Clone, Serialize)]
pub struct Structure {
    #[serde(skip)]
    pub var_tokens: Vec<NameToken>,
    #[serde(skip)]
    pub row_tokens: Vec<NameToken>,
    #[serde(skip)]
    pub var_group: Vec<usize>,
    pub groups: Vec<VariableGroup>,
    pub families: Vec<ConstraintFamily>,
    pub near_duplicates: Vec<NearDuplicate>,
    pub notes: Vec<String>,
}

impl Structure {
    pub fn family_of_row(&self) -> HashMap<usize, usize> {
        let mut m = HashMap::new();
        for f in &self.families {
            for &r in &f.rows {
                m.insert(r, f.id);
            }
        }
        m
    }

    pub fn family_by_name(&self, name: &str) -> Option<&ConstraintFamily> {
        self.families.iter().find(|f| f.name == name)
    }
}

pub fn infer_variable_groups(model: &Model) -> Vec<VariableGroup> {
    let tokens: Vec<NameToken> = model.variables().iter().map(|v| tokenize_name(&v.name)).collect();
    build_groups(&tokens).0
}

fn build_groups(tokens: &[NameToken]) -> (Vec<VariableGroup>, Vec<usize>) {
    let mut key_to_group: HashMap<(&str, usize), usize> = HashMap::new();
    let mut groups: Vec<VariableGroup> = Vec::new();
    let mut var_group = Vec::with_capacity(tokens.len());
    for (j, t) in tokens.iter().enumerate() {
        let g = *key_to_group.entry((t.base.as_str(), t.arity())).or_insert_with(|| {
            groups.push(VariableGroup {
                id: groups.len(),
                base: t.base.clone(),
                arity: t.arity(),
                members: Vec::new(),
                index_domains: Vec::new(),
            });
            groups.len() - 1
        });
        groups[g].members.push(j);
        var_group.push(g);
    }
    for g in &mut groups {
        g.index_domains = (0..g.arity)
            .map(|p| IndexDomain::from_tokens(g.members.iter().map(|&j| tokens[j].indices[p].as_str())))
            .collect();
    }
    (groups, var_group)
}

/// Merges constraint rows into families given a variable-to-group assignment.
pub fn group_constraints(model: &Model, groups: &[VariableGroup]) -> Vec<ConstraintFamily> {
    let mut var_group = vec![0; model.variables().len()];
    for g in groups {
        for &j in &g.members {
            var_group[j] = g.id;
        }
    }
    let var_tokens: Vec<NameToken> = model.variables().iter().map(|v| tokenize_name(&v.name)).collect();
    let row_tokens: Vec<NameToken> = model.rows().iter().map(|r| tokenize_name(&r.name)).collect();
    build_families(model, groups, &var_group, &var_tokens, &row_tokens)
}

type FamilyKey = (String, usize, RowSense, bool, Vec<(usize, i8)>);

fn build_families(
    model: &Model,
    groups: &[VariableGroup],
    var_group: &[usize],
    var_tokens: &[NameToken],
    row_tokens: &[NameToken],
) -> Vec<ConstraintFamily> {
    let mut order: Vec<FamilyKey> = Vec::new();
    let mut buckets: HashMap<FamilyKey, (RowSignature, Vec<usize>)> = HashMap::new();
    for i in model.constraint_rows() {
        let sig = row_signature(model, i, var_group);
        let t = &row_tokens[i];
        let key: FamilyKey = (
            t.base.clone(),
            t.arity(),
            sig.sense,
            sig.range.is_some(),
            sig.terms.iter().map(|x| (x.group, x.sign)).collect(),
        );
        match buckets.get_mut(&key) {
            Some((s, rows)) => {
                s.merge(&sig);
                rows.push(i);
            }
            None => {
                order.push(key.clone());
                buckets.insert(key, (sig, vec![i]));
            }
        }
    }
    let mut base_count: HashMap<&str, usize> = HashMap::new();
    for k in &order {
        *base_count.entry(k.0.as_str()).or_default() += 1;
    }
    let mut base_seen: HashMap<&str, usize> = HashMap::new();
    let mut families = Vec::with_capacity(order.len());
    for (id, key) in order.iter().enumerate() {
        let (signature, rows) = buckets.remove(key).expect("bucket exists");
        let base = if key.0.is_empty() { "row" } else { key.0.as_str() };
        let name = if base_count[key.0.as_str()] > 1 {
            let k = base_seen.entry(key.0.as_str()).or_default();
            *k += 1;
            format!("{base}_{k}")
        } else {
            base.to_string()
        };
        let slot_groups: BTreeSet<usize> = signature.terms.iter().map(|t| t.group).collect();
        let index_slots: Vec<IndexSlot> = slot_groups
            .iter()
            .flat_map(|&g| (0..groups[g].arity).map(move |p| IndexSlot { group: g, position: p }))
            .collect();
        let index_map = rows
            .iter()
            .map(|&i| {
                index_slots
                    .iter()
                    .map(|slot| {
                        let mut shared: Option<&str> = None;
                        for &(j, _) in &model.rows()[i].terms {
                            if var_group[j] != slot.group {
                                continue;
                            }
                            let tok = var_tokens[j].indices[slot.position].as_str();
                            match shared {
                                None => shared = Some(tok),
                                Some(s) if s == tok => {}
                                Some(_) => return None,
                            }
                        }
                        shared.map(str::to_string)
                    })
                    .collect()
            })
            .collect();
        families.push(ConstraintFamily {
            id,
            name,
            atomic: rows.len() == 1,
            signature,
            rows,
            index_slots,
            index_map,
        });
    }
    families
}

fn jaccard(a: &BTreeSet<(usize, i8)>, b: &BTreeSet<(usize, i8)>) -> f64 {
    let inter = a.intersection(b).count();
    let union = a.union(b).count();
    if union == 0 {
        1.0
    } else {
        inter as f64 / union as f64
    }
}

fn packed_index_notes(groups: &[VariableGroup]) -> Vec<String> {
    let mut notes = Vec::new();
    for g in groups {
        for (p, d) in g.index_domains.iter().enumerate() {
            let (Some(lo), Some(hi)) = (d.min, d.max) else { continue };
            let long = d.values.iter().any(|v| v.len() >= 3);
            let span = (hi - lo + 1) as f64;
            if long && (d.len() as f64) < span / 2.0 {
                notes.push(format!(
                    "group `{}` position {}: {} distinct tokens of 3+ digits over [{}, {}] may pack several indices; left undecomposed",
                    g.base,
                    p,
                    d.len(),
                    lo,
                    hi
                ));
            }
        }
    }
    notes
}

pub fn mine(model: &Model) -> Structure {
    let var_tokens: Vec<NameToken> = model.variables().iter().map(|v| tokenize_name(&v.name)).collect();
    let row_tokens: Vec<NameToken> = model.rows().iter().map(|r| tokenize_name(&r.name)).collect();
    let (groups, var_group) = build_groups(&var_tokens);
    let families = build_families(model, &groups, &var_group, &var_tokens, &row_tokens);
    let patterns: Vec<(usize, BTreeSet<(usize, i8)>)> =
        families.iter().filter(|f| f.len() >= 2).map(|f| (f.id, f.signature.pattern())).collect();
    let mut near_duplicates = Vec::new();
    for (x, (ia, pa)) in patterns.iter().enumerate() {
        for (ib, pb) in &patterns[x + 1..] {
            let j = jaccard(pa, pb);
            if j >= NEAR_DUPLICATE_JACCARD {
                near_duplicates.push(NearDuplicate { a: *ia, b: *ib, jaccard: j });
            }
        }
    }
    let notes = packed_index_notes(&groups);
    Structure { var_tokens, row_tokens, var_group, groups, families, near_duplicates, notes }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mps::{ModelParts, ObjectiveSense, Row, Variable};

    fn model(vars: &[&str], rows: Vec<Row>) -> Model {
        let mut all = vec![Row::new("obj", RowSense::N, 0.0, vec![])];
        all.extend(rows);
        Model::from_parts(ModelParts {
            name: "t".into(),
            variables: vars.iter().map(|v| Variable::binary(*v)).collect(),
            rows: all,
            objective_row: 0,
            objective_sense: ObjectiveSense::Min,
            objective_constant: 0.0,
        })
        .unwrap()
    }

    #[test]
    fn tokenizer_examples() {
        let t = tokenize_name("b64_713");
        assert_eq!(t.base, "b");
        assert_eq!(t.indices, vec!["64", "713"]);
        let t = tokenize_name("x#3#12");
        assert_eq!((t.base.as_str(), t.indices.clone()), ("x", vec!["3".to_string(), "12".to_string()]));
        let t = tokenize_name("cost");
        assert_eq!((t.base.as_str(), t.arity()), ("cost", 0));
        for name in ["x(1,2)", "_a_1", "y[3].z", "12ab", "a__b__", "q"] {
            assert_eq!(tokenize_name(name).reassemble(), name);
        }
        assert_eq!(tokenize_name("12ab").base, "");
    }

    #[test]
    fn groups_split_by_base_and_arity() {
        let names: Vec<String> =
            (1..=5).map(|i| format!("x_{i}")).chain((1..=5).map(|i| format!("y_{i}"))).chain(["x_1_1".into()]).collect();
        let refs: Vec<&str> = names.iter().map(String::as_str).collect();
        let g = infer_variable_groups(&model(&refs, vec![]));
        assert_eq!(g.len(), 3);
        assert_eq!((g[0].base.as_str(), g[0].arity, g[0].members.len()), ("x", 1, 5));
        assert_eq!(g[0].index_domains[0].min, Some(1));
        assert_eq!(g[0].index_domains[0].max, Some(5));
        assert_eq!(g[2].arity, 2);
    }

    #[test]
    fn signatures_and_varies() {
        let m = model(
            &["a", "b", "x_3", "x_4"],
            vec![
                Row::new("c1", RowSense::L, 5.0, vec![(0, 2.0), (1, 3.0)]),
                Row::new("c2", RowSense::L, 7.0, vec![(0, 2.0), (1, 3.0)]),
                Row::new("k", RowSense::L, 1.0, vec![(2, 1.0), (3, 1.0)]),
            ],
        );
        let s = mine(&m);
        let sig = row_signature(&m, 3, &s.var_group);
        assert_eq!(sig.terms.len(), 1);
        assert_eq!(sig.terms[0].count, CountClass::Exact(2));
        assert_eq!(sig.terms[0].coefficient, CoeffClass::Exact(1.0));
        let c = s.family_by_name("c").unwrap();
        assert_eq!(c.rows, vec![1, 2]);
        assert_eq!(c.signature.rhs, CoeffClass::Varies);
        assert_eq!(c.signature.terms[0].coefficient, CoeffClass::Exact(2.0));
        assert!(s.family_by_name("k").unwrap().atomic);
        assert_eq!(serde_json::to_value(c.signature.rhs).unwrap(), serde_json::json!("VARIES"));
    }

    #[test]
    fn index_map_tracks_constant_positions() {
        let m = model(
            &["x_1_1", "x_1_2", "x_2_1", "x_2_2"],
            vec![
                Row::new("r_1", RowSense::L, 1.0, vec![(0, 1.0), (1, 1.0)]),
                Row::new("r_2", RowSense::L, 1.0, vec![(2, 1.0), (3, 1.0)]),
            ],
        );
        let s = mine(&m);
        let f = &s.families[0];
        assert_eq!(f.index_slots.len(), 2);
        assert_eq!(f.index_map[0], vec![Some("1".to_string()), None]);
        assert_eq!(f.index_map[1], vec![Some("2".to_string()), None]);
    }

    #[test]
    fn packed_indices_are_noted() {
        let names: Vec<String> = [101, 205, 713, 999].iter().map(|i| format!("b_{i}")).collect();
        let refs: Vec<&str> = names.iter().map(String::as_str).collect();
        let s = mine(&model(&refs, vec![]));
        assert_eq!(s.notes.len(), 1);
    }
}
