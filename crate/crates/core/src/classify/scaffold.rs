use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::Serialize;

use super::atomic::median_abs_coefficient;
use crate::mining::{ConstraintFamily, IndexSlot, Structure};
use crate::mps::{Integrality, Model};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, serde::Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ScaffoldLabel {
    Global,
    SingleLoop,
    NestedLoop,
    SubsetIndexed,
    TemporalCoupled,
    CyclicModular,
    SlidingWindow,
    PairwiseAllPairs,
    ExtraDimension,
}

impl ScaffoldLabel {
    pub const ALL: [ScaffoldLabel; 9] = [
        ScaffoldLabel::Global,
        ScaffoldLabel::SingleLoop,
        ScaffoldLabel::NestedLoop,
        ScaffoldLabel::SubsetIndexed,
        ScaffoldLabel::TemporalCoupled,
        ScaffoldLabel::CyclicModular,
        ScaffoldLabel::SlidingWindow,
        ScaffoldLabel::PairwiseAllPairs,
        ScaffoldLabel::ExtraDimension,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ScaffoldLabel::Global => "GLOBAL",
            ScaffoldLabel::SingleLoop => "SINGLE_LOOP",
            ScaffoldLabel::NestedLoop => "NESTED_LOOP",
            ScaffoldLabel::SubsetIndexed => "SUBSET_INDEXED",
            ScaffoldLabel::TemporalCoupled => "TEMPORAL_COUPLED",
            ScaffoldLabel::CyclicModular => "CYCLIC_MODULAR",
            ScaffoldLabel::SlidingWindow => "SLIDING_WINDOW",
            ScaffoldLabel::PairwiseAllPairs => "PAIRWISE_ALL_PAIRS",
            ScaffoldLabel::ExtraDimension => "EXTRA_DIMENSION",
        }
    }

    pub fn parse(s: &str) -> Option<ScaffoldLabel> {
        Self::ALL.into_iter().find(|l| l.as_str().eq_ignore_ascii_case(s))
    }

    pub fn canonical_form(self) -> &'static str {
        match self {
            ScaffoldLabel::Global => "sum_j a_j x_j <= b",
            ScaffoldLabel::SingleLoop => "forall i: sum_j a_ij x_ij <= b_i",
            ScaffoldLabel::NestedLoop => "forall i, j: sum_k a_ijk x_ijk <= b_ij",
            ScaffoldLabel::SubsetIndexed => "forall k: sum_{j in S_k} x_j >= 1",
            ScaffoldLabel::TemporalCoupled => "forall t: H_t = alpha H_{t-1} + ...",
            ScaffoldLabel::CyclicModular => "forall t: x_t + x_{(t mod S)+1} <= 1",
            ScaffoldLabel::SlidingWindow => "forall t: sum_{s=t}^{t+W-1} x_s <= K",
            ScaffoldLabel::PairwiseAllPairs => "forall i != j: t_j >= t_i + p_i - M (1 - y_ij)",
            ScaffoldLabel::ExtraDimension => "forall k: (identical block over k)",
        }
    }
}

impl std::fmt::Display for ScaffoldLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct PairCountCheck {
    pub n: usize,
    pub rows: usize,
    pub matched: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ScaffoldEvidence {
    /// Row-level loop dimensions; each entry lists the slots that move together.
    pub loop_indices: Vec<Vec<IndexSlot>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub inner_position: Option<IndexSlot>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub window_width: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub window_cap: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cycle_length: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub coupling_lag: Option<i64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub coupling_coeffs: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub big_m: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub replication_position: Option<IndexSlot>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pair_count_check: Option<PairCountCheck>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ScaffoldOutcome {
    Label(ScaffoldLabel, ScaffoldEvidence),
    /// One detector fired on several index positions.
    Ambiguous(Vec<(ScaffoldLabel, ScaffoldEvidence)>),
}

impl ScaffoldOutcome {
    pub fn label(&self) -> Option<ScaffoldLabel> {
        match self {
            ScaffoldOutcome::Label(l, _) => Some(*l),
            ScaffoldOutcome::Ambiguous(_) => None,
        }
    }
}

/// Per-row view of one group's terms: `(index tokens, coefficient)`.
struct Ctx<'a> {
    model: &'a Model,
    structure: &'a Structure,
    family: &'a ConstraintFamily,
}

impl<'a> Ctx<'a> {
    fn group_terms(&self, row: usize, group: usize) -> Vec<(usize, f64)> {
        self.model.rows()[row]
            .terms
            .iter()
            .filter(|&&(j, _)| self.structure.var_group[j] == group)
            .copied()
            .collect()
    }

    fn token(&self, var: usize, position: usize) -> &str {
        &self.structure.var_tokens[var].indices[position]
    }

    fn numeric(&self, slot: IndexSlot) -> Option<(i64, i64)> {
        let d = &self.structure.groups[slot.group].index_domains[slot.position];
        match (d.numeric, d.min, d.max) {
            (true, Some(lo), Some(hi)) => Some((lo, hi)),
            _ => None,
        }
    }

    /// True when every term of `slot.group` in `row` agrees on all positions except `slot.position`.
    fn others_fixed(&self, row_pos: usize, slot: IndexSlot) -> bool {
        self.family.index_slots.iter().enumerate().all(|(s, other)| {
            other.group != slot.group || other.position == slot.position || self.family.index_map[row_pos][s].is_some()
        })
    }

    /// Slots whose token varies inside at least one row and whose domain is integral.
    fn inner_numeric_slots(&self) -> Vec<IndexSlot> {
        self.family
            .index_slots
            .iter()
            .enumerate()
            .filter(|(s, slot)| self.family.index_map.iter().any(|m| m[*s].is_none()) && self.numeric(**slot).is_some())
            .map(|(_, slot)| *slot)
            .collect()
    }

    /// Row-constant slots with at least two values, merged when their per-row sequences coincide.
    fn loop_dims(&self) -> Vec<Vec<IndexSlot>> {
        let mut dims: Vec<(Vec<&str>, Vec<IndexSlot>)> = Vec::new();
        for (s, slot) in self.family.index_slots.iter().enumerate() {
            let seq: Option<Vec<&str>> = self.family.index_map.iter().map(|m| m[s].as_deref()).collect();
            let Some(seq) = seq else { continue };
            if seq.iter().collect::<BTreeSet<_>>().len() < 2 {
                continue;
            }
            match dims.iter_mut().find(|(q, _)| *q == seq) {
                Some((_, slots)) => slots.push(*slot),
                None => dims.push((seq, vec![*slot])),
            }
        }
        dims.into_iter().map(|(_, s)| s).collect()
    }
}

fn offsets(ctx: &Ctx<'_>, terms: &[(usize, f64)], slot: IndexSlot, lo: i64) -> Option<Vec<i64>> {
    terms.iter().map(|&(j, _)| ctx.token(j, slot.position).parse::<i64>().ok().map(|v| v - lo)).collect()
}

fn detect_window(ctx: &Ctx<'_>, slot: IndexSlot) -> Option<ScaffoldEvidence> {
    let (lo, hi) = ctx.numeric(slot)?;
    let s = (hi - lo + 1) as usize;
    let mut width = None;
    let mut starts = BTreeSet::new();
    let mut wraps = false;
    for (rp, &row) in ctx.family.rows.iter().enumerate() {
        if !ctx.others_fixed(rp, slot) {
            return None;
        }
        let terms = ctx.group_terms(row, slot.group);
        if terms.iter().any(|t| t.1 != terms[0].1) {
            return None;
        }
        let set: BTreeSet<i64> = offsets(ctx, &terms, slot, lo)?.into_iter().collect();
        if set.len() != terms.len() {
            return None;
        }
        let w = set.len();
        if w < 2 || w >= s {
            return None;
        }
        if *width.get_or_insert(w) != w {
            return None;
        }
        let n = s as i64;
        let start = *set.iter().find(|&&o| !set.contains(&((o - 1).rem_euclid(n))))?;
        if (0..w as i64).any(|k| !set.contains(&((start + k) % n))) {
            return None;
        }
        if start + w as i64 > n {
            wraps = true;
        }
        starts.insert(start);
    }
    let w = width?;
    if starts.len() < 2 || (w == 2 && wraps) {
        return None;
    }
    Some(ScaffoldEvidence {
        inner_position: Some(slot),
        window_width: Some(w),
        window_cap: ctx.family.signature.rhs.exact(),
        cycle_length: wraps.then_some(s),
        ..Default::default()
    })
}

fn detect_cycle(ctx: &Ctx<'_>, slot: IndexSlot) -> Option<ScaffoldEvidence> {
    let (lo, hi) = ctx.numeric(slot)?;
    let n = hi - lo + 1;
    if n < 3 {
        return None;
    }
    let mut pattern: Option<(u64, u64)> = None;
    let mut wrapped = false;
    for (rp, &row) in ctx.family.rows.iter().enumerate() {
        if !ctx.others_fixed(rp, slot) {
            return None;
        }
        let terms = ctx.group_terms(row, slot.group);
        if terms.len() != 2 {
            return None;
        }
        let o = offsets(ctx, &terms, slot, lo)?;
        let (first, second) = if (o[0] + 1) % n == o[1] {
            ((o[0], terms[0].1), terms[1].1)
        } else if (o[1] + 1) % n == o[0] {
            ((o[1], terms[1].1), terms[0].1)
        } else {
            return None;
        };
        let key = (first.1.to_bits(), second.to_bits());
        if *pattern.get_or_insert(key) != key {
            return None;
        }
        if first.0 == n - 1 {
            wrapped = true;
        }
    }
    wrapped.then(|| ScaffoldEvidence { inner_position: Some(slot), cycle_length: Some(n as usize), ..Default::default() })
}

fn detect_temporal(ctx: &Ctx<'_>, slot: IndexSlot) -> Option<ScaffoldEvidence> {
    let (lo, _) = ctx.numeric(slot)?;
    let mut lag = None;
    let mut cur_sign = None;
    let mut alphas: Vec<f64> = Vec::new();
    for (rp, &row) in ctx.family.rows.iter().enumerate() {
        if !ctx.others_fixed(rp, slot) {
            return None;
        }
        let terms = ctx.group_terms(row, slot.group);
        if terms.len() != 2 || (terms[0].1 > 0.0) == (terms[1].1 > 0.0) {
            return None;
        }
        let o = offsets(ctx, &terms, slot, lo)?;
        let (cur, prev) = if o[0] > o[1] { (0, 1) } else { (1, 0) };
        let l = o[cur] - o[prev];
        if l < 1 || *lag.get_or_insert(l) != l {
            return None;
        }
        let s = terms[cur].1 > 0.0;
        if *cur_sign.get_or_insert(s) != s {
            return None;
        }
        let a = -terms[prev].1 / terms[cur].1;
        if !alphas.contains(&a) {
            alphas.push(a);
        }
    }
    alphas.sort_by(f64::total_cmp);
    Some(ScaffoldEvidence {
        inner_position: Some(slot),
        coupling_lag: lag,
        coupling_coeffs: alphas,
        ..Default::default()
    })
}

fn detect_pairwise(ctx: &Ctx<'_>, bigm_ratio: f64) -> Option<ScaffoldEvidence> {
    let model = ctx.model;
    let big = bigm_ratio * median_abs_coefficient(model, &ctx.family.rows);
    if big <= 0.0 {
        return None;
    }
    let vars = model.variables();
    // (binary group, p1, p2, partner group, partner position) surviving every row
    let mut combos: Option<BTreeSet<(usize, usize, usize, usize, usize)>> = None;
    let mut big_vars = Vec::with_capacity(ctx.family.rows.len());
    let mut big_m: f64 = 0.0;
    for &row in &ctx.family.rows {
        let terms = &model.rows()[row].terms;
        let bigs: Vec<(usize, f64)> = terms
            .iter()
            .filter(|&&(j, a)| vars[j].integrality == Integrality::Binary && a.abs() >= big)
            .copied()
            .collect();
        if bigs.len() != 1 || terms.len() < 3 {
            return None;
        }
        let (yb, m) = bigs[0];
        big_vars.push(yb);
        big_m = big_m.max(m.abs());
        let gb = ctx.structure.var_group[yb];
        let arity = ctx.structure.groups[gb].arity;
        if arity < 2 {
            return None;
        }
        let mut here = BTreeSet::new();
        for p1 in 0..arity {
            for p2 in p1 + 1..arity {
                let (u, v) = (ctx.token(yb, p1), ctx.token(yb, p2));
                if u == v {
                    continue;
                }
                for g in 0..ctx.structure.groups.len() {
                    if g == gb {
                        continue;
                    }
                    let gt = ctx.group_terms(row, g);
                    for q in 0..ctx.structure.groups[g].arity {
                        let toks: BTreeSet<&str> = gt.iter().map(|&(j, _)| ctx.token(j, q)).collect();
                        if toks.contains(u) && toks.contains(v) {
                            here.insert((gb, p1, p2, g, q));
                        }
                    }
                }
            }
        }
        let next: BTreeSet<_> = match combos {
            None => here,
            Some(c) => c.intersection(&here).copied().collect(),
        };
        if next.is_empty() {
            return None;
        }
        combos = Some(next);
    }
    let &(_, p1, p2, ..) = combos?.iter().next()?;
    let members: BTreeSet<&str> = big_vars.iter().flat_map(|&y| [ctx.token(y, p1), ctx.token(y, p2)]).collect();
    let n = members.len();
    let rows = ctx.family.rows.len();
    Some(ScaffoldEvidence {
        big_m: Some(big_m),
        pair_count_check: Some(PairCountCheck { n, rows, matched: rows == n * (n - 1) / 2 || rows == n * (n - 1) }),
        ..Default::default()
    })
}

fn detect_extra_dimension(ctx: &Ctx<'_>, dim: &[IndexSlot]) -> bool {
    let s0 = ctx.family.index_slots.iter().position(|s| *s == dim[0]).expect("dim slot belongs to family");
    let mut replicas: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (rp, m) in ctx.family.index_map.iter().enumerate() {
        replicas.entry(m[s0].as_deref().expect("row-constant")).or_default().push(ctx.family.rows[rp]);
    }
    if replicas.len() < 2 || replicas.values().any(|r| r.len() < 2) {
        return false;
    }
    let mut owner: HashMap<usize, &str> = HashMap::new();
    for (k, rows) in &replicas {
        for &r in rows {
            for &(j, _) in &ctx.model.rows()[r].terms {
                if *owner.entry(j).or_insert(k) != *k {
                    return false;
                }
            }
        }
    }
    let drop: BTreeMap<usize, BTreeSet<usize>> = dim.iter().fold(BTreeMap::new(), |mut m, s| {
        m.entry(s.group).or_default().insert(s.position);
        m
    });
    let canon = |rows: &Vec<usize>| -> Vec<Vec<(usize, Vec<&str>, u64)>> {
        let mut out: Vec<Vec<(usize, Vec<&str>, u64)>> = rows
            .iter()
            .map(|&r| {
                let mut terms: Vec<(usize, Vec<&str>, u64)> = ctx.model.rows()[r]
                    .terms
                    .iter()
                    .map(|&(j, a)| {
                        let g = ctx.structure.var_group[j];
                        let idx = ctx.structure.var_tokens[j]
                            .indices
                            .iter()
                            .enumerate()
                            .filter(|(p, _)| !drop.get(&g).is_some_and(|d| d.contains(p)))
                            .map(|(_, t)| t.as_str())
                            .collect();
                        (g, idx, a.to_bits())
                    })
                    .collect();
                terms.sort();
                terms
            })
            .collect();
        out.sort();
        out
    };
    let mut it = replicas.values();
    let first = canon(it.next().expect("two replicas"));
    it.all(|r| canon(r) == first)
}

fn single_candidate(
    label: ScaffoldLabel,
    found: Vec<ScaffoldEvidence>,
    dims: &[Vec<IndexSlot>],
) -> Option<ScaffoldOutcome> {
    let mut found: Vec<(ScaffoldLabel, ScaffoldEvidence)> = found
        .into_iter()
        .map(|mut e| {
            e.loop_indices = dims.to_vec();
            (label, e)
        })
        .collect();
    match found.len() {
        0 => None,
        1 => {
            let (l, e) = found.remove(0);
            Some(ScaffoldOutcome::Label(l, e))
        }
        _ => Some(ScaffoldOutcome::Ambiguous(found)),
    }
}

/// Loop-scaffold label of one family, most specific detector first.
pub fn classify_scaffold(model: &Model, structure: &Structure, family: &ConstraintFamily, bigm_ratio: f64) -> ScaffoldOutcome {
    let ctx = Ctx { model, structure, family };
    if family.rows.len() == 1 {
        return ScaffoldOutcome::Label(ScaffoldLabel::Global, ScaffoldEvidence::default());
    }
    let dims = ctx.loop_dims();
    let inner = ctx.inner_numeric_slots();
    type Detector = fn(&Ctx<'_>, IndexSlot) -> Option<ScaffoldEvidence>;
    let positional: [(ScaffoldLabel, Detector); 3] = [
        (ScaffoldLabel::SlidingWindow, detect_window),
        (ScaffoldLabel::CyclicModular, detect_cycle),
        (ScaffoldLabel::TemporalCoupled, detect_temporal),
    ];
    for (label, detect) in positional {
        let found: Vec<ScaffoldEvidence> = inner.iter().filter_map(|&s| detect(&ctx, s)).collect();
        if let Some(out) = single_candidate(label, found, &dims) {
            return out;
        }
    }
    if let Some(e) = detect_pairwise(&ctx, bigm_ratio) {
        return single_candidate(ScaffoldLabel::PairwiseAllPairs, vec![e], &dims).expect("one candidate");
    }
    let extra: Vec<ScaffoldEvidence> = dims
        .iter()
        .filter(|d| detect_extra_dimension(&ctx, d))
        .map(|d| ScaffoldEvidence { replication_position: Some(d[0]), ..Default::default() })
        .collect();
    if let Some(out) = single_candidate(ScaffoldLabel::ExtraDimension, extra, &dims) {
        return out;
    }
    let evidence = ScaffoldEvidence { loop_indices: dims.clone(), ..Default::default() };
    let label = match dims.len() {
        0 => {
            let first: BTreeSet<usize> = model.rows()[family.rows[0]].terms.iter().map(|t| t.0).collect();
            let same = family.rows.iter().all(|&r| model.rows()[r].terms.iter().map(|t| t.0).collect::<BTreeSet<_>>() == first);
            if same {
                ScaffoldLabel::SingleLoop
            } else {
                ScaffoldLabel::SubsetIndexed
            }
        }
        1 => ScaffoldLabel::SingleLoop,
        _ => ScaffoldLabel::NestedLoop,
    };
    ScaffoldOutcome::Label(label, evidence)
}
