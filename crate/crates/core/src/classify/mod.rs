//! Atomic constraint types and loop-scaffold labels for mined families.

mod atomic;
mod scaffold;

use std::fmt::Write as _;

use serde::Serialize;

pub use atomic::{classify_atomic, classify_row, AtomicType};
pub use scaffold::{classify_scaffold, PairCountCheck, ScaffoldEvidence, ScaffoldLabel, ScaffoldOutcome};

use crate::mining::{mine, IndexSlot, NearDuplicate, Structure};
use crate::mps::{Integrality, Model, ModelStats, RowSense};
use crate::numfmt::fmt_num;

pub const DEFAULT_BIGM_RATIO: f64 = 100.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassifyOptions {
    pub bigm_ratio: f64,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        ClassifyOptions { bigm_ratio: DEFAULT_BIGM_RATIO }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupSummary {
    pub id: usize,
    pub base: String,
    pub arity: usize,
    pub size: usize,
    pub domain_sizes: Vec<usize>,
    pub integrality: Integrality,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FamilyReport {
    pub id: usize,
    pub name: String,
    pub n_rows: usize,
    pub sense: RowSense,
    pub atomic: bool,
    pub atomic_type: AtomicType,
    /// `None` when the detectors were ambiguous; see `ambiguous`.
    pub scaffold: Option<ScaffoldLabel>,
    pub evidence: ScaffoldEvidence,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub ambiguous: Vec<ScaffoldLabel>,
    pub canonical_form: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DomainConstraint {
    pub group: usize,
    pub base: String,
    pub atomic_type: AtomicType,
    pub integrality: Integrality,
    pub n_vars: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct ScaffoldReport {
    pub model: String,
    pub stats: ModelStats,
    pub n_groups: usize,
    pub n_families: usize,
    pub n_atomic_families: usize,
    pub groups: Vec<GroupSummary>,
    pub families: Vec<FamilyReport>,
    pub domain_constraints: Vec<DomainConstraint>,
    pub near_duplicates: Vec<NearDuplicate>,
    pub notes: Vec<String>,
    pub warnings: Vec<String>,
    #[serde(skip)]
    pub structure: Structure,
}

impl ScaffoldReport {
    pub fn family(&self, name: &str) -> Option<&FamilyReport> {
        self.families.iter().find(|f| f.name == name)
    }

    pub fn slot_name(&self, slot: IndexSlot) -> String {
        format!("{}[{}]", self.structure.groups[slot.group].base, slot.position)
    }

    /// Aligned text table: family, rows, atomic type, scaffold, canonical form, evidence.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let s = &self.stats;
        let _ = writeln!(
            out,
            "model {}: {} vars, {} rows, {} nonzeros, {} groups, {} families",
            if self.model.is_empty() { "-" } else { &self.model },
            s.n_vars,
            s.n_rows,
            s.n_nonzeros,
            self.n_groups,
            self.n_families
        );
        for g in &self.groups {
            let _ = writeln!(out, "  group {} `{}` arity {} size {} domains {:?}", g.id, g.base, g.arity, g.size, g.domain_sizes);
        }
        let header = ["family", "rows", "atomic", "scaffold", "canonical form", "evidence"];
        let rows: Vec<[String; 6]> = self
            .families
            .iter()
            .map(|f| {
                [
                    f.name.clone(),
                    f.n_rows.to_string(),
                    f.atomic_type.as_str().to_string(),
                    match f.scaffold {
                        Some(l) => l.as_str().to_string(),
                        None => format!(
                            "AMBIGUOUS({})",
                            f.ambiguous.iter().map(|l| l.as_str()).collect::<Vec<_>>().join(",")
                        ),
                    },
                    f.canonical_form.clone(),
                    self.evidence_text(&f.evidence),
                ]
            })
            .collect();
        let mut widths = header.map(str::len);
        for r in &rows {
            for (w, c) in widths.iter_mut().zip(r) {
                *w = (*w).max(c.chars().count());
            }
        }
        let line = |cells: [&str; 6]| {
            let mut l = String::new();
            for (i, (c, w)) in cells.iter().zip(widths).enumerate() {
                if i + 1 == cells.len() {
                    l.push_str(c);
                } else {
                    let _ = write!(l, "{c:<w$}  ");
                }
            }
            l.trim_end().to_string()
        };
        let _ = writeln!(out, "{}", line(header));
        for r in &rows {
            let _ = writeln!(out, "{}", line([&r[0], &r[1], &r[2], &r[3], &r[4], &r[5]]));
        }
        for d in &self.domain_constraints {
            let _ = writeln!(out, "domain `{}`: {} ({} vars)", d.base, d.atomic_type.as_str(), d.n_vars);
        }
        for n in &self.near_duplicates {
            let _ = writeln!(
                out,
                "near duplicate: {} ~ {} (jaccard {})",
                self.families[n.a].name,
                self.families[n.b].name,
                fmt_num(n.jaccard)
            );
        }
        for n in &self.notes {
            let _ = writeln!(out, "note: {n}");
        }
        for w in &self.warnings {
            let _ = writeln!(out, "warning: {w}");
        }
        out
    }

    fn evidence_text(&self, e: &ScaffoldEvidence) -> String {
        let mut parts = Vec::new();
        if !e.loop_indices.is_empty() {
            let dims: Vec<String> = e
                .loop_indices
                .iter()
                .map(|d| d.iter().map(|s| self.slot_name(*s)).collect::<Vec<_>>().join("="))
                .collect();
            parts.push(format!("loops={}", dims.join(",")));
        }
        if let Some(s) = e.inner_position {
            parts.push(format!("inner={}", self.slot_name(s)));
        }
        if let Some(w) = e.window_width {
            parts.push(format!("W={w}"));
        }
        if let Some(k) = e.window_cap {
            parts.push(format!("K={}", fmt_num(k)));
        }
        if let Some(s) = e.cycle_length {
            parts.push(format!("S={s}"));
        }
        if let Some(l) = e.coupling_lag {
            parts.push(format!("lag={l}"));
        }
        if !e.coupling_coeffs.is_empty() {
            let c: Vec<String> = e.coupling_coeffs.iter().map(|v| fmt_num(*v)).collect();
            parts.push(format!("alpha={}", c.join("/")));
        }
        if let Some(m) = e.big_m {
            parts.push(format!("M={}", fmt_num(m)));
        }
        if let Some(s) = e.replication_position {
            parts.push(format!("replicated_by={}", self.slot_name(s)));
        }
        if let Some(p) = e.pair_count_check {
            parts.push(format!("pairs n={} rows={} matched={}", p.n, p.rows, p.matched));
        }
        parts.join(" ")
    }
}

/// Generic templates carry the family's own sense.
fn sensed_form(label: ScaffoldLabel, sense: RowSense) -> String {
    let form = label.canonical_form();
    let op = match sense {
        RowSense::G => ">=",
        RowSense::E => "=",
        _ => "<=",
    };
    match label {
        ScaffoldLabel::Global | ScaffoldLabel::SingleLoop | ScaffoldLabel::NestedLoop => form.replace("<=", op),
        _ => form.to_string(),
    }
}

pub fn classify_all(model: &Model, options: &ClassifyOptions) -> ScaffoldReport {
    classify_structure(model, mine(model), options)
}

pub fn classify_structure(model: &Model, structure: Structure, options: &ClassifyOptions) -> ScaffoldReport {
    let vars = model.variables();
    let mut warnings = Vec::new();
    let mut families = Vec::with_capacity(structure.families.len());
    for f in &structure.families {
        let atomic_type = classify_atomic(model, f, options.bigm_ratio);
        let sense = model.rows()[f.rows[0]].sense;
        let (scaffold, evidence, ambiguous) = match classify_scaffold(model, &structure, f, options.bigm_ratio) {
            ScaffoldOutcome::Label(l, e) => (Some(l), e, vec![]),
            ScaffoldOutcome::Ambiguous(c) => {
                let labels: Vec<ScaffoldLabel> = c.iter().map(|x| x.0).collect();
                let positions: Vec<String> = c
                    .iter()
                    .filter_map(|x| x.1.inner_position.or(x.1.replication_position))
                    .map(|s| format!("{}[{}]", structure.groups[s.group].base, s.position))
                    .collect();
                warnings.push(format!(
                    "family `{}`: AMBIGUOUS {} on positions {}",
                    f.name,
                    labels[0].as_str(),
                    positions.join(", ")
                ));
                let evidence = ScaffoldEvidence { loop_indices: c[0].1.loop_indices.clone(), ..Default::default() };
                (None, evidence, labels)
            }
        };
        let canonical_form = scaffold.map(|l| sensed_form(l, sense)).unwrap_or_default();
        families.push(FamilyReport {
            id: f.id,
            name: f.name.clone(),
            n_rows: f.rows.len(),
            sense,
            atomic: f.atomic,
            atomic_type,
            scaffold,
            evidence,
            ambiguous,
            canonical_form,
        });
    }
    let groups: Vec<GroupSummary> = structure
        .groups
        .iter()
        .map(|g| {
            let kinds: Vec<Integrality> = g.members.iter().map(|&j| vars[j].integrality).collect();
            let integrality = if kinds.iter().all(|k| *k == Integrality::Binary) {
                Integrality::Binary
            } else if kinds.iter().all(|k| k.is_integral()) {
                Integrality::Integer
            } else {
                Integrality::Continuous
            };
            GroupSummary {
                id: g.id,
                base: g.base.clone(),
                arity: g.arity,
                size: g.members.len(),
                domain_sizes: g.index_domains.iter().map(|d| d.len()).collect(),
                integrality,
            }
        })
        .collect();
    let domain_constraints = groups
        .iter()
        .filter(|g| g.integrality.is_integral())
        .map(|g| DomainConstraint {
            group: g.id,
            base: g.base.clone(),
            atomic_type: AtomicType::DomainIntegrality,
            integrality: g.integrality,
            n_vars: g.size,
        })
        .collect();
    ScaffoldReport {
        model: model.name().to_string(),
        stats: model.stats(),
        n_groups: groups.len(),
        n_families: families.len(),
        n_atomic_families: families.iter().filter(|f| f.atomic).count(),
        groups,
        families,
        domain_constraints,
        near_duplicates: structure.near_duplicates.clone(),
        notes: structure.notes.clone(),
        warnings,
        structure,
    }
}
