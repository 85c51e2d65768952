use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde_json::Value;

use super::{
    create_layout, io_err, write_csv, write_record, FileRef, InstanceRecord, ProblemType, SchemaError, Status,
    Verification, DATA_DIR, GENERATOR_FILE, MODEL_MD, MPS_FILE, SOLVER_FILE,
};
use crate::classify::ScaffoldReport;
use crate::mining::{CoeffClass, CountClass, Structure};
use crate::mps::{write_mps_string, Integrality, Model, ObjectiveSense, RowSense};
use crate::numfmt::fmt_num;

#[derive(Debug, Clone, PartialEq)]
pub struct EmitOptions {
    /// Defaults to the model name.
    pub id: Option<String>,
    pub problem_type: ProblemType,
    pub status: Status,
    pub optimal_value: Option<f64>,
    /// Also write the canonical `model.mps` rendering.
    pub write_mps: bool,
    /// Size of the source MPS file; defaults to the canonical rendering's size.
    pub source_mps_bytes: Option<u64>,
    pub metadata: BTreeMap<String, Value>,
}

impl Default for EmitOptions {
    fn default() -> Self {
        EmitOptions {
            id: None,
            problem_type: ProblemType { major_category: "Unclassified".into(), subcategory: "Unclassified".into() },
            status: Status::Unknown,
            optimal_value: None,
            write_mps: true,
            source_mps_bytes: None,
            metadata: BTreeMap::new(),
        }
    }
}

pub(crate) fn num_value(v: f64) -> Value {
    if v.is_finite() && v.fract() == 0.0 && v.abs() < 1e15 {
        Value::from(v as i64)
    } else if v.is_finite() {
        Value::from(v)
    } else {
        Value::from(fmt_num(v))
    }
}

fn sanitize(name: &str) -> String {
    let s: String = name
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '_' || c == '-' { c } else { '_' })
        .collect();
    if s.is_empty() {
        "v".into()
    } else {
        s
    }
}

struct Table {
    path: String,
    description: String,
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

struct SetInfo {
    name: String,
    values: Vec<String>,
    range: Option<(i64, i64)>,
}

/// How one group's terms appear in a family.
enum TermData {
    /// Exact coefficient per sign class: (sign, value, parameter name if not +-1).
    Exact(Vec<(i8, f64, Option<String>)>),
    /// Coefficient column in the group table.
    Column(String),
    /// Coordinate table path; `with_coef` says whether it has a coef column.
    Coordinates { path: String, with_coef: bool },
    /// Family stored as a raw (row, variable, coef) table.
    Raw(String),
}

struct FamilyPlan {
    name: String,
    terms: Vec<(usize, TermData)>,
    rhs: Result<Option<String>, String>,
    range: Option<Result<String, String>>,
}

struct GroupPlan {
    name: String,
    sets: Vec<usize>,
    integrality: &'static str,
    table: Option<String>,
    obj: Result<Option<String>, String>,
    lower: Result<Option<String>, String>,
    upper: Result<Option<String>, String>,
}

struct Plan {
    sets: Vec<SetInfo>,
    groups: Vec<GroupPlan>,
    families: Vec<FamilyPlan>,
    parameters: BTreeMap<String, Value>,
    tables: Vec<Table>,
    warnings: Vec<String>,
}

fn data_path(stem: &str) -> String {
    format!("{DATA_DIR}/{stem}.csv")
}

fn constant<T: Copy + PartialEq>(values: impl IntoIterator<Item = T>) -> Option<Option<T>> {
    let mut it = values.into_iter();
    let first = it.next()?;
    Some(it.all(|v| v == first).then_some(first))
}

fn build_plan(report: &ScaffoldReport, model: &Model) -> Plan {
    let st: &Structure = &report.structure;
    let vars = model.variables();
    let mut parameters = BTreeMap::new();
    let mut tables: Vec<Table> = Vec::new();
    let mut warnings = Vec::new();

    // index sets, deduplicated by value list
    let mut sets: Vec<SetInfo> = Vec::new();
    let mut group_sets = Vec::new();
    for g in &st.groups {
        let mut ids = Vec::new();
        for d in &g.index_domains {
            let id = match sets.iter().position(|s| s.values == d.values) {
                Some(i) => i,
                None => {
                    let range = match (d.numeric, d.min, d.max) {
                        (true, Some(lo), Some(hi)) if (hi - lo + 1) as usize == d.values.len() => Some((lo, hi)),
                        _ => None,
                    };
                    sets.push(SetInfo { name: format!("I{}", sets.len() + 1), values: d.values.clone(), range });
                    sets.len() - 1
                }
            };
            ids.push(id);
        }
        group_sets.push(ids);
    }
    for s in &sets {
        parameters.insert(format!("n_{}", s.name), Value::from(s.values.len()));
    }
    let listed: Vec<&SetInfo> = sets.iter().filter(|s| s.range.is_none()).collect();
    if !listed.is_empty() {
        let rows = listed.iter().flat_map(|s| s.values.iter().map(|v| vec![s.name.clone(), v.clone()])).collect();
        tables.push(Table {
            path: data_path("sets"),
            description: "Members of the index sets that are not integer ranges".into(),
            header: vec!["set".into(), "value".into()],
            rows,
        });
    }

    // unique group and family names
    let mut base_count: HashMap<&str, usize> = HashMap::new();
    for g in &st.groups {
        *base_count.entry(g.base.as_str()).or_default() += 1;
    }
    let mut taken = HashSet::new();
    let gnames: Vec<String> = st
        .groups
        .iter()
        .map(|g| {
            let mut n = sanitize(&g.base);
            if base_count[g.base.as_str()] > 1 {
                n = format!("{n}{}", g.arity);
            }
            while !taken.insert(n.clone()) {
                n.push('_');
            }
            n
        })
        .collect();
    let mut ftaken = HashSet::new();
    let fnames: Vec<String> = st
        .families
        .iter()
        .map(|f| {
            let mut n = sanitize(&f.name);
            while !ftaken.insert(n.clone()) {
                n.push('_');
            }
            n
        })
        .collect();

    // a VARIES coefficient becomes a group column when every variable of the
    // group appears at most once in the family and support sizes are fixed
    let mut columns: Vec<Vec<(usize, String)>> = vec![Vec::new(); st.groups.len()];
    let mut family_terms: Vec<Vec<(usize, TermData)>> = Vec::new();
    let mut family_raw: Vec<Option<String>> = vec![None; st.families.len()];
    for (fi, f) in st.families.iter().enumerate() {
        let fname = &fnames[fi];
        let label = report.families[fi].scaffold;
        let subset = label == Some(crate::classify::ScaffoldLabel::SubsetIndexed);
        let mut by_group: BTreeMap<usize, Vec<&crate::mining::TermClass>> = BTreeMap::new();
        for t in &f.signature.terms {
            by_group.entry(t.group).or_default().push(t);
        }
        let mut terms = Vec::new();
        let mut coordinate_groups = Vec::new();
        for (&g, ts) in &by_group {
            let varies = ts.iter().any(|t| t.coefficient.is_varies());
            let irregular = ts.iter().any(|t| matches!(t.count, CountClass::Varies));
            if !varies && !irregular && !subset {
                let exact = ts
                    .iter()
                    .map(|t| {
                        let v = t.coefficient.exact().expect("exact");
                        let param = (v.abs() != 1.0).then(|| {
                            let p = format!("a_{fname}_{}_{}", gnames[g], if t.sign < 0 { "n" } else { "p" });
                            parameters.insert(p.clone(), num_value(v.abs()));
                            p
                        });
                        (t.sign, v, param)
                    })
                    .collect();
                terms.push((g, TermData::Exact(exact)));
                continue;
            }
            let mut seen = HashSet::new();
            let once = f
                .rows
                .iter()
                .flat_map(|&i| model.rows()[i].terms.iter())
                .filter(|(j, _)| st.var_group[*j] == g)
                .all(|(j, _)| seen.insert(*j));
            if varies && !irregular && !subset && once {
                let col = fname.clone();
                columns[g].push((fi, col.clone()));
                terms.push((g, TermData::Column(col)));
            } else {
                coordinate_groups.push((g, varies || ts.len() > 1));
            }
        }
        // coordinate tables keyed by (row indices, variable indices)
        let mut pending = Vec::new();
        let mut collided = false;
        for &(g, with_coef) in &coordinate_groups {
            let mut keys = HashSet::new();
            let mut rows = Vec::new();
            for &i in &f.rows {
                let rtok = &st.row_tokens[i].indices;
                for &(j, a) in &model.rows()[i].terms {
                    if st.var_group[j] != g {
                        continue;
                    }
                    let vtok = &st.var_tokens[j].indices;
                    if !keys.insert((rtok.clone(), vtok.clone())) {
                        collided = true;
                    }
                    let mut r: Vec<String> = rtok.iter().chain(vtok.iter()).cloned().collect();
                    if with_coef {
                        r.push(fmt_num(a));
                    }
                    rows.push(r);
                }
            }
            let arity_r = f.rows.first().map_or(0, |&i| st.row_tokens[i].arity());
            let mut header: Vec<String> = (1..=arity_r).map(|k| format!("row_idx{k}")).collect();
            header.extend((1..=st.groups[g].arity).map(|k| format!("idx{k}")));
            if with_coef {
                header.push("coef".into());
            }
            let path = data_path(&format!("con_{fname}_{}", gnames[g]));
            pending.push((g, with_coef, Table {
                description: format!(
                    "Terms of group {} in family {}: row indices, variable indices{}",
                    gnames[g],
                    fname,
                    if with_coef { " and coefficient" } else { "" }
                ),
                path,
                header,
                rows,
            }));
        }
        if collided {
            warnings.push(format!("UNFACTORABLE: family `{fname}` has no consistent index key; raw table written"));
            let path = data_path(&format!("con_{fname}_raw"));
            let mut rows = Vec::new();
            for &i in &f.rows {
                for &(j, a) in &model.rows()[i].terms {
                    if coordinate_groups.iter().any(|&(g, _)| g == st.var_group[j]) {
                        rows.push(vec![model.rows()[i].name.clone(), vars[j].name.clone(), fmt_num(a)]);
                    }
                }
            }
            tables.push(Table {
                path: path.clone(),
                description: format!("Raw coefficients of family {fname}: row name, variable name, coefficient"),
                header: vec!["row".into(), "variable".into(), "coef".into()],
                rows,
            });
            for &(g, _) in &coordinate_groups {
                terms.push((g, TermData::Raw(path.clone())));
            }
            family_raw[fi] = Some(path);
        } else {
            for (g, with_coef, t) in pending {
                terms.push((g, TermData::Coordinates { path: t.path.clone(), with_coef }));
                tables.push(t);
            }
        }
        terms.sort_by_key(|t| t.0);
        family_terms.push(terms);
    }

    // variable group tables
    let obj = model.objective_dense();
    let mut groups = Vec::new();
    for (gi, g) in st.groups.iter().enumerate() {
        let gname = &gnames[gi];
        let members = &g.members;
        let integrality = match report.groups[gi].integrality {
            Integrality::Binary => "binary",
            Integrality::Integer => "integer",
            Integrality::Continuous => "continuous",
        };
        let obj_c = constant(members.iter().map(|&j| obj[j]));
        let lo_c = constant(members.iter().map(|&j| vars[j].lower));
        let hi_c = constant(members.iter().map(|&j| vars[j].upper));
        let binary = integrality == "binary";
        let mut header: Vec<String> = (1..=g.arity).map(|k| format!("idx{k}")).collect();
        let mut getters: Vec<Box<dyn Fn(usize) -> String + '_>> = Vec::new();
        let path = data_path(&format!("var_{gname}"));
        let col_ref = |name: &str, header: &mut Vec<String>| -> Result<Option<String>, String> {
            header.push(name.to_string());
            Err(format!("{path}:{name}"))
        };
        let obj_ref = match obj_c {
            Some(Some(0.0)) | None => Ok(None),
            Some(Some(v)) => {
                let p = format!("c_{gname}");
                parameters.insert(p.clone(), num_value(v));
                Ok(Some(p))
            }
            Some(None) => {
                getters.push(Box::new(|j| fmt_num(obj[j])));
                col_ref("obj", &mut header)
            }
        };
        let bound_ref = |c: Option<Option<f64>>,
                         default: f64,
                         key: &str,
                         parameters: &mut BTreeMap<String, Value>|
         -> Option<Result<Option<String>, String>> {
            match c {
                None => Some(Ok(None)),
                Some(Some(v)) if v == default || (binary && (v == 0.0 || v == 1.0)) => Some(Ok(None)),
                Some(Some(v)) => {
                    let p = format!("{key}_{gname}");
                    parameters.insert(p.clone(), num_value(v));
                    Some(Ok(Some(p)))
                }
                Some(None) => None,
            }
        };
        let lower = match bound_ref(lo_c, 0.0, "lb", &mut parameters) {
            Some(r) => r,
            None => {
                getters.push(Box::new(|j| fmt_num(vars[j].lower)));
                col_ref("lower", &mut header)
            }
        };
        let upper = match bound_ref(hi_c, f64::INFINITY, "ub", &mut parameters) {
            Some(r) => r,
            None => {
                getters.push(Box::new(|j| fmt_num(vars[j].upper)));
                col_ref("upper", &mut header)
            }
        };
        let mut coef_cols: Vec<HashMap<usize, f64>> = Vec::new();
        for (fi, col) in &columns[gi] {
            header.push(col.clone());
            let mut m = HashMap::new();
            for &i in &st.families[*fi].rows {
                for &(j, a) in &model.rows()[i].terms {
                    if st.var_group[j] == gi {
                        m.insert(j, a);
                    }
                }
            }
            coef_cols.push(m);
        }
        let table = if header.len() > g.arity {
            let rows = members
                .iter()
                .map(|&j| {
                    let mut r = st.var_tokens[j].indices.clone();
                    r.extend(getters.iter().map(|f| f(j)));
                    r.extend(coef_cols.iter().map(|m| m.get(&j).map_or_else(String::new, |a| fmt_num(*a))));
                    r
                })
                .collect();
            let derived: Vec<&str> = header[g.arity..].iter().map(String::as_str).collect();
            tables.push(Table {
                path: path.clone(),
                description: format!("Per-variable data of group {gname}: index columns, then {}", derived.join(", ")),
                header,
                rows,
            });
            Some(path.clone())
        } else {
            None
        };
        groups.push(GroupPlan {
            name: gname.clone(),
            sets: group_sets[gi].clone(),
            integrality,
            table,
            obj: obj_ref,
            lower,
            upper,
        });
    }

    // right-hand sides
    let mut families = Vec::new();
    for (fi, f) in st.families.iter().enumerate() {
        let fname = &fnames[fi];
        let sig = &f.signature;
        let range_varies = matches!(sig.range, Some(CoeffClass::Varies));
        let rhs = if sig.rhs.is_varies() || range_varies {
            let arity_r = st.row_tokens[f.rows[0]].arity();
            let keys: HashSet<&Vec<String>> = f.rows.iter().map(|&i| &st.row_tokens[i].indices).collect();
            let by_name = keys.len() < f.rows.len() || family_raw[fi].is_some();
            let mut header: Vec<String> =
                if by_name { vec!["row".into()] } else { (1..=arity_r).map(|k| format!("row_idx{k}")).collect() };
            header.push("rhs".into());
            if range_varies {
                header.push("range".into());
            }
            let rows = f
                .rows
                .iter()
                .map(|&i| {
                    let r = &model.rows()[i];
                    let mut v = if by_name { vec![r.name.clone()] } else { st.row_tokens[i].indices.clone() };
                    v.push(fmt_num(r.rhs));
                    if range_varies {
                        v.push(r.range.map(fmt_num).unwrap_or_default());
                    }
                    v
                })
                .collect();
            let path = data_path(&format!("con_{fname}_rhs"));
            tables.push(Table {
                path: path.clone(),
                description: format!("Right-hand side per row of family {fname}"),
                header,
                rows,
            });
            Err(path)
        } else {
            let v = sig.rhs.exact().unwrap_or(0.0);
            if v == 0.0 {
                Ok(None)
            } else {
                let p = format!("b_{fname}");
                parameters.insert(p.clone(), num_value(v));
                Ok(Some(p))
            }
        };
        let range = match sig.range {
            None => None,
            Some(CoeffClass::Exact(r)) => {
                let p = format!("r_{fname}");
                parameters.insert(p.clone(), num_value(r));
                Some(Ok(p))
            }
            Some(CoeffClass::Varies) => Some(Err(data_path(&format!("con_{fname}_rhs")))),
        };
        families.push(FamilyPlan {
            name: fname.clone(),
            terms: std::mem::take(&mut family_terms[fi]),
            rhs,
            range,
        });
    }
    tables.sort_by(|a, b| a.path.cmp(&b.path));
    Plan { sets, groups, families, parameters, tables, warnings }
}

fn sense_word(s: RowSense) -> &'static str {
    match s {
        RowSense::L => "at most",
        RowSense::G => "at least",
        RowSense::E => "equal to",
        RowSense::N => "free",
    }
}

fn sense_symbol(s: RowSense) -> &'static str {
    match s {
        RowSense::L => "<=",
        RowSense::G => ">=",
        RowSense::E => "=",
        RowSense::N => "free",
    }
}

fn set_text(s: &SetInfo) -> String {
    match s.range {
        Some((lo, hi)) => format!("{lo}..{hi}"),
        None => format!("listed in `{}`", data_path("sets")),
    }
}

fn scope_text(report: &ScaffoldReport, fi: usize) -> String {
    let e = &report.families[fi].evidence;
    if e.loop_indices.is_empty() {
        return "a single row".into();
    }
    let dims: Vec<String> = e
        .loop_indices
        .iter()
        .map(|d| d.iter().map(|s| report.slot_name(*s)).collect::<Vec<_>>().join(" = "))
        .collect();
    format!("one row for each value of {}", dims.join(" and "))
}

fn label_text(report: &ScaffoldReport, fi: usize) -> String {
    let f = &report.families[fi];
    match f.scaffold {
        Some(l) => l.as_str().to_string(),
        None if !f.ambiguous.is_empty() => format!("AMBIGUOUS({})", f.ambiguous[0].as_str()),
        None => "UNLABELED".into(),
    }
}

fn sref(name: &str) -> String {
    format!("`{name}`")
}

fn fref(path: &str, column: Option<&str>) -> String {
    match column {
        Some(c) => format!("column {c} of `{path}`"),
        None => format!("`{path}`"),
    }
}

fn term_text(plan: &Plan, g: usize, data: &TermData) -> String {
    let gname = &plan.groups[g].name;
    let gtable = plan.groups[g].table.as_deref().unwrap_or("");
    match data {
        TermData::Exact(classes) => classes
            .iter()
            .map(|(sign, v, p)| {
                let s = if *sign < 0 { "minus" } else { "plus" };
                match p {
                    Some(p) => format!("{s} {} times the sum of {gname}", sref(p)),
                    None if *v < 0.0 || *v > 0.0 => format!("{s} the sum of {gname}"),
                    None => format!("{s} zero times {gname}"),
                }
            })
            .collect::<Vec<_>>()
            .join(" "),
        TermData::Column(col) => format!("the sum of {gname} weighted by {}", fref(gtable, Some(col))),
        TermData::Coordinates { path, with_coef } => {
            if *with_coef {
                format!("the sum of {gname} over the terms and coefficients in {}", fref(path, None))
            } else {
                format!("the sum of {gname} over the members listed in {}", fref(path, None))
            }
        }
        TermData::Raw(path) => format!("the terms of {gname} listed in {}", fref(path, None)),
    }
}

fn value_ref(r: &Result<Option<String>, String>, zero: &str) -> String {
    match r {
        Ok(Some(p)) => sref(p),
        Ok(None) => zero.to_string(),
        Err(loc) => match loc.split_once(':') {
            Some((path, col)) => fref(path, Some(col)),
            None => fref(loc, None),
        },
    }
}

fn objective_text(plan: &Plan, model: &Model) -> String {
    let verb = match model.objective_sense() {
        ObjectiveSense::Min => "minimize",
        ObjectiveSense::Max => "maximize",
    };
    let parts: Vec<String> = plan
        .groups
        .iter()
        .filter(|g| g.obj != Ok(None))
        .map(|g| format!("{} weighted by {}", g.name, value_ref(&g.obj, "")))
        .collect();
    if parts.is_empty() {
        format!("The objective is to {verb} a constant.")
    } else {
        format!("The objective is to {verb} the sum of {}.", parts.join(", plus "))
    }
}

fn rhs_text(f: &FamilyPlan) -> String {
    match &f.rhs {
        Err(path) => format!("the right-hand side in {}", fref(path, None)),
        ok => value_ref(ok, "zero"),
    }
}

/// Deterministic template description of the scaffold. Numbers appear only
/// through backticked parameter and file references.
pub fn render_abstract(report: &ScaffoldReport, model: &Model) -> String {
    render_plan(&build_plan(report, model), report, model)
}

fn render_plan(plan: &Plan, report: &ScaffoldReport, model: &Model) -> String {
    let mut out: Vec<String> = Vec::new();
    for s in &plan.sets {
        let p = format!("n_{}", s.name);
        out.push(match s.range {
            Some(_) => format!("Index set {} is an integer range with {} elements.", s.name, sref(&p)),
            None => format!("Index set {} has {} elements {}.", s.name, sref(&p), set_text(s)),
        });
    }
    for g in &plan.groups {
        let over = if g.sets.is_empty() {
            "is a single variable".to_string()
        } else {
            let names: Vec<&str> = g.sets.iter().map(|&s| plan.sets[s].name.as_str()).collect();
            format!("is indexed by {}", names.join(" x "))
        };
        let mut s = format!("Variable group {} {over} and is {}", g.name, g.integrality);
        if g.lower != Ok(None) {
            let _ = write!(s, ", bounded below by {}", value_ref(&g.lower, ""));
        }
        if g.upper != Ok(None) {
            let _ = write!(s, ", bounded above by {}", value_ref(&g.upper, ""));
        }
        s.push('.');
        out.push(s);
    }
    out.push(objective_text(plan, model));
    for (fi, f) in plan.families.iter().enumerate() {
        let sense = report.families[fi].sense;
        let lhs: Vec<String> = f.terms.iter().map(|(g, d)| term_text(plan, *g, d)).collect();
        let mut s = format!(
            "Constraint family {} ({}) has {}: {} is {} {}",
            f.name,
            label_text(report, fi),
            scope_text(report, fi),
            lhs.join(", plus "),
            sense_word(sense),
            rhs_text(f)
        );
        if let Some(r) = &f.range {
            let _ = write!(
                s,
                ", with range {}",
                match r {
                    Ok(p) => sref(p),
                    Err(path) => fref(path, Some("range")),
                }
            );
        }
        s.push('.');
        out.push(s);
    }
    let mut text = out.join(" ");
    if text.is_empty() {
        text.push_str("The model has no variables and no constraints.");
    }
    text
}

fn render_model_md(plan: &Plan, report: &ScaffoldReport, model: &Model) -> String {
    let mut s = String::new();
    let title = if model.name().is_empty() { "model" } else { model.name() };
    let _ = writeln!(s, "# {title}\n");
    let _ = writeln!(s, "## Sets\n");
    for set in &plan.sets {
        let _ = writeln!(s, "- {} = {} ({} elements)", set.name, set_text(set), set.values.len());
    }
    let _ = writeln!(s, "\n## Variable groups\n");
    for (g, gp) in report.groups.iter().zip(&plan.groups) {
        let idx: Vec<String> = gp.sets.iter().map(|&k| plan.sets[k].name.to_lowercase()).collect();
        let dom: Vec<&str> = gp.sets.iter().map(|&k| plan.sets[k].name.as_str()).collect();
        let head = if idx.is_empty() { gp.name.clone() } else { format!("{}[{}]", gp.name, idx.join(",")) };
        let over = if dom.is_empty() { String::new() } else { format!(" for ({}) in {}", idx.join(","), dom.join(" x ")) };
        let _ = writeln!(
            s,
            "- {head}: {}, {} variables{over}; lower {}, upper {}",
            gp.integrality,
            g.size,
            value_ref(&gp.lower, if gp.integrality == "binary" { "0" } else { "default" }),
            value_ref(&gp.upper, if gp.integrality == "binary" { "1" } else { "default" }),
        );
    }
    let _ = writeln!(s, "\n## Objective\n");
    let _ = writeln!(s, "{} {}\n", model.objective_sense(), objective_text(plan, model));
    let _ = writeln!(s, "## Constraints\n");
    for (fi, f) in plan.families.iter().enumerate() {
        let fr = &report.families[fi];
        let _ = writeln!(s, "### {} ({} rows, {}, {})\n", f.name, fr.n_rows, label_text(report, fi), fr.atomic_type.as_str());
        if !fr.canonical_form.is_empty() {
            let _ = writeln!(s, "Template: {}\n", fr.canonical_form);
        }
        let lhs: Vec<String> = f.terms.iter().map(|(g, d)| term_text(plan, *g, d)).collect();
        let _ = writeln!(s, "{}: {} {} {}\n", scope_text(report, fi), lhs.join(" + "), sense_symbol(fr.sense), rhs_text(f));
    }
    let _ = writeln!(s, "## Data\n");
    for t in &plan.tables {
        let _ = writeln!(s, "- {}: {} ({} rows; columns {})", t.path, t.description, t.rows.len(), t.header.join(", "));
    }
    s
}

const SOLVE_SLOT: &str = "\"\"\"Solver slot: build the model from instance.json and data/, solve, print the objective.\"\"\"\n\nimport sys\n\n\ndef main():\n    sys.exit(\"solver slot not filled\")\n\n\nif __name__ == \"__main__\":\n    main()\n";
const GENERATOR_SLOT: &str = "\"\"\"Generator slot: rewrite data/ for new parameter values.\"\"\"\n\nimport sys\n\n\ndef main():\n    sys.exit(\"generator slot not filled\")\n\n\nif __name__ == \"__main__\":\n    main()\n";

/// Writes the `solve.py` and `generator.py` slots.
pub(crate) fn write_slots(dir: &Path) -> Result<(), SchemaError> {
    for (name, body) in [(SOLVER_FILE, SOLVE_SLOT), (GENERATOR_FILE, GENERATOR_SLOT)] {
        let p = dir.join(name);
        fs::write(&p, body).map_err(io_err(&p))?;
    }
    Ok(())
}

/// Scaffold metadata shared by extracted and generated instances.
pub(crate) fn scaffold_metadata(report: &ScaffoldReport, mps_bytes: u64) -> BTreeMap<String, Value> {
    let labels: serde_json::Map<String, Value> = report
        .families
        .iter()
        .enumerate()
        .map(|(fi, f)| (f.name.clone(), Value::from(label_text(report, fi))))
        .collect();
    let counts: serde_json::Map<String, Value> =
        report.families.iter().map(|f| (f.name.clone(), Value::from(f.n_rows))).collect();
    BTreeMap::from([
        ("mps_bytes".to_string(), Value::from(mps_bytes)),
        ("nl_source".to_string(), Value::from("abstract_problem")),
        ("n_groups".to_string(), Value::from(report.n_groups)),
        ("n_families".to_string(), Value::from(report.n_families)),
        ("n_vars".to_string(), Value::from(report.stats.n_vars)),
        ("n_rows".to_string(), Value::from(report.stats.n_rows)),
        ("scaffold_labels".to_string(), Value::Object(labels)),
        ("family_counts".to_string(), Value::Object(counts)),
    ])
}

/// Writes an instance directory for a classified model: `instance.json`,
/// `model.md`, `data/*.csv`, solver and generator slots, `logs/` and
/// optionally `model.mps`.
pub fn emit_instance(
    report: &ScaffoldReport,
    model: &Model,
    dir: &Path,
    options: &EmitOptions,
) -> Result<InstanceRecord, SchemaError> {
    let plan = build_plan(report, model);
    create_layout(dir)?;
    let mps = write_mps_string(model).expect("mined names are valid MPS names");
    if options.write_mps {
        let p = dir.join(MPS_FILE);
        fs::write(&p, &mps).map_err(io_err(&p))?;
    }
    for t in &plan.tables {
        write_csv(&dir.join(&t.path), &t.header.iter().map(String::as_str).collect::<Vec<_>>(), &t.rows)?;
    }
    let p = dir.join(MODEL_MD);
    fs::write(&p, render_model_md(&plan, report, model)).map_err(io_err(&p))?;
    write_slots(dir)?;
    let mut metadata = scaffold_metadata(report, options.source_mps_bytes.unwrap_or(mps.len() as u64));
    if !plan.warnings.is_empty() || !report.warnings.is_empty() {
        let w: Vec<Value> = plan.warnings.iter().chain(&report.warnings).map(|s| Value::from(s.as_str())).collect();
        metadata.insert("warnings".into(), Value::Array(w));
    }
    metadata.extend(options.metadata.clone());
    let record = InstanceRecord {
        id: options.id.clone().unwrap_or_else(|| if model.name().is_empty() { "model".into() } else { model.name().into() }),
        problem_type: options.problem_type.clone(),
        abstract_problem: render_plan(&plan, report, model),
        parameters: plan.parameters.clone(),
        files: plan
            .tables
            .iter()
            .map(|t| FileRef { path: t.path.clone(), description: t.description.clone(), schema: t.header.clone() })
            .collect(),
        concrete_problem: None,
        mathematical_formulation: MODEL_MD.into(),
        solver_code: SOLVER_FILE.into(),
        generator_code: GENERATOR_FILE.into(),
        optimal_value: options.optimal_value,
        verification: Verification { status: options.status, runtime: None, gap: None, log_paths: vec![] },
        metadata,
    };
    write_record(dir, &record)?;
    Ok(record)
}
