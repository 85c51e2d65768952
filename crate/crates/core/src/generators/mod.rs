//! Deterministic parametric instance generators with declared scaffold labels.

mod harvest;
mod knapsack;
mod mcnd;
mod pairwise;
mod roster;
mod setcover;

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

pub use harvest::HarvestParams;
pub use knapsack::KnapsackParams;
pub use mcnd::McndParams;
pub use pairwise::PairwiseParams;
pub use roster::RosterParams;
pub use setcover::SetcoverParams;

use crate::classify::ScaffoldLabel;
use crate::mining::mine;
use crate::mps::{write_mps_string, Model, ModelParts, ObjectiveSense, Row, RowSense, Variable};
use crate::numfmt::fmt_num;
use crate::oracle::{self, OracleStatus};
use crate::schema::{
    create_layout, io_err, write_csv, write_record, FileRef, InstanceRecord, ProblemType, SchemaError, Status,
    Verification, GENERATOR_FILE, MODEL_MD, MPS_FILE, SOLVER_FILE,
};

/// Brute-force budget for certifying generated instances.
pub const ORACLE_MAX_POINTS: u64 = 1 << 16;

/// One splitmix64 step: returns `(value, next_state)`.
pub fn prng_next(state: u64) -> (u64, u64) {
    let s = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = s;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    (z ^ (z >> 31), s)
}

#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        let (v, s) = prng_next(self.state);
        self.state = s;
        v
    }

    /// Uniform integer in `[lo, hi]`.
    pub fn int(&mut self, lo: i64, hi: i64) -> i64 {
        debug_assert!(lo <= hi);
        let span = (hi - lo) as u64 + 1;
        lo + (self.next_u64() % span) as i64
    }

    /// Uniform index in `[0, n)`.
    pub fn index(&mut self, n: usize) -> usize {
        (self.next_u64() % n as u64) as usize
    }

    /// Uniform real in `[0, 1)`.
    pub fn unit(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.unit() < p
    }

    pub fn shuffle<T>(&mut self, v: &mut [T]) {
        for i in (1..v.len()).rev() {
            let j = self.index(i + 1);
            v.swap(i, j);
        }
    }
}

#[derive(Debug, Error)]
pub enum GenError {
    #[error("invalid parameter `{name}`: {message}")]
    InvalidParameter { name: &'static str, message: String },
    #[error(transparent)]
    Schema(#[from] SchemaError),
}

impl GenError {
    pub fn code(&self) -> &'static str {
        match self {
            GenError::InvalidParameter { .. } => "INVALID_PARAMETER",
            GenError::Schema(e) => e.code(),
        }
    }
}

pub(crate) fn invalid(name: &'static str, message: impl Into<String>) -> GenError {
    GenError::InvalidParameter { name, message: message.into() }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "generator", rename_all = "lowercase")]
pub enum GeneratorParams {
    Mcnd(McndParams),
    Roster(RosterParams),
    Setcover(SetcoverParams),
    Knapsack(KnapsackParams),
    Pairwise(PairwiseParams),
    Harvest(HarvestParams),
}

pub const GENERATOR_NAMES: [&str; 6] = ["mcnd", "roster", "setcover", "knapsack", "pairwise", "harvest"];

impl GeneratorParams {
    /// Default knobs of a named generator.
    pub fn default_for(name: &str, seed: u64) -> Option<GeneratorParams> {
        Some(match name {
            "mcnd" => GeneratorParams::Mcnd(McndParams { seed, ..Default::default() }),
            "roster" => GeneratorParams::Roster(RosterParams { seed, ..Default::default() }),
            "setcover" => GeneratorParams::Setcover(SetcoverParams { seed, ..Default::default() }),
            "knapsack" => GeneratorParams::Knapsack(KnapsackParams { seed, ..Default::default() }),
            "pairwise" => GeneratorParams::Pairwise(PairwiseParams { seed, ..Default::default() }),
            "harvest" => GeneratorParams::Harvest(HarvestParams { seed, ..Default::default() }),
            _ => return None,
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            GeneratorParams::Mcnd(_) => "mcnd",
            GeneratorParams::Roster(_) => "roster",
            GeneratorParams::Setcover(_) => "setcover",
            GeneratorParams::Knapsack(_) => "knapsack",
            GeneratorParams::Pairwise(_) => "pairwise",
            GeneratorParams::Harvest(_) => "harvest",
        }
    }

    pub fn seed(&self) -> u64 {
        match self {
            GeneratorParams::Mcnd(p) => p.seed,
            GeneratorParams::Roster(p) => p.seed,
            GeneratorParams::Setcover(p) => p.seed,
            GeneratorParams::Knapsack(p) => p.seed,
            GeneratorParams::Pairwise(p) => p.seed,
            GeneratorParams::Harvest(p) => p.seed,
        }
    }

    fn draft(&self) -> Result<Draft, GenError> {
        match self {
            GeneratorParams::Mcnd(p) => mcnd::draft(p),
            GeneratorParams::Roster(p) => roster::draft(p),
            GeneratorParams::Setcover(p) => setcover::draft(p),
            GeneratorParams::Knapsack(p) => knapsack::draft(p),
            GeneratorParams::Pairwise(p) => pairwise::draft(p),
            GeneratorParams::Harvest(p) => harvest::draft(p),
        }
    }

    /// The generated model alone, without writing anything.
    pub fn build_model(&self) -> Result<Model, GenError> {
        Ok(self.draft()?.model)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedInstance {
    pub dir: PathBuf,
    pub declared_labels: BTreeMap<String, ScaffoldLabel>,
    pub declared_counts: BTreeMap<String, usize>,
    pub record: InstanceRecord,
    pub model: Model,
}

/// Writes a generated instance into `out_dir` (created if needed).
pub fn generate(params: &GeneratorParams, out_dir: &Path) -> Result<GeneratedInstance, GenError> {
    let draft = params.draft()?;
    let knobs = serde_json::to_value(params).expect("params serialize");
    finish(draft, params.name(), params.seed(), knobs, out_dir)
}

pub fn generate_mcnd(p: &McndParams, out_dir: &Path) -> Result<GeneratedInstance, GenError> {
    generate(&GeneratorParams::Mcnd(p.clone()), out_dir)
}

pub fn generate_roster(p: &RosterParams, out_dir: &Path) -> Result<GeneratedInstance, GenError> {
    generate(&GeneratorParams::Roster(p.clone()), out_dir)
}

pub fn generate_setcover(p: &SetcoverParams, out_dir: &Path) -> Result<GeneratedInstance, GenError> {
    generate(&GeneratorParams::Setcover(p.clone()), out_dir)
}

pub fn generate_knapsack(p: &KnapsackParams, out_dir: &Path) -> Result<GeneratedInstance, GenError> {
    generate(&GeneratorParams::Knapsack(p.clone()), out_dir)
}

pub fn generate_pairwise(p: &PairwiseParams, out_dir: &Path) -> Result<GeneratedInstance, GenError> {
    generate(&GeneratorParams::Pairwise(p.clone()), out_dir)
}

pub fn generate_harvest(p: &HarvestParams, out_dir: &Path) -> Result<GeneratedInstance, GenError> {
    generate(&GeneratorParams::Harvest(p.clone()), out_dir)
}

/// Incremental model construction by variable name.
pub(crate) struct ModelBuilder {
    name: String,
    vars: Vec<Variable>,
    index: HashMap<String, usize>,
    obj: Vec<(usize, f64)>,
    rows: Vec<Row>,
}

impl ModelBuilder {
    pub(crate) fn new(name: &str) -> Self {
        ModelBuilder { name: name.into(), vars: Vec::new(), index: HashMap::new(), obj: Vec::new(), rows: Vec::new() }
    }

    pub(crate) fn var(&mut self, v: Variable, obj: f64) -> usize {
        let j = self.vars.len();
        self.index.insert(v.name.clone(), j);
        self.vars.push(v);
        if obj != 0.0 {
            self.obj.push((j, obj));
        }
        j
    }

    pub(crate) fn id(&self, name: &str) -> usize {
        self.index[name]
    }

    pub(crate) fn row(&mut self, name: String, sense: RowSense, rhs: f64, mut terms: Vec<(usize, f64)>) -> &mut Row {
        terms.sort_by_key(|t| t.0);
        self.rows.push(Row::new(name, sense, rhs, terms));
        self.rows.last_mut().expect("just pushed")
    }

    pub(crate) fn build(self, sense: ObjectiveSense) -> Model {
        let mut rows = Vec::with_capacity(self.rows.len() + 1);
        rows.push(Row::new("obj", RowSense::N, 0.0, self.obj));
        rows.extend(self.rows);
        Model::from_parts(ModelParts {
            name: self.name,
            variables: self.vars,
            rows,
            objective_row: 0,
            objective_sense: sense,
            objective_constant: 0.0,
        })
        .expect("generator builds a valid model")
    }
}

pub(crate) struct DataTable {
    pub name: &'static str,
    pub description: String,
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl DataTable {
    pub(crate) fn path(&self) -> String {
        format!("data/{}.csv", self.name)
    }
}

pub(crate) fn n(v: impl Into<f64>) -> String {
    fmt_num(v.into())
}

/// Everything a generator decides before anything is written.
pub(crate) struct Draft {
    pub model: Model,
    pub problem_type: (&'static str, &'static str),
    pub abstract_problem: String,
    pub parameters: BTreeMap<String, Value>,
    pub tables: Vec<DataTable>,
    pub md_sets: Vec<String>,
    pub md_variables: Vec<String>,
    pub md_objective: String,
    pub md_constraints: Vec<String>,
    pub declared: Vec<(String, ScaffoldLabel, usize)>,
}

fn model_md(d: &Draft) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# {}\n", d.model.name());
    let section = |s: &mut String, title: &str, lines: &[String]| {
        let _ = writeln!(s, "## {title}\n");
        for l in lines {
            let _ = writeln!(s, "- {l}");
        }
        s.push('\n');
    };
    section(&mut s, "Sets", &d.md_sets);
    section(&mut s, "Variable groups", &d.md_variables);
    let _ = writeln!(s, "## Objective\n\n{}\n", d.md_objective);
    let constraints: Vec<String> = d
        .md_constraints
        .iter()
        .zip(&d.declared)
        .map(|(c, (name, label, count))| format!("{name} ({count} rows, {label}): {c}"))
        .collect();
    section(&mut s, "Constraints", &constraints);
    let data: Vec<String> = d.tables.iter().map(|t| format!("{}: {}", t.path(), t.description)).collect();
    section(&mut s, "Data", &data);
    s
}

fn finish(draft: Draft, name: &str, seed: u64, knobs: Value, dir: &Path) -> Result<GeneratedInstance, GenError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    create_layout(dir)?;
    for t in &draft.tables {
        write_csv(&dir.join(t.path()), &t.header, &t.rows)?;
    }
    let mps = write_mps_string(&draft.model).expect("generated names are valid");
    let p = dir.join(MPS_FILE);
    fs::write(&p, &mps).map_err(io_err(&p))?;
    let p = dir.join(MODEL_MD);
    fs::write(&p, model_md(&draft)).map_err(io_err(&p))?;
    crate::schema::write_slots(dir)?;

    let (status, optimal_value) = match oracle::solve_exhaustive(&draft.model, ORACLE_MAX_POINTS) {
        Ok(r) if r.status == OracleStatus::Optimal => (Status::Optimal, r.objective),
        Ok(_) => (Status::Infeasible, None),
        Err(_) => (Status::Unknown, None),
    };
    let structure = mine(&draft.model);
    let stats = draft.model.stats();
    let declared_labels: BTreeMap<String, ScaffoldLabel> =
        draft.declared.iter().map(|(f, l, _)| (f.clone(), *l)).collect();
    let declared_counts: BTreeMap<String, usize> = draft.declared.iter().map(|(f, _, c)| (f.clone(), *c)).collect();
    let mut metadata = BTreeMap::new();
    metadata.insert("generator".into(), Value::from(name));
    metadata.insert("seed".into(), Value::from(seed));
    metadata.insert("knobs".into(), knobs);
    metadata.insert("mps_bytes".into(), Value::from(mps.len()));
    metadata.insert("nl_source".into(), Value::from("abstract_problem"));
    metadata.insert("n_vars".into(), Value::from(stats.n_vars));
    metadata.insert("n_rows".into(), Value::from(stats.n_rows));
    metadata.insert("n_groups".into(), Value::from(structure.groups.len()));
    metadata.insert("n_families".into(), Value::from(structure.families.len()));
    metadata.insert("declared_labels".into(), serde_json::to_value(&declared_labels).expect("labels serialize"));
    metadata.insert("declared_counts".into(), serde_json::to_value(&declared_counts).expect("counts serialize"));
    let record = InstanceRecord {
        id: format!("{name}-{seed}"),
        problem_type: ProblemType {
            major_category: draft.problem_type.0.into(),
            subcategory: draft.problem_type.1.into(),
        },
        abstract_problem: draft.abstract_problem.clone(),
        parameters: draft.parameters.clone(),
        files: draft
            .tables
            .iter()
            .map(|t| FileRef {
                path: t.path(),
                description: t.description.clone(),
                schema: t.header.iter().map(|h| h.to_string()).collect(),
            })
            .collect(),
        concrete_problem: None,
        mathematical_formulation: MODEL_MD.into(),
        solver_code: SOLVER_FILE.into(),
        generator_code: GENERATOR_FILE.into(),
        optimal_value,
        verification: Verification { status, runtime: None, gap: None, log_paths: vec![] },
        metadata,
    };
    write_record(dir, &record)?;
    Ok(GeneratedInstance {
        dir: dir.to_path_buf(),
        declared_labels,
        declared_counts,
        record,
        model: draft.model,
    })
}

pub(crate) fn params_table(description: &str, cols: &[(&'static str, String)]) -> DataTable {
    DataTable {
        name: "parameters",
        description: description.into(),
        header: cols.iter().map(|c| c.0).collect(),
        rows: vec![cols.iter().map(|c| c.1.clone()).collect()],
    }
}

pub(crate) fn num_param(v: f64) -> Value {
    crate::schema::num_value(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn splitmix_reference_values() {
        assert_eq!(prng_next(0).0, 0xE220_A839_7B1D_CDAF);
        let mut r = SplitMix64::new(42);
        assert_eq!(r.next_u64(), 0xBDD7_3226_2FEB_6E95);
        let a: Vec<u64> = (0..5).map(|_| r.next_u64()).collect();
        let mut r2 = SplitMix64::new(42);
        r2.next_u64();
        let b: Vec<u64> = (0..5).map(|_| r2.next_u64()).collect();
        assert_eq!(a, b);
    }

    #[test]
    fn ranges_hold() {
        let mut r = SplitMix64::new(7);
        for _ in 0..1000 {
            let v = r.int(3, 9);
            assert!((3..=9).contains(&v));
            let u = r.unit();
            assert!((0.0..1.0).contains(&u));
        }
        let mut v: Vec<usize> = (0..10).collect();
        r.shuffle(&mut v);
        v.sort_unstable();
        assert_eq!(v, (0..10).collect::<Vec<_>>());
    }

    #[test]
    fn default_names_cover_all() {
        for name in GENERATOR_NAMES {
            let p = GeneratorParams::default_for(name, 1).unwrap();
            assert_eq!(p.name(), name);
        }
        assert!(GeneratorParams::default_for("nope", 1).is_none());
    }
}
